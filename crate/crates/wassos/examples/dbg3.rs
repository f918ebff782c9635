use wassos::model::{DroModel, PiecewiseLoss, Samples, SupportSet};
use wassos::poly::parse_poly;
use wassos::hierarchy::{build_fd, solve_built};

fn main() {
    let p = |s: &str| parse_poly::<f64>(s, 1, false).unwrap();
    let model3 = DroModel::new(SupportSet::interval(1.0), PiecewiseLoss::new(vec![vec![p("x1")]]), Samples::new(vec![vec![0.5]]), 0.1).attest_convexity();
    let built = build_fd(&model3, 1).unwrap();
    let sol = solve_built(&built, 1e-8);
    println!("fd: status {:?} bound {:?} iters {}", sol.status, sol.bound, sol.result.iterations);
}
