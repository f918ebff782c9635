use wassos::model::{DroModel, PiecewiseLoss, Samples, SupportSet};
use wassos::poly::parse_poly;
use wassos::hierarchy::{build_ad, solve_built};

fn main() {
    let p = |s: &str| parse_poly::<f64>(s, 1, false).unwrap();
    let model2 = DroModel::new(SupportSet::interval(1.0), PiecewiseLoss::new(vec![vec![p("x1")]]), Samples::new(vec![vec![0.5]]), 1e-4);
    let built = build_ad(&model2, 1).unwrap();
    let sol = solve_built(&built, 1e-8);
    println!("ad small eps: status {:?} bound {:?} iters {} lambda {}", sol.status, sol.bound, sol.result.iterations, sol.lambda);
}
