use wassos::model::{DroModel, PiecewiseLoss, Samples, SupportSet};
use wassos::poly::parse_poly;
use wassos::oracle::{make_grid, grid_primal_bound};
use wassos::hierarchy::{build_ad, build_fd, solve_built};

fn main() {
    let p = |s: &str| parse_poly::<f64>(s, 1, false).unwrap();
    // grid LP tiny radius
    let support = SupportSet::interval(1.0);
    let loss = PiecewiseLoss::new(vec![vec![p("x1")]]);
    let model = DroModel::new(support, loss, Samples::new(vec![vec![0.5]]), 1e-6);
    let grid = make_grid(&model.support, 51).unwrap();
    match grid_primal_bound(&model, &grid) {
        Ok(v) => println!("grid tiny eps: {v}"),
        Err(e) => println!("grid tiny eps failed: {e}"),
    }

    // AD at small eps
    let model2 = DroModel::new(SupportSet::interval(1.0), PiecewiseLoss::new(vec![vec![p("x1")]]), Samples::new(vec![vec![0.5]]), 1e-4);
    let built = build_ad(&model2, 1).unwrap();
    let sol = solve_built(&built, 1e-8);
    println!("ad small eps: status {:?} bound {:?} iters {} maxres {:e} pobj {} dobj {}",
        sol.status, sol.bound, sol.result.iterations, sol.result.max_eq_residual, sol.result.primal_objective, sol.result.dual_objective);

    // FD J=1
    let model3 = DroModel::new(SupportSet::interval(1.0), PiecewiseLoss::new(vec![vec![p("x1")]]), Samples::new(vec![vec![0.5]]), 0.1).attest_convexity();
    let built = build_fd(&model3, 1).unwrap();
    let sol = solve_built(&built, 1e-8);
    println!("fd: status {:?} bound {:?} iters {} pobj {} dobj {}",
        sol.status, sol.bound, sol.result.iterations, sol.result.primal_objective, sol.result.dual_objective);
}
