use std::time::Instant;
use wassos::apps::{preset_paper_revenue, revenue_dro_model};
use wassos::hierarchy::{build_ad, solve_built};

fn main() {
    let rm = preset_paper_revenue::<f64>();
    for eps in [10.0, 6.0] {
        let mut model = revenue_dro_model(&rm, 20_240_001);
        model.radius = eps;
        let t0 = Instant::now();
        let built = build_ad(&model, 2).unwrap();
        let build_ms = t0.elapsed().as_millis();
        let t1 = Instant::now();
        let sol = solve_built(&built, 1e-7);
        println!(
            "eps={eps}: status {:?} revenue {:?} iters {} build {}ms solve {}ms lambda {:.3e} maxres {:.2e} mineig {:.2e}",
            sol.status,
            sol.bound.map(|b| -b),
            sol.result.iterations,
            build_ms,
            t1.elapsed().as_millis(),
            sol.lambda,
            sol.result.max_eq_residual,
            sol.result.min_psd_eigenvalue,
        );
    }
}
