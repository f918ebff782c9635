use std::time::Instant;
use wassos::apps::{gen_sphere_samples, preset_paper_portfolio, preset_paper_revenue, revenue_dro_model};
use wassos::hierarchy::{build_ad, build_pd, solve_built};
use wassos::oracle::empirical_value;

fn main() {
    // Criterion 2 shape: revenue at eps = 1e-4.
    let rm = preset_paper_revenue::<f64>();
    let mut model = revenue_dro_model(&rm, 20_240_001);
    model.radius = 1e-4;
    let emp = -empirical_value(&model.loss, &model.samples);
    let built = build_ad(&model, 2).unwrap();
    for tol in [1e-7, 1e-6] {
        let t = Instant::now();
        let sol = solve_built(&built, tol);
        println!(
            "rev eps=1e-4 tol={tol:.0e}: {:?} revenue {:?} vs emp {emp:.6} iters {} {}ms",
            sol.status,
            sol.bound.map(|b| -b),
            sol.result.iterations,
            t.elapsed().as_millis()
        );
    }

    // Criterion 7 shape: portfolio at r = 2, 3 for eps = 5, 10.
    let pm = preset_paper_portfolio::<f64>();
    for r in [2u32, 3] {
        for eps in [5.0, 10.0] {
            let mut pm = pm.clone();
            pm.radius = eps;
            let samples = gen_sphere_samples(3, 30, 20_240_001);
            let t = Instant::now();
            let built = build_pd(&pm, &samples, r).unwrap();
            let sol = solve_built(&built, 1e-7);
            println!(
                "pd r={r} eps={eps}: {:?} obj {:?} iters {} {}ms y {:?} tau {:?}",
                sol.status,
                sol.bound,
                sol.result.iterations,
                t.elapsed().as_millis(),
                sol.weights,
                sol.cvar_tau
            );
        }
    }

}
