use wassos::apps::{gen_sphere_samples, preset_paper_portfolio};
use wassos::hierarchy::{build_pd, solve_built};

fn main() {
    let mut pm = preset_paper_portfolio::<f64>();
    pm.radius = 10.0;
    let samples = gen_sphere_samples(3, 30, 20_240_001);
    let built = build_pd(&pm, &samples, 2).unwrap();
    let sol = solve_built(&built, 1e-7);
    println!("pd: {:?} {:?}", sol.status, sol.bound);
}
