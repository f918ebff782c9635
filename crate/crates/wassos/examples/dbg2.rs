use wassos::backend::{ConicStandardForm, Sense, VarRef, solve_form};

fn main() {
    // Minimal failing LP shape: simplex row + tiny budget row.
    let q = |s: u32| VarRef::Nonneg(s);
    let n_pts = 5usize;
    let dists = [0.25f64, 0.09, 0.0, 0.04, 0.16]; // squared distances
    let losses = [-0.5f64, 0.2, 0.5, 0.7, 1.0];
    let mut rows = vec![(0..n_pts as u32).map(|s| (q(s), 1.0)).collect::<Vec<_>>()];
    let mut budget: Vec<(VarRef, f64)> = (0..n_pts).map(|s| (q(s as u32), dists[s])).collect();
    budget.push((q(n_pts as u32), 1.0));
    rows.push(budget);
    let form = ConicStandardForm {
        sense: Sense::Minimize,
        block_sizes: vec![],
        nonneg_len: n_pts + 1,
        free_len: 0,
        rows,
        rhs: vec![1.0, 1e-12],
        objective: (0..n_pts).map(|s| (q(s as u32), losses[s])).collect(),
    };
    let sol = solve_form(&form, 1e-9);
    println!("LP: {:?} pobj {} dobj {} iters {}", sol.status, sol.primal_objective, sol.dual_objective, sol.iterations);
}
