//! Independent brute-force verifiers for hierarchy outputs: lattice grids
//! over the support, a transport-constrained LP over grid-supported measures,
//! dual-feasibility residuals, and empirical CVaR. None of these touch the
//! SOS machinery; they bound or cross-check it from the other side.

use thiserror::Error;

use crate::backend::{self, ConicStandardForm, Sense, SolveStatus, VarRef};
use crate::model::{DroModel, PiecewiseLoss, Samples, SupportSet};
use crate::Scalar;

/// Grids above this dimension explode combinatorially; the oracles are
/// desk-scale by design.
pub const MAX_GRID_DIM: usize = 4;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid needs at least two points per axis")]
    TooFewPoints,
    #[error("grid dimension {0} exceeds the guard ({MAX_GRID_DIM})")]
    DimensionGuard(usize),
    #[error("transport LP terminated with status {0}")]
    LpFailed(SolveStatus),
}

/// Finite surrogate for the support set.
#[derive(Debug, Clone)]
pub struct Grid<T> {
    pub points: Vec<Vec<T>>,
    pub per_axis: usize,
    /// Lattice spacing along one axis.
    pub spacing: T,
}

/// Axis-uniform lattice over `[−rho, rho]^m` filtered by the support
/// inequalities and the norm bound.
pub fn make_grid<T: Scalar>(support: &SupportSet<T>, per_axis: usize) -> Result<Grid<T>, OracleError> {
    if per_axis < 2 {
        return Err(OracleError::TooFewPoints);
    }
    let m = support.dim;
    if m > MAX_GRID_DIM {
        return Err(OracleError::DimensionGuard(m));
    }
    let rho = support.norm_bound;
    let spacing = T::of(2.0) * rho / T::of((per_axis - 1) as f64);
    let axis: Vec<T> = (0..per_axis)
        .map(|i| -rho + spacing * T::of(i as f64))
        .collect();
    let mut points = Vec::new();
    let mut index = vec![0usize; m];
    let tol = T::of(1e-12);
    loop {
        let point: Vec<T> = index.iter().map(|&i| axis[i]).collect();
        if support.contains(&point, tol) {
            points.push(point);
        }
        // Odometer increment.
        let mut axis_pos = 0;
        loop {
            if axis_pos == m {
                return Ok(Grid {
                    points,
                    per_axis,
                    spacing,
                });
            }
            index[axis_pos] += 1;
            if index[axis_pos] < per_axis {
                break;
            }
            index[axis_pos] = 0;
            axis_pos += 1;
        }
    }
}

/// `(1/N) Σ g(ξ̂_i)`: the exact value at radius zero.
pub fn empirical_value<T: Scalar>(loss: &PiecewiseLoss<T>, samples: &Samples<T>) -> T {
    let total = samples
        .points
        .iter()
        .map(|p| loss.eval(p).expect("dimensions validated"))
        .fold(T::zero(), |a, b| a + b);
    total / T::of(samples.len() as f64)
}

/// Value of the transport-constrained LP over measures supported on the grid
/// points plus the samples themselves:
///
/// `min (1/N) Σ_{i,s} q_{i,s} g(ξ_s)` subject to per-sample simplex rows and
/// the budget `(1/N) Σ q_{i,s} ‖ξ_s − ξ̂_i‖² ≤ ε²`.
///
/// Including the samples keeps the LP feasible for every ε ≥ 0. Because
/// grid-supported measures restrict the minimization, the value upper-bounds
/// the worst-case expectation, giving the one-sided sandwich
/// `hierarchy bound ≤ grid value + tol`.
pub fn grid_primal_bound<T: Scalar>(model: &DroModel<T>, grid: &Grid<T>) -> Result<T, OracleError> {
    let mut support_points: Vec<Vec<T>> = grid.points.clone();
    support_points.extend(model.samples.points.iter().cloned());
    let s_count = support_points.len();
    let n = model.num_samples();
    if s_count == 0 {
        return Err(OracleError::TooFewPoints);
    }
    let inv_n = T::one() / T::of(n as f64);

    let loss_at: Vec<T> = support_points
        .iter()
        .map(|p| model.loss.eval(p).expect("dimensions validated"))
        .collect();

    // Variables: q[i][s] >= 0 laid out row-major, then one slack for the
    // transport budget.
    let q = |i: usize, s: usize| VarRef::Nonneg((i * s_count + s) as u32);
    let slack = VarRef::Nonneg((n * s_count) as u32);

    let mut rows = Vec::with_capacity(n + 1);
    let mut rhs = Vec::with_capacity(n + 1);
    for i in 0..n {
        let row: Vec<(VarRef, T)> = (0..s_count).map(|s| (q(i, s), T::one())).collect();
        rows.push(row);
        rhs.push(T::one());
    }
    let mut budget: Vec<(VarRef, T)> = Vec::with_capacity(n * s_count + 1);
    for (i, sample) in model.samples.points.iter().enumerate() {
        for (s, point) in support_points.iter().enumerate() {
            let dist2 = point
                .iter()
                .zip(sample)
                .fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b));
            budget.push((q(i, s), inv_n * dist2));
        }
    }
    budget.push((slack, T::one()));
    rows.push(budget);
    rhs.push(model.radius * model.radius);

    let mut objective: Vec<(VarRef, T)> = Vec::with_capacity(n * s_count);
    for i in 0..n {
        for (s, lv) in loss_at.iter().enumerate() {
            objective.push((q(i, s), inv_n * *lv));
        }
    }

    let form = ConicStandardForm {
        sense: Sense::Minimize,
        block_sizes: vec![],
        nonneg_len: n * s_count + 1,
        free_len: 0,
        rows,
        rhs,
        objective,
    };
    let sol = backend::solve_form(&form, T::of(1e-9));
    if sol.status != SolveStatus::Optimal {
        return Err(OracleError::LpFailed(sol.status));
    }
    Ok(sol.primal_objective)
}

/// `min over i and grid points of g(ξ) + λ‖ξ − ξ̂_i‖² − α_i`: nonnegative (up
/// to tolerance) exactly when `(λ, α)` is feasible for the dual program.
pub fn semiinfinite_residual<T: Scalar>(
    lambda: T,
    alpha: &[T],
    model: &DroModel<T>,
    grid: &Grid<T>,
) -> T {
    let mut worst = T::infinity();
    for point in &grid.points {
        let g = model.loss.eval(point).expect("dimensions validated");
        for (i, sample) in model.samples.points.iter().enumerate() {
            let dist2 = point
                .iter()
                .zip(sample)
                .fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b));
            worst = worst.min(g + lambda * dist2 - alpha[i]);
        }
    }
    worst
}

/// Exact empirical CVaR at confidence `eta` via the sorted-tail formula:
/// the mean of the worst `eta` fraction, with fractional membership for the
/// boundary scenario.
pub fn cvar_empirical<T: Scalar>(losses: &[T], eta: T) -> T {
    assert!(!losses.is_empty(), "CVaR needs at least one loss");
    assert!(eta > T::zero() && eta <= T::one(), "confidence in (0, 1]");
    let mut sorted: Vec<T> = losses.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mass = eta * T::of(losses.len() as f64);
    let mut remaining = mass;
    let mut total = T::zero();
    for v in &sorted {
        let take = remaining.min(T::one());
        if take <= T::zero() {
            break;
        }
        total += take * *v;
        remaining -= take;
    }
    total / mass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DroModel, PiecewiseLoss, Samples, SupportSet};
    use crate::poly::{parse_poly, Poly};

    fn p(s: &str, n: usize) -> Poly<f64> {
        parse_poly(s, n, false).unwrap()
    }

    #[test]
    fn interval_grid_filters_to_support() {
        let support = SupportSet::interval(12.0);
        let grid = make_grid::<f64>(&support, 25).unwrap();
        // Lattice over [−12, 12] with spacing 1 keeps the 13 points in [0, 12].
        assert_eq!(grid.points.len(), 13);
        assert!(grid.points.iter().all(|p| (0.0..=12.0).contains(&p[0])));
    }

    #[test]
    fn ball_grid_m2() {
        let support = SupportSet::ball(2, 1.0);
        let grid = make_grid::<f64>(&support, 3).unwrap();
        // {−1, 0, 1}² filtered by ‖·‖ ≤ 1: center plus four axis points.
        assert_eq!(grid.points.len(), 5);
    }

    #[test]
    fn two_point_grid() {
        // The lattice spans [−ρ, ρ], so per_axis = 2 on [0, 1] keeps {1}.
        let support = SupportSet::interval(1.0);
        let grid = make_grid::<f64>(&support, 2).unwrap();
        assert_eq!(grid.points, vec![vec![1.0]]);
        // Spanning the full interval takes per_axis = 3: {−1, 0, 1} → {0, 1}.
        let grid = make_grid::<f64>(&support, 3).unwrap();
        assert_eq!(grid.points, vec![vec![0.0], vec![1.0]]);
    }

    #[test]
    fn grid_guards() {
        let support = SupportSet::ball(5, 1.0);
        assert!(matches!(
            make_grid::<f64>(&support, 3),
            Err(OracleError::DimensionGuard(5))
        ));
        let line = SupportSet::interval(1.0);
        assert!(matches!(
            make_grid::<f64>(&line, 1),
            Err(OracleError::TooFewPoints)
        ));
    }

    fn linear_model(eps: f64) -> DroModel<f64> {
        let support = SupportSet::interval(1.0);
        let loss = PiecewiseLoss::new(vec![vec![p("x1", 1)]]);
        DroModel::new(support, loss, Samples::new(vec![vec![0.5]]), eps)
    }

    #[test]
    fn empirical_value_examples() {
        let constant = PiecewiseLoss::new(vec![vec![p("4.5", 1)]]);
        let samples = Samples::new(vec![vec![0.1], vec![0.9]]);
        assert_eq!(empirical_value(&constant, &samples), 4.5);

        let linear = PiecewiseLoss::new(vec![vec![p("x1", 1)]]);
        let s01 = Samples::new(vec![vec![0.0], vec![1.0]]);
        assert_eq!(empirical_value(&linear, &s01), 0.5);
    }

    #[test]
    fn empirical_value_at_knot_picks_min_customer() {
        // Piece rows for two customers; at the knot the max piece is −d.
        let loss = PiecewiseLoss::new(vec![
            vec![p("-4*x1^3 + 9*x1^2 - 6.75*x1 - 7.3125", 1), p("-9", 1)],
            vec![p("-11", 1), p("-11", 1)],
        ]);
        let samples = Samples::new(vec![vec![0.75]]);
        assert_eq!(empirical_value(&loss, &samples), -11.0);
    }

    #[test]
    fn grid_lp_with_huge_radius_reaches_grid_minimum() {
        let model = linear_model(100.0);
        let grid = make_grid(&model.support, 51).unwrap();
        let v = grid_primal_bound(&model, &grid).unwrap();
        assert!((v - 0.0).abs() < 1e-6, "v={v}");
    }

    #[test]
    fn grid_lp_tiny_radius_recovers_empirical() {
        let model = linear_model(1e-6);
        let grid = make_grid(&model.support, 51).unwrap();
        let v = grid_primal_bound(&model, &grid).unwrap();
        assert!((v - 0.5).abs() < 1e-4, "v={v}");
    }

    #[test]
    fn grid_lp_linear_case_analytic() {
        let model = linear_model(0.1);
        let grid = make_grid(&model.support, 201).unwrap();
        let v = grid_primal_bound(&model, &grid).unwrap();
        // Analytic worst case 0.5 − ε = 0.4; the grid restriction can only
        // overshoot by O(spacing).
        assert!(v >= 0.4 - 1e-6, "v={v}");
        assert!(v <= 0.4 + 2.0 * grid.spacing, "v={v}");
    }

    #[test]
    fn semiinfinite_residual_cases() {
        let model = linear_model(0.1);
        let grid = make_grid(&model.support, 101).unwrap();
        // Hugely slack α: residual is large positive.
        let r = semiinfinite_residual(0.0, &[-1e10], &model, &grid);
        assert!(r > 1e9);
        // α set above the grid minimum of g by 1: residual −1.
        let r = semiinfinite_residual(0.0, &[1.0], &model, &grid);
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cvar_examples() {
        assert!((cvar_empirical::<f64>(&[1.0, 2.0, 3.0, 4.0], 0.5) - 3.5).abs() < 1e-12);
        assert!((cvar_empirical::<f64>(&[1.0, 2.0, 3.0, 4.0], 1.0) - 2.5).abs() < 1e-12);
        assert!((cvar_empirical::<f64>(&[7.0, 7.0, 7.0], 0.3) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn cvar_matches_tau_scan() {
        // Cross-check the closed form against direct minimization over τ.
        let losses = [0.3, -1.2, 2.5, 0.9, 1.1, -0.4, 3.3];
        for eta in [0.2, 0.35, 0.5, 0.8, 1.0] {
            let closed = cvar_empirical(&losses, eta);
            let mut best = f64::INFINITY;
            let n = losses.len() as f64;
            for step in 0..4000 {
                let tau = -2.0 + step as f64 * 0.002;
                let mean_excess: f64 =
                    losses.iter().map(|l| (l - tau).max(0.0)).sum::<f64>() / n;
                best = best.min(tau + mean_excess / eta);
            }
            assert!(
                (closed - best).abs() < 2e-3,
                "eta={eta} closed={closed} scan={best}"
            );
        }
    }

    #[test]
    fn cvar_translation_and_homogeneity() {
        let losses = [0.3, -1.2, 2.5, 0.9];
        let eta = 0.4;
        let base = cvar_empirical(&losses, eta);
        let shifted: Vec<f64> = losses.iter().map(|l| l + 2.5).collect();
        assert!((cvar_empirical(&shifted, eta) - (base + 2.5)).abs() < 1e-12);
        let scaled: Vec<f64> = losses.iter().map(|l| 3.0 * l).collect();
        assert!((cvar_empirical(&scaled, eta) - 3.0 * base).abs() < 1e-12);
    }
}
