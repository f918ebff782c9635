//! The two bundled decision models: data-driven revenue estimation with
//! third-order offer-price curves, and single-stage mean-CVaR portfolio
//! selection. Includes their sample generators and experiment presets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use thiserror::Error;

use crate::model::{DroModel, PiecewiseLoss, Samples, SupportSet};
use crate::poly::{parse_poly, Poly};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("invalid model parameters: {0}")]
    Invalid(String),
}

/// One customer of the revenue model: offer price `a(q − b)³ + d` capped at
/// `d` past the knee `b`.
#[derive(Debug, Clone, Copy)]
pub struct Customer<T> {
    pub a: T,
    pub b: T,
    pub d: T,
}

#[derive(Debug, Clone)]
pub struct RevenueModel<T> {
    pub customers: Vec<Customer<T>>,
    /// Support radius: offered quantities live in `[0, R]`.
    pub supply_cap: T,
    pub n_samples: usize,
    pub radius: T,
}

impl<T: Scalar> RevenueModel<T> {
    pub fn new(
        customers: Vec<Customer<T>>,
        supply_cap: T,
        n_samples: usize,
        radius: T,
    ) -> Result<Self, AppError> {
        if supply_cap <= T::zero() {
            return Err(AppError::Invalid("supply cap must be positive".into()));
        }
        for (k, c) in customers.iter().enumerate() {
            if c.a <= T::zero() || c.b < T::zero() || c.d < T::zero() {
                return Err(AppError::Invalid(format!(
                    "customer {k}: need a > 0 and b, d >= 0"
                )));
            }
            if -c.a * c.b * c.b * c.b + c.d < T::zero() {
                return Err(AppError::Invalid(format!(
                    "customer {k}: offer price goes negative (-a*b^3 + d < 0)"
                )));
            }
        }
        Ok(RevenueModel {
            customers,
            supply_cap,
            n_samples,
            radius,
        })
    }

    /// Highest offer price across customers at quantity `q`.
    pub fn max_offer(&self, q: T) -> T {
        self.customers
            .iter()
            .map(|c| {
                if q <= c.b {
                    c.a * (q - c.b).powi(3) + c.d
                } else {
                    c.d
                }
            })
            .fold(T::neg_infinity(), T::max)
    }
}

/// Negated-loss encoding of the revenue model: a K×2 grid with
/// `g1 = −a(q − b)³ − d`, `g2 = −d`, over the interval support `[0, R]`.
/// Maximizing revenue equals negating the minimized worst-case loss.
pub fn revenue_loss<T: Scalar>(rm: &RevenueModel<T>) -> (PiecewiseLoss<T>, SupportSet<T>) {
    let pieces = rm
        .customers
        .iter()
        .map(|c| {
            let q = Poly::var(1, 0);
            let shifted = q.sub(&Poly::constant(1, c.b)).unwrap();
            let cubed = shifted.mul(&shifted).unwrap().mul(&shifted).unwrap();
            let g1 = cubed.scale(-c.a).sub(&Poly::constant(1, c.d)).unwrap();
            let g2 = Poly::constant(1, -c.d);
            vec![g1, g2]
        })
        .collect();
    (PiecewiseLoss::new(pieces), SupportSet::interval(rm.supply_cap))
}

/// Builds the revenue DRO model for a given sample seed.
pub fn revenue_dro_model<T: Scalar>(rm: &RevenueModel<T>, seed: u64) -> DroModel<T> {
    let (loss, support) = revenue_loss(rm);
    let samples = gen_revenue_samples(rm.supply_cap, rm.n_samples, seed);
    DroModel::new(support, loss, samples, rm.radius)
}

/// Mean-CVaR portfolio model on the ball support of radius `support_radius`.
#[derive(Debug, Clone)]
pub struct PortfolioModel<T> {
    pub dim: usize,
    pub costs: Vec<Poly<T>>,
    pub gamma: T,
    pub eta: T,
    pub support_radius: T,
    pub n_samples: usize,
    pub radius: T,
}

impl<T: Scalar> PortfolioModel<T> {
    pub fn new(
        costs: Vec<Poly<T>>,
        gamma: T,
        eta: T,
        support_radius: T,
        n_samples: usize,
        radius: T,
    ) -> Result<Self, AppError> {
        if costs.is_empty() {
            return Err(AppError::Invalid("need at least one asset".into()));
        }
        let dim = costs[0].nvars();
        if costs.iter().any(|c| c.nvars() != dim) {
            return Err(AppError::Invalid(
                "cost polynomials disagree on dimension".into(),
            ));
        }
        if eta <= T::zero() || eta > T::one() {
            return Err(AppError::Invalid("confidence eta must lie in (0, 1]".into()));
        }
        if gamma < T::zero() {
            return Err(AppError::Invalid(
                "risk aversion gamma must be nonnegative".into(),
            ));
        }
        if support_radius <= T::zero() {
            return Err(AppError::Invalid("support radius must be positive".into()));
        }
        Ok(PortfolioModel {
            dim,
            costs,
            gamma,
            eta,
            support_radius,
            n_samples,
            radius,
        })
    }

    pub fn support(&self) -> SupportSet<T> {
        SupportSet::ball(self.dim, self.support_radius)
    }

    /// Portfolio loss `Σ y_p c_p(point)` at fixed weights.
    pub fn loss_at(&self, weights: &[T], point: &[T]) -> T {
        self.costs
            .iter()
            .zip(weights)
            .fold(T::zero(), |acc, (c, y)| acc + *y * c.eval(point).unwrap())
    }
}

/// The two affine-in-(y, τ) piece templates of the robust mean-CVaR
/// objective: piece 0 is `Σ y_p c_p + γτ`, piece 1 scales the loss by
/// `1 + γ/η` and τ by `(1 − 1/η)γ`.
#[derive(Debug, Clone)]
pub struct PortfolioPieces<T> {
    pub y_multipliers: [Vec<Poly<T>>; 2],
    pub tau_coeff: [T; 2],
}

pub fn portfolio_pieces<T: Scalar>(pm: &PortfolioModel<T>) -> PortfolioPieces<T> {
    let scale = T::one() + pm.gamma / pm.eta;
    PortfolioPieces {
        y_multipliers: [
            pm.costs.clone(),
            pm.costs.iter().map(|c| c.scale(scale)).collect(),
        ],
        tau_coeff: [pm.gamma, (T::one() - T::one() / pm.eta) * pm.gamma],
    }
}

/// Empirical mean-CVaR objective `(1/N) Σ_i max_k piece_k((y, τ), ξ̂_i)` at
/// fixed decisions; the ε → 0 reference value for the portfolio hierarchy.
pub fn portfolio_empirical_objective<T: Scalar>(
    pm: &PortfolioModel<T>,
    samples: &Samples<T>,
    weights: &[T],
    tau: T,
) -> T {
    let pieces = portfolio_pieces(pm);
    let n = T::of(samples.len() as f64);
    let mut total = T::zero();
    for point in &samples.points {
        let mut worst = T::neg_infinity();
        for k in 0..2 {
            let mut v = pieces.tau_coeff[k] * tau;
            for (c, y) in pieces.y_multipliers[k].iter().zip(weights) {
                v += *y * c.eval(point).unwrap();
            }
            worst = worst.max(v);
        }
        total += worst;
    }
    total / n
}

// ---------------------------------------------------------------------------
// Sample generators
// ---------------------------------------------------------------------------

/// `n` draws from Normal(R/2, (R/7)²) clipped to `[0, R]`; deterministic per
/// seed (ChaCha8 stream).
pub fn gen_revenue_samples<T: Scalar>(supply_cap: T, n: usize, seed: u64) -> Samples<T> {
    let r = supply_cap.to64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(r / 2.0, r / 7.0).expect("positive std dev");
    let points = (0..n)
        .map(|_| vec![T::of(normal.sample(&mut rng).clamp(0.0, r))])
        .collect();
    Samples::new(points)
}

/// `n` points uniform on the unit sphere S^{m−1} via normalized Gaussians.
pub fn gen_sphere_samples<T: Scalar>(m: usize, n: usize, seed: u64) -> Samples<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| loop {
            let raw: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return raw.iter().map(|v| T::of(v / norm)).collect::<Vec<T>>();
            }
        })
        .collect();
    Samples::new(points)
}

// ---------------------------------------------------------------------------
// Paper presets
// ---------------------------------------------------------------------------

/// Log-spaced radius grid used by both bundled experiments.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub const PRESET_EPS_LO: f64 = 1e-3;
pub const PRESET_EPS_HI: f64 = 10.0;
pub const PRESET_EPS_POINTS: usize = 25;
pub const PRESET_REPLICATIONS: u32 = 10;
pub const PRESET_BASE_SEED: u64 = 20_240_001;

/// The three fixed revenue customers: (a, d, b) = (4, 9, 3/4),
/// (1/4, 11, 7/2), (1/110, 14, 23/2).
pub fn paper_revenue_customers<T: Scalar>() -> Vec<Customer<T>> {
    vec![
        Customer {
            a: T::of(4.0),
            b: T::of(0.75),
            d: T::of(9.0),
        },
        Customer {
            a: T::of(0.25),
            b: T::of(3.5),
            d: T::of(11.0),
        },
        Customer {
            a: T::of(1.0 / 110.0),
            b: T::of(11.5),
            d: T::of(14.0),
        },
    ]
}

/// Revenue preset: K = 3 customers, supply cap 12, N = 30 samples.
pub fn preset_paper_revenue<T: Scalar>() -> RevenueModel<T> {
    RevenueModel::new(paper_revenue_customers(), T::of(12.0), 30, T::of(10.0)).unwrap()
}

/// The three fixed portfolio cost polynomials.
pub fn paper_portfolio_costs<T: Scalar>() -> Vec<Poly<T>> {
    vec![
        parse_poly("-1 + x1 + x1*x2 - x1*x3 - 2*x1^3", 3, false).unwrap(),
        parse_poly("-1 - x1*x2 + x2^2 - x2*x3 + x2^3", 3, false).unwrap(),
        parse_poly("-1 + x2*x3 - x3^2 - x3^3", 3, false).unwrap(),
    ]
}

/// Portfolio preset: m = 3 assets on the unit ball, γ = 10, η = 0.2, N = 30.
pub fn preset_paper_portfolio<T: Scalar>() -> PortfolioModel<T> {
    PortfolioModel::new(
        paper_portfolio_costs(),
        T::of(10.0),
        T::of(0.2),
        T::one(),
        30,
        T::of(10.0),
    )
    .unwrap()
}

/// Extends the fixed customers with seeded random ones: a ∈ (0, 4],
/// b ∈ [0, R], d ∈ [0, 14], rejected until the offer price stays nonnegative.
pub fn scaling_revenue_model<T: Scalar>(k: usize, n: usize, seed: u64) -> RevenueModel<T> {
    let mut customers = paper_revenue_customers::<T>();
    let cap = 12.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while customers.len() < k {
        let a = rng.gen_range(0.0f64..4.0).max(1e-3);
        let b: f64 = rng.gen_range(0.0..cap);
        let d = rng.gen_range(0.0f64..14.0);
        if -a * b.powi(3) + d >= 0.0 {
            customers.push(Customer {
                a: T::of(a),
                b: T::of(b),
                d: T::of(d),
            });
        }
    }
    customers.truncate(k);
    RevenueModel::new(customers, T::of(cap), n, T::of(10.0)).unwrap()
}

/// Extends the fixed costs with `c_p(ξ) = −ξ_p³` for p ≥ 4 in dimension `m`.
pub fn scaling_portfolio_model<T: Scalar>(m: usize, n: usize) -> PortfolioModel<T> {
    let base = paper_portfolio_costs::<T>();
    let costs: Vec<Poly<T>> = (0..m)
        .map(|p| {
            if p < 3 {
                reembed(&base[p], m)
            } else {
                let x = Poly::var(m, p);
                x.mul(&x).unwrap().mul(&x).unwrap().scale(-T::one())
            }
        })
        .collect();
    PortfolioModel::new(costs, T::of(10.0), T::of(0.2), T::one(), n, T::of(10.0)).unwrap()
}

/// The (K or m) × N grids of the scalability studies.
pub fn scaling_grid() -> (Vec<usize>, Vec<usize>) {
    (vec![3, 6, 9, 12], vec![30, 60, 90, 120, 150])
}

fn reembed<T: Scalar>(p: &Poly<T>, m: usize) -> Poly<T> {
    let mut out = p.clone();
    while out.nvars() < m {
        out = out.lift();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;
    use rand::Rng;

    #[test]
    fn revenue_loss_expansion_matches_paper_setup() {
        let rm = preset_paper_revenue::<f64>();
        let (loss, support) = revenue_loss(&rm);
        assert_eq!(loss.num_min(), 3);
        assert_eq!(loss.num_max(), 2);
        assert_eq!(support.dim, 1);
        let g1 = &loss.pieces[0][0];
        let expect = parse_poly::<f64>("-4*x1^3 + 9*x1^2 - 6.75*x1 - 7.3125", 1, false).unwrap();
        let diff = g1.sub(&expect).unwrap();
        for (_, c) in diff.terms() {
            assert!(c.abs() < 1e-12);
        }
        assert_eq!(loss.pieces[0][1], Poly::constant(1, -9.0));
    }

    #[test]
    fn offer_price_past_knee_is_flat() {
        let rm = preset_paper_revenue::<f64>();
        let (loss, _) = revenue_loss(&rm);
        // Past the knee the max piece is the constant −d.
        let k = 0;
        for q in [1.0, 2.0, 12.0] {
            let g1 = loss.pieces[k][0].eval(&[q]).unwrap();
            let g2 = loss.pieces[k][1].eval(&[q]).unwrap();
            assert_eq!(g1.max(g2), g2);
        }
        // At q = 0 the cubic piece gives f(0) = 9 − 4·0.421875 = 7.3125.
        assert!((rm.max_offer(0.0) - 7.3125).abs() < 1e-12);
    }

    #[test]
    fn revenue_sign_identity() {
        let rm = preset_paper_revenue::<f64>();
        let (loss, _) = revenue_loss(&rm);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let q = rng.gen_range(0.0..12.0);
            let lhs = rm.max_offer(q);
            let rhs = -loss.eval(&[q]).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "q={q} {lhs} vs {rhs}");
        }
    }

    #[test]
    fn revenue_model_rejects_bad_customers() {
        let bad = RevenueModel::new(vec![Customer { a: 1.0, b: 3.0, d: 1.0 }], 12.0, 5, 1.0);
        assert!(bad.is_err(), "a*b^3 > d must be rejected");
    }

    #[test]
    fn revenue_dro_model_validates() {
        let rm = preset_paper_revenue::<f64>();
        let model = revenue_dro_model(&rm, 42);
        assert!(validate(&model).is_empty());
        assert_eq!(model.num_samples(), 30);
    }

    #[test]
    fn portfolio_piece_coefficients() {
        let pm = preset_paper_portfolio::<f64>();
        let pieces = portfolio_pieces(&pm);
        // γ = 10, η = 0.2: scale 1 + 50 = 51 on the loss, (1 − 5)·10 = −40 on τ.
        let ratio = pieces.y_multipliers[1][0].constant_term()
            / pieces.y_multipliers[0][0].constant_term();
        assert!((ratio - 51.0).abs() < 1e-12);
        assert!((pieces.tau_coeff[1] + 40.0).abs() < 1e-12);
        assert!((pieces.tau_coeff[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn portfolio_degenerate_risk_parameters() {
        let costs = paper_portfolio_costs::<f64>();
        let no_risk = PortfolioModel::new(costs.clone(), 0.0, 0.2, 1.0, 5, 1.0).unwrap();
        let pieces = portfolio_pieces(&no_risk);
        assert_eq!(pieces.y_multipliers[0], pieces.y_multipliers[1]);
        assert_eq!(pieces.tau_coeff, [0.0, 0.0]);

        let full_conf =
            PortfolioModel::<f64>::new(paper_portfolio_costs(), 3.0, 1.0, 1.0, 5, 1.0).unwrap();
        let pieces = portfolio_pieces(&full_conf);
        assert_eq!(pieces.tau_coeff[1], 0.0);
        let ratio = pieces.y_multipliers[1][0].constant_term()
            / pieces.y_multipliers[0][0].constant_term();
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn paper_presets_match_published_parameters() {
        let rm = preset_paper_revenue::<f64>();
        let c3 = rm.customers[2];
        assert!((c3.a - 1.0 / 110.0).abs() < 1e-15);
        assert_eq!(c3.d, 14.0);
        assert_eq!(c3.b, 11.5);
        let pm = preset_paper_portfolio::<f64>();
        let expect = parse_poly::<f64>("-1 + x2*x3 - x3^2 - x3^3", 3, false).unwrap();
        assert_eq!(pm.costs[2], expect);
        let grid = log_grid(PRESET_EPS_LO, PRESET_EPS_HI, PRESET_EPS_POINTS);
        assert_eq!(grid.len(), 25);
        assert!((grid[0] - 1e-3).abs() < 1e-12);
        assert!((grid[24] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn revenue_samples_clipped_and_deterministic() {
        let a = gen_revenue_samples::<f64>(12.0, 1000, 7);
        let b = gen_revenue_samples::<f64>(12.0, 1000, 7);
        assert_eq!(a.points, b.points);
        assert!(a.points.iter().all(|p| (0.0..=12.0).contains(&p[0])));
        let c = gen_revenue_samples::<f64>(12.0, 1000, 8);
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn revenue_sample_mean_near_center() {
        // Symmetric clipping keeps the mean at R/2; allow 3σ/√N.
        let n = 100_000;
        let s = gen_revenue_samples::<f64>(12.0, n, 123);
        let mean: f64 = s.points.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        let tol = 3.0 * (12.0 / 7.0) / (n as f64).sqrt();
        assert!((mean - 6.0).abs() < tol, "mean {mean}");
    }

    #[test]
    fn sphere_samples_unit_norm() {
        let s = gen_sphere_samples::<f64>(3, 500, 11);
        for p in &s.points {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        let t = gen_sphere_samples::<f64>(3, 500, 11);
        assert_eq!(s.points, t.points);
    }

    #[test]
    fn sphere_sample_coordinates_center() {
        let n = 100_000;
        let s = gen_sphere_samples::<f64>(3, n, 5);
        for c in 0..3 {
            let mean: f64 = s.points.iter().map(|p| p[c]).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 4.0 / (n as f64).sqrt(), "coord {c} mean {mean}");
        }
    }

    #[test]
    fn scaling_presets_shapes() {
        let rm = scaling_revenue_model::<f64>(9, 60, 1);
        assert_eq!(rm.customers.len(), 9);
        assert_eq!(rm.n_samples, 60);
        for c in &rm.customers {
            assert!(-c.a * c.b.powi(3) + c.d >= 0.0);
        }
        let pm = scaling_portfolio_model::<f64>(6, 90);
        assert_eq!(pm.dim, 6);
        let x6 = Poly::<f64>::var(6, 5);
        let minus_cube = x6.mul(&x6).unwrap().mul(&x6).unwrap().scale(-1.0);
        assert_eq!(pm.costs[5], minus_cube);
        let (ks, ns) = scaling_grid();
        assert_eq!(ks, vec![3, 6, 9, 12]);
        assert_eq!(ns, vec![30, 60, 90, 120, 150]);
    }
}
