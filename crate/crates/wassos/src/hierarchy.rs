//! Builders for the four SDP relaxations of the worst-case expectation
//! problem, plus the radius/level sweep driver.
//!
//! All four share the dual backbone `max −λε² + (1/N) Σ α_i` (or its negated
//! min form for the portfolio variant) where the semi-infinite constraints
//! `g(ξ) + λ‖ξ − ξ̂_i‖² − α_i ≥ 0` on the support are certified by quadratic-
//! module membership at level r:
//!
//! * `Ad` — lifted construction for general min-max losses; constraints live
//!   in m+1 variables with the lifted piece family and bracketing bounds.
//! * `AdTilde` — min-only losses (J = 1); no lift.
//! * `Fd` — piecewise convex losses; simplex-weighted piece combinations
//!   replace the lifted multipliers (finite convergence regime).
//! * `Pd` — the mean-CVaR portfolio program with decision variables on the
//!   simplex and a CVaR offset; min form.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::apps::{
    gen_sphere_samples, portfolio_pieces, revenue_dro_model, PortfolioModel, RevenueModel,
};
use crate::backend::{self, SolveResult, SolveStatus};
use crate::model::{lifted_pieces, validate, DroModel, ModelError, Samples, Violation};
use crate::poly::Poly;
use crate::soscomp::{
    multiplier_degree, PolyExpr, ScalarKind, ScalarVarId, SdpProblem, Sense, SosError,
};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("relaxation level too small; minimum admissible r = {min_r}")]
    LevelTooSmall { min_r: u32 },
    #[error("model validation failed: {0:?}")]
    InvalidModel(Vec<Violation>),
    #[error("{0}")]
    Unsupported(String),
    #[error("compiler error: {0}")]
    Sos(#[from] SosError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HierarchyKind {
    Ad,
    AdTilde,
    Fd,
    Pd,
}

impl HierarchyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HierarchyKind::Ad => "ad",
            HierarchyKind::AdTilde => "adtilde",
            HierarchyKind::Fd => "fd",
            HierarchyKind::Pd => "pd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ad" => Some(HierarchyKind::Ad),
            "adtilde" => Some(HierarchyKind::AdTilde),
            "fd" => Some(HierarchyKind::Fd),
            "pd" => Some(HierarchyKind::Pd),
            _ => None,
        }
    }

    /// Whether the hierarchy approaches its target from below (max form).
    pub fn is_max_form(&self) -> bool {
        !matches!(self, HierarchyKind::Pd)
    }
}

impl std::fmt::Display for HierarchyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A compiled relaxation together with the variable handles needed to read
/// the dual certificate back out of a solution.
#[derive(Debug, Clone)]
pub struct BuiltSdp<T> {
    pub problem: SdpProblem<T>,
    pub lambda: ScalarVarId,
    pub alpha: Vec<ScalarVarId>,
    /// Portfolio weights (empty for the expectation hierarchies).
    pub weights: Vec<ScalarVarId>,
    /// CVaR offset variable of the portfolio hierarchy.
    pub cvar_tau: Option<ScalarVarId>,
}

/// Values extracted from a solved relaxation.
#[derive(Debug, Clone)]
pub struct HierarchySolution<T> {
    pub status: SolveStatus,
    pub bound: Option<T>,
    pub lambda: T,
    pub alpha: Vec<T>,
    pub weights: Vec<T>,
    pub cvar_tau: Option<T>,
    pub result: SolveResult<T>,
}

pub fn solve_built<T: Scalar>(built: &BuiltSdp<T>, tol: T) -> HierarchySolution<T> {
    let result = backend::solve_problem(&built.problem, tol);
    HierarchySolution {
        status: result.status,
        bound: result.objective,
        lambda: result.scalar_values[built.lambda.0],
        alpha: built
            .alpha
            .iter()
            .map(|id| result.scalar_values[id.0])
            .collect(),
        weights: built
            .weights
            .iter()
            .map(|id| result.scalar_values[id.0])
            .collect(),
        cvar_tau: built.cvar_tau.map(|id| result.scalar_values[id.0]),
        result,
    }
}

fn checked_model<T: Scalar>(model: &DroModel<T>) -> Result<(), HierarchyError> {
    let violations = validate(model);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(HierarchyError::InvalidModel(violations))
    }
}

/// Minimum admissible level for a set of constraint-factor degrees: the SOS
/// certificate must reach degree `max(2, ...)` to carry the transport cost
/// term and every factor.
fn min_level(factor_degrees: impl IntoIterator<Item = u32>) -> u32 {
    let needed = factor_degrees.into_iter().fold(2, u32::max);
    needed.div_ceil(2)
}

pub fn min_admissible_r<T: Scalar>(kind: HierarchyKind, model: &DroModel<T>) -> u32 {
    let h_degs = model.support.inequalities.iter().map(Poly::total_degree);
    match kind {
        HierarchyKind::Ad => {
            let piece_degs = model
                .loss
                .pieces
                .iter()
                .flatten()
                .map(|g| g.total_degree().max(1));
            min_level(h_degs.chain(piece_degs))
        }
        _ => min_level(h_degs.chain(model.loss.pieces.iter().flatten().map(Poly::total_degree))),
    }
}

pub fn min_admissible_r_portfolio<T: Scalar>(pm: &PortfolioModel<T>) -> u32 {
    min_level(pm.costs.iter().map(Poly::total_degree))
}

/// Shared backbone: adds λ and α and sets the dual objective
/// `±(−λε² + (1/N) Σ α_i)`.
fn dual_backbone<T: Scalar>(
    sdp: &mut SdpProblem<T>,
    n_samples: usize,
    eps: T,
    min_form: bool,
) -> (ScalarVarId, Vec<ScalarVarId>) {
    let lambda = sdp.add_scalar(ScalarKind::Nonneg);
    let alpha: Vec<ScalarVarId> = (0..n_samples)
        .map(|_| sdp.add_scalar(ScalarKind::Free))
        .collect();
    let inv_n = T::one() / T::of(n_samples as f64);
    let eps2 = eps * eps;
    let (sense, sign) = if min_form {
        (Sense::Minimize, -T::one())
    } else {
        (Sense::Maximize, T::one())
    };
    let mut obj = vec![(lambda, -sign * eps2)];
    obj.extend(alpha.iter().map(|id| (*id, sign * inv_n)));
    sdp.set_objective(sense, obj);
    (lambda, alpha)
}

/// Lifted hierarchy for general min-max piecewise losses. One SOS membership
/// per (piece k, sample i) in m+1 variables:
/// `ψ + λφ_i − α_i − Σ σ h_l − Σ η g̃_j ∈ Σ²_{2r}`.
pub fn build_ad<T: Scalar>(model: &DroModel<T>, r: u32) -> Result<BuiltSdp<T>, HierarchyError> {
    checked_model(model)?;
    let min_r = min_admissible_r(HierarchyKind::Ad, model);
    if r < min_r {
        return Err(HierarchyError::LevelTooSmall { min_r });
    }
    let cap = 2 * r;
    let m = model.dim();
    let n = m + 1;
    let mut sdp = SdpProblem::new();
    let (lambda, alpha) = dual_backbone(&mut sdp, model.num_samples(), model.radius, false);

    let psi = Poly::var(n, m);
    let lifted_h: Vec<Poly<T>> = model.support.inequalities.iter().map(Poly::lift).collect();
    for k in 0..model.loss.num_min() {
        let pieces = lifted_pieces(model, k)?;
        for (i, point) in model.samples.points.iter().enumerate() {
            let phi = Poly::squared_distance(point).lift();
            let mut expr = PolyExpr::new(n)
                .with_constant(psi.clone())
                .plus_scalar(lambda, phi)
                .plus_scalar(alpha[i], Poly::constant(n, -T::one()));
            for h in &lifted_h {
                let sigma = sdp.new_sos(n, multiplier_degree(cap, h.total_degree())?);
                expr = expr.plus_gram(sigma, h.neg());
            }
            for piece in &pieces {
                let eta = sdp.new_sos(n, multiplier_degree(cap, piece.total_degree())?);
                expr = expr.plus_gram(eta, piece.neg());
            }
            sdp.assert_is_sos(&expr, cap)?;
        }
    }
    Ok(BuiltSdp {
        problem: sdp,
        lambda,
        alpha,
        weights: Vec::new(),
        cvar_tau: None,
    })
}

/// Unlifted hierarchy for min-polynomial losses (J = 1):
/// `g^{(k)} + λφ_i − α_i − Σ σ h_l ∈ Σ²_{2r}(ξ)`.
pub fn build_adtilde<T: Scalar>(model: &DroModel<T>, r: u32) -> Result<BuiltSdp<T>, HierarchyError> {
    checked_model(model)?;
    if model.loss.num_max() != 1 {
        return Err(HierarchyError::Unsupported(
            "the min-polynomial hierarchy needs J = 1".into(),
        ));
    }
    let min_r = min_admissible_r(HierarchyKind::AdTilde, model);
    if r < min_r {
        return Err(HierarchyError::LevelTooSmall { min_r });
    }
    let cap = 2 * r;
    let m = model.dim();
    let mut sdp = SdpProblem::new();
    let (lambda, alpha) = dual_backbone(&mut sdp, model.num_samples(), model.radius, false);

    for k in 0..model.loss.num_min() {
        let g = &model.loss.pieces[k][0];
        for (i, point) in model.samples.points.iter().enumerate() {
            let phi = Poly::squared_distance(point);
            let mut expr = PolyExpr::new(m)
                .with_constant(g.clone())
                .plus_scalar(lambda, phi)
                .plus_scalar(alpha[i], Poly::constant(m, -T::one()));
            for h in &model.support.inequalities {
                let sigma = sdp.new_sos(m, multiplier_degree(cap, h.total_degree())?);
                expr = expr.plus_gram(sigma, h.neg());
            }
            sdp.assert_is_sos(&expr, cap)?;
        }
    }
    Ok(BuiltSdp {
        problem: sdp,
        lambda,
        alpha,
        weights: Vec::new(),
        cvar_tau: None,
    })
}

/// Finite-convergence hierarchy for piecewise convex losses: each (k, i)
/// constraint carries a simplex-weighted combination of the pieces,
/// `Σ_j δ_j g_j + λφ_i − α_i − Σ σ h_l ∈ Σ²_{2r}(ξ)`.
pub fn build_fd<T: Scalar>(model: &DroModel<T>, r: u32) -> Result<BuiltSdp<T>, HierarchyError> {
    checked_model(model)?;
    if !model.convexity_attested {
        return Err(HierarchyError::Unsupported(
            "the convex hierarchy requires a convexity attestation on the model".into(),
        ));
    }
    let min_r = min_admissible_r(HierarchyKind::Fd, model);
    if r < min_r {
        return Err(HierarchyError::LevelTooSmall { min_r });
    }
    let cap = 2 * r;
    let m = model.dim();
    let j_count = model.loss.num_max();
    let mut sdp = SdpProblem::new();
    let (lambda, alpha) = dual_backbone(&mut sdp, model.num_samples(), model.radius, false);

    for k in 0..model.loss.num_min() {
        for (i, point) in model.samples.points.iter().enumerate() {
            let delta: Vec<ScalarVarId> = (0..j_count)
                .map(|_| sdp.add_scalar(ScalarKind::Nonneg))
                .collect();
            sdp.add_scalar_equality(delta.iter().map(|id| (*id, T::one())).collect(), -T::one());
            let phi = Poly::squared_distance(point);
            let mut expr = PolyExpr::new(m)
                .plus_scalar(lambda, phi)
                .plus_scalar(alpha[i], Poly::constant(m, -T::one()));
            for (j, d) in delta.iter().enumerate() {
                expr = expr.plus_scalar(*d, model.loss.pieces[k][j].clone());
            }
            for h in &model.support.inequalities {
                let sigma = sdp.new_sos(m, multiplier_degree(cap, h.total_degree())?);
                expr = expr.plus_gram(sigma, h.neg());
            }
            sdp.assert_is_sos(&expr, cap)?;
        }
    }
    Ok(BuiltSdp {
        problem: sdp,
        lambda,
        alpha,
        weights: Vec::new(),
        cvar_tau: None,
    })
}

/// Samples Hessians of the loss pieces and negated support inequalities at
/// seeded random support points; returns a warning per failed spot check.
/// Attestation support only: deciding polynomial convexity exactly is out of
/// scope.
pub fn spot_check_convexity<T: Scalar>(model: &DroModel<T>, seed: u64, points: usize) -> Vec<String> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = model.dim();
    let rho = model.support.norm_bound.to64();
    let mut warnings = Vec::new();
    let mut targets: Vec<(String, Poly<T>)> = Vec::new();
    for (k, row) in model.loss.pieces.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            targets.push((format!("piece g[{k}][{j}]"), g.clone()));
        }
    }
    for (l, h) in model.support.inequalities.iter().enumerate() {
        targets.push((format!("-h[{l}]"), h.neg()));
    }
    for (name, p) in &targets {
        let hessian: Vec<Vec<Poly<T>>> = (0..m)
            .map(|a| (0..m).map(|b| p.partial(a).partial(b)).collect())
            .collect();
        let mut checked = 0;
        let mut attempts = 0;
        while checked < points && attempts < points * 100 {
            attempts += 1;
            let point: Vec<T> = (0..m).map(|_| T::of(rng.gen_range(-rho..=rho))).collect();
            if !model.support.contains(&point, T::of(1e-12)) {
                continue;
            }
            checked += 1;
            let mut hmat = crate::backend::Mat::zeros(m, m);
            for a in 0..m {
                for b in 0..m {
                    hmat.set(a, b, hessian[a][b].eval(&point).unwrap());
                }
            }
            let eigs = crate::backend::linalg::sym_eigenvalues(&hmat);
            if eigs.first().map_or(false, |e| *e < -T::of(1e-8)) {
                warnings.push(format!(
                    "{name} has an indefinite Hessian at a sampled support point (min eig {:?})",
                    eigs[0]
                ));
                break;
            }
        }
    }
    warnings
}

/// Portfolio hierarchy (min form): decision weights on the simplex, a free
/// CVaR offset, and per-sample SOS constraints for both CVaR pieces with a
/// single ball multiplier each.
pub fn build_pd<T: Scalar>(
    pm: &PortfolioModel<T>,
    samples: &Samples<T>,
    r: u32,
) -> Result<BuiltSdp<T>, HierarchyError> {
    build_pd_inner(pm, samples, r, None)
}

/// The inner worst-case subproblem at pinned decisions; used by oracles and
/// the ε → 0 consistency checks.
pub fn build_pd_fixed<T: Scalar>(
    pm: &PortfolioModel<T>,
    samples: &Samples<T>,
    r: u32,
    weights: &[T],
    cvar_tau: T,
) -> Result<BuiltSdp<T>, HierarchyError> {
    build_pd_inner(pm, samples, r, Some((weights, cvar_tau)))
}

fn build_pd_inner<T: Scalar>(
    pm: &PortfolioModel<T>,
    samples: &Samples<T>,
    r: u32,
    pinned: Option<(&[T], T)>,
) -> Result<BuiltSdp<T>, HierarchyError> {
    let min_r = min_admissible_r_portfolio(pm);
    if r < min_r {
        return Err(HierarchyError::LevelTooSmall { min_r });
    }
    if samples.is_empty() {
        return Err(HierarchyError::Unsupported("portfolio needs samples".into()));
    }
    let cap = 2 * r;
    let m = pm.dim;
    let support = pm.support();
    let h1 = &support.inequalities[0];
    let pieces = portfolio_pieces(pm);

    let mut sdp = SdpProblem::new();
    let (lambda, alpha) = dual_backbone(&mut sdp, samples.len(), pm.radius, true);
    let weights: Vec<ScalarVarId> = (0..m).map(|_| sdp.add_scalar(ScalarKind::Nonneg)).collect();
    let cvar_tau = sdp.add_scalar(ScalarKind::Free);
    // Simplex row Σ y_p = 1.
    sdp.add_scalar_equality(weights.iter().map(|id| (*id, T::one())).collect(), -T::one());
    if let Some((w, t)) = pinned {
        for (id, v) in weights.iter().zip(w) {
            sdp.add_scalar_equality(vec![(*id, T::one())], -*v);
        }
        sdp.add_scalar_equality(vec![(cvar_tau, T::one())], -t);
    }

    for (i, point) in samples.points.iter().enumerate() {
        let phi = Poly::squared_distance(point);
        for k in 0..2 {
            let mut expr = PolyExpr::new(m)
                .plus_scalar(lambda, phi.clone())
                .plus_scalar(alpha[i], Poly::constant(m, -T::one()))
                .plus_scalar(cvar_tau, Poly::constant(m, -pieces.tau_coeff[k]));
            for (p, y) in weights.iter().enumerate() {
                expr = expr.plus_scalar(*y, pieces.y_multipliers[k][p].neg());
            }
            let sigma = sdp.new_sos(m, multiplier_degree(cap, h1.total_degree())?);
            expr = expr.plus_gram(sigma, h1.neg());
            sdp.assert_is_sos(&expr, cap)?;
        }
    }
    Ok(BuiltSdp {
        problem: sdp,
        lambda,
        alpha,
        weights,
        cvar_tau: Some(cvar_tau),
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// What a sweep runs per (ε, r, replication) tuple. App sources regenerate
/// their samples from the replication seed; a fixed model is reused as-is.
#[derive(Debug, Clone)]
pub enum SweepSource<T> {
    Fixed {
        model: DroModel<T>,
        kind: HierarchyKind,
    },
    /// Revenue experiment: builds the lifted hierarchy on the negated loss
    /// and reports the negated (revenue) value.
    Revenue(RevenueModel<T>),
    Portfolio(PortfolioModel<T>),
}

impl<T: Scalar> SweepSource<T> {
    pub fn kind(&self) -> HierarchyKind {
        match self {
            SweepSource::Fixed { kind, .. } => *kind,
            SweepSource::Revenue(_) => HierarchyKind::Ad,
            SweepSource::Portfolio(_) => HierarchyKind::Pd,
        }
    }

    /// Sign applied to the solver objective before reporting: the revenue
    /// experiment negates (its bound is the minimized upper revenue estimate).
    pub fn bound_sign(&self) -> f64 {
        match self {
            SweepSource::Revenue(_) => -1.0,
            _ => 1.0,
        }
    }

    pub fn build(&self, eps: f64, r: u32, seed: u64) -> Result<BuiltSdp<T>, HierarchyError> {
        match self {
            SweepSource::Fixed { model, kind } => {
                let mut model = model.clone();
                model.radius = T::of(eps);
                match kind {
                    HierarchyKind::Ad => build_ad(&model, r),
                    HierarchyKind::AdTilde => build_adtilde(&model, r),
                    HierarchyKind::Fd => build_fd(&model, r),
                    HierarchyKind::Pd => Err(HierarchyError::Unsupported(
                        "the portfolio hierarchy needs a portfolio source".into(),
                    )),
                }
            }
            SweepSource::Revenue(rm) => {
                let mut model = revenue_dro_model(rm, seed);
                model.radius = T::of(eps);
                build_ad(&model, r)
            }
            SweepSource::Portfolio(pm) => {
                let mut pm = pm.clone();
                pm.radius = T::of(eps);
                let samples = gen_sphere_samples(pm.dim, pm.n_samples, seed);
                build_pd(&pm, &samples, r)
            }
        }
    }
}

/// One raw sweep row.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub kind: HierarchyKind,
    pub eps: f64,
    pub r: u32,
    pub rep: u32,
    pub seed: u64,
    pub status: String,
    pub bound: Option<f64>,
    pub wall_ms: u128,
}

/// Aggregate over replications of one (ε, r) cell; only optimal rows count.
#[derive(Debug, Clone)]
pub struct SweepAggregate {
    pub kind: HierarchyKind,
    pub eps: f64,
    pub r: u32,
    pub mean: Option<f64>,
    pub q20: Option<f64>,
    pub q80: Option<f64>,
    pub solved: usize,
}

#[derive(Debug, Clone)]
pub struct BoundSweep {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub r_levels: Vec<u32>,
    pub eps_grid: Vec<f64>,
    pub replications: u32,
    pub base_seed: u64,
    pub tol: f64,
    pub jobs: Option<usize>,
}

/// Runs the full (ε, r, replication) grid. Tuples run in parallel with no
/// shared state; failures land in the status column without aborting the
/// sweep. Replication seeds are `base_seed + rep`.
pub fn sweep<T: Scalar>(source: &SweepSource<T>, config: &SweepConfig) -> BoundSweep {
    let mut tasks = Vec::new();
    for &eps in &config.eps_grid {
        for &r in &config.r_levels {
            for rep in 0..config.replications {
                tasks.push((eps, r, rep, config.base_seed + rep as u64));
            }
        }
    }
    let run_task = |&(eps, r, rep, seed): &(f64, u32, u32, u64)| -> SweepRow {
        let start = Instant::now();
        let (status, bound) = match source.build(eps, r, seed) {
            Ok(built) => {
                let sol = solve_built(&built, T::of(config.tol));
                let bound = sol.bound.map(|b| b.to64() * source.bound_sign());
                (sol.status.as_str().to_string(), bound)
            }
            Err(e) => (format!("build-error: {e}"), None),
        };
        SweepRow {
            kind: source.kind(),
            eps,
            r,
            rep,
            seed,
            status,
            bound,
            wall_ms: start.elapsed().as_millis(),
        }
    };
    let rows: Vec<SweepRow> = match config.jobs {
        Some(1) => tasks.iter().map(run_task).collect(),
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .expect("thread pool");
            pool.install(|| tasks.par_iter().map(run_task).collect())
        }
        None => tasks.par_iter().map(run_task).collect(),
    };

    let mut aggregates = Vec::new();
    for &eps in &config.eps_grid {
        for &r in &config.r_levels {
            let bounds: Vec<f64> = rows
                .iter()
                .filter(|row| row.eps == eps && row.r == r && row.status == "optimal")
                .filter_map(|row| row.bound)
                .collect();
            let mut sorted = bounds.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            aggregates.push(SweepAggregate {
                kind: source.kind(),
                eps,
                r,
                mean: mean(&bounds),
                q20: quantile(&sorted, 0.2),
                q80: quantile(&sorted, 0.8),
                solved: bounds.len(),
            });
        }
    }
    BoundSweep { rows, aggregates }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Linear-interpolation quantile on a sorted slice.
fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

impl BoundSweep {
    /// CSV with raw rows first, then per-(ε, r) aggregate rows marked with
    /// status `aggregate` and the trailing mean/q20/q80 columns filled.
    /// `meta` lines are emitted as leading `#` comments.
    pub fn write_csv(&self, w: &mut dyn Write, meta: &[String]) -> std::io::Result<()> {
        for line in meta {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "kind,eps,r,rep,seed,status,bound,wall_ms,mean,q20,q80")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},,,",
                row.kind,
                row.eps,
                row.r,
                row.rep,
                row.seed,
                row.status,
                row.bound.map(|b| b.to_string()).unwrap_or_default(),
                row.wall_ms
            )?;
        }
        for agg in &self.aggregates {
            writeln!(
                w,
                "{},{},{},,,aggregate,,,{},{},{}",
                agg.kind,
                agg.eps,
                agg.r,
                agg.mean.map(|v| v.to_string()).unwrap_or_default(),
                agg.q20.map(|v| v.to_string()).unwrap_or_default(),
                agg.q80.map(|v| v.to_string()).unwrap_or_default(),
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::{preset_paper_portfolio, preset_paper_revenue};
    use crate::model::{PiecewiseLoss, SupportSet};
    use crate::poly::parse_poly;

    fn p(s: &str, n: usize) -> Poly<f64> {
        parse_poly(s, n, false).unwrap()
    }

    fn unit_interval_linear_model(eps: f64) -> DroModel<f64> {
        let support = SupportSet::interval(1.0);
        let loss = PiecewiseLoss::new(vec![vec![p("x1", 1)]]);
        let samples = Samples::new(vec![vec![0.5]]);
        DroModel::new(support, loss, samples, eps)
    }

    #[test]
    fn ad_block_count_matches_revenue_formula() {
        let rm = preset_paper_revenue::<f64>();
        let model = revenue_dro_model(&rm, 1);
        let built = build_ad(&model, 2).unwrap();
        // K·N·(1 + L + J + 2) SOS blocks.
        let expected = 3 * 30 * (1 + 2 + 2 + 2);
        assert_eq!(built.problem.grams().len(), expected);
        assert_eq!(expected, 630);
    }

    #[test]
    fn ad_level_gate_names_minimum() {
        let rm = preset_paper_revenue::<f64>();
        let model = revenue_dro_model(&rm, 1);
        match build_ad(&model, 1) {
            Err(HierarchyError::LevelTooSmall { min_r }) => assert_eq!(min_r, 2),
            other => panic!("expected level gate, got {other:?}"),
        }
    }

    #[test]
    fn ad_objective_single_sample() {
        // N = 1: objective reads −λε² + α₁.
        let model = unit_interval_linear_model(0.25);
        let built = build_ad(&model, 1).unwrap();
        assert_eq!(built.problem.sense, Sense::Maximize);
        let obj = &built.problem.objective;
        assert_eq!(obj.len(), 2);
        assert_eq!(obj[0].0, built.lambda);
        assert!((obj[0].1 + 0.0625).abs() < 1e-15);
        assert_eq!(obj[1].0, built.alpha[0]);
        assert_eq!(obj[1].1, 1.0);
    }

    #[test]
    fn adtilde_analytic_shift_bound() {
        // min E[ξ] over the Wasserstein ball around δ_{0.5} on [0, 1]:
        // the deterministic shift reaches 0.5 − ε.
        let model = unit_interval_linear_model(0.1);
        let built = build_adtilde(&model, 1).unwrap();
        let sol = solve_built(&built, 1e-8);
        assert_eq!(sol.status, SolveStatus::Optimal);
        let bound = sol.bound.unwrap();
        assert!((bound - 0.4).abs() < 1e-4, "bound {bound}");
    }

    #[test]
    fn adtilde_rejects_two_max_pieces() {
        let support = SupportSet::interval(1.0);
        let loss = PiecewiseLoss::new(vec![vec![p("x1", 1), p("-1", 1)]]);
        let model = DroModel::new(support, loss, Samples::new(vec![vec![0.5]]), 0.1);
        assert!(matches!(
            build_adtilde(&model, 1),
            Err(HierarchyError::Unsupported(_))
        ));
    }

    #[test]
    fn adtilde_constant_loss_bound_is_constant() {
        let support = SupportSet::interval(1.0);
        let loss = PiecewiseLoss::new(vec![vec![p("-3", 1)]]);
        let model = DroModel::new(support, loss, Samples::new(vec![vec![0.5]]), 0.7);
        let built = build_adtilde(&model, 1).unwrap();
        let sol = solve_built(&built, 1e-8);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.bound.unwrap() + 3.0).abs() < 1e-5);
    }

    #[test]
    fn ad_shrinking_radius_recovers_empirical_value() {
        // Tiny radii force the dual transport weight toward 1/(2ε); the
        // solver hits its accuracy floor around 1e-6 there, which is far
        // inside the 1e-3 consistency tolerance.
        let model = unit_interval_linear_model(1e-4);
        let built = build_ad(&model, 1).unwrap();
        let sol = solve_built(&built, 1e-6);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.bound.unwrap() - 0.5).abs() < 1e-3, "bound {:?}", sol.bound);
    }

    #[test]
    fn fd_requires_attestation_and_matches_adtilde_when_j1() {
        let model = unit_interval_linear_model(0.1);
        assert!(matches!(
            build_fd(&model, 1),
            Err(HierarchyError::Unsupported(_))
        ));
        let attested = model.attest_convexity();
        let fd = solve_built(&build_fd(&attested, 1).unwrap(), 1e-8);
        let ad = solve_built(&build_adtilde(&attested, 1).unwrap(), 1e-8);
        assert_eq!(fd.status, SolveStatus::Optimal);
        assert!((fd.bound.unwrap() - ad.bound.unwrap()).abs() < 1e-5);
    }

    #[test]
    fn fd_strongly_convex_quadratic_finite_convergence() {
        // K = J = 1, strongly convex quadratic: levels r and r+1 agree.
        let support = SupportSet::interval(1.0);
        let loss = PiecewiseLoss::new(vec![vec![p("x1^2 - x1", 1)]]);
        let samples = Samples::new(vec![vec![0.3], vec![0.8]]);
        let model = DroModel::new(support, loss, samples, 0.05).attest_convexity();
        let b1 = solve_built(&build_fd(&model, 1).unwrap(), 1e-8);
        let b2 = solve_built(&build_fd(&model, 2).unwrap(), 1e-8);
        assert_eq!(b1.status, SolveStatus::Optimal);
        assert_eq!(b2.status, SolveStatus::Optimal);
        assert!((b1.bound.unwrap() - b2.bound.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn spot_check_flags_nonconvex_piece() {
        let support = SupportSet::interval(1.0);
        let loss = PiecewiseLoss::new(vec![vec![p("-1*x1^2", 1)]]);
        let model = DroModel::new(support, loss, Samples::new(vec![vec![0.5]]), 0.1);
        let warnings = spot_check_convexity(&model, 9, 20);
        assert!(warnings.iter().any(|w| w.contains("piece g[0][0]")));
        let convex = unit_interval_linear_model(0.1);
        assert!(spot_check_convexity(&convex, 9, 20).is_empty());
    }

    #[test]
    fn pd_level_gate() {
        let pm = preset_paper_portfolio::<f64>();
        let samples = gen_sphere_samples(3, 5, 1);
        match build_pd(&pm, &samples, 1) {
            Err(HierarchyError::LevelTooSmall { min_r }) => assert_eq!(min_r, 2),
            other => panic!("expected level gate, got {other:?}"),
        }
    }

    #[test]
    fn pd_structure_counts() {
        let pm = preset_paper_portfolio::<f64>();
        let samples = gen_sphere_samples(3, 4, 1);
        let built = build_pd(&pm, &samples, 2).unwrap();
        // Two SOS constraints per sample, each with one ball multiplier and
        // one residual block.
        assert_eq!(built.problem.grams().len(), 2 * 4 * 2);
        assert_eq!(built.problem.sense, Sense::Minimize);
        assert_eq!(built.weights.len(), 3);
        assert!(built.cvar_tau.is_some());
    }

    #[test]
    fn sweep_rows_and_aggregates_shape() {
        let model = unit_interval_linear_model(0.1);
        let source = SweepSource::Fixed {
            model,
            kind: HierarchyKind::AdTilde,
        };
        let config = SweepConfig {
            r_levels: vec![1],
            eps_grid: vec![0.05, 0.1],
            replications: 2,
            base_seed: 7,
            tol: 1e-8,
            jobs: Some(1),
        };
        let s = sweep(&source, &config);
        assert_eq!(s.rows.len(), 4);
        assert_eq!(s.aggregates.len(), 2);
        for row in &s.rows {
            assert_eq!(row.status, "optimal");
            assert_eq!(row.seed, 7 + row.rep as u64);
        }
        // Fixed model: replications see identical data, bounds agree.
        let agg = &s.aggregates[0];
        assert!(agg.mean.is_some());
        assert!((agg.q20.unwrap() - agg.q80.unwrap()).abs() < 1e-9);
        let mut csv = Vec::new();
        s.write_csv(&mut csv, &["test".into()]).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("# test\nkind,eps,r,rep,seed,status,bound,wall_ms,mean,q20,q80\n"));
        assert_eq!(text.lines().filter(|l| l.contains(",aggregate,")).count(), 2);
    }

    #[test]
    fn sweep_single_cell_single_rep() {
        let model = unit_interval_linear_model(0.1);
        let source = SweepSource::Fixed {
            model,
            kind: HierarchyKind::AdTilde,
        };
        let config = SweepConfig {
            r_levels: vec![1],
            eps_grid: vec![0.1],
            replications: 1,
            base_seed: 1,
            tol: 1e-8,
            jobs: Some(1),
        };
        let s = sweep(&source, &config);
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.aggregates.len(), 1);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), Some(1.0));
        assert_eq!(quantile(&v, 1.0), Some(4.0));
        assert!((quantile(&v, 0.2).unwrap() - 1.6).abs() < 1e-12);
        assert!((quantile(&v, 0.8).unwrap() - 3.4).abs() < 1e-12);
    }
}
