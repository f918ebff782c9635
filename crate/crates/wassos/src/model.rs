//! Problem data model: support set, piecewise loss grid, empirical samples,
//! Wasserstein radius, and the bracketing bounds required by the lifted
//! constraint construction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{parse_poly, Poly, PolyError};
use crate::Scalar;

/// Tolerance for sample membership checks; clipped or projected data sits
/// numerically on the boundary.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("polynomial error: {0}")]
    Poly(#[from] PolyError),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("model file parse error: {0}")]
    File(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Basic semi-algebraic support set `{x : h_l(x) >= 0}` together with a
/// declared norm bound `rho` such that `‖x‖₂ <= rho` on the set.
#[derive(Debug, Clone)]
pub struct SupportSet<T> {
    pub dim: usize,
    pub inequalities: Vec<Poly<T>>,
    pub norm_bound: T,
}

impl<T: Scalar> SupportSet<T> {
    /// Interval `[0, r]` on the line, the revenue-model support.
    pub fn interval(r: T) -> Self {
        let h1 = Poly::var(1, 0);
        let h2 = Poly::constant(1, r).sub(&Poly::var(1, 0)).unwrap();
        SupportSet {
            dim: 1,
            inequalities: vec![h1, h2],
            norm_bound: r,
        }
    }

    /// Euclidean ball of radius `r`: single inequality `r² − ‖x‖² >= 0`.
    pub fn ball(dim: usize, r: T) -> Self {
        let h = Poly::constant(dim, r * r)
            .sub(&Poly::squared_distance(&vec![T::zero(); dim]))
            .unwrap();
        SupportSet {
            dim,
            inequalities: vec![h],
            norm_bound: r,
        }
    }

    pub fn contains(&self, point: &[T], tol: T) -> bool {
        if point.len() != self.dim {
            return false;
        }
        let norm = point
            .iter()
            .fold(T::zero(), |acc, v| acc + *v * *v)
            .sqrt();
        if norm > self.norm_bound + tol {
            return false;
        }
        self.inequalities
            .iter()
            .all(|h| h.eval(point).map_or(false, |v| v >= -tol))
    }
}

/// K×J grid of polynomials; the loss value at `x` is
/// `min over k of max over j of g[k][j](x)`.
#[derive(Debug, Clone)]
pub struct PiecewiseLoss<T> {
    pub pieces: Vec<Vec<Poly<T>>>,
}

impl<T: Scalar> PiecewiseLoss<T> {
    pub fn new(pieces: Vec<Vec<Poly<T>>>) -> Self {
        PiecewiseLoss { pieces }
    }

    pub fn num_min(&self) -> usize {
        self.pieces.len()
    }

    pub fn num_max(&self) -> usize {
        self.pieces.first().map_or(0, Vec::len)
    }

    pub fn eval(&self, point: &[T]) -> Result<T, PolyError> {
        let mut min: Option<T> = None;
        for row in &self.pieces {
            let mut max: Option<T> = None;
            for g in row {
                let v = g.eval(point)?;
                max = Some(max.map_or(v, |m: T| m.max(v)));
            }
            let v = max.expect("piece rows are non-empty");
            min = Some(min.map_or(v, |m: T| m.min(v)));
        }
        Ok(min.expect("at least one piece row"))
    }

    pub fn max_degree(&self) -> u32 {
        self.pieces
            .iter()
            .flatten()
            .map(Poly::total_degree)
            .max()
            .unwrap_or(0)
    }
}

/// Empirical sample set: `N` points backing the empirical distribution.
#[derive(Debug, Clone)]
pub struct Samples<T> {
    pub points: Vec<Vec<T>>,
}

impl<T: Scalar> Samples<T> {
    pub fn new(points: Vec<Vec<T>>) -> Self {
        Samples { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-piece bracketing pair `(tau1, tau2)` with
/// `max_j g_j < tau1` and `tau2 < min_j g_j` on the support.
#[derive(Debug, Clone)]
pub struct TauBounds<T> {
    pub per_piece: Vec<(T, T)>,
}

/// Full problem instance: worst-case expectation of the piecewise loss over
/// the Wasserstein ball of radius `radius` around the samples.
#[derive(Debug, Clone)]
pub struct DroModel<T> {
    pub support: SupportSet<T>,
    pub loss: PiecewiseLoss<T>,
    pub samples: Samples<T>,
    pub radius: T,
    pub tau: TauBounds<T>,
    /// User attestation that every piece is convex and every −h_l is convex,
    /// a prerequisite of the finite-convergence hierarchy.
    pub convexity_attested: bool,
}

impl<T: Scalar> DroModel<T> {
    /// Builds a model with default certified tau bounds.
    pub fn new(support: SupportSet<T>, loss: PiecewiseLoss<T>, samples: Samples<T>, radius: T) -> Self {
        let tau = crude_tau_bounds(&loss, support.norm_bound);
        DroModel {
            support,
            loss,
            samples,
            radius,
            tau,
            convexity_attested: false,
        }
    }

    pub fn with_tau(mut self, tau: TauBounds<T>) -> Self {
        self.tau = tau;
        self
    }

    pub fn attest_convexity(mut self) -> Self {
        self.convexity_attested = true;
        self
    }

    pub fn dim(&self) -> usize {
        self.support.dim
    }

    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }
}

/// Certified crude bracketing bounds from coefficient sums on the norm ball:
/// with `B_k = max_j (Σ_{α≠0} |c_α| rho^{|α|} + |c_0|)`, the pair
/// `(B_k + 1, −B_k − 1)` strictly brackets every piece on the support since
/// `|x^α| <= ‖x‖₂^{|α|} <= rho^{|α|}` there.
pub fn crude_tau_bounds<T: Scalar>(loss: &PiecewiseLoss<T>, rho: T) -> TauBounds<T> {
    let per_piece = loss
        .pieces
        .iter()
        .map(|row| {
            let bound = row
                .iter()
                .map(|g| g.ball_coefficient_bound(rho) + g.constant_term().abs())
                .fold(T::zero(), T::max);
            (bound + T::one(), -bound - T::one())
        })
        .collect();
    TauBounds { per_piece }
}

/// A single validation failure; violations are data, not errors.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptySupport,
    BadNormBound,
    BadRadius,
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    EmptyLossGrid,
    RaggedLossGrid { row: usize },
    NoSamples,
    SampleOutsideSupport { index: usize },
    TauNotStrict { piece: usize },
    TauTooTight { piece: usize, sample: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EmptySupport => write!(f, "support set has no inequalities"),
            Violation::BadNormBound => write!(f, "norm bound must be positive"),
            Violation::BadRadius => write!(f, "Wasserstein radius must be positive"),
            Violation::DimensionMismatch { what, expected, found } => {
                write!(f, "{what}: expected dimension {expected}, found {found}")
            }
            Violation::EmptyLossGrid => write!(f, "loss grid has no pieces"),
            Violation::RaggedLossGrid { row } => write!(f, "loss grid row {row} has a different length"),
            Violation::NoSamples => write!(f, "sample set is empty"),
            Violation::SampleOutsideSupport { index } => {
                write!(f, "sample {index} lies outside the support set")
            }
            Violation::TauNotStrict { piece } => write!(f, "tau bounds not strict for piece {piece}"),
            Violation::TauTooTight { piece, sample } => {
                write!(f, "tau bounds for piece {piece} fail to bracket sample {sample}")
            }
        }
    }
}

/// Checks every structural invariant; the empty list marks a usable model.
pub fn validate<T: Scalar>(model: &DroModel<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let m = model.support.dim;
    if model.support.inequalities.is_empty() {
        out.push(Violation::EmptySupport);
    }
    if model.support.norm_bound <= T::zero() {
        out.push(Violation::BadNormBound);
    }
    if model.radius <= T::zero() {
        out.push(Violation::BadRadius);
    }
    for h in &model.support.inequalities {
        if h.nvars() != m {
            out.push(Violation::DimensionMismatch {
                what: "support inequality",
                expected: m,
                found: h.nvars(),
            });
        }
    }
    if model.loss.pieces.is_empty() || model.loss.num_max() == 0 {
        out.push(Violation::EmptyLossGrid);
    }
    let j = model.loss.num_max();
    for (k, row) in model.loss.pieces.iter().enumerate() {
        if row.len() != j {
            out.push(Violation::RaggedLossGrid { row: k });
        }
        for g in row {
            if g.nvars() != m {
                out.push(Violation::DimensionMismatch {
                    what: "loss piece",
                    expected: m,
                    found: g.nvars(),
                });
            }
        }
    }
    if model.samples.is_empty() {
        out.push(Violation::NoSamples);
    }
    let tol = T::of(MEMBERSHIP_TOL);
    for (i, point) in model.samples.points.iter().enumerate() {
        if point.len() != m {
            out.push(Violation::DimensionMismatch {
                what: "sample",
                expected: m,
                found: point.len(),
            });
            continue;
        }
        if !model.support.contains(point, tol) {
            out.push(Violation::SampleOutsideSupport { index: i });
        }
    }
    if model.tau.per_piece.len() != model.loss.pieces.len() {
        out.push(Violation::DimensionMismatch {
            what: "tau bounds",
            expected: model.loss.pieces.len(),
            found: model.tau.per_piece.len(),
        });
        return out;
    }
    for (k, (t1, t2)) in model.tau.per_piece.iter().enumerate() {
        if t1 <= t2 {
            out.push(Violation::TauNotStrict { piece: k });
            continue;
        }
        for (i, point) in model.samples.points.iter().enumerate() {
            if point.len() != m {
                continue;
            }
            let row = &model.loss.pieces[k];
            let values: Vec<T> = row.iter().filter_map(|g| g.eval(point).ok()).collect();
            if values.is_empty() {
                continue;
            }
            let max = values.iter().copied().fold(values[0], T::max);
            let min = values.iter().copied().fold(values[0], T::min);
            if max >= *t1 || min <= *t2 {
                out.push(Violation::TauTooTight { piece: k, sample: i });
            }
        }
    }
    out
}

/// Explicit Archimedean certificate for the interval support `[0, R]`:
/// returns `Rbar = R² + 1` and SOS polynomials `(s0, s1, s2)` satisfying the
/// exact identity `Rbar − x² = s0 + s1·x + s2·(R − x)`.
pub fn interval_archimedean_certificate<T: Scalar>(
    r: T,
) -> Result<(T, Poly<T>, Poly<T>, Poly<T>), ModelError> {
    if r <= T::zero() {
        return Err(ModelError::Invalid("interval radius must be positive".into()));
    }
    let rbar = r * r + T::one();
    let sigma0 = Poly::constant(1, rbar - r * r);
    // (R − x)² / R
    let rx = Poly::constant(1, r).sub(&Poly::var(1, 0)).unwrap();
    let sigma1 = rx.mul(&rx).unwrap().scale(T::one() / r);
    // x²/R + R
    let x = Poly::var(1, 0);
    let sigma2 = x
        .mul(&x)
        .unwrap()
        .scale(T::one() / r)
        .add(&Poly::constant(1, r))
        .unwrap();
    Ok((rbar, sigma0, sigma1, sigma2))
}

/// Archimedean certificate for the ball support `{x : R² − ‖x‖² >= 0}`:
/// `Rbar − ‖x‖² = s0 + 1·(R² − ‖x‖²)` with `Rbar = R² + 1`, `s0 = 1`.
pub fn ball_archimedean_certificate<T: Scalar>(dim: usize, r: T) -> Result<(T, Poly<T>, Poly<T>), ModelError> {
    if r <= T::zero() {
        return Err(ModelError::Invalid("ball radius must be positive".into()));
    }
    Ok((r * r + T::one(), Poly::one(dim), Poly::one(dim)))
}

/// The lifted piece family for min-piece `k`: `J` polynomials
/// `t − g_j(x)` followed by `tau1 − t` and `t − tau2`, all in `m+1` variables
/// with `t` the trailing lifted variable.
pub fn lifted_pieces<T: Scalar>(model: &DroModel<T>, k: usize) -> Result<Vec<Poly<T>>, ModelError> {
    let row = model
        .loss
        .pieces
        .get(k)
        .ok_or_else(|| ModelError::Invalid(format!("piece index {k} out of range")))?;
    let m = model.dim();
    let t = Poly::var(m + 1, m);
    let mut out = Vec::with_capacity(row.len() + 2);
    for g in row {
        out.push(t.sub(&g.lift()).map_err(PolyError::from)?);
    }
    let (tau1, tau2) = model.tau.per_piece[k];
    out.push(Poly::constant(m + 1, tau1).sub(&t).unwrap());
    out.push(t.sub(&Poly::constant(m + 1, tau2)).unwrap());
    Ok(out)
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

/// On-disk model document (TOML): polynomials as strings over `x1..xm`,
/// samples inline or as a path to a CSV of N×m values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub dim: usize,
    pub norm_bound: f64,
    pub inequalities: Vec<String>,
    pub pieces: Vec<Vec<String>>,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_csv: Option<String>,
    /// Optional per-piece `[tau1, tau2]` overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub convex_attested: bool,
}

impl ModelFile {
    pub fn from_str_toml(text: &str) -> Result<Self, ModelError> {
        toml::from_str(text).map_err(|e| ModelError::File(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ModelError> {
        Self::from_str_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model file serializes")
    }

    /// Builds the in-memory model, resolving a samples CSV relative to `base`.
    pub fn build<T: Scalar>(&self, base: Option<&std::path::Path>) -> Result<DroModel<T>, ModelError> {
        let m = self.dim;
        let inequalities = self
            .inequalities
            .iter()
            .map(|s| parse_poly(s, m, false))
            .collect::<Result<Vec<_>, _>>()?;
        let pieces = self
            .pieces
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| parse_poly(s, m, false))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let points: Vec<Vec<T>> = match (&self.samples, &self.samples_csv) {
            (Some(rows), None) => rows
                .iter()
                .map(|r| r.iter().map(|v| T::of(*v)).collect())
                .collect(),
            (None, Some(rel)) => {
                let path = match base {
                    Some(b) => b.join(rel),
                    None => std::path::PathBuf::from(rel),
                };
                read_samples_csv(&path)?
            }
            (Some(_), Some(_)) => {
                return Err(ModelError::File(
                    "model specifies both inline samples and samples_csv".into(),
                ))
            }
            (None, None) => return Err(ModelError::File("model has no samples".into())),
        };
        let support = SupportSet {
            dim: m,
            inequalities,
            norm_bound: T::of(self.norm_bound),
        };
        let loss = PiecewiseLoss::new(pieces);
        let mut model = DroModel::new(support, loss, Samples::new(points), T::of(self.radius));
        if let Some(tau) = &self.tau {
            model = model.with_tau(TauBounds {
                per_piece: tau.iter().map(|[a, b]| (T::of(*a), T::of(*b))).collect(),
            });
        }
        if self.convex_attested {
            model = model.attest_convexity();
        }
        Ok(model)
    }
}

fn read_samples_csv<T: Scalar>(path: &std::path::Path) -> Result<Vec<Vec<T>>, ModelError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<T>, _> = line
            .split(',')
            .map(|tok| tok.trim().parse::<f64>().map(T::of))
            .collect();
        rows.push(row.map_err(|e| ModelError::File(format!("samples csv line {}: {e}", n + 1)))?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;
    use rand::{Rng, SeedableRng};

    fn p(s: &str, n: usize) -> Poly<f64> {
        parse_poly(s, n, false).unwrap()
    }

    fn revenue_like_model() -> DroModel<f64> {
        let support = SupportSet::interval(12.0);
        let loss = PiecewiseLoss::new(vec![vec![
            p("-4*x1^3 + 9*x1^2 - 6.75*x1 - 7.3125", 1),
            p("-9", 1),
        ]]);
        let samples = Samples::new(vec![vec![5.0], vec![6.5], vec![0.0], vec![12.0]]);
        DroModel::new(support, loss, samples, 1.0)
    }

    #[test]
    fn crude_tau_matches_hand_computation() {
        let loss = PiecewiseLoss::new(vec![vec![p("-4*x1^3 + 9*x1^2 - 6.75*x1 - 7.3125", 1)]]);
        let tau = crude_tau_bounds(&loss, 12.0);
        let expected = 4.0 * 1728.0 + 9.0 * 144.0 + 6.75 * 12.0 + 7.3125;
        assert!((tau.per_piece[0].0 - (expected + 1.0)).abs() < 1e-9);
        assert!((tau.per_piece[0].1 + (expected + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn crude_tau_constant_pieces() {
        let loss = PiecewiseLoss::new(vec![vec![p("-9", 1)]]);
        let tau = crude_tau_bounds(&loss, 7.0);
        assert_eq!(tau.per_piece[0], (10.0, -10.0));
        let zero = PiecewiseLoss::new(vec![vec![Poly::zero(1)]]);
        assert_eq!(crude_tau_bounds(&zero, 3.0).per_piece[0], (1.0, -1.0));
    }

    #[test]
    fn crude_tau_brackets_random_ball_points() {
        let loss = PiecewiseLoss::new(vec![
            vec![p("-4*x1^3 + 9*x1^2 - 6.75*x1 - 7.3125", 1), p("-9", 1)],
            vec![p("0.5*x1^2 - 2", 1), p("x1", 1)],
        ]);
        let rho = 12.0;
        let tau = crude_tau_bounds(&loss, rho);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x = rng.gen_range(-rho..=rho);
            for (k, row) in loss.pieces.iter().enumerate() {
                let (t1, t2) = tau.per_piece[k];
                for g in row {
                    let v = g.eval(&[x]).unwrap();
                    assert!(v < t1 && v > t2, "x={x} v={v} tau=({t1},{t2})");
                }
            }
        }
    }

    #[test]
    fn validate_accepts_well_formed_model() {
        assert!(validate(&revenue_like_model()).is_empty());
    }

    #[test]
    fn validate_flags_sample_outside_support() {
        let mut model = revenue_like_model();
        model.samples.points.push(vec![13.0]);
        let violations = validate(&model);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::SampleOutsideSupport { index: 4 })));
    }

    #[test]
    fn validate_flags_non_strict_tau() {
        let mut model = revenue_like_model();
        model.tau.per_piece[0] = (5.0, 5.0);
        let violations = validate(&model);
        assert!(violations.iter().any(|v| matches!(v, Violation::TauNotStrict { piece: 0 })));
    }

    #[test]
    fn interval_certificate_identity_is_exact() {
        for r in [12.0, 1.0] {
            let (rbar, s0, s1, s2) = interval_archimedean_certificate::<f64>(r).unwrap();
            assert_eq!(rbar, r * r + 1.0);
            // Rbar − x² − (s0 + s1·h1 + s2·h2) must be exactly zero.
            let x = Poly::<f64>::var(1, 0);
            let lhs = Poly::constant(1, rbar).sub(&x.mul(&x).unwrap()).unwrap();
            let h1 = Poly::var(1, 0);
            let h2 = Poly::constant(1, r).sub(&Poly::var(1, 0)).unwrap();
            let rhs = s0
                .add(&s1.mul(&h1).unwrap())
                .unwrap()
                .add(&s2.mul(&h2).unwrap())
                .unwrap();
            let residual = lhs.sub(&rhs).unwrap();
            assert!(residual.is_zero(), "residual {residual}");
            // Spot check both sides at x = R/2.
            let at = [r / 2.0];
            assert!((lhs.eval(&at).unwrap() - rhs.eval(&at).unwrap()).abs() < 1e-12);
        }
        assert!(interval_archimedean_certificate::<f64>(-1.0).is_err());
    }

    #[test]
    fn ball_certificate_identity() {
        let (rbar, s0, s1) = ball_archimedean_certificate::<f64>(3, 2.0).unwrap();
        let h = SupportSet::ball(3, 2.0).inequalities[0].clone();
        let lhs = Poly::constant(3, rbar)
            .sub(&Poly::squared_distance(&[0.0, 0.0, 0.0]))
            .unwrap();
        let rhs = s0.add(&s1.mul(&h).unwrap()).unwrap();
        assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn lifted_pieces_structure() {
        let support = SupportSet::interval(3.0);
        let loss = PiecewiseLoss::new(vec![vec![p("x1^2", 1)]]);
        let samples = Samples::new(vec![vec![1.0]]);
        let model = DroModel::new(support, loss, samples, 0.5).with_tau(TauBounds {
            per_piece: vec![(5.0, -5.0)],
        });
        let lifted = lifted_pieces(&model, 0).unwrap();
        assert_eq!(lifted.len(), 3);
        let expect0 = parse_poly::<f64>("xt - x1^2", 2, true).unwrap();
        let expect1 = parse_poly::<f64>("5 - xt", 2, true).unwrap();
        let expect2 = parse_poly::<f64>("xt + 5", 2, true).unwrap();
        assert_eq!(lifted[0], expect0);
        assert_eq!(lifted[1], expect1);
        assert_eq!(lifted[2], expect2);
        assert!(lifted_pieces(&model, 3).is_err());
    }

    #[test]
    fn lifted_pieces_constant_loss() {
        let support = SupportSet::interval(1.0);
        let loss = PiecewiseLoss::new(vec![vec![p("-9", 1)]]);
        let model = DroModel::new(support, loss, Samples::new(vec![vec![0.5]]), 0.5);
        let lifted = lifted_pieces(&model, 0).unwrap();
        assert_eq!(lifted[0], parse_poly::<f64>("xt + 9", 2, true).unwrap());
    }

    #[test]
    fn lifted_pieces_nonnegative_at_max_point() {
        let model = revenue_like_model();
        let lifted = lifted_pieces(&model, 0).unwrap();
        let j = model.loss.num_max();
        for x in [0.0, 1.0, 4.0, 11.5, 12.0] {
            let gmax = model.loss.pieces[0]
                .iter()
                .map(|g| g.eval(&[x]).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            for piece in lifted.iter().take(j) {
                assert!(piece.eval(&[x, gmax]).unwrap() >= -1e-12);
            }
        }
    }

    #[test]
    fn model_file_roundtrip() {
        let text = r#"
dim = 1
norm_bound = 12.0
inequalities = ["x1", "12 - x1"]
pieces = [["-4*x1^3 + 9*x1^2 - 6.75*x1 - 7.3125", "-9"]]
radius = 0.5
samples = [[5.0], [6.5]]
"#;
        let file = ModelFile::from_str_toml(text).unwrap();
        let model: DroModel<f64> = file.build(None).unwrap();
        assert!(validate(&model).is_empty());
        assert_eq!(model.num_samples(), 2);
        let round: ModelFile = ModelFile::from_str_toml(&file.to_toml()).unwrap();
        assert_eq!(round.inequalities, file.inequalities);
    }

    #[test]
    fn model_file_tau_override() {
        let text = r#"
dim = 1
norm_bound = 1.0
inequalities = ["x1", "1 - x1"]
pieces = [["x1"]]
radius = 0.1
samples = [[0.5]]
tau = [[2.0, -2.0]]
"#;
        let model: DroModel<f64> = ModelFile::from_str_toml(text).unwrap().build(None).unwrap();
        assert_eq!(model.tau.per_piece[0], (2.0, -2.0));
    }
}
