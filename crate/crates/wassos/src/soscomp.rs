//! Compiles polynomial identities that are affine in unknown scalars and
//! SOS-constrained Gram blocks into SDP data.
//!
//! An SOS membership constraint `p ∈ Σ²_{2r}` is realized by a PSD Gram
//! matrix `G` over the monomial basis of degree `r` together with one linear
//! equality per monomial of degree ≤ 2r, equating the coefficients of `p`
//! with those of `b(x)ᵀ G b(x)`. Only upper-triangular Gram entries are
//! independent unknowns; the coefficient stored for an off-diagonal entry is
//! already doubled, so a row reads `const + Σ c·v + Σ c·G_ab = 0` with `G_ab`
//! appearing once.

use thiserror::Error;

use crate::poly::{monomial_basis, Exponent, Poly};
use crate::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SosError {
    #[error("degree overflow: expression reaches degree {found}, cap is {cap}")]
    DegreeOverflow { found: u32, cap: u32 },
    #[error("relaxation level too small: 2r = {cap} < factor degree {factor_degree}; minimum admissible r = {min_r}")]
    LevelTooSmall {
        cap: u32,
        factor_degree: u32,
        min_r: u32,
    },
    #[error("ambient dimension mismatch inside expression: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScalarVarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GramVarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Free,
    Nonneg,
}

/// PSD Gram block over an ordered monomial basis.
#[derive(Debug, Clone)]
pub struct GramVar {
    pub id: GramVarId,
    pub nvars: usize,
    pub basis: Vec<Exponent>,
}

impl GramVar {
    pub fn size(&self) -> usize {
        self.basis.len()
    }
}

/// A polynomial expression affine in the problem unknowns: a fixed constant
/// part, scalar variables with fixed polynomial multipliers, and Gram blocks
/// each contributing `factor(x) · b(x)ᵀ G b(x)`.
#[derive(Debug, Clone)]
pub struct PolyExpr<T> {
    pub nvars: usize,
    pub constant: Poly<T>,
    pub scalar_terms: Vec<(ScalarVarId, Poly<T>)>,
    pub gram_terms: Vec<(GramVarId, Poly<T>)>,
}

impl<T: Scalar> PolyExpr<T> {
    pub fn new(nvars: usize) -> Self {
        PolyExpr {
            nvars,
            constant: Poly::zero(nvars),
            scalar_terms: Vec::new(),
            gram_terms: Vec::new(),
        }
    }

    pub fn with_constant(mut self, constant: Poly<T>) -> Self {
        self.constant = constant;
        self
    }

    pub fn plus_scalar(mut self, var: ScalarVarId, multiplier: Poly<T>) -> Self {
        self.scalar_terms.push((var, multiplier));
        self
    }

    pub fn plus_gram(mut self, gram: GramVarId, factor: Poly<T>) -> Self {
        self.gram_terms.push((gram, factor));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// One equality row: `constant + Σ coeff·scalar + Σ coeff·G[a,b] = 0`.
/// Off-diagonal Gram coefficients are stored doubled (the `(b,a)` mirror is
/// implied and not stored).
#[derive(Debug, Clone, PartialEq)]
pub struct EqRow<T> {
    pub scalar: Vec<(ScalarVarId, T)>,
    pub gram: Vec<(GramVarId, u32, u32, T)>,
    pub constant: T,
}

/// The compiled relaxation: scalar variables, PSD Gram blocks, sparse linear
/// equality rows, and a linear objective over the scalars.
#[derive(Debug, Clone)]
pub struct SdpProblem<T> {
    scalars: Vec<ScalarKind>,
    grams: Vec<GramVar>,
    rows: Vec<EqRow<T>>,
    pub objective: Vec<(ScalarVarId, T)>,
    pub sense: Sense,
}

impl<T: Scalar> Default for SdpProblem<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> SdpProblem<T> {
    pub fn new() -> Self {
        SdpProblem {
            scalars: Vec::new(),
            grams: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            sense: Sense::Maximize,
        }
    }

    pub fn add_scalar(&mut self, kind: ScalarKind) -> ScalarVarId {
        let id = ScalarVarId(self.scalars.len());
        self.scalars.push(kind);
        id
    }

    pub fn scalar_kind(&self, id: ScalarVarId) -> ScalarKind {
        self.scalars[id.0]
    }

    pub fn scalars(&self) -> &[ScalarKind] {
        &self.scalars
    }

    pub fn grams(&self) -> &[GramVar] {
        &self.grams
    }

    pub fn rows(&self) -> &[EqRow<T>] {
        &self.rows
    }

    pub fn set_objective(&mut self, sense: Sense, terms: Vec<(ScalarVarId, T)>) {
        self.sense = sense;
        self.objective = terms;
    }

    /// Fresh Gram block representing an unknown SOS polynomial of total degree
    /// at most `max_total_degree` (even) in `nvars` variables. The block is
    /// square of side C(nvars + d, d) with d = max_total_degree / 2.
    pub fn new_sos(&mut self, nvars: usize, max_total_degree: u32) -> GramVarId {
        let id = GramVarId(self.grams.len());
        self.grams.push(GramVar {
            id,
            nvars,
            basis: monomial_basis(nvars, max_total_degree / 2),
        });
        id
    }

    /// Appends a plain linear equality `Σ coeff·scalar + constant = 0`.
    pub fn add_scalar_equality(&mut self, terms: Vec<(ScalarVarId, T)>, constant: T) {
        self.rows.push(EqRow {
            scalar: terms,
            gram: Vec::new(),
            constant,
        });
    }

    /// Equates `expr` to zero coefficient-wise: one equality row per monomial
    /// of degree ≤ `degree_cap` in the ambient ring, in graded-lex order.
    pub fn assert_zero(&mut self, expr: &PolyExpr<T>, degree_cap: u32) -> Result<(), SosError> {
        let n = expr.nvars;
        self.check_expr(expr, degree_cap)?;

        let basis = monomial_basis(n, degree_cap);
        let index_of = |e: &Exponent| basis.binary_search(e).ok();

        let mut scalar_cols: Vec<Vec<(ScalarVarId, T)>> = vec![Vec::new(); basis.len()];
        let mut gram_cols: Vec<Vec<(GramVarId, u32, u32, T)>> = vec![Vec::new(); basis.len()];
        let mut constants: Vec<T> = basis
            .iter()
            .map(|e| expr.constant.coefficient(e))
            .collect();
        // Merge duplicated monomials from the constant part exactly once.
        let _ = &mut constants;

        for (var, multiplier) in &expr.scalar_terms {
            for (e, c) in multiplier.terms() {
                let row = index_of(e).expect("degree checked above");
                scalar_cols[row].push((*var, *c));
            }
        }

        for (gram_id, factor) in &expr.gram_terms {
            let gram = &self.grams[gram_id.0];
            if gram.nvars != n {
                return Err(SosError::DimensionMismatch {
                    left: gram.nvars,
                    right: n,
                });
            }
            for (mu, fc) in factor.terms() {
                for a in 0..gram.basis.len() {
                    for b in a..gram.basis.len() {
                        let target = mu.mul(&gram.basis[a]).mul(&gram.basis[b]);
                        let row = index_of(&target).expect("degree checked above");
                        let coeff = if a == b { *fc } else { T::of(2.0) * *fc };
                        gram_cols[row].push((*gram_id, a as u32, b as u32, coeff));
                    }
                }
            }
        }

        for (row, _) in basis.iter().enumerate() {
            let mut scalar = std::mem::take(&mut scalar_cols[row]);
            let mut gram = std::mem::take(&mut gram_cols[row]);
            merge_scalar(&mut scalar);
            merge_gram(&mut gram);
            self.rows.push(EqRow {
                scalar,
                gram,
                constant: constants[row],
            });
        }
        Ok(())
    }

    /// Constrains `expr` to be a sum of squares of degree ≤ `degree_cap`:
    /// introduces a fresh residual Gram block `S` and asserts
    /// `expr − b(x)ᵀ S b(x) = 0`. Returns the residual block.
    pub fn assert_is_sos(&mut self, expr: &PolyExpr<T>, degree_cap: u32) -> Result<GramVarId, SosError> {
        self.check_expr(expr, degree_cap)?;
        let residual = self.new_sos(expr.nvars, degree_cap);
        let mut shifted = expr.clone();
        shifted
            .gram_terms
            .push((residual, Poly::constant(expr.nvars, -T::one())));
        self.assert_zero(&shifted, degree_cap)?;
        Ok(residual)
    }

    fn check_expr(&self, expr: &PolyExpr<T>, degree_cap: u32) -> Result<(), SosError> {
        let check = |nvars: usize, deg: u32| -> Result<(), SosError> {
            if nvars != expr.nvars {
                return Err(SosError::DimensionMismatch {
                    left: nvars,
                    right: expr.nvars,
                });
            }
            if deg > degree_cap {
                return Err(SosError::DegreeOverflow {
                    found: deg,
                    cap: degree_cap,
                });
            }
            Ok(())
        };
        if !expr.constant.is_zero() {
            check(expr.constant.nvars(), expr.constant.total_degree())?;
        }
        for (_, multiplier) in &expr.scalar_terms {
            if !multiplier.is_zero() {
                check(multiplier.nvars(), multiplier.total_degree())?;
            }
        }
        for (gram_id, factor) in &expr.gram_terms {
            let gram = &self.grams[gram_id.0];
            let basis_deg = gram.basis.last().map(Exponent::degree).unwrap_or(0);
            if !factor.is_zero() {
                check(factor.nvars(), factor.total_degree() + 2 * basis_deg)?;
            }
        }
        Ok(())
    }
}

fn merge_scalar<T: Scalar>(entries: &mut Vec<(ScalarVarId, T)>) {
    entries.sort_by_key(|(id, _)| *id);
    entries.dedup_by(|later, earlier| {
        if later.0 == earlier.0 {
            earlier.1 += later.1;
            true
        } else {
            false
        }
    });
    entries.retain(|(_, c)| c.abs() > T::of(crate::poly::DROP_TOLERANCE));
}

fn merge_gram<T: Scalar>(entries: &mut Vec<(GramVarId, u32, u32, T)>) {
    entries.sort_by_key(|(id, a, b, _)| (*id, *a, *b));
    entries.dedup_by(|later, earlier| {
        if (later.0, later.1, later.2) == (earlier.0, earlier.1, earlier.2) {
            earlier.3 += later.3;
            true
        } else {
            false
        }
    });
    entries.retain(|(_, _, _, c)| c.abs() > T::of(crate::poly::DROP_TOLERANCE));
}

/// Largest even degree an SOS multiplier may have so that the product with a
/// factor of degree `factor_degree` stays within `total_cap`.
pub fn multiplier_degree(total_cap: u32, factor_degree: u32) -> Result<u32, SosError> {
    if total_cap < factor_degree {
        return Err(SosError::LevelTooSmall {
            cap: total_cap,
            factor_degree,
            min_r: factor_degree.div_ceil(2),
        });
    }
    Ok(2 * ((total_cap - factor_degree) / 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;

    fn p(s: &str, n: usize) -> Poly<f64> {
        parse_poly(s, n, false).unwrap()
    }

    #[test]
    fn new_sos_block_sizes() {
        let mut sdp = SdpProblem::<f64>::new();
        let a = sdp.new_sos(2, 4);
        let b = sdp.new_sos(2, 2);
        let c = sdp.new_sos(1, 0);
        assert_eq!(sdp.grams()[a.0].size(), 6);
        assert_eq!(sdp.grams()[b.0].size(), 3);
        assert_eq!(sdp.grams()[c.0].size(), 1);
    }

    #[test]
    fn assert_zero_explicit_gram_rows() {
        // (1 + x^2) − bᵀGb with b = [1, x]: G11 = 1, 2*G12 = 0, G22 = 1.
        let mut sdp = SdpProblem::<f64>::new();
        let g = sdp.new_sos(1, 2);
        let expr = PolyExpr::new(1)
            .with_constant(p("x1^2 + 1", 1))
            .plus_gram(g, Poly::constant(1, -1.0));
        sdp.assert_zero(&expr, 2).unwrap();
        assert_eq!(sdp.rows().len(), 3);
        // constant row
        assert_eq!(sdp.rows()[0].constant, 1.0);
        assert_eq!(sdp.rows()[0].gram, vec![(g, 0, 0, -1.0)]);
        // x row
        assert_eq!(sdp.rows()[1].constant, 0.0);
        assert_eq!(sdp.rows()[1].gram, vec![(g, 0, 1, -2.0)]);
        // x^2 row
        assert_eq!(sdp.rows()[2].constant, 1.0);
        assert_eq!(sdp.rows()[2].gram, vec![(g, 1, 1, -1.0)]);
    }

    #[test]
    fn assert_zero_row_count_n2() {
        let mut sdp = SdpProblem::<f64>::new();
        let g = sdp.new_sos(2, 4);
        let expr = PolyExpr::new(2)
            .with_constant(p("x1^4 + x2^2 + 1", 2))
            .plus_gram(g, Poly::constant(2, -1.0));
        sdp.assert_zero(&expr, 4).unwrap();
        assert_eq!(sdp.rows().len(), 15);
    }

    #[test]
    fn degree_overflow_is_detected() {
        let mut sdp = SdpProblem::<f64>::new();
        let expr = PolyExpr::new(1).with_constant(p("x1^3", 1));
        assert!(matches!(
            sdp.assert_zero(&expr, 2),
            Err(SosError::DegreeOverflow { found: 3, cap: 2 })
        ));
    }

    #[test]
    fn multiplier_degree_examples() {
        assert_eq!(multiplier_degree(4, 3).unwrap(), 0);
        assert_eq!(multiplier_degree(4, 2).unwrap(), 2);
        assert_eq!(multiplier_degree(4, 1).unwrap(), 2);
        let err = multiplier_degree(2, 3).unwrap_err();
        assert!(matches!(err, SosError::LevelTooSmall { min_r: 2, .. }));
    }

    #[test]
    fn compilation_is_deterministic() {
        let build = || {
            let mut sdp = SdpProblem::<f64>::new();
            let lam = sdp.add_scalar(ScalarKind::Nonneg);
            let g = sdp.new_sos(2, 2);
            let expr = PolyExpr::new(2)
                .with_constant(p("x1^2*x2^2 + 2", 2))
                .plus_scalar(lam, p("x1^2 + x2^2", 2))
                .plus_gram(g, p("1 - x1", 2));
            sdp.assert_zero(&expr, 4).unwrap();
            format!("{:?}", sdp.rows())
        };
        assert_eq!(build(), build());
    }
}
