//! Worst-case expectation bounds for piecewise-polynomial losses over
//! Wasserstein balls, computed through sum-of-squares SDP hierarchies.
//!
//! The pipeline: describe a problem instance ([`model::DroModel`]), compile a
//! relaxation level into SDP data ([`hierarchy`] + [`soscomp`]), solve it with
//! the embedded interior-point method or export SDPA files ([`backend`]), and
//! cross-check the resulting bound against brute-force verifiers ([`oracle`]).
//! Two ready-made decision models (revenue estimation and mean-CVaR portfolio
//! selection) live in [`apps`].
//!
//! All core math is generic over the scalar type through [`Scalar`]; concrete
//! `f64` aliases are exported at the crate root.

use std::fmt;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

pub mod apps;
pub mod backend;
pub mod hierarchy;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod soscomp;

/// Floating-point scalar the whole stack is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + NumAssignOps
    + FromPrimitive
    + ToPrimitive
    + iter::SumExt
    + fmt::Display
    + fmt::LowerExp
    + fmt::Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, panicking only for non-finite inputs that
    /// the target type cannot represent.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    /// Widens to `f64` for reporting and serialization.
    fn to64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssignOps
        + FromPrimitive
        + ToPrimitive
        + iter::SumExt
        + fmt::Display
        + fmt::LowerExp
        + fmt::Debug
        + Default
        + Send
        + Sync
        + 'static
{
}

mod iter {
    /// `Sum` over both owned and borrowed items, so slices of scalars fold
    /// without copies.
    pub trait SumExt: Sized + for<'a> std::iter::Sum<&'a Self> + std::iter::Sum<Self> {}
    impl<T> SumExt for T where T: for<'a> std::iter::Sum<&'a T> + std::iter::Sum<T> {}
}

pub type Poly64 = poly::Poly<f64>;
pub type DroModel64 = model::DroModel<f64>;
pub type SdpProblem64 = soscomp::SdpProblem<f64>;
pub type ConicStandardForm64 = backend::ConicStandardForm<f64>;
pub type SolveResult64 = backend::SolveResult<f64>;

pub type Poly32 = poly::Poly<f32>;
pub type DroModel32 = model::DroModel<f32>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_roundtrip_f32_f64() {
        assert_eq!(<f64 as Scalar>::of(0.5), 0.5);
        assert_eq!(<f32 as Scalar>::of(0.5), 0.5f32);
        assert_eq!(1.25f64.to64(), 1.25);
    }
}
