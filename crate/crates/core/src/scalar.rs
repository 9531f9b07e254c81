use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the solver is generic over: `f32` or `f64`.
///
/// Everything numeric in the crate is written against this trait; the
/// experiment presets and the CLI instantiate it with `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Error function.
    fn erf(self) -> Self;

    /// Converts an `f64` literal, rounding if `Self` is narrower.
    fn lit(v: f64) -> Self;

    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }

    #[inline]
    fn lit(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }

    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

/// Exact GeLU, `x·Φ(x)`, and its first three derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeluDerivs<S> {
    pub value: S,
    pub d1: S,
    pub d2: S,
    pub d3: S,
}

#[inline]
pub fn gelu_derivs<S: Scalar>(z: S) -> GeluDerivs<S> {
    let half = S::lit(0.5);
    let cdf = half * (S::one() + (z * S::FRAC_1_SQRT_2()).erf());
    let pdf = (-half * z * z).exp() * S::lit(0.398_942_280_401_432_7);
    let z2 = z * z;
    GeluDerivs {
        value: z * cdf,
        d1: cdf + z * pdf,
        d2: pdf * (S::lit(2.0) - z2),
        d3: z * pdf * (z2 - S::lit(4.0)),
    }
}

#[inline]
pub fn gelu<S: Scalar>(z: S) -> S {
    z * S::lit(0.5) * (S::one() + (z * S::FRAC_1_SQRT_2()).erf())
}
