//! Second-order input jets carried on the tape.
//!
//! A [`Jet2`] holds `u`, `∂u/∂x_k` and `∂²u/∂x_k²` for every input axis `k`.
//! Each coefficient is a tape variable, so anything built from jet
//! coefficients (a PDE residual, a loss) stays differentiable with respect to
//! the network parameters. Mixed partials are not carried.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::tape::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Jet2<'t, S> {
    pub val: Var<'t, S>,
    pub d1: Vec<Var<'t, S>>,
    pub d2: Vec<Var<'t, S>>,
}

impl<'t, S: Scalar> Jet2<'t, S> {
    pub fn constant(tape: &'t Tape<S>, value: S, dim: usize) -> Self {
        let zero = tape.constant(S::zero());
        Self {
            val: tape.constant(value),
            d1: vec![zero; dim],
            d2: vec![zero; dim],
        }
    }

    /// Independent variable along `axis`: first derivative one on that axis,
    /// zero elsewhere, all second derivatives zero.
    pub fn seed(tape: &'t Tape<S>, value: S, axis: usize, dim: usize) -> Self {
        assert!(axis < dim, "seed axis {axis} out of range for dimension {dim}");
        let zero = tape.constant(S::zero());
        let one = tape.constant(S::one());
        let mut d1 = vec![zero; dim];
        d1[axis] = one;
        Self {
            val: tape.constant(value),
            d1,
            d2: vec![zero; dim],
        }
    }

    /// One seeded jet per coordinate of `point`.
    pub fn inputs(tape: &'t Tape<S>, point: &[S]) -> Vec<Self> {
        let dim = point.len();
        point
            .iter()
            .enumerate()
            .map(|(axis, &v)| Self::seed(tape, v, axis, dim))
            .collect()
    }

    /// Jet whose coefficients are free leaves; their adjoints give the
    /// sensitivity of a downstream scalar to each coefficient.
    pub fn leaves(tape: &'t Tape<S>, val: S, d1: &[S], d2: &[S]) -> Result<Self> {
        if d1.len() != d2.len() {
            return Err(Error::usage(format!(
                "jet coefficient lengths differ: {} vs {}",
                d1.len(),
                d2.len()
            )));
        }
        Ok(Self {
            val: tape.input_coefficient(val),
            d1: d1.iter().map(|&v| tape.input_coefficient(v)).collect(),
            d2: d2.iter().map(|&v| tape.input_coefficient(v)).collect(),
        })
    }

    pub fn from_parts(val: Var<'t, S>, d1: Vec<Var<'t, S>>, d2: Vec<Var<'t, S>>) -> Result<Self> {
        if d1.len() != d2.len() {
            return Err(Error::usage("jet first/second derivative lengths differ"));
        }
        Ok(Self { val, d1, d2 })
    }

    pub fn dim(&self) -> usize {
        self.d1.len()
    }

    pub fn value(&self) -> S {
        self.val.value()
    }

    pub fn tape(&self) -> &'t Tape<S> {
        self.val.tape()
    }

    /// Plain values of `(u, ∂u, ∂²u)`.
    pub fn values(&self) -> (S, Vec<S>, Vec<S>) {
        (
            self.val.value(),
            self.d1.iter().map(Var::value).collect(),
            self.d2.iter().map(Var::value).collect(),
        )
    }

    /// Composes with a univariate `g`, given `g(u)`, `g'(u)`, `g''(u)` as
    /// tape variables: `(g∘u)_k = g'·u_k`, `(g∘u)_kk = g''·u_k² + g'·u_kk`.
    pub fn chain(&self, g: Var<'t, S>, g1: Var<'t, S>, g2: Var<'t, S>) -> Self {
        let d1 = self.d1.iter().map(|&uk| g1 * uk).collect();
        let d2 = self
            .d1
            .iter()
            .zip(&self.d2)
            .map(|(&uk, &ukk)| g2 * uk * uk + g1 * ukk)
            .collect();
        Self { val: g, d1, d2 }
    }

    pub fn exp(&self) -> Self {
        let e = self.val.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let inv = self.val.recip();
        self.chain(self.val.ln(), inv, -(inv * inv))
    }

    pub fn sin(&self) -> Self {
        let s = self.val.sin();
        let c = self.val.cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let s = self.val.sin();
        let c = self.val.cos();
        self.chain(c, -s, -c)
    }

    pub fn tanh(&self) -> Self {
        let t = self.val.tanh();
        let g1 = (t * t).scale(-S::one()) + S::one();
        let g2 = (t * g1).scale(S::lit(-2.0));
        self.chain(t, g1, g2)
    }

    pub fn sqrt(&self) -> Self {
        let r = self.val.sqrt();
        let g1 = r.recip().scale(S::lit(0.5));
        let g2 = (g1 * g1 * g1).scale(S::lit(-2.0));
        self.chain(r, g1, g2)
    }

    pub fn atan(&self) -> Self {
        let u = self.val;
        let g1 = (u * u + S::one()).recip();
        let g2 = (u * g1 * g1).scale(S::lit(-2.0));
        self.chain(u.atan(), g1, g2)
    }

    pub fn erf(&self) -> Self {
        let u = self.val;
        let g1 = (-(u * u)).exp().scale(S::FRAC_2_SQRT_PI());
        let g2 = (u * g1).scale(S::lit(-2.0));
        self.chain(u.erf(), g1, g2)
    }

    /// `u^p` for a constant exponent.
    pub fn powf(&self, p: S) -> Self {
        let u = self.val;
        let g1 = u.powf(p - S::one()).scale(p);
        let g2 = u.powf(p - S::lit(2.0)).scale(p * (p - S::one()));
        self.chain(u.powf(p), g1, g2)
    }

    pub fn powi(&self, n: i32) -> Self {
        match n {
            0 => Jet2::constant(self.tape(), S::one(), self.dim()),
            1 => self.clone(),
            _ => {
                let u = self.val;
                let nf = S::lit(n as f64);
                let g1 = u.powi(n - 1).scale(nf);
                let g2 = u.powi(n - 2).scale(nf * (nf - S::one()));
                self.chain(u.powi(n), g1, g2)
            }
        }
    }

    pub fn square(&self) -> Self {
        let u = self.val;
        self.chain(u.square(), u.scale(S::lit(2.0)), u.constant(S::lit(2.0)))
    }

    /// Exact GeLU `u·Φ(u)` composed from `erf`.
    pub fn gelu(&self) -> Self {
        let half = S::lit(0.5);
        let cdf = (self.clone() * S::FRAC_1_SQRT_2()).erf() * half + half;
        self.clone() * cdf
    }

    pub fn scale(&self, c: S) -> Self {
        Self {
            val: self.val.scale(c),
            d1: self.d1.iter().map(|d| d.scale(c)).collect(),
            d2: self.d2.iter().map(|d| d.scale(c)).collect(),
        }
    }

    fn check_dims(&self, other: &Self) {
        assert_eq!(self.dim(), other.dim(), "jet dimensions differ");
        debug_assert!(std::ptr::eq(self.tape(), other.tape()), "jets on different tapes");
    }

    fn zip(&self, other: &Self, f: impl Fn(Var<'t, S>, Var<'t, S>) -> Var<'t, S>) -> Self {
        self.check_dims(other);
        Self {
            val: f(self.val, other.val),
            d1: self.d1.iter().zip(&other.d1).map(|(&a, &b)| f(a, b)).collect(),
            d2: self.d2.iter().zip(&other.d2).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn mul_jet(&self, other: &Self) -> Self {
        self.check_dims(other);
        let (u, v) = (self.val, other.val);
        let d1 = self
            .d1
            .iter()
            .zip(&other.d1)
            .map(|(&uk, &vk)| uk * v + u * vk)
            .collect();
        let d2 = (0..self.dim())
            .map(|k| {
                let cross = (self.d1[k] * other.d1[k]).scale(S::lit(2.0));
                self.d2[k] * v + cross + u * other.d2[k]
            })
            .collect();
        Self { val: u * v, d1, d2 }
    }

    pub fn div_jet(&self, other: &Self) -> Self {
        self.check_dims(other);
        let v = other.val;
        let inv = v.recip();
        let q = self.val * inv;
        let mut d1 = Vec::with_capacity(self.dim());
        let mut d2 = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let qk = (self.d1[k] - q * other.d1[k]) * inv;
            let qkk = (self.d2[k] - (qk * other.d1[k]).scale(S::lit(2.0)) - q * other.d2[k]) * inv;
            d1.push(qk);
            d2.push(qkk);
        }
        Self { val: q, d1, d2 }
    }
}

impl<'t, S: Scalar> Add for Jet2<'t, S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl<'t, S: Scalar> Sub for Jet2<'t, S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl<'t, S: Scalar> Mul for Jet2<'t, S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.mul_jet(&rhs)
    }
}

impl<'t, S: Scalar> Div for Jet2<'t, S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self.div_jet(&rhs)
    }
}

impl<'t, S: Scalar> Neg for Jet2<'t, S> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-S::one())
    }
}

impl<'t, S: Scalar> Add<S> for Jet2<'t, S> {
    type Output = Self;
    fn add(mut self, rhs: S) -> Self {
        self.val = self.val + rhs;
        self
    }
}

impl<'t, S: Scalar> Sub<S> for Jet2<'t, S> {
    type Output = Self;
    fn sub(mut self, rhs: S) -> Self {
        self.val = self.val - rhs;
        self
    }
}

impl<'t, S: Scalar> Mul<S> for Jet2<'t, S> {
    type Output = Self;
    fn mul(self, rhs: S) -> Self {
        self.scale(rhs)
    }
}

impl<'t, S: Scalar> Div<S> for Jet2<'t, S> {
    type Output = Self;
    fn div(self, rhs: S) -> Self {
        self.scale(rhs.recip())
    }
}

/// Elementary-function algebra shared by plain scalars and jets, so closed-form
/// solutions can be written once and evaluated either way.
pub trait Elementary<S>:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<S, Output = Self>
    + Sub<S, Output = Self>
    + Mul<S, Output = Self>
    + Div<S, Output = Self>
{
    fn exp(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn atan(&self) -> Self;
    fn erf(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
}

impl<S: Scalar> Elementary<S> for S {
    fn exp(&self) -> Self {
        num_traits::Float::exp(*self)
    }
    fn sin(&self) -> Self {
        num_traits::Float::sin(*self)
    }
    fn cos(&self) -> Self {
        num_traits::Float::cos(*self)
    }
    fn sqrt(&self) -> Self {
        num_traits::Float::sqrt(*self)
    }
    fn atan(&self) -> Self {
        num_traits::Float::atan(*self)
    }
    fn erf(&self) -> Self {
        Scalar::erf(*self)
    }
    fn powi(&self, n: i32) -> Self {
        num_traits::Float::powi(*self, n)
    }
}

impl<'t, S: Scalar> Elementary<S> for Jet2<'t, S> {
    fn exp(&self) -> Self {
        Jet2::exp(self)
    }
    fn sin(&self) -> Self {
        Jet2::sin(self)
    }
    fn cos(&self) -> Self {
        Jet2::cos(self)
    }
    fn sqrt(&self) -> Self {
        Jet2::sqrt(self)
    }
    fn atan(&self) -> Self {
        Jet2::atan(self)
    }
    fn erf(&self) -> Self {
        Jet2::erf(self)
    }
    fn powi(&self, n: i32) -> Self {
        Jet2::powi(self, n)
    }
}
