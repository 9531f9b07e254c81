use num_traits::Float;

use super::{Domain, PdeProblem, ProblemKind, RequiredEmbedding};
use crate::autodiff::{Jet2, Var};
use crate::scalar::Scalar;

pub const DIFFUSION: f64 = 10.0;
pub const GROWTH: f64 = 6.0;
pub const T_FINAL: f64 = 1.0;

/// `u_t − 10·u_xx − 6u(1 − u) = 0` on (0, 2π) × (0, 1], periodic in x,
/// `u(x, 0) = exp(−(x − π)² / (2(π/4)²))`. Axis 0 is x, axis 1 is t.
///
/// Periodicity is imposed by the `(sin x, cos x, t)` embedding, so there is
/// no boundary term.
#[derive(Clone, Debug)]
pub struct ReactionDiffusion<S> {
    nu: S,
    rho: S,
    domain: Domain<S>,
}

impl<S: Scalar> Default for ReactionDiffusion<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> ReactionDiffusion<S> {
    pub fn new() -> Self {
        Self {
            nu: S::lit(DIFFUSION),
            rho: S::lit(GROWTH),
            domain: Domain {
                lower: vec![S::zero(), S::zero()],
                upper: vec![S::TAU(), S::lit(T_FINAL)],
                time_axis: Some(1),
            },
        }
    }

    pub fn initial_profile(x: S) -> S {
        let sigma = S::FRAC_PI_4();
        let d = x - S::PI();
        Float::exp(-(d * d) / (S::lit(2.0) * sigma * sigma))
    }
}

impl<S: Scalar> PdeProblem<S> for ReactionDiffusion<S> {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Reaction
    }

    fn domain(&self) -> &Domain<S> {
        &self.domain
    }

    fn residual<'t>(&self, _x: &[S], u: &Jet2<'t, S>) -> Var<'t, S> {
        let logistic = u.val - u.val * u.val;
        u.d1[1] - u.d2[0] * self.nu - logistic * self.rho
    }

    fn has_boundary(&self) -> bool {
        false
    }

    fn has_initial(&self) -> bool {
        true
    }

    fn initial_residual<'t>(&self, x: &[S], u: Var<'t, S>) -> Var<'t, S> {
        u - Self::initial_profile(x[0])
    }

    fn required_embedding(&self) -> RequiredEmbedding {
        RequiredEmbedding::Periodic
    }
}
