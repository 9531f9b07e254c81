use num_traits::Float;

use super::{Domain, PdeProblem, ProblemKind};
use crate::autodiff::{Elementary, Jet2, Tape, Var};
use crate::scalar::Scalar;

/// `−ε²u″ + u = 1` on (0, 1) with `u(0) = u(1) = 0`.
#[derive(Clone, Debug)]
pub struct SingularPerturbation1d<S> {
    eps: S,
    domain: Domain<S>,
}

impl<S: Scalar> SingularPerturbation1d<S> {
    pub fn new(eps: S) -> Self {
        Self {
            eps,
            domain: Domain::unit_box(1),
        }
    }

    /// `1 − (e^{−x/ε} + e^{(x−1)/ε}) / (1 + e^{−1/ε})`; both exponents are
    /// non-positive on [0, 1], so tiny ε underflows to 0 instead of overflowing.
    pub fn solution<T: Elementary<S>>(&self, x: T) -> T {
        let inv = self.eps.recip();
        let denom = S::one() + Float::exp(-inv);
        let left = (x.clone() * (-inv)).exp();
        let right = ((x - S::one()) * inv).exp();
        -((left + right) / denom) + S::one()
    }
}

impl<S: Scalar> PdeProblem<S> for SingularPerturbation1d<S> {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Sp1d
    }

    fn domain(&self) -> &Domain<S> {
        &self.domain
    }

    fn residual<'t>(&self, _x: &[S], u: &Jet2<'t, S>) -> Var<'t, S> {
        u.d2[0] * (-self.eps * self.eps) + u.val - S::one()
    }

    fn has_boundary(&self) -> bool {
        true
    }

    fn boundary_residual<'t>(&self, _x: &[S], u: Var<'t, S>) -> Var<'t, S> {
        u
    }

    fn exact(&self, x: &[S]) -> Option<S> {
        Some(self.solution(x[0]))
    }

    fn exact_jet<'t>(&self, tape: &'t Tape<S>, x: &[S]) -> Option<Jet2<'t, S>> {
        Some(self.solution(Jet2::seed(tape, x[0], 0, 1)))
    }

    fn layer_distance(&self, x: &[S]) -> Option<S> {
        Some(x[0].min(S::one() - x[0]))
    }

    fn epsilon(&self) -> Option<S> {
        Some(self.eps)
    }
}
