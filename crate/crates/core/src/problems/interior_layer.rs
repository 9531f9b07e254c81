use num_traits::Float;

use super::{Domain, PdeProblem, ProblemKind};
use crate::autodiff::{Elementary, Jet2, Tape, Var};
use crate::scalar::Scalar;

/// `−εΔu + β·∇u = f` on (0, 1)² with `β = eˣ(sin y, cos y)` and
/// manufactured solution `u = arctan((1 − √(x² + y²))/ε)`, which has an
/// interior layer along the unit circle.
///
/// The forcing `f` is obtained by applying the operator to the jet of the
/// closed-form solution.
#[derive(Clone, Debug)]
pub struct InteriorLayer<S> {
    eps: S,
    domain: Domain<S>,
}

/// Points closer than this to the origin are not used for collocation.
pub const MIN_RADIUS: f64 = 1e-12;

impl<S: Scalar> InteriorLayer<S> {
    pub fn new(eps: S) -> Self {
        Self {
            eps,
            domain: Domain::unit_box(2),
        }
    }

    pub fn solution<T: Elementary<S>>(&self, x: T, y: T) -> T {
        let r = (x.clone() * x + y.clone() * y).sqrt();
        ((-r + S::one()) / self.eps).atan()
    }

    /// `−εΔu + β·∇u` applied to a jet.
    pub fn operator<'t>(&self, x: &[S], u: &Jet2<'t, S>) -> Var<'t, S> {
        let ex = Float::exp(x[0]);
        let (sy, cy) = Float::sin_cos(x[1]);
        (u.d2[0] + u.d2[1]) * (-self.eps) + u.d1[0] * (ex * sy) + u.d1[1] * (ex * cy)
    }

    pub fn forcing(&self, x: &[S]) -> S {
        let tape = Tape::with_capacity(64);
        let v = Jet2::inputs(&tape, x);
        let u = self.solution(v[0].clone(), v[1].clone());
        self.operator(x, &u).value()
    }
}

impl<S: Scalar> PdeProblem<S> for InteriorLayer<S> {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Interior2d
    }

    fn domain(&self) -> &Domain<S> {
        &self.domain
    }

    fn residual<'t>(&self, x: &[S], u: &Jet2<'t, S>) -> Var<'t, S> {
        self.operator(x, u) - self.forcing(x)
    }

    fn has_boundary(&self) -> bool {
        true
    }

    fn boundary_residual<'t>(&self, x: &[S], u: Var<'t, S>) -> Var<'t, S> {
        u - self.solution(x[0], x[1])
    }

    fn exact(&self, x: &[S]) -> Option<S> {
        Some(self.solution(x[0], x[1]))
    }

    fn exact_jet<'t>(&self, tape: &'t Tape<S>, x: &[S]) -> Option<Jet2<'t, S>> {
        let v = Jet2::inputs(tape, x);
        Some(self.solution(v[0].clone(), v[1].clone()))
    }

    fn layer_distance(&self, x: &[S]) -> Option<S> {
        Some((Float::hypot(x[0], x[1]) - S::one()).abs())
    }

    fn admissible(&self, x: &[S]) -> bool {
        Float::hypot(x[0], x[1]) >= S::lit(MIN_RADIUS)
    }

    fn epsilon(&self) -> Option<S> {
        Some(self.eps)
    }
}
