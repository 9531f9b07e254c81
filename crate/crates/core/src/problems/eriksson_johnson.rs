use num_traits::Float;

use super::{Domain, PdeProblem, ProblemKind};
use crate::autodiff::{Elementary, Jet2, Tape, Var};
use crate::scalar::Scalar;

/// `−εΔu + ∂u/∂x = 0` on (0, 1)² with Dirichlet data from the manufactured
/// solution, which has a boundary layer of width ~ε at `x = 1`.
#[derive(Clone, Debug)]
pub struct ErikssonJohnson<S> {
    eps: S,
    r1: S,
    r2: S,
    domain: Domain<S>,
}

impl<S: Scalar> ErikssonJohnson<S> {
    pub fn new(eps: S) -> Self {
        let (r1, r2) = Self::roots(eps);
        Self {
            eps,
            r1,
            r2,
            domain: Domain::unit_box(2),
        }
    }

    /// Roots of `εr² − r − επ² = 0`. The small root is computed as
    /// `−π²/r₂` to avoid cancellation in `1 − √(1 + 4ε²π²)`.
    pub fn roots(eps: S) -> (S, S) {
        let pi2 = S::PI() * S::PI();
        let s = (S::one() + S::lit(4.0) * eps * eps * pi2).sqrt();
        let r2 = (S::one() + s) / (S::lit(2.0) * eps);
        (-pi2 / r2, r2)
    }

    /// `(e^{r₁(x−1)} − e^{r₂(x−1)}) / (e^{−r₁} − e^{−r₂}) · sin(πy)`, rescaled
    /// by `e^{r₁}` so every exponent is non-positive on the closed square.
    pub fn solution<T: Elementary<S>>(&self, x: T, y: T) -> T {
        let (r1, r2) = (self.r1, self.r2);
        let denom = S::one() - Float::exp(r1 - r2);
        let num = (x.clone() * r1).exp() - ((x - S::one()) * r2 + r1).exp();
        num / denom * (y * S::PI()).sin()
    }
}

impl<S: Scalar> PdeProblem<S> for ErikssonJohnson<S> {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Ej2d
    }

    fn domain(&self) -> &Domain<S> {
        &self.domain
    }

    fn residual<'t>(&self, _x: &[S], u: &Jet2<'t, S>) -> Var<'t, S> {
        (u.d2[0] + u.d2[1]) * (-self.eps) + u.d1[0]
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
        let mut v = Jet2::inputs(tape, x);
        let y = v.pop()?;
        let x = v.pop()?;
        Some(self.solution(x, y))
    }

    fn layer_distance(&self, x: &[S]) -> Option<S> {
        Some(S::one() - x[0])
    }

    fn epsilon(&self) -> Option<S> {
        Some(self.eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_on_horizontal_edges_and_right_edge() {
        let p = ErikssonJohnson::new(1e-3);
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert!(p.exact(&[t, 0.0]).unwrap().abs() < 1e-15);
            assert!(p.exact(&[t, 1.0]).unwrap().abs() < 1e-15);
            assert_eq!(p.exact(&[1.0, t]).unwrap(), 0.0);
        }
    }

    #[test]
    fn left_edge_is_sine() {
        let p = ErikssonJohnson::new(1e-3);
        let y = 0.3;
        let expect = (std::f64::consts::PI * y).sin();
        assert!((p.exact(&[0.0, y]).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn roots_for_eps_1e3() {
        let eps = 1e-3f64;
        let s = (1.0 + 4.0 * eps * eps * std::f64::consts::PI.powi(2)).sqrt();
        assert!((s - 1.000_019_74).abs() < 1e-8);
        let (r1, r2) = ErikssonJohnson::roots(eps);
        assert!((r2 - 1000.009_87).abs() < 1e-5);
        // both roots satisfy the characteristic equation
        for r in [r1, r2] {
            let q = eps * r * r - r - eps * std::f64::consts::PI.powi(2);
            assert!(q.abs() < 1e-10 * r.abs().max(1.0));
        }
        assert!((r1 - -9.869_507e-3).abs() < 1e-9);
    }
}
