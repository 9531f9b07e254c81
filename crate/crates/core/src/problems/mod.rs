//! Benchmark PDE problems: residual and boundary/initial operators on jets,
//! closed-form solutions, domains and collocation samplers.

mod eriksson_johnson;
mod interior_layer;
mod reaction;
pub mod reference;
mod sampling;
mod singular_1d;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Jet2, Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use eriksson_johnson::ErikssonJohnson;
pub use interior_layer::InteriorLayer;
pub use reaction::ReactionDiffusion;
pub use reference::{cached_reference, rd_reference, ReferenceGrid, ReferenceSpec, SelfCheck};
pub use sampling::{sample_boundary, sample_initial, sample_interior};
pub use singular_1d::SingularPerturbation1d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Sp1d,
    Ej2d,
    Interior2d,
    Reaction,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::Sp1d,
        ProblemKind::Ej2d,
        ProblemKind::Interior2d,
        ProblemKind::Reaction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Sp1d => "sp1d",
            ProblemKind::Ej2d => "ej2d",
            ProblemKind::Interior2d => "interior2d",
            ProblemKind::Reaction => "reaction",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::usage(format!("unknown problem `{name}`")))
    }

    pub fn default_epsilon(self) -> Option<f64> {
        match self {
            ProblemKind::Sp1d => Some(1e-4),
            ProblemKind::Ej2d => Some(1e-3),
            ProblemKind::Interior2d => Some(1e-4),
            ProblemKind::Reaction => None,
        }
    }

    pub fn input_dim(self) -> usize {
        match self {
            ProblemKind::Sp1d => 1,
            _ => 2,
        }
    }
}

/// Axis-aligned box; `time_axis` marks the temporal coordinate of
/// space–time problems.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain<S> {
    pub lower: Vec<S>,
    pub upper: Vec<S>,
    pub time_axis: Option<usize>,
}

impl<S: Scalar> Domain<S> {
    pub fn unit_box(dim: usize) -> Self {
        Self {
            lower: vec![S::zero(); dim],
            upper: vec![S::one(); dim],
            time_axis: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains_open(&self, x: &[S]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| v > lo && v < hi)
    }
}

/// Whether a stage network must use a particular first-layer embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RequiredEmbedding {
    Any,
    /// `(sin x, cos x, t)`, which makes the solution exactly periodic in x.
    Periodic,
}

pub trait PdeProblem<S: Scalar>: Send + Sync {
    fn kind(&self) -> ProblemKind;

    fn domain(&self) -> &Domain<S>;

    fn input_dim(&self) -> usize {
        self.domain().dim()
    }

    /// `𝒩[u](x)` from the jet of `u` at `x`.
    fn residual<'t>(&self, x: &[S], u: &Jet2<'t, S>) -> Var<'t, S>;

    fn has_boundary(&self) -> bool;

    /// `ℬ[u](x)`; all benchmark boundary operators act on values only.
    fn boundary_residual<'t>(&self, _x: &[S], u: Var<'t, S>) -> Var<'t, S> {
        u.constant(S::zero())
    }

    fn has_initial(&self) -> bool {
        false
    }

    /// `u(x, 0) − h(x)` for time-dependent problems.
    fn initial_residual<'t>(&self, _x: &[S], u: Var<'t, S>) -> Var<'t, S> {
        u.constant(S::zero())
    }

    fn exact(&self, _x: &[S]) -> Option<S> {
        None
    }

    /// Closed-form solution as a jet, for checking operators against it.
    fn exact_jet<'t>(&self, _tape: &'t Tape<S>, _x: &[S]) -> Option<Jet2<'t, S>> {
        None
    }

    fn required_embedding(&self) -> RequiredEmbedding {
        RequiredEmbedding::Any
    }

    /// Distance from `x` to the nearest boundary or interior layer.
    fn layer_distance(&self, _x: &[S]) -> Option<S> {
        None
    }

    /// Whether `x` may be used as an interior collocation point.
    fn admissible(&self, _x: &[S]) -> bool {
        true
    }

    fn epsilon(&self) -> Option<S> {
        None
    }
}

pub fn make_problem<S: Scalar>(kind: ProblemKind, epsilon: Option<f64>) -> Result<Box<dyn PdeProblem<S>>> {
    let eps = || {
        let e = epsilon
            .or(kind.default_epsilon())
            .expect("singular perturbation problems have a default epsilon");
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {e}")));
        }
        Ok(S::lit(e))
    };
    Ok(match kind {
        ProblemKind::Sp1d => Box::new(SingularPerturbation1d::new(eps()?)),
        ProblemKind::Ej2d => Box::new(ErikssonJohnson::new(eps()?)),
        ProblemKind::Interior2d => Box::new(InteriorLayer::new(eps()?)),
        ProblemKind::Reaction => {
            if epsilon.is_some() {
                return Err(Error::Config("the reaction problem takes no epsilon".into()));
            }
            Box::new(ReactionDiffusion::new())
        }
    })
}
