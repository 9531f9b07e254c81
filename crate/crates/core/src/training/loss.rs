use super::ensemble::Ensemble;
use super::plan::{BatchSizes, LossWeights};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::problems::{sample_boundary, sample_initial, sample_interior, PdeProblem};
use crate::scalar::Scalar;

/// Fixed point sets of one training stage.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationData<S> {
    pub interior: PointSet<S>,
    pub boundary: PointSet<S>,
    pub initial: PointSet<S>,
}

/// splitmix64 finaliser applied to `seed`, the stage index and a stream tag.
pub fn derive_seed(seed: u64, stage: usize, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add((stage as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const STREAM_INIT: u64 = 0;
const STREAM_INTERIOR: u64 = 1;
const STREAM_BOUNDARY: u64 = 2;
const STREAM_INITIAL: u64 = 3;

impl<S: Scalar> CollocationData<S> {
    /// Draws the stage-`stage` dataset. Terms with zero weight get no points.
    pub fn sample(
        problem: &dyn PdeProblem<S>,
        batches: &BatchSizes,
        weights: &LossWeights,
        seed: u64,
        stage: usize,
    ) -> Self {
        let dim = problem.input_dim();
        let pick = |w: f64, n: usize| if w > 0.0 { n } else { 0 };
        let interior = pick(weights.interior, batches.interior);
        let boundary = pick(weights.boundary, batches.boundary);
        let initial = pick(weights.initial, batches.initial);
        Self {
            interior: if interior > 0 {
                sample_interior(problem, interior, derive_seed(seed, stage, STREAM_INTERIOR))
            } else {
                PointSet::empty(dim)
            },
            boundary: if boundary > 0 {
                sample_boundary(problem, boundary, derive_seed(seed, stage, STREAM_BOUNDARY))
            } else {
                PointSet::empty(dim)
            },
            initial: if initial > 0 {
                sample_initial(problem, initial, derive_seed(seed, stage, STREAM_INITIAL))
            } else {
                PointSet::empty(dim)
            },
        }
    }
}

pub(crate) fn check_term(name: &str, weight: f64, points: &PointSet<impl Scalar>) -> Result<bool> {
    if weight > 0.0 && points.is_empty() {
        return Err(Error::usage(format!("{name} term has weight {weight} but no points")));
    }
    Ok(weight > 0.0)
}

fn mean_square<'t, S: Scalar>(tape: &'t Tape<S>, terms: Vec<Var<'t, S>>) -> Var<'t, S> {
    let n = S::lit(terms.len() as f64);
    crate::autodiff::sum(tape, terms.into_iter().map(|r| r.square())) / n
}

/// `ω_e·mean(𝒩[f]²) + ω_b·mean(ℬ[f]²) + ω_ic·mean((f − h)²)` on `tape`.
/// Gradients flow only into the ensemble's trainable stage.
pub fn pinn_loss<'t, S: Scalar>(
    tape: &'t Tape<S>,
    ensemble: &Ensemble<S>,
    problem: &dyn PdeProblem<S>,
    data: &CollocationData<S>,
    weights: &LossWeights,
) -> Result<Var<'t, S>> {
    let nets = ensemble.on_tape(tape)?;
    let mut loss = tape.constant(S::zero());
    if check_term("interior", weights.interior, &data.interior)? {
        let mut r = Vec::with_capacity(data.interior.len());
        for x in data.interior.iter() {
            let u = Ensemble::jet_with(&nets, tape, x)?;
            r.push(problem.residual(x, &u));
        }
        loss = loss + mean_square(tape, r) * S::lit(weights.interior);
    }
    let value = |x: &[S]| -> Result<Var<'t, S>> {
        let mut acc = tape.constant(S::zero());
        for (net, rho) in &nets {
            acc = acc + net.eval(x)?.val * *rho;
        }
        Ok(acc)
    };
    if check_term("boundary", weights.boundary, &data.boundary)? {
        let mut r = Vec::with_capacity(data.boundary.len());
        for x in data.boundary.iter() {
            r.push(problem.boundary_residual(x, value(x)?));
        }
        loss = loss + mean_square(tape, r) * S::lit(weights.boundary);
    }
    if check_term("initial", weights.initial, &data.initial)? {
        let mut r = Vec::with_capacity(data.initial.len());
        for x in data.initial.iter() {
            r.push(problem.initial_residual(x, value(x)?));
        }
        loss = loss + mean_square(tape, r) * S::lit(weights.initial);
    }
    tape.check()?;
    Ok(loss)
}

/// Value and active-stage gradient of [`pinn_loss`].
pub fn pinn_loss_and_grad<S: Scalar>(
    ensemble: &Ensemble<S>,
    problem: &dyn PdeProblem<S>,
    data: &CollocationData<S>,
    weights: &LossWeights,
) -> Result<(S, Vec<S>)> {
    let tape = Tape::new();
    let loss = pinn_loss(&tape, ensemble, problem, data, weights)?;
    let grad = match ensemble.active() {
        Some(stage) => tape.gradient(&loss, &stage.params)?,
        None => Vec::new(),
    };
    Ok((loss.value(), grad))
}
