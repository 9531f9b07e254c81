use crate::autodiff::{Jet2, Tape};
use crate::error::{Error, Result};
use crate::network::{evaluate_values, forward, NetworkOnTape, NetworkSpec, ParameterStore};
use crate::points::PointSet;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Stage<S> {
    pub spec: NetworkSpec,
    pub params: ParameterStore<S>,
    pub rho: S,
}

/// Additive model `f_m = Σ ρ_i h_i`. Only the newest stage is trainable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ensemble<S> {
    stages: Vec<Stage<S>>,
}

impl<S: Scalar> Ensemble<S> {
    pub fn new() -> Self {
        Self { stages: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stages(&self) -> &[Stage<S>] {
        &self.stages
    }

    /// Appends a trainable stage and freezes every earlier one.
    pub fn push(&mut self, spec: NetworkSpec, mut params: ParameterStore<S>, rho: S) -> Result<()> {
        spec.validate()?;
        if params.len() != spec.parameter_count() {
            return Err(Error::usage(format!(
                "network `{spec}` needs {} parameters, store has {}",
                spec.parameter_count(),
                params.len()
            )));
        }
        if let Some(first) = self.stages.first() {
            if first.spec.input_dim != spec.input_dim {
                return Err(Error::usage("all stages must share the input dimension"));
            }
        }
        if !(rho > S::zero()) {
            return Err(Error::Config(format!("stage weight must be positive, got {rho}")));
        }
        for stage in &mut self.stages {
            stage.params.freeze();
        }
        params.unfreeze();
        self.stages.push(Stage { spec, params, rho });
        Ok(())
    }

    /// Freezes the newest stage too.
    pub fn freeze_all(&mut self) {
        for stage in &mut self.stages {
            stage.params.freeze();
        }
    }

    pub fn active(&self) -> Option<&Stage<S>> {
        self.stages.last().filter(|s| s.params.is_trainable())
    }

    pub fn active_mut(&mut self) -> Option<&mut Stage<S>> {
        self.stages.last_mut().filter(|s| s.params.is_trainable())
    }

    /// `Σ ρ_i h_i(x)`, accumulated in stage order.
    pub fn eval(&self, x: &[S]) -> Result<S> {
        let mut acc = S::zero();
        for stage in &self.stages {
            acc = acc + stage.rho * forward(&stage.spec, &stage.params, x)?;
        }
        Ok(acc)
    }

    /// Batched counterpart of [`Ensemble::eval`].
    pub fn eval_batch(&self, points: &PointSet<S>) -> Result<Vec<S>> {
        let mut acc = vec![S::zero(); points.len()];
        for stage in &self.stages {
            let h = evaluate_values(&stage.spec, &stage.params, points)?;
            acc.iter_mut().zip(h).for_each(|(a, v)| *a = *a + stage.rho * v);
        }
        Ok(acc)
    }

    /// Jet of `f_m` at `x`; parameters of frozen stages enter as constants.
    pub fn jet<'t>(&self, tape: &'t Tape<S>, x: &[S]) -> Result<Jet2<'t, S>> {
        let nets = self.on_tape(tape)?;
        Self::jet_with(&nets, tape, x)
    }

    /// Places every stage's parameters on `tape` once.
    pub fn on_tape<'t, 's>(&'s self, tape: &'t Tape<S>) -> Result<Vec<(NetworkOnTape<'t, 's, S>, S)>> {
        self.stages
            .iter()
            .map(|s| Ok((NetworkOnTape::new(tape, &s.spec, &s.params)?, s.rho)))
            .collect()
    }

    pub fn jet_with<'t>(nets: &[(NetworkOnTape<'t, '_, S>, S)], tape: &'t Tape<S>, x: &[S]) -> Result<Jet2<'t, S>> {
        let mut acc = Jet2::constant(tape, S::zero(), x.len());
        for (net, rho) in nets {
            acc = acc + net.eval(x)?.scale(*rho);
        }
        Ok(acc)
    }
}
