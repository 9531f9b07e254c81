use super::embed::embed;
use super::params::{layout, LayerLayout, ParameterStore};
use super::spec::NetworkSpec;
use crate::autodiff::{Jet2, Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::{gelu, Scalar};

fn check_store<S: Scalar>(spec: &NetworkSpec, params: &ParameterStore<S>) -> Result<()> {
    if params.len() != spec.parameter_count() {
        return Err(Error::usage(format!(
            "network `{spec}` needs {} parameters, store has {}",
            spec.parameter_count(),
            params.len()
        )));
    }
    Ok(())
}

/// Affine → GeLU chain on already-embedded features, linear head.
pub fn mlp_forward<S: Scalar>(spec: &NetworkSpec, params: &ParameterStore<S>, features: &[S]) -> Result<S> {
    check_store(spec, params)?;
    if features.len() != spec.feature_dim() {
        return Err(Error::usage(format!(
            "expected {} features, got {}",
            spec.feature_dim(),
            features.len()
        )));
    }
    let theta = params.as_slice();
    let layers = layout(spec);
    let mut act = features.to_vec();
    for (l, layer) in layers.iter().enumerate() {
        let w = &theta[layer.weights()];
        let b = &theta[layer.bias()];
        let mut next = b.to_vec();
        for (i, &a) in act.iter().enumerate() {
            let row = &w[i * layer.fan_out..(i + 1) * layer.fan_out];
            for (z, &wij) in next.iter_mut().zip(row) {
                *z = *z + a * wij;
            }
        }
        if l + 1 < layers.len() {
            next.iter_mut().for_each(|z| *z = gelu(*z));
        }
        act = next;
    }
    Ok(act[0])
}

/// Plain forward evaluation at a physical input point.
pub fn forward<S: Scalar>(spec: &NetworkSpec, params: &ParameterStore<S>, x: &[S]) -> Result<S> {
    if x.len() != spec.input_dim {
        return Err(Error::usage(format!(
            "network expects {}-dimensional input, got {}",
            spec.input_dim,
            x.len()
        )));
    }
    mlp_forward(spec, params, &embed(&spec.embedding, x))
}

/// A network whose parameters have been placed on a tape once, ready to be
/// evaluated at many points.
pub struct NetworkOnTape<'t, 's, S> {
    tape: &'t Tape<S>,
    spec: &'s NetworkSpec,
    layers: Vec<LayerLayout>,
    params: Vec<Var<'t, S>>,
}

impl<'t, 's, S: Scalar> NetworkOnTape<'t, 's, S> {
    pub fn new(tape: &'t Tape<S>, spec: &'s NetworkSpec, store: &ParameterStore<S>) -> Result<Self> {
        check_store(spec, store)?;
        Ok(Self {
            tape,
            spec,
            layers: layout(spec),
            params: tape.parameters(store),
        })
    }

    /// Jet of the network output at `x`, seeded on the physical input axes.
    pub fn eval(&self, x: &[S]) -> Result<Jet2<'t, S>> {
        if x.len() != self.spec.input_dim {
            return Err(Error::usage(format!(
                "network expects {}-dimensional input, got {}",
                self.spec.input_dim,
                x.len()
            )));
        }
        let inputs = Jet2::inputs(self.tape, x);
        let mut act = embed(&self.spec.embedding, &inputs);
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = Vec::with_capacity(layer.fan_out);
            for j in 0..layer.fan_out {
                let b = self.params[layer.bias().start + j];
                let w = |i: usize| self.params[layer.offset + i * layer.fan_out + j];
                let val = act.iter().enumerate().fold(b, |acc, (i, a)| acc + a.val * w(i));
                let dim = x.len();
                let d1 = (0..dim)
                    .map(|k| {
                        let terms = act.iter().enumerate().map(|(i, a)| a.d1[k] * w(i));
                        crate::autodiff::sum(self.tape, terms)
                    })
                    .collect();
                let d2 = (0..dim)
                    .map(|k| {
                        let terms = act.iter().enumerate().map(|(i, a)| a.d2[k] * w(i));
                        crate::autodiff::sum(self.tape, terms)
                    })
                    .collect();
                let z = Jet2::from_parts(val, d1, d2)?;
                next.push(if l + 1 < self.layers.len() { z.gelu() } else { z });
            }
            act = next;
        }
        Ok(act.swap_remove(0))
    }
}

/// Jet of a single network at one point; registers the parameters on the tape.
pub fn network_jet_eval<'t, S: Scalar>(
    tape: &'t Tape<S>,
    spec: &NetworkSpec,
    params: &ParameterStore<S>,
    x: &[S],
) -> Result<Jet2<'t, S>> {
    NetworkOnTape::new(tape, spec, params)?.eval(x)
}
