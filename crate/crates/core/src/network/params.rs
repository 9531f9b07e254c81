use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::spec::NetworkSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Location of one affine layer inside the flat parameter vector: a row-major
/// `fan_in × fan_out` weight block followed by `fan_out` biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerLayout {
    pub offset: usize,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl LayerLayout {
    pub fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }

    pub fn bias(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_in * self.fan_out;
        start..start + self.fan_out
    }

    pub fn len(&self) -> usize {
        (self.fan_in + 1) * self.fan_out
    }

    pub fn is_empty(&self) -> bool {
        self.fan_out == 0
    }
}

pub fn layout(spec: &NetworkSpec) -> Vec<LayerLayout> {
    let mut offset = 0;
    spec.layer_shapes()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let l = LayerLayout {
                offset,
                fan_in,
                fan_out,
            };
            offset += l.len();
            l
        })
        .collect()
}

/// Flat trainable parameter vector of one network.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterStore<S> {
    values: Vec<S>,
    layers: Vec<LayerLayout>,
    trainable: bool,
}

impl<S: Scalar> ParameterStore<S> {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let layers = layout(spec);
        let len = layers.iter().map(LayerLayout::len).sum();
        Self {
            values: vec![S::zero(); len],
            layers,
            trainable: true,
        }
    }

    /// Store without a layer directory, for tests and raw tape work.
    pub fn from_values(values: Vec<S>) -> Self {
        Self {
            values,
            layers: Vec::new(),
            trainable: true,
        }
    }

    pub fn with_values(spec: &NetworkSpec, values: Vec<S>) -> Result<Self> {
        let mut store = Self::zeros(spec);
        if values.len() != store.values.len() {
            return Err(Error::usage(format!(
                "spec `{spec}` needs {} parameters, got {}",
                store.values.len(),
                values.len()
            )));
        }
        store.values = values;
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn layers(&self) -> &[LayerLayout] {
        &self.layers
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }

    /// Mutable access for the optimizer; refused while the store is frozen.
    pub fn values_mut(&mut self) -> Result<&mut [S]> {
        if !self.trainable {
            return Err(Error::usage("attempt to modify a frozen parameter store"));
        }
        Ok(&mut self.values)
    }

    pub fn is_trainable(&self) -> bool {
        self.trainable
    }

    pub fn freeze(&mut self) {
        self.trainable = false;
    }

    pub fn unfreeze(&mut self) {
        self.trainable = true;
    }
}

/// Xavier-uniform weights, `U(±√(6/(fan_in+fan_out)))`, and zero biases.
/// Deterministic in `seed`.
pub fn xavier_init<S: Scalar>(spec: &NetworkSpec, seed: u64) -> Result<ParameterStore<S>> {
    spec.validate()?;
    let mut store = ParameterStore::zeros(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in store.layers.clone() {
        let bound = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        for w in &mut store.values[layer.weights()] {
            *w = S::lit(dist.sample(&mut rng));
        }
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Embedding;

    #[test]
    fn xavier_bounds_and_zero_biases() {
        let spec = NetworkSpec::mlp(100, vec![100]);
        let store: ParameterStore<f64> = xavier_init(&spec, 3).unwrap();
        let first = store.layers()[0];
        let bound = (6.0f64 / 200.0).sqrt();
        assert!((bound - 0.1732).abs() < 1e-4);
        assert!(store.as_slice()[first.weights()].iter().all(|w| w.abs() <= bound));
        for l in store.layers() {
            assert!(store.as_slice()[l.bias()].iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn xavier_is_deterministic() {
        let spec = NetworkSpec::mlp(1, vec![10, 10]).with_embedding(Embedding::fourier_range(3));
        let a: ParameterStore<f64> = xavier_init(&spec, 11).unwrap();
        let b: ParameterStore<f64> = xavier_init(&spec, 11).unwrap();
        let c: ParameterStore<f64> = xavier_init(&spec, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn store_length_is_sum_of_layer_sizes() {
        let spec = NetworkSpec::mlp(2, vec![7, 5]);
        let store = ParameterStore::<f64>::zeros(&spec);
        assert_eq!(store.len(), 3 * 7 + 8 * 5 + 6);
        assert_eq!(store.len(), spec.parameter_count());
    }

    #[test]
    fn frozen_store_refuses_mutation() {
        let mut s = ParameterStore::<f64>::from_values(vec![1.0]);
        s.freeze();
        assert!(s.values_mut().is_err());
        s.unfreeze();
        s.values_mut().unwrap()[0] = 2.0;
        assert_eq!(s.as_slice(), &[2.0]);
    }
}
