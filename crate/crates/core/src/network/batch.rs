//! Batched jet propagation through a network and its reverse sweep.
//!
//! All channels of a batch are stacked into one matrix of `C·n` rows: rows
//! `[0, n)` hold values, rows `[(1+k)n, (2+k)n)` first derivatives along axis
//! `k`, rows `[(1+d+k)n, (2+d+k)n)` pure second derivatives along axis `k`.
//! An affine layer then acts on every channel with a single matrix product;
//! only the value rows receive the bias. Activation jets follow the
//! univariate chain rule with the closed-form GeLU derivatives.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, ArrayViewMut2, Axis};

use super::params::{layout, LayerLayout, ParameterStore};
use super::spec::{Embedding, NetworkSpec};
use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::scalar::{gelu_derivs, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetOrder {
    /// Values only.
    Value,
    /// Values, first and pure second input derivatives.
    Second,
}

impl JetOrder {
    pub fn channels(self, dim: usize) -> usize {
        match self {
            JetOrder::Value => 1,
            JetOrder::Second => 1 + 2 * dim,
        }
    }
}

/// Network evaluator bound to a fixed batch of input points.
pub struct BatchNet<S> {
    spec: NetworkSpec,
    layers: Vec<LayerLayout>,
    n: usize,
    dim: usize,
    order: JetOrder,
    features: Array2<S>,
    pre: Vec<Array2<S>>,
    post: Vec<Array2<S>>,
    /// σ', σ'', σ''' of each hidden pre-activation value (`n × width`).
    slopes: Vec<[Array2<S>; 3]>,
    out: Array2<S>,
    grads: Vec<Array2<S>>,
}

impl<S: Scalar> BatchNet<S> {
    pub fn new(spec: &NetworkSpec, points: &PointSet<S>, order: JetOrder) -> Result<Self> {
        spec.validate()?;
        if points.dim() != spec.input_dim {
            return Err(Error::usage(format!(
                "network expects {}-dimensional input, batch has dimension {}",
                spec.input_dim,
                points.dim()
            )));
        }
        let n = points.len();
        let dim = spec.input_dim;
        let rows = order.channels(dim) * n;
        let layers = layout(spec);
        let hidden = &layers[..layers.len() - 1];
        let slope_rows = if order == JetOrder::Second { n } else { 0 };
        Ok(Self {
            features: feature_jets(spec, points, order),
            pre: hidden.iter().map(|l| Array2::zeros((rows, l.fan_out))).collect(),
            post: hidden.iter().map(|l| Array2::zeros((rows, l.fan_out))).collect(),
            slopes: hidden
                .iter()
                .map(|l| {
                    [
                        Array2::zeros((n, l.fan_out)),
                        Array2::zeros((slope_rows, l.fan_out)),
                        Array2::zeros((slope_rows, l.fan_out)),
                    ]
                })
                .collect(),
            grads: hidden.iter().map(|l| Array2::zeros((rows, l.fan_out))).collect(),
            out: Array2::zeros((rows, 1)),
            spec: spec.clone(),
            layers,
            n,
            dim,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> JetOrder {
        self.order
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    fn check(&self, params: &ParameterStore<S>) -> Result<()> {
        if params.len() != self.spec.parameter_count() {
            return Err(Error::usage(format!(
                "network `{}` needs {} parameters, store has {}",
                self.spec,
                self.spec.parameter_count(),
                params.len()
            )));
        }
        Ok(())
    }

    /// Exchanges the bound input features with `features`, which must come
    /// from [`feature_jets`] for a batch of the same size and order. Lets one
    /// set of work buffers serve several batches.
    pub fn swap_features(&mut self, features: &mut Array2<S>) -> Result<()> {
        if features.dim() != self.features.dim() {
            return Err(Error::usage(format!(
                "feature block of shape {:?} does not fit a batch of shape {:?}",
                features.dim(),
                self.features.dim()
            )));
        }
        std::mem::swap(&mut self.features, features);
        Ok(())
    }

    /// Forward pass; returns the stacked output channels (`C·n` entries).
    pub fn forward(&mut self, params: &ParameterStore<S>) -> Result<&[S]> {
        self.check(params)?;
        let theta = params.as_slice();
        let n = self.n;
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let w = weights(theta, layer);
            let bias = &theta[layer.bias()];
            let input = if l == 0 { &self.features } else { &self.post[l - 1] };
            let target = if l == last { &mut self.out } else { &mut self.pre[l] };
            general_mat_mul(S::one(), input, &w, S::zero(), target);
            for mut row in target.slice_mut(s![..n, ..]).rows_mut() {
                row.iter_mut().zip(bias).for_each(|(z, &b)| *z = *z + b);
            }
            if l < last {
                activate(
                    self.order,
                    n,
                    self.dim,
                    &self.pre[l],
                    &mut self.post[l],
                    &mut self.slopes[l],
                );
            }
        }
        Ok(self.out.as_slice().expect("output is contiguous"))
    }

    pub fn output(&self) -> &[S] {
        self.out.as_slice().expect("output is contiguous")
    }

    /// Channel `c` of the last forward pass (`0` value, `1+k` first
    /// derivative on axis `k`, `1+d+k` second derivative on axis `k`).
    pub fn channel(&self, c: usize) -> &[S] {
        &self.output()[c * self.n..(c + 1) * self.n]
    }

    /// Reverse sweep of the last forward pass. `upstream` holds the
    /// adjoint of every output channel entry; parameter adjoints are added
    /// into `grad`.
    pub fn backward(&mut self, params: &ParameterStore<S>, upstream: &[S], grad: &mut [S]) -> Result<()> {
        self.check(params)?;
        if upstream.len() != self.out.len() || grad.len() != params.len() {
            return Err(Error::usage("backward called with mismatched buffer lengths"));
        }
        let theta = params.as_slice();
        let n = self.n;
        let last = self.layers.len() - 1;
        let head_grad = ArrayView2::from_shape((upstream.len(), 1), upstream).expect("column");
        for l in (0..=last).rev() {
            let layer = self.layers[l];
            if l < last {
                activate_backward(
                    self.order,
                    n,
                    self.dim,
                    &self.pre[l],
                    &self.slopes[l],
                    &mut self.grads[l],
                );
            }
            let (below, above) = self.grads.split_at_mut(l);
            let gz = if l == last { head_grad.view() } else { above[0].view() };
            let input = if l == 0 { &self.features } else { &self.post[l - 1] };
            let block = &mut grad[layer.offset..layer.offset + layer.len()];
            let (wgrad, bgrad) = block.split_at_mut(layer.fan_in * layer.fan_out);
            let mut gw = ArrayViewMut2::from_shape((layer.fan_in, layer.fan_out), wgrad).expect("weight block");
            general_mat_mul(S::one(), &input.t(), &gz, S::one(), &mut gw);
            let gb = gz.slice(s![..n, ..]).sum_axis(Axis(0));
            bgrad.iter_mut().zip(gb.iter()).for_each(|(g, &v)| *g = *g + v);
            if l > 0 {
                let w = weights(theta, &layer);
                general_mat_mul(S::one(), &gz, &w.t(), S::zero(), &mut below[l - 1]);
            }
        }
        Ok(())
    }
}

fn weights<'a, S: Scalar>(theta: &'a [S], layer: &LayerLayout) -> ArrayView2<'a, S> {
    ArrayView2::from_shape((layer.fan_in, layer.fan_out), &theta[layer.weights()]).expect("weight block")
}

fn activate<S: Scalar>(
    order: JetOrder,
    n: usize,
    dim: usize,
    pre: &Array2<S>,
    post: &mut Array2<S>,
    slopes: &mut [Array2<S>; 3],
) {
    let width = pre.ncols();
    let zs = pre.as_slice().expect("contiguous");
    let out = post.as_slice_mut().expect("contiguous");
    let [s1, s2, s3] = slopes;
    let s1 = s1.as_slice_mut().expect("contiguous");
    match order {
        JetOrder::Value => {
            for idx in 0..n * width {
                let g = gelu_derivs(zs[idx]);
                out[idx] = g.value;
                s1[idx] = g.d1;
            }
        }
        JetOrder::Second => {
            let s2 = s2.as_slice_mut().expect("contiguous");
            let s3 = s3.as_slice_mut().expect("contiguous");
            let block = n * width;
            for idx in 0..block {
                let g = gelu_derivs(zs[idx]);
                out[idx] = g.value;
                s1[idx] = g.d1;
                s2[idx] = g.d2;
                s3[idx] = g.d3;
                for k in 0..dim {
                    let i1 = (1 + k) * block + idx;
                    let i2 = (1 + dim + k) * block + idx;
                    let dz = zs[i1];
                    out[i1] = g.d1 * dz;
                    out[i2] = g.d2 * dz * dz + g.d1 * zs[i2];
                }
            }
        }
    }
}

fn activate_backward<S: Scalar>(
    order: JetOrder,
    n: usize,
    dim: usize,
    pre: &Array2<S>,
    slopes: &[Array2<S>; 3],
    grads: &mut Array2<S>,
) {
    let width = pre.ncols();
    let block = n * width;
    let zs = pre.as_slice().expect("contiguous");
    let g = grads.as_slice_mut().expect("contiguous");
    let s1 = slopes[0].as_slice().expect("contiguous");
    match order {
        JetOrder::Value => {
            for idx in 0..block {
                g[idx] = g[idx] * s1[idx];
            }
        }
        JetOrder::Second => {
            let s2 = slopes[1].as_slice().expect("contiguous");
            let s3 = slopes[2].as_slice().expect("contiguous");
            let two = S::lit(2.0);
            for idx in 0..block {
                let (a1, a2, a3) = (s1[idx], s2[idx], s3[idx]);
                let mut gz = g[idx] * a1;
                for k in 0..dim {
                    let i1 = (1 + k) * block + idx;
                    let i2 = (1 + dim + k) * block + idx;
                    let (gda, gd2a) = (g[i1], g[i2]);
                    let (dz, d2z) = (zs[i1], zs[i2]);
                    gz = gz + gda * a2 * dz + gd2a * (a3 * dz * dz + a2 * d2z);
                    g[i1] = gda * a1 + two * gd2a * a2 * dz;
                    g[i2] = gd2a * a1;
                }
                g[idx] = gz;
            }
        }
    }
}

/// Embedded input features of every point with their input derivatives,
/// stacked by channel.
pub fn feature_jets<S: Scalar>(spec: &NetworkSpec, points: &PointSet<S>, order: JetOrder) -> Array2<S> {
    let n = points.len();
    let dim = spec.input_dim;
    let channels = order.channels(dim);
    let width = spec.feature_dim();
    let mut f = Array2::zeros((channels * n, width));
    let second = order == JetOrder::Second;
    let d1 = |k: usize| (1 + k) * n;
    let d2 = |k: usize| (1 + dim + k) * n;
    for (p, x) in points.iter().enumerate() {
        match &spec.embedding {
            Embedding::None => {
                for (a, &xa) in x.iter().enumerate() {
                    f[[p, a]] = xa;
                    if second {
                        f[[d1(a) + p, a]] = S::one();
                    }
                }
            }
            Embedding::Fourier { frequencies } => {
                let m = dim * frequencies.len();
                for (i, &freq) in frequencies.iter().enumerate() {
                    let w = S::TAU() * S::lit(freq as f64);
                    for (a, &xa) in x.iter().enumerate() {
                        let j = i * dim + a;
                        let (sn, cs) = (w * xa).sin_cos();
                        f[[p, j]] = cs;
                        f[[p, m + j]] = sn;
                        if second {
                            f[[d1(a) + p, j]] = -w * sn;
                            f[[d1(a) + p, m + j]] = w * cs;
                            f[[d2(a) + p, j]] = -w * w * cs;
                            f[[d2(a) + p, m + j]] = -w * w * sn;
                        }
                    }
                }
            }
            Embedding::Periodic => {
                let (sn, cs) = x[0].sin_cos();
                f[[p, 0]] = sn;
                f[[p, 1]] = cs;
                if second {
                    f[[d1(0) + p, 0]] = cs;
                    f[[d1(0) + p, 1]] = -sn;
                    f[[d2(0) + p, 0]] = -sn;
                    f[[d2(0) + p, 1]] = -cs;
                }
                for a in 1..dim {
                    f[[p, a + 1]] = x[a];
                    if second {
                        f[[d1(a) + p, a + 1]] = S::one();
                    }
                }
            }
        }
    }
    f
}

/// Values of one network at many points, evaluated in chunks.
pub fn evaluate_values<S: Scalar>(
    spec: &NetworkSpec,
    params: &ParameterStore<S>,
    points: &PointSet<S>,
) -> Result<Vec<S>> {
    const CHUNK: usize = 8192;
    let mut out = Vec::with_capacity(points.len());
    let coords = points.coords();
    let dim = points.dim();
    for chunk in coords.chunks(CHUNK * dim) {
        let batch = PointSet::new(dim, chunk.to_vec())?;
        let mut net = BatchNet::new(spec, &batch, JetOrder::Value)?;
        out.extend_from_slice(net.forward(params)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{sum, Tape};
    use crate::network::{xavier_init, NetworkOnTape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn specs() -> Vec<NetworkSpec> {
        vec![
            NetworkSpec::mlp(1, vec![5, 4]),
            NetworkSpec::mlp(2, vec![3, 6, 2]),
            NetworkSpec::mlp(1, vec![4]).with_embedding(Embedding::fourier_range(3)),
            NetworkSpec::mlp(2, vec![5]).with_embedding(Embedding::Fourier {
                frequencies: vec![1, 4],
            }),
            NetworkSpec::mlp(2, vec![4, 4]).with_embedding(Embedding::Periodic),
        ]
    }

    fn random_points(dim: usize, n: usize, rng: &mut ChaCha8Rng) -> PointSet<f64> {
        let coords = (0..n * dim).map(|_| rng.gen_range(-1.0..1.5)).collect();
        PointSet::new(dim, coords).unwrap()
    }

    #[test]
    fn forward_matches_tape_jets() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (i, spec) in specs().iter().enumerate() {
            let params: ParameterStore<f64> = xavier_init(spec, i as u64).unwrap();
            let pts = random_points(spec.input_dim, 7, &mut rng);
            let mut net = BatchNet::new(spec, &pts, JetOrder::Second).unwrap();
            net.forward(&params).unwrap();
            let d = spec.input_dim;
            for p in 0..pts.len() {
                let tape = Tape::new();
                let jet = NetworkOnTape::new(&tape, spec, &params)
                    .unwrap()
                    .eval(pts.point(p))
                    .unwrap();
                let (v, d1, d2) = jet.values();
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
                assert!(close(net.channel(0)[p], v), "{spec} value");
                for k in 0..d {
                    assert!(close(net.channel(1 + k)[p], d1[k]), "{spec} d1");
                    assert!(close(net.channel(1 + d + k)[p], d2[k]), "{spec} d2");
                }
            }
        }
    }

    #[test]
    fn backward_matches_tape_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (i, spec) in specs().iter().enumerate() {
            for order in [JetOrder::Value, JetOrder::Second] {
                let params: ParameterStore<f64> = xavier_init(spec, 40 + i as u64).unwrap();
                let pts = random_points(spec.input_dim, 5, &mut rng);
                let mut net = BatchNet::new(spec, &pts, order).unwrap();
                net.forward(&params).unwrap();
                let upstream: Vec<f64> = (0..net.output().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut grad = vec![0.0; params.len()];
                net.backward(&params, &upstream, &mut grad).unwrap();

                let tape = Tape::new();
                let on_tape = NetworkOnTape::new(&tape, spec, &params).unwrap();
                let n = pts.len();
                let d = spec.input_dim;
                let mut terms = Vec::new();
                for p in 0..n {
                    let jet = on_tape.eval(pts.point(p)).unwrap();
                    terms.push(jet.val * upstream[p]);
                    if order == JetOrder::Second {
                        for k in 0..d {
                            terms.push(jet.d1[k] * upstream[(1 + k) * n + p]);
                            terms.push(jet.d2[k] * upstream[(1 + d + k) * n + p]);
                        }
                    }
                }
                let total = sum(&tape, terms);
                let reference = tape.gradient(&total, &params).unwrap();
                for (a, b) in grad.iter().zip(&reference) {
                    assert!(
                        (a - b).abs() <= 1e-11 * b.abs().max(1.0),
                        "{spec} {order:?}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let spec = NetworkSpec::mlp(2, vec![3]);
        let pts = PointSet::new(1, vec![0.1, 0.2]).unwrap();
        assert!(BatchNet::<f64>::new(&spec, &pts, JetOrder::Value).is_err());
    }

    #[test]
    fn chunked_values_match_plain_forward() {
        let spec = NetworkSpec::mlp(2, vec![8, 8]).with_embedding(Embedding::fourier_range(2));
        let params: ParameterStore<f64> = xavier_init(&spec, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = random_points(2, 50, &mut rng);
        let vals = evaluate_values(&spec, &params, &pts).unwrap();
        for (p, v) in pts.iter().zip(vals) {
            let plain = crate::network::forward(&spec, &params, p).unwrap();
            assert!((v - plain).abs() < 1e-13);
        }
    }
}
