//! Batched evaluation of the stage loss and its gradient.
//!
//! Frozen stages only enter through their jets at the collocation points,
//! which are computed once per stage. Each step then propagates jets through
//! the active network with [`BatchNet`], evaluates the residual operator per
//! point on a small tape whose leaves are the ensemble's jet coefficients,
//! and feeds the leaf adjoints back through the network's reverse sweep.

use ndarray::Array2;

use super::ensemble::Ensemble;
use super::loss::{check_term, CollocationData};
use super::plan::LossWeights;
use crate::autodiff::{Jet2, Tape, Var};
use crate::error::{Error, Result};
use crate::network::{feature_jets, BatchNet, JetOrder, NetworkSpec, ParameterStore};
use crate::points::PointSet;
use crate::problems::PdeProblem;
use crate::scalar::Scalar;

/// Points per block of the reverse sweep.
pub const DEFAULT_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TermKind {
    Interior,
    Boundary,
    Initial,
}

struct Block<S> {
    points: PointSet<S>,
    features: Array2<S>,
    /// Frozen-stage channels laid out like the network output.
    frozen: Vec<S>,
    net: usize,
}

struct Term<S> {
    kind: TermKind,
    /// `ω / N`.
    scale: S,
    blocks: Vec<Block<S>>,
    nets: Vec<BatchNet<S>>,
    upstream: Vec<S>,
}

pub struct StageObjective<'p, S> {
    problem: &'p dyn PdeProblem<S>,
    spec: NetworkSpec,
    rho: S,
    terms: Vec<Term<S>>,
}

impl<'p, S: Scalar> StageObjective<'p, S> {
    /// Objective for the ensemble's last stage; all earlier stages are
    /// treated as fixed.
    pub fn new(
        ensemble: &Ensemble<S>,
        problem: &'p dyn PdeProblem<S>,
        data: &CollocationData<S>,
        weights: &LossWeights,
    ) -> Result<Self> {
        Self::with_chunk(ensemble, problem, data, weights, DEFAULT_CHUNK)
    }

    pub fn with_chunk(
        ensemble: &Ensemble<S>,
        problem: &'p dyn PdeProblem<S>,
        data: &CollocationData<S>,
        weights: &LossWeights,
        chunk: usize,
    ) -> Result<Self> {
        let stages = ensemble.stages();
        let (active, frozen) = stages
            .split_last()
            .ok_or_else(|| Error::usage("objective needs at least one stage"))?;
        if chunk == 0 {
            return Err(Error::usage("chunk size must be positive"));
        }
        let mut terms = Vec::new();
        for (kind, weight, points, order) in [
            (TermKind::Interior, weights.interior, &data.interior, JetOrder::Second),
            (TermKind::Boundary, weights.boundary, &data.boundary, JetOrder::Value),
            (TermKind::Initial, weights.initial, &data.initial, JetOrder::Value),
        ] {
            let name = match kind {
                TermKind::Interior => "interior",
                TermKind::Boundary => "boundary",
                TermKind::Initial => "initial",
            };
            if !check_term(name, weight, points)? {
                continue;
            }
            let dim = points.dim();
            let mut blocks = Vec::new();
            let mut nets: Vec<BatchNet<S>> = Vec::new();
            let mut sizes: Vec<usize> = Vec::new();
            for coords in points.coords().chunks(chunk * dim) {
                let pts = PointSet::new(dim, coords.to_vec())?;
                let n = pts.len();
                let net = match sizes.iter().position(|&s| s == n) {
                    Some(i) => i,
                    None => {
                        nets.push(BatchNet::new(&active.spec, &pts, order)?);
                        sizes.push(n);
                        nets.len() - 1
                    }
                };
                let mut acc = vec![S::zero(); order.channels(dim) * n];
                for stage in frozen {
                    let mut fnet = BatchNet::new(&stage.spec, &pts, order)?;
                    let out = fnet.forward(&stage.params)?;
                    acc.iter_mut().zip(out).for_each(|(a, &v)| *a = *a + stage.rho * v);
                }
                blocks.push(Block {
                    features: feature_jets(&active.spec, &pts, order),
                    points: pts,
                    frozen: acc,
                    net,
                });
            }
            let width = order.channels(dim) * chunk.min(points.len());
            terms.push(Term {
                kind,
                scale: S::lit(weight) / S::lit(points.len() as f64),
                blocks,
                nets,
                upstream: vec![S::zero(); width],
            });
        }
        Ok(Self {
            problem,
            spec: active.spec.clone(),
            rho: active.rho,
            terms,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Loss and its gradient with respect to `params` (overwritten into `grad`).
    pub fn loss_and_grad(&mut self, params: &ParameterStore<S>, grad: &mut [S]) -> Result<S> {
        grad.iter_mut().for_each(|g| *g = S::zero());
        self.run(params, Some(grad))
    }

    pub fn loss(&mut self, params: &ParameterStore<S>) -> Result<S> {
        self.run(params, None)
    }

    fn run(&mut self, params: &ParameterStore<S>, mut grad: Option<&mut [S]>) -> Result<S> {
        let problem = self.problem;
        let rho = self.rho;
        let mut total = S::zero();
        for term in &mut self.terms {
            let Term {
                kind,
                scale,
                blocks,
                nets,
                upstream,
            } = term;
            for block in blocks.iter_mut() {
                let net = &mut nets[block.net];
                net.swap_features(&mut block.features)?;
                let result = (|| -> Result<S> {
                    let n = block.points.len();
                    let dim = block.points.dim();
                    let h = net.forward(params)?;
                    let up = &mut upstream[..h.len()];
                    let mut sum = S::zero();
                    for i in 0..n {
                        let x = block.points.point(i);
                        let ch = |c: usize| block.frozen[c * n + i] + rho * h[c * n + i];
                        let tape = Tape::with_capacity(64);
                        let (sq, leaves): (Var<S>, Vec<Var<S>>) = match *kind {
                            TermKind::Interior => {
                                let d1: Vec<S> = (0..dim).map(|k| ch(1 + k)).collect();
                                let d2: Vec<S> = (0..dim).map(|k| ch(1 + dim + k)).collect();
                                let u = Jet2::leaves(&tape, ch(0), &d1, &d2)?;
                                let r = problem.residual(x, &u);
                                let mut leaves = vec![u.val];
                                leaves.extend(u.d1.iter().copied());
                                leaves.extend(u.d2.iter().copied());
                                (r.square(), leaves)
                            }
                            TermKind::Boundary | TermKind::Initial => {
                                let u = tape.input_coefficient(ch(0));
                                let r = if *kind == TermKind::Boundary {
                                    problem.boundary_residual(x, u)
                                } else {
                                    problem.initial_residual(x, u)
                                };
                                (r.square(), vec![u])
                            }
                        };
                        sum = sum + sq.value();
                        if grad.is_some() {
                            let adj = tape.adjoints(&sq)?;
                            for (c, leaf) in leaves.iter().enumerate() {
                                up[c * n + i] = *scale * rho * adj.of(leaf);
                            }
                        } else {
                            tape.check()?;
                        }
                    }
                    if let Some(g) = grad.as_deref_mut() {
                        net.backward(params, up, g)?;
                    }
                    Ok(*scale * sum)
                })();
                net.swap_features(&mut block.features)?;
                total = total + result?;
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::xavier_init;
    use crate::problems::{make_problem, ProblemKind};
    use crate::training::loss::pinn_loss_and_grad;
    use crate::training::plan::BatchSizes;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    fn check(kind: ProblemKind, archs: &[&str], weights: LossWeights, batches: BatchSizes, chunk: usize) {
        let problem = make_problem::<f64>(kind, None).unwrap();
        let dim = problem.input_dim();
        let mut e = Ensemble::new();
        for (i, a) in archs.iter().enumerate() {
            let spec = NetworkSpec::parse(a, dim).unwrap();
            let p = xavier_init(&spec, 40 + i as u64).unwrap();
            e.push(spec, p, 0.5f64.powi(i as i32)).unwrap();
        }
        let data = CollocationData::sample(problem.as_ref(), &batches, &weights, 9, archs.len() - 1);
        let (loss_ref, grad_ref) = pinn_loss_and_grad(&e, problem.as_ref(), &data, &weights).unwrap();
        let mut obj = StageObjective::with_chunk(&e, problem.as_ref(), &data, &weights, chunk).unwrap();
        let active = &e.stages().last().unwrap().params;
        let mut grad = vec![0.0; active.len()];
        let loss = obj.loss_and_grad(active, &mut grad).unwrap();
        assert!(close(loss, loss_ref, 1e-11), "{loss} vs {loss_ref}");
        assert!(close(obj.loss(active).unwrap(), loss, 1e-14));
        let scale = grad_ref.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for (g, r) in grad.iter().zip(&grad_ref) {
            assert!((g - r).abs() <= 1e-10 * scale, "{g} vs {r}");
        }
    }

    #[test]
    fn matches_tape_route_sp1d() {
        check(
            ProblemKind::Sp1d,
            &["[4]", "F2[3]*2"],
            LossWeights {
                interior: 1.0,
                boundary: 10.0,
                initial: 0.0,
            },
            BatchSizes {
                interior: 13,
                boundary: 2,
                initial: 0,
            },
            5,
        );
    }

    #[test]
    fn matches_tape_route_ej2d() {
        check(
            ProblemKind::Ej2d,
            &["[3]*2", "[4]", "F2[3]"],
            LossWeights {
                interior: 1.0,
                boundary: 100.0,
                initial: 0.0,
            },
            BatchSizes {
                interior: 9,
                boundary: 10,
                initial: 0,
            },
            4,
        );
    }

    #[test]
    fn matches_tape_route_interior2d() {
        check(
            ProblemKind::Interior2d,
            &["[5]"],
            LossWeights {
                interior: 1.0,
                boundary: 10.0,
                initial: 0.0,
            },
            BatchSizes {
                interior: 7,
                boundary: 8,
                initial: 0,
            },
            64,
        );
    }

    #[test]
    fn matches_tape_route_reaction() {
        check(
            ProblemKind::Reaction,
            &["P[4]", "P[3]*2"],
            LossWeights {
                interior: 1.0,
                boundary: 0.0,
                initial: 1000.0,
            },
            BatchSizes {
                interior: 11,
                boundary: 0,
                initial: 6,
            },
            3,
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let problem = make_problem::<f64>(ProblemKind::Sp1d, Some(0.1)).unwrap();
        let spec = NetworkSpec::parse("[4]*2", 1).unwrap();
        let mut e = Ensemble::new();
        e.push(spec.clone(), xavier_init(&spec, 3).unwrap(), 1.0).unwrap();
        let weights = LossWeights {
            interior: 1.0,
            boundary: 10.0,
            initial: 0.0,
        };
        let batches = BatchSizes {
            interior: 20,
            boundary: 2,
            initial: 0,
        };
        let data = CollocationData::sample(problem.as_ref(), &batches, &weights, 1, 0);
        let mut obj = StageObjective::new(&e, problem.as_ref(), &data, &weights).unwrap();
        let params = e.stages()[0].params.clone();
        let mut grad = vec![0.0; params.len()];
        obj.loss_and_grad(&params, &mut grad).unwrap();
        let h = 1e-6;
        for j in 0..params.len() {
            let mut plus = params.as_slice().to_vec();
            let mut minus = plus.clone();
            plus[j] += h;
            minus[j] -= h;
            let lp = obj.loss(&ParameterStore::with_values(&spec, plus).unwrap()).unwrap();
            let lm = obj.loss(&ParameterStore::with_values(&spec, minus).unwrap()).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                (fd - grad[j]).abs() < 1e-6 * grad[j].abs().max(1.0),
                "slot {j}: {fd} vs {}",
                grad[j]
            );
        }
    }
}
