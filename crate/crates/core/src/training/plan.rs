use serde::{Deserialize, Serialize};

use super::adam::OptimizerConfig;
use crate::error::{Error, Result};
use crate::network::{Embedding, NetworkSpec};
use crate::problems::{PdeProblem, RequiredEmbedding};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub interior: f64,
    pub boundary: f64,
    #[serde(default)]
    pub initial: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSizes {
    pub interior: usize,
    pub boundary: usize,
    #[serde(default)]
    pub initial: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    /// Stage network in tuple notation, e.g. `[100]*3` or `F10[50]*2`.
    pub architecture: String,
    pub rho: f64,
    pub steps: usize,
}

impl StageConfig {
    pub fn network(&self, input_dim: usize) -> Result<NetworkSpec> {
        NetworkSpec::parse(&self.architecture, input_dim)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagePlan {
    pub stages: Vec<StageConfig>,
    pub weights: LossWeights,
    pub batches: BatchSizes,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

/// `base^i` for `i = 0..n`.
pub fn rho_schedule(n: usize, base: f64) -> Vec<f64> {
    (0..n).map(|i| base.powi(i as i32)).collect()
}

impl StagePlan {
    /// Stages with weights `0.5^i` and a common step budget.
    pub fn halving(architectures: &[&str], steps: usize, weights: LossWeights, batches: BatchSizes, seed: u64) -> Self {
        let rho = rho_schedule(architectures.len(), 0.5);
        Self {
            stages: architectures
                .iter()
                .zip(rho)
                .map(|(a, rho)| StageConfig {
                    architecture: a.to_string(),
                    rho,
                    steps,
                })
                .collect(),
            weights,
            batches,
            optimizer: OptimizerConfig::default(),
            seed,
        }
    }

    pub fn rhos(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.rho).collect()
    }

    /// Multiplies every stage's step budget, keeping at least one step.
    pub fn scale_steps(&mut self, factor: f64) -> Result<()> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Config(format!("step scale must be positive, got {factor}")));
        }
        for s in &mut self.stages {
            s.steps = ((s.steps as f64 * factor).round() as usize).max(1);
        }
        Ok(())
    }

    pub fn networks(&self, input_dim: usize) -> Result<Vec<NetworkSpec>> {
        self.stages.iter().map(|s| s.network(input_dim)).collect()
    }

    pub fn validate<S: Scalar>(&self, problem: &dyn PdeProblem<S>) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Config("plan has no stages".into()));
        }
        let dim = problem.input_dim();
        for (i, s) in self.stages.iter().enumerate() {
            let spec = s.network(dim)?;
            if s.steps == 0 {
                return Err(Error::Config(format!("stage {i} has no training steps")));
            }
            if !(s.rho > 0.0 && s.rho.is_finite()) {
                return Err(Error::Config(format!(
                    "stage {i} weight must be positive, got {}",
                    s.rho
                )));
            }
            if problem.required_embedding() == RequiredEmbedding::Periodic && spec.embedding != Embedding::Periodic {
                return Err(Error::Config(format!(
                    "stage {i} (`{}`) must use the periodic embedding for {}",
                    s.architecture,
                    problem.kind().name()
                )));
            }
        }
        let w = &self.weights;
        for (name, v) in [
            ("interior", w.interior),
            ("boundary", w.boundary),
            ("initial", w.initial),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} weight must be finite and >= 0, got {v}")));
            }
        }
        if w.boundary > 0.0 && !problem.has_boundary() {
            return Err(Error::Config(format!("{} has no boundary term", problem.kind().name())));
        }
        if w.initial > 0.0 && !problem.has_initial() {
            return Err(Error::Config(format!(
                "{} has no initial condition",
                problem.kind().name()
            )));
        }
        let b = &self.batches;
        for (name, weight, count) in [
            ("interior", w.interior, b.interior),
            ("boundary", w.boundary, b.boundary),
            ("initial", w.initial, b.initial),
        ] {
            if weight > 0.0 && count == 0 {
                return Err(Error::Config(format!("{name} term is weighted but has no points")));
            }
        }
        self.optimizer.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_problem, ProblemKind};

    fn plan(arch: &[&str]) -> StagePlan {
        StagePlan::halving(
            arch,
            10,
            LossWeights {
                interior: 1.0,
                boundary: 10.0,
                initial: 0.0,
            },
            BatchSizes {
                interior: 10,
                boundary: 2,
                initial: 0,
            },
            0,
        )
    }

    #[test]
    fn halving_schedule() {
        let p = plan(&["[5]"; 6]);
        assert_eq!(p.rhos(), [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125]);
    }

    #[test]
    fn zero_width_is_rejected() {
        let sp = make_problem::<f64>(ProblemKind::Sp1d, None).unwrap();
        assert!(plan(&["[0]"]).validate(sp.as_ref()).is_err());
        assert!(plan(&["[5]", "[5,0]"]).validate(sp.as_ref()).is_err());
        plan(&["[5]", "F3[4]*2"]).validate(sp.as_ref()).unwrap();
    }

    #[test]
    fn reaction_needs_periodic_stages_and_no_boundary() {
        let rd = make_problem::<f64>(ProblemKind::Reaction, None).unwrap();
        let mut p = plan(&["P[8]"]);
        assert!(p.validate(rd.as_ref()).is_err());
        p.weights.boundary = 0.0;
        p.weights.initial = 1000.0;
        assert!(p.validate(rd.as_ref()).is_err());
        p.batches.initial = 4;
        p.validate(rd.as_ref()).unwrap();
        p.stages[0].architecture = "[8]".into();
        assert!(p.validate(rd.as_ref()).is_err());
    }

    #[test]
    fn scaling_keeps_one_step() {
        let mut p = plan(&["[5]"]);
        p.scale_steps(0.01).unwrap();
        assert_eq!(p.stages[0].steps, 1);
        p.stages[0].steps = 10_000;
        p.scale_steps(0.25).unwrap();
        assert_eq!(p.stages[0].steps, 2500);
        assert!(p.scale_steps(0.0).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let p = plan(&["[50]", "F10[50]*2"]);
        let text = toml::to_string(&p).unwrap();
        let back: StagePlan = toml::from_str(&text).unwrap();
        assert_eq!(p, back);
    }
}
