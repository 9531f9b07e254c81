use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::problems::{make_problem, PdeProblem, ProblemKind, ReferenceSpec};
use crate::training::{BatchSizes, LossWeights, StagePlan};

/// Everything needed to reproduce one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub epsilon: Option<f64>,
    /// Nodes per axis of the evaluation grid.
    pub grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
    pub plan: StagePlan,
}

pub const PRESETS: [&str; 4] = ["sp1d", "ej2d", "interior2d", "reaction"];

fn weights(interior: f64, boundary: f64, initial: f64) -> LossWeights {
    LossWeights {
        interior,
        boundary,
        initial,
    }
}

fn batches(interior: usize, boundary: usize, initial: usize) -> BatchSizes {
    BatchSizes {
        interior,
        boundary,
        initial,
    }
}

/// Default evaluation grid of a problem.
pub fn default_grid(kind: ProblemKind) -> Vec<usize> {
    match kind {
        ProblemKind::Sp1d => vec![1001],
        ProblemKind::Ej2d | ProblemKind::Interior2d => vec![256, 256],
        ProblemKind::Reaction => vec![256, 101],
    }
}

impl RunConfig {
    fn new(problem: ProblemKind, plan: StagePlan, notes: Vec<String>) -> Self {
        Self {
            problem,
            epsilon: problem.default_epsilon(),
            grid: default_grid(problem),
            notes,
            output_dir: None,
            reference: (problem == ProblemKind::Reaction).then(ReferenceSpec::default),
            plan,
        }
    }

    /// Multi-stage configuration of the named benchmark.
    pub fn preset(name: &str) -> Result<Self> {
        let kind = ProblemKind::parse(name)?;
        let seed = 0;
        Ok(match kind {
            ProblemKind::Sp1d => Self::new(
                kind,
                StagePlan::halving(
                    &["[50]", "[100]", "[100]*2", "[100]*3", "F10[50]*2"],
                    10_000,
                    weights(1.0, 10.0, 0.0),
                    batches(10_000, 2, 0),
                    seed,
                ),
                vec!["boundary points are the two end points, alternating".into()],
            ),
            ProblemKind::Ej2d => Self::new(
                kind,
                StagePlan::halving(
                    &["[50]", "[100]", "[100]*2", "[100]*3", "[100]*2", "F50[100]*2"],
                    20_000,
                    weights(1.0, 10_000.0, 0.0),
                    batches(10_000, 5_000, 0),
                    seed,
                ),
                vec!["boundary batch printed as 50,00 in the source; read as 5,000".into()],
            ),
            ProblemKind::Interior2d => Self::new(
                kind,
                StagePlan::halving(
                    &["[200]*3", "[100]*3", "[100]*2", "F5[50]*2"],
                    20_000,
                    weights(1.0, 10_000.0, 0.0),
                    batches(10_000, 5_000, 0),
                    seed,
                ),
                Vec::new(),
            ),
            ProblemKind::Reaction => Self::new(
                kind,
                StagePlan::halving(
                    &["P[200]*3", "P[100]*3", "P[100]*2"],
                    20_000,
                    weights(1.0, 0.0, 1_000.0),
                    batches(20_000, 0, 1_000),
                    seed,
                ),
                vec!["step budget per stage not given in the source; 20,000 assumed".into()],
            ),
        })
    }

    /// Single-network comparison run of the named benchmark.
    pub fn baseline(name: &str) -> Result<Self> {
        let mut cfg = Self::preset(name)?;
        let (arch, steps) = match cfg.problem {
            ProblemKind::Sp1d => ("[100]*3", 20_000),
            ProblemKind::Ej2d => ("[100]*3", 20_000),
            ProblemKind::Interior2d => ("[200]*3", 20_000),
            ProblemKind::Reaction => ("P[200]*3", 20_000),
        };
        cfg.plan.stages.truncate(1);
        cfg.plan.stages[0].architecture = arch.into();
        cfg.plan.stages[0].rho = 1.0;
        cfg.plan.stages[0].steps = steps;
        cfg.notes.push("single-network baseline".into());
        Ok(cfg)
    }

    pub fn make_problem(&self) -> Result<Box<dyn PdeProblem<f64>>> {
        make_problem(self.problem, self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        let problem = self.make_problem()?;
        self.plan.validate(problem.as_ref())?;
        if self.grid.len() != problem.input_dim() || self.grid.iter().any(|&n| n < 2) {
            return Err(Error::Config(format!(
                "grid {:?} must give >= 2 nodes on each of {} axes",
                self.grid,
                problem.input_dim()
            )));
        }
        match (&self.reference, self.problem) {
            (Some(spec), ProblemKind::Reaction) => spec.validate(),
            (None, ProblemKind::Reaction) => Err(Error::Config("reaction runs need reference solver settings".into())),
            (Some(_), _) => Err(Error::Config(format!(
                "{} has a closed-form solution; remove the reference section",
                self.problem.name()
            ))),
            (None, _) => Ok(()),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(format!("cannot serialise config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// First 16 hex digits of the SHA-256 of the serialised config.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
    }
}
