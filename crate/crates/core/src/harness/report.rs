use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::metrics::{evaluate_with_truth, relative_l2, truth_on_grid, Grid, GridEvaluation, Truth};
use super::svg;
use crate::error::{Error, Result};
use crate::problems::{cached_reference, ProblemKind, ReferenceGrid};
use crate::training::{run_boosting, Ensemble, Observer, StageReport, TraceRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureInfo {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for FailureInfo {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

/// Result of one experiment.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub config: RunConfig,
    pub config_hash: String,
    pub stages: Vec<StageReport>,
    /// Final ensemble on the evaluation grid; absent if no stage finished.
    pub evaluation: Option<GridEvaluation>,
    pub trace: Vec<TraceRecord>,
    pub wall_time: f64,
    pub failure: Option<FailureInfo>,
    pub ensemble: Ensemble<f64>,
}

impl ErrorReport {
    /// `(ratio, root)` relative error of the final ensemble.
    pub fn relative_l2(&self) -> Option<(f64, f64)> {
        self.evaluation.as_ref().and_then(|e| e.relative_l2().ok())
    }

    pub fn summary(&self) -> Summary {
        let metric = self.relative_l2();
        Summary {
            problem: self.config.problem,
            epsilon: self.config.epsilon,
            seed: self.config.plan.seed,
            config_hash: self.config_hash.clone(),
            grid: self.config.grid.clone(),
            relative_l2: metric.map(|m| m.0),
            relative_l2_root: metric.map(|m| m.1),
            stages: self
                .stages
                .iter()
                .map(|s| StageSummary {
                    stage: s.stage,
                    architecture: s.architecture.clone(),
                    rho: s.rho,
                    steps: s.steps,
                    initial_loss: s.initial_loss,
                    final_loss: s.final_loss,
                    relative_l2: s.relative_l2,
                    relative_l2_root: s.relative_l2_root,
                })
                .collect(),
            failure: self.failure.clone(),
        }
    }
}

/// Machine-independent part of a report (no timings).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub problem: ProblemKind,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub grid: Vec<usize>,
    pub relative_l2: Option<f64>,
    pub relative_l2_root: Option<f64>,
    pub stages: Vec<StageSummary>,
    pub failure: Option<FailureInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSummary {
    pub stage: usize,
    pub architecture: String,
    pub rho: f64,
    pub steps: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub relative_l2: Option<f64>,
    pub relative_l2_root: Option<f64>,
}

struct RunObserver {
    grid: Grid,
    truth: Vec<f64>,
    trace: Vec<TraceRecord>,
}

impl Observer<f64> for RunObserver {
    fn record(&mut self, record: &TraceRecord) {
        self.trace.push(record.clone());
    }

    fn evaluate(&mut self, ensemble: &Ensemble<f64>, _stage: usize) -> Result<Option<(f64, f64)>> {
        let pred = ensemble.eval_batch(&self.grid.points)?;
        relative_l2(&pred, &self.truth).map(Some)
    }
}

/// Loads (or builds) the reference grid a config needs.
pub fn reference_for(config: &RunConfig, cache_dir: &Path) -> Result<Option<(ReferenceGrid, PathBuf)>> {
    match &config.reference {
        Some(spec) => cached_reference(cache_dir, spec).map(Some),
        None => Ok(None),
    }
}

/// Trains the configured ensemble and evaluates it. Training failures are
/// returned inside the report; configuration and reference errors are not.
pub fn run_experiment(config: &RunConfig, cache_dir: &Path) -> Result<ErrorReport> {
    config.validate()?;
    let start = Instant::now();
    let problem = config.make_problem()?;
    let reference = reference_for(config, cache_dir)?;
    let truth_source = match &reference {
        Some((grid, _)) => Truth::Reference(grid),
        None => Truth::Exact(problem.as_ref()),
    };
    let d = problem.domain();
    let grid = Grid::new(&d.lower, &d.upper, &config.grid)?;
    let truth = truth_on_grid(truth_source, &grid)?;
    let mut observer = RunObserver {
        grid: grid.clone(),
        truth: truth.clone(),
        trace: Vec::new(),
    };
    let run = run_boosting(problem.as_ref(), &config.plan, &mut observer)?;
    let evaluation = if run.ensemble.is_empty() {
        None
    } else {
        Some(evaluate_with_truth(&run.ensemble, grid, truth)?)
    };
    Ok(ErrorReport {
        config: config.clone(),
        config_hash: config.hash()?,
        stages: run.stages,
        evaluation,
        trace: observer.trace,
        wall_time: start.elapsed().as_secs_f64(),
        failure: run.failure.as_ref().map(FailureInfo::from),
        ensemble: run.ensemble,
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn axis_labels(kind: ProblemKind) -> [&'static str; 2] {
    match kind {
        ProblemKind::Reaction => ["x", "t"],
        _ => ["x", "y"],
    }
}

/// Writes `errors.csv` for an evaluation.
pub fn write_errors_csv(path: &Path, eval: &GridEvaluation, kind: ProblemKind) -> Result<()> {
    let io = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let names = axis_labels(kind);
    let dim = eval.grid.points.dim();
    let mut head: Vec<&str> = names[..dim].to_vec();
    head.extend(["pred", "truth", "abs_error"]);
    w.write_record(&head).map_err(io)?;
    for (i, x) in eval.grid.points.iter().enumerate() {
        let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        row.push(eval.pred[i].to_string());
        row.push(eval.truth[i].to_string());
        row.push(eval.abs_error[i].to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `config.echo`, `trace.jsonl`, `errors.csv`, `summary.json`,
/// `timing.json` and `figure.svg`.
pub fn emit_outputs(report: &ErrorReport, out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(&out.join("config.echo"), report.config.to_toml()?)?;
    let mut trace = String::new();
    for r in &report.trace {
        trace.push_str(&serde_json::to_string(r).map_err(|e| Error::Format(e.to_string()))?);
        trace.push('\n');
    }
    write(&out.join("trace.jsonl"), trace)?;
    let summary = serde_json::to_string_pretty(&report.summary()).map_err(|e| Error::Format(e.to_string()))?;
    write(&out.join("summary.json"), summary + "\n")?;
    let timing = serde_json::json!({
        "wall_time": report.wall_time,
        "stages": report.stages.iter().map(|s| s.wall_time).collect::<Vec<_>>(),
    });
    write(&out.join("timing.json"), format!("{timing:#}\n"))?;
    if let Some(eval) = &report.evaluation {
        write_errors_csv(&out.join("errors.csv"), eval, report.config.problem)?;
        write(
            &out.join("figure.svg"),
            svg::figure(eval, axis_labels(report.config.problem)),
        )?;
    }
    Ok(())
}
