use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::ensemble::Ensemble;
use super::loss::{derive_seed, CollocationData, STREAM_INIT};
use super::objective::StageObjective;
use super::plan::StagePlan;
use crate::error::{Error, Result};
use crate::network::xavier_init;
use crate::problems::PdeProblem;
use crate::scalar::Scalar;

/// One line of the JSON-lines training trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: usize,
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
    /// Seconds since the stage started.
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageTrace {
    /// Loss before each update.
    pub losses: Vec<f64>,
    /// Loss after the last update.
    pub final_loss: f64,
    pub wall_time: f64,
}

impl StageTrace {
    pub fn initial_loss(&self) -> f64 {
        self.losses.first().copied().unwrap_or(self.final_loss)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub architecture: String,
    pub rho: f64,
    pub steps: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub wall_time: f64,
    /// Printed-form relative error of the ensemble after this stage.
    pub relative_l2: Option<f64>,
    pub relative_l2_root: Option<f64>,
}

/// Hooks into a boosting run.
pub trait Observer<S: Scalar> {
    fn record(&mut self, _record: &TraceRecord) {}

    /// `(ratio, root)` relative error of the ensemble after `stage`.
    fn evaluate(&mut self, _ensemble: &Ensemble<S>, _stage: usize) -> Result<Option<(f64, f64)>> {
        Ok(None)
    }
}

impl<S: Scalar> Observer<S> for () {}

/// Trains the ensemble's newest stage on `data` with a fresh optimizer.
pub fn train_stage<S: Scalar>(
    ensemble: &mut Ensemble<S>,
    problem: &dyn PdeProblem<S>,
    plan: &StagePlan,
    stage: usize,
    data: &CollocationData<S>,
    observer: &mut dyn Observer<S>,
) -> Result<StageTrace> {
    if ensemble.len() != stage + 1 || ensemble.active().is_none() {
        return Err(Error::usage(format!(
            "stage {stage} needs an ensemble of {} stages with a trainable last stage",
            stage + 1
        )));
    }
    let cfg = plan
        .stages
        .get(stage)
        .ok_or_else(|| Error::usage(format!("plan has no stage {stage}")))?;
    let mut objective = StageObjective::new(ensemble, problem, data, &plan.weights)?;
    let params = &mut ensemble.active_mut().expect("checked above").params;
    let mut adam = AdamState::for_store(plan.optimizer.clone(), params);
    let mut grad = vec![S::zero(); params.len()];
    let mut losses = Vec::with_capacity(cfg.steps);
    let start = Instant::now();
    for step in 0..cfg.steps {
        let lr = adam.current_lr();
        let loss = objective.loss_and_grad(params, &mut grad)?.to_f64_lossy();
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { stage, step, loss });
        }
        losses.push(loss);
        observer.record(&TraceRecord {
            stage,
            step,
            loss,
            lr,
            wall_time: start.elapsed().as_secs_f64(),
        });
        if step % 1000 == 0 {
            log::info!("stage {stage} step {step} loss {loss:.6e}");
        }
        adam.step(params, &grad)?;
    }
    let final_loss = objective.loss(params)?.to_f64_lossy();
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            stage,
            step: cfg.steps,
            loss: final_loss,
        });
    }
    Ok(StageTrace {
        losses,
        final_loss,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Outcome of [`run_boosting`]. On a stage failure the ensemble and reports
/// cover the stages completed before it.
#[derive(Debug)]
pub struct BoostingRun<S> {
    pub ensemble: Ensemble<S>,
    pub stages: Vec<StageReport>,
    pub failure: Option<Error>,
}

impl<S> BoostingRun<S> {
    pub fn into_result(self) -> Result<(Ensemble<S>, Vec<StageReport>)> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok((self.ensemble, self.stages)),
        }
    }
}

/// Trains the plan's stages in order, each on its own freshly drawn data,
/// freezing earlier stages.
pub fn run_boosting<S: Scalar>(
    problem: &dyn PdeProblem<S>,
    plan: &StagePlan,
    observer: &mut dyn Observer<S>,
) -> Result<BoostingRun<S>> {
    plan.validate(problem)?;
    let dim = problem.input_dim();
    let mut run = BoostingRun {
        ensemble: Ensemble::new(),
        stages: Vec::new(),
        failure: None,
    };
    for (i, cfg) in plan.stages.iter().enumerate() {
        let outcome = (|| -> Result<StageReport> {
            let spec = cfg.network(dim)?;
            let params = xavier_init(&spec, derive_seed(plan.seed, i, STREAM_INIT))?;
            let mut ensemble = run.ensemble.clone();
            ensemble.push(spec, params, S::lit(cfg.rho))?;
            let data = CollocationData::sample(problem, &plan.batches, &plan.weights, plan.seed, i);
            let trace = train_stage(&mut ensemble, problem, plan, i, &data, observer)?;
            ensemble.freeze_all();
            let metric = observer.evaluate(&ensemble, i)?;
            run.ensemble = ensemble;
            Ok(StageReport {
                stage: i,
                architecture: cfg.architecture.clone(),
                rho: cfg.rho,
                steps: cfg.steps,
                initial_loss: trace.initial_loss(),
                final_loss: trace.final_loss,
                wall_time: trace.wall_time,
                relative_l2: metric.map(|m| m.0),
                relative_l2_root: metric.map(|m| m.1),
            })
        })();
        match outcome {
            Ok(report) => {
                log::info!(
                    "stage {i} `{}` done: loss {:.4e}, error {:?}",
                    report.architecture,
                    report.final_loss,
                    report.relative_l2
                );
                run.stages.push(report);
            }
            Err(e) => {
                log::error!("stage {i} failed: {e}");
                run.failure = Some(e);
                break;
            }
        }
    }
    Ok(run)
}
