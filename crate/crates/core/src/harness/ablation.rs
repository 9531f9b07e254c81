use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::report::run_experiment;
use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::training::{rho_schedule, StageConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub architecture: String,
    /// Mean printed-form relative error over the seeds that finished.
    pub relative_l2: Option<f64>,
    pub relative_l2_root: Option<f64>,
    /// Sample standard deviation of the printed-form error across seeds.
    pub spread: Option<f64>,
    pub per_seed: Vec<Option<f64>>,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub problem: String,
    pub seeds: Vec<u64>,
    pub steps_per_stage: usize,
    pub rows: Vec<AblationRow>,
}

/// Splits on commas outside brackets.
fn split_stages(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in line.chars() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur.trim().to_string());
    out
}

/// One stage list per non-empty line, e.g. `[50], [100], F10[50]*2`.
/// Text after `#` is ignored.
pub fn parse_rows(text: &str, input_dim: usize) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let stages = split_stages(line);
        for s in &stages {
            NetworkSpec::parse(s, input_dim).map_err(|e| Error::Config(format!("rows line {}: `{s}`: {e}", n + 1)))?;
        }
        rows.push(stages);
    }
    if rows.is_empty() {
        return Err(Error::Config("rows file lists no stage lists".into()));
    }
    Ok(rows)
}

fn mean_std(v: &[f64]) -> (f64, Option<f64>) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let spread = (v.len() > 1).then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (mean, spread)
}

/// Trains one ensemble per row with stage weights `2^{-n}` and the per-stage
/// step budget of `base`. Row failures are recorded, not propagated.
pub fn run_ablation(base: &RunConfig, rows: &[Vec<String>], seeds: &[u64], cache_dir: &Path) -> Result<AblationTable> {
    if rows.is_empty() || seeds.is_empty() {
        return Err(Error::usage("ablation needs at least one row and one seed"));
    }
    let steps = base.plan.stages.first().map(|s| s.steps).unwrap_or(1);
    let mut table = AblationTable {
        problem: base.problem.name().into(),
        seeds: seeds.to_vec(),
        steps_per_stage: steps,
        rows: Vec::new(),
    };
    for row in rows {
        let mut cfg = base.clone();
        cfg.plan.stages = row
            .iter()
            .zip(rho_schedule(row.len(), 0.5))
            .map(|(a, rho)| StageConfig {
                architecture: a.clone(),
                rho,
                steps,
            })
            .collect();
        let architecture = row.join(", ");
        let mut per_seed = Vec::new();
        let mut roots = Vec::new();
        let mut failures = Vec::new();
        for &seed in seeds {
            cfg.plan.seed = seed;
            match run_experiment(&cfg, cache_dir) {
                Ok(report) => {
                    if let Some(f) = &report.failure {
                        failures.push(format!("seed {seed}: {}", f.message));
                    }
                    match (report.failure.is_none(), report.relative_l2()) {
                        (true, Some((ratio, root))) => {
                            per_seed.push(Some(ratio));
                            roots.push(root);
                        }
                        _ => per_seed.push(None),
                    }
                }
                Err(e) => {
                    failures.push(format!("seed {seed}: {e}"));
                    per_seed.push(None);
                }
            }
        }
        let done: Vec<f64> = per_seed.iter().flatten().copied().collect();
        let (mean, spread, root) = if done.is_empty() {
            (None, None, None)
        } else {
            let (m, s) = mean_std(&done);
            (Some(m), s, Some(mean_std(&roots).0))
        };
        log::info!("ablation row `{architecture}`: {mean:?}");
        table.rows.push(AblationRow {
            architecture,
            relative_l2: mean,
            relative_l2_root: root,
            spread,
            per_seed,
            failures,
        });
    }
    Ok(table)
}

fn percent(v: Option<f64>) -> String {
    v.map(|x| format!("{:.2}%", 100.0 * x))
        .unwrap_or_else(|| "failed".into())
}

impl AblationTable {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| Neural network structures | Relative l2 error | Root form |\n|---|---|---|\n");
        for r in &self.rows {
            let spread = r.spread.map(|v| format!(" ± {:.2}%", 100.0 * v)).unwrap_or_default();
            s.push_str(&format!(
                "| {} | {}{} | {} |\n",
                r.architecture,
                percent(r.relative_l2),
                spread,
                percent(r.relative_l2_root)
            ));
        }
        s
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let csv_path = out.join("ablation.csv");
        let err = |e: csv::Error| Error::Format(format!("{}: {e}", csv_path.display()));
        let mut w = csv::Writer::from_path(&csv_path).map_err(err)?;
        w.write_record(["architecture", "relative_l2", "relative_l2_root", "spread", "status"])
            .map_err(err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let status = if r.failures.is_empty() {
                "ok".to_string()
            } else {
                r.failures.join("; ")
            };
            w.write_record([
                r.architecture.clone(),
                opt(r.relative_l2),
                opt(r.relative_l2_root),
                opt(r.spread),
                status,
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))?;
        let md = out.join("ablation.md");
        std::fs::write(&md, self.to_markdown()).map_err(|e| Error::io(&md, e))?;
        let json = out.join("ablation.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))
    }
}
