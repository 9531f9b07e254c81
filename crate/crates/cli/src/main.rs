use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gbpinn_core::harness::{emit_outputs, parse_rows, run_ablation, run_experiment, FailureInfo, RunConfig};
use gbpinn_core::problems::{cached_reference, ProblemKind};
use gbpinn_core::{Error, Result};

#[derive(Parser)]
#[command(name = "gbpinn", version, about = "Gradient-boosted PINN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Directory holding cached reference solutions.
    #[arg(long, default_value = ".gbpinn-cache")]
    cache_dir: PathBuf,
    /// Multiplies every stage's step budget.
    #[arg(long)]
    steps_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a preset or a config file and write the report files.
    Run {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        /// TOML run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Single-network comparison run instead of the boosted preset.
        #[arg(long, requires = "preset")]
        baseline: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train every stage list of a rows file with weights 2^-n.
    Ablation {
        #[arg(long)]
        problem: String,
        /// One comma-separated stage list per line.
        #[arg(long)]
        rows: PathBuf,
        /// Comma-separated seeds; several give mean and spread.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Build (or load) the reaction–diffusion reference solution.
    Reference {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(preset: Option<&str>, config: Option<&Path>, baseline: bool) -> Result<RunConfig> {
    match (preset, config) {
        (Some(name), _) if baseline => RunConfig::baseline(name),
        (Some(name), _) => RunConfig::preset(name),
        (None, Some(path)) => RunConfig::load(path),
        (None, None) => Err(Error::Usage("give --preset or --config".into())),
    }
}

fn execute(cli: Cli) -> std::result::Result<serde_json::Value, FailureInfo> {
    let err = |e: Error| FailureInfo::from(&e);
    match cli.command {
        Command::Run {
            preset,
            config,
            baseline,
            seed,
            out,
            common,
        } => {
            let mut cfg = load_config(preset.as_deref(), config.as_deref(), baseline).map_err(err)?;
            if let Some(seed) = seed {
                cfg.plan.seed = seed;
            }
            if let Some(f) = common.steps_scale {
                cfg.plan.scale_steps(f).map_err(err)?;
            }
            cfg.output_dir = Some(out.clone());
            let report = run_experiment(&cfg, &common.cache_dir).map_err(err)?;
            emit_outputs(&report, &out).map_err(err)?;
            if let Some(f) = &report.failure {
                return Err(f.clone());
            }
            let metric = report.relative_l2();
            Ok(serde_json::json!({
                "out": out,
                "relative_l2": metric.map(|m| m.0),
                "relative_l2_root": metric.map(|m| m.1),
            }))
        }
        Command::Ablation {
            problem,
            rows,
            seeds,
            out,
            common,
        } => {
            let mut base = RunConfig::preset(&problem).map_err(err)?;
            if let Some(f) = common.steps_scale {
                base.plan.scale_steps(f).map_err(err)?;
            }
            let text = std::fs::read_to_string(&rows)
                .map_err(|e| Error::Io {
                    path: rows.clone(),
                    source: e,
                })
                .map_err(err)?;
            let rows = parse_rows(&text, base.problem.input_dim()).map_err(err)?;
            let table = run_ablation(&base, &rows, &seeds, &common.cache_dir).map_err(err)?;
            table.write(&out).map_err(err)?;
            print!("{}", table.to_markdown());
            Ok(serde_json::json!({ "out": out, "rows": table.rows.len() }))
        }
        Command::Reference { problem, out } => {
            let kind = ProblemKind::parse(&problem).map_err(err)?;
            let cfg = RunConfig::preset(kind.name()).map_err(err)?;
            let spec = cfg
                .reference
                .ok_or_else(|| Error::Usage(format!("{problem} has a closed-form solution")))
                .map_err(err)?;
            let (grid, path) = cached_reference(&out, &spec).map_err(err)?;
            let (lo, hi) = grid.min_max();
            Ok(serde_json::json!({
                "path": path,
                "check": grid.check,
                "min": lo,
                "max": hi,
            }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(value) => {
            println!("{value}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind, "message": e.message });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
