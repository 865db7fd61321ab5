//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 I/O or
//! parse error, 3 no feasible method under the budget, 4 internal invariant
//! violation. Decisions print as JSON on stdout; diagnostics go to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use accel_select::domain::{HardwareProfile, MethodDescriptor, TaskDescriptor};
use accel_select::error::{Error, Result};
use accel_select::harness::{
    config_digest, load_config, read_history, run_evaluation, write_history, write_report,
    Config,
};
use accel_select::predictor::{build_training_set, load_model, save_model, train_meta_learner};
use accel_select::selector::{select_joint, select_online};
use accel_select::simlab::generate_history;

#[derive(Parser)]
#[command(
    name = "accel-select",
    version,
    about = "Pick the best LLM inference acceleration method under a cost budget"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic measurement history from a config
    Gen {
        /// Config file (JSON); missing sections use built-in defaults
        #[arg(long)]
        config: PathBuf,
        /// Output history file (JSON lines)
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the performance model from a history file
    Train {
        /// History file produced by `gen`
        #[arg(long)]
        history: PathBuf,
        /// Config file naming the fleet and predictor hyperparameters
        #[arg(long)]
        config: PathBuf,
        /// Output model file (JSON)
        #[arg(long)]
        out: PathBuf,
    },
    /// Select the best method (and hardware) for a task under a budget
    Select {
        /// Trained model file
        #[arg(long)]
        model: PathBuf,
        /// Task descriptor file (JSON)
        #[arg(long)]
        task: PathBuf,
        /// Single hardware profile file (JSON); selects the method only
        #[arg(long, conflicts_with = "joint", required_unless_present = "joint")]
        hardware: Option<PathBuf>,
        /// Hardware catalog file (JSON array); selects method and node jointly
        #[arg(long)]
        joint: Option<PathBuf>,
        /// Cost budget in currency units
        #[arg(long)]
        budget: f64,
    },
    /// Run the full evaluation pipeline and write a report
    Eval {
        /// Config file (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory for summary.json and rows.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the built-in default configuration as JSON
    Params {
        /// Dump the defaults (the default action; flag kept for clarity)
        #[arg(long)]
        print_defaults: bool,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: format!("{}: {e}", path.display()),
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen { config, out } => {
            let cfg = load_config(&config)?;
            let (tasks, tensor) =
                generate_history(&cfg.fleet, &cfg.workload, &cfg.ground_truth, &cfg.noise)?;
            write_history(&out, &tasks, &tensor, &config_digest(&cfg))?;
            println!(
                "wrote {} tasks and {} measurements to {}",
                tasks.len(),
                tensor.len(),
                out.display()
            );
            Ok(())
        }
        Command::Train {
            history,
            config,
            out,
        } => {
            let cfg = load_config(&config)?;
            let h = read_history(&history)?;
            let training =
                build_training_set(&h.tensor, &h.tasks, &MethodDescriptor::all(), &cfg.fleet)?;
            let predictor = train_meta_learner(&training, &cfg.predictor)?;
            save_model(&predictor, &out)?;
            println!(
                "trained on {} rows; model written to {}",
                training.rows.len(),
                out.display()
            );
            Ok(())
        }
        Command::Select {
            model,
            task,
            hardware,
            joint,
            budget,
        } => {
            if budget.is_nan() {
                return Err(Error::config("budget must be a number"));
            }
            let predictor = load_model(&model)?;
            let task: TaskDescriptor = read_json(&task)?;
            task.validate()?;
            let methods = MethodDescriptor::all();
            // Any budget value is accepted here: a budget at or below zero
            // makes every candidate infeasible and exits with code 3.
            let decision = match (&hardware, &joint) {
                (Some(hw_path), None) => {
                    let hw: HardwareProfile = read_json(hw_path)?;
                    hw.validate()?;
                    select_online(&predictor, &task, &methods, &hw, budget)?
                }
                (None, Some(catalog_path)) => {
                    let catalog: Vec<HardwareProfile> = read_json(catalog_path)?;
                    if catalog.is_empty() {
                        return Err(Error::config("hardware catalog is empty"));
                    }
                    catalog.iter().try_for_each(HardwareProfile::validate)?;
                    select_joint(&predictor, &task, &methods, &catalog, budget)?
                }
                _ => unreachable!("clap enforces exactly one of --hardware/--joint"),
            };
            let text = serde_json::to_string_pretty(&decision)
                .map_err(|e| Error::internal(format!("decision serialization failed: {e}")))?;
            println!("{text}");
            Ok(())
        }
        Command::Eval { config, out } => {
            let cfg = load_config(&config)?;
            let report = run_evaluation(&cfg)?;
            write_report(&report, &out)?;
            for a in &report.aggregates {
                println!(
                    "{}: mean_regret={:.4} top1={:.3} failed={} violations={:.3}",
                    a.policy, a.mean_regret, a.top1_accuracy, a.n_failed, a.violation_rate
                );
            }
            println!("report written to {}", out.display());
            Ok(())
        }
        Command::Params { print_defaults: _ } => {
            print!("{}", Config::default().to_json()?);
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NoFeasibleMethod { .. } => 3,
        Error::Internal { .. } => 4,
        Error::Io(_) | Error::Parse { .. } | Error::Version { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
