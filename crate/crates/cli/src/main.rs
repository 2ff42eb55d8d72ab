use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dtcast::experiment::{self, write_run, write_trace_summary};
use dtcast::{load_config, Execution, ScenarioConfig};

/// Resource demand prediction for multicast short-video streaming.
#[derive(Parser, Debug)]
#[command(name = "dtcast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (`key=value` lines); defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides the seed from the scenario file
    #[arg(long)]
    seed: Option<u64>,

    /// Run every data-parallel loop on the calling thread
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run all intervals and write intervals.csv, cdf.csv and summary.txt
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train the status encoder and write its weights file
    TrainEncoder {
        #[command(flatten)]
        common: Common,
        /// Weights file to write
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the group-count policy and write its weights file
    TrainDdqn {
        #[command(flatten)]
        common: Common,
        /// Weights file to write
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a watch trace into per-category swipe CDFs and rates
    ImportTrace {
        #[command(flatten)]
        common: Common,
        /// Trace CSV; falls back to `trace_path` from the scenario file
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

fn write_weights(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Run { common, out } => {
            let cfg = common.load()?;
            let output = experiment::run_experiment(&cfg, common.exec())?;
            write_run(&out, &output, cfg.n_categories)?;
            print!("{}", experiment::summary_text(&output.summary));
        }
        Command::TrainEncoder { common, out } => {
            let cfg = common.load()?;
            let outcome = experiment::train_encoder(&cfg, common.exec())?;
            write_weights(&out, &outcome.model.to_text())?;
            match outcome.losses.last() {
                Some(loss) => println!("final_loss: {loss:.6e}"),
                None => println!("final_loss: none (0 epochs)"),
            }
        }
        Command::TrainDdqn { common, out } => {
            let cfg = common.load()?;
            let training = experiment::train_ddqn(&cfg, common.exec())?;
            write_weights(&out, &training.network.to_text())?;
            for (ep, r) in training.episode_rewards.iter().enumerate() {
                println!("episode {ep}: mean_reward {r:.6}");
            }
        }
        Command::ImportTrace { common, trace, out } => {
            let cfg = common.load()?;
            let Some(path) = trace.or(cfg.trace_path.clone()) else {
                bail!("no trace given: pass --trace or set trace_path");
            };
            let summary = experiment::import_trace(&path, cfg.n_categories, cfg.abstraction.bins)?;
            write_trace_summary(&out, &summary)?;
            println!("records: {}", summary.records);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
