//! End-to-end runs, training drivers and report files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::abstraction::{category_name, update_swipe_cdf, AbstractionError, SwipeCdf};
use crate::config::{ConfigError, ScenarioConfig};
use crate::encoder::{train_autoencoder, Autoencoder, EncoderError, Shape, TrainOutcome};
use crate::exec::Execution;
use crate::grouping::{DdqnAgent, GroupingError, QNetwork};
use crate::sim::{fit_swipe_rates, read_trace, IntervalReport, Mode, SimError, World};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Grouping(#[from] GroupingError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub intervals: usize,
    pub groups: usize,
    pub mean_radio_accuracy: f64,
    pub mean_compute_accuracy: f64,
    pub mean_k: f64,
    pub held_out: usize,
    pub runtime_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub reports: Vec<IntervalReport>,
    pub summary: RunSummary,
}

/// Loads the configured encoder weights, or trains them on the world's
/// warm-up status matrices.
pub fn prepare_encoder(world: &World) -> Result<Autoencoder, ExperimentError> {
    let cfg = world.config();
    match &cfg.encoder.weights {
        Some(path) => Ok(Autoencoder::load(path)?),
        // No users means nothing to train on or encode.
        None if world.warmup_dataset().is_empty() => {
            let h = cfg.encoder_train_config();
            let shape = Shape {
                filters: h.filters,
                kernel: h.kernel,
                dim: h.dim,
                tracks: crate::udt::AttributeKind::track_count(cfg.n_categories),
            };
            Ok(Autoencoder::init(shape, h.seed)?)
        }
        None => Ok(train_autoencoder(world.warmup_dataset(), &cfg.encoder_train_config())?.model),
    }
}

/// Runs every interval of the scenario. With `ddqn.weights` set the policy
/// is loaded and evaluated greedily; otherwise it is trained online over
/// the run.
pub fn run_experiment(cfg: &ScenarioConfig, exec: Execution) -> Result<RunOutput, ExperimentError> {
    let start = Instant::now();
    let mut world = World::new(cfg.clone(), exec)?;
    let encoder = prepare_encoder(&world)?;
    world.set_encoder(encoder.encoder);
    let seed = cfg.seed.wrapping_add(0x5eed);
    match &cfg.ddqn.weights {
        Some(path) => {
            let net = QNetwork::load(path)?;
            world.set_agent(DdqnAgent::with_network(cfg.ddqn_config(), net, seed)?, Mode::Evaluation);
        }
        None => {
            let agent = DdqnAgent::new(cfg.ddqn_config(), cfg.n_intervals as u64, seed)?;
            world.set_agent(agent, Mode::Training);
        }
    }
    let reports = (0..cfg.n_intervals)
        .map(|i| world.run_interval(i))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(&reports, start.elapsed().as_secs_f64());
    Ok(RunOutput { reports, summary })
}

pub fn summarize(reports: &[IntervalReport], runtime_s: f64) -> RunSummary {
    let rows: Vec<_> = reports.iter().flat_map(|r| &r.rows).collect();
    let mean = |f: &dyn Fn(&crate::sim::GroupRow) -> f64| {
        if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64
        }
    };
    RunSummary {
        intervals: reports.len(),
        groups: rows.len(),
        mean_radio_accuracy: mean(&|r| r.accuracy_radio),
        mean_compute_accuracy: mean(&|r| r.accuracy_compute),
        mean_k: if reports.is_empty() {
            0.0
        } else {
            reports.iter().map(|r| r.k as f64).sum::<f64>() / reports.len() as f64
        },
        held_out: reports.iter().map(|r| r.held_out.len()).sum(),
        runtime_s,
    }
}

pub const INTERVALS_HEADER: &str = "interval_index,group_id,n_members,K,predicted_radio_hz,actual_radio_hz,predicted_compute_cps,actual_compute_cps,accuracy_radio,accuracy_compute";
pub const CDF_HEADER: &str = "interval_index,group_id,category,bin_x,F";

pub fn intervals_csv(reports: &[IntervalReport]) -> String {
    let mut s = String::new();
    s.push_str(INTERVALS_HEADER);
    s.push('\n');
    for r in reports.iter().flat_map(|r| &r.rows) {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.interval_index,
            r.group_id,
            r.n_members,
            r.k,
            r.predicted_radio_hz,
            r.actual_radio_hz,
            r.predicted_compute_cps,
            r.actual_compute_cps,
            r.accuracy_radio,
            r.accuracy_compute
        );
    }
    s
}

pub fn cdf_csv(reports: &[IntervalReport], categories: usize) -> String {
    let mut s = String::new();
    s.push_str(CDF_HEADER);
    s.push('\n');
    for r in reports.iter().flat_map(|r| &r.cdf_rows) {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6}",
            r.interval_index,
            r.group_id,
            category_name(r.category, categories),
            r.bin_x,
            r.f
        );
    }
    s
}

pub fn summary_text(summary: &RunSummary) -> String {
    format!(
        "intervals: {}\ngroups: {}\nmean_radio_accuracy: {:.6}\nmean_compute_accuracy: {:.6}\nmean_k: {:.6}\nheld_out_users: {}\nruntime_s: {:.3}\n",
        summary.intervals,
        summary.groups,
        summary.mean_radio_accuracy,
        summary.mean_compute_accuracy,
        summary.mean_k,
        summary.held_out,
        summary.runtime_s
    )
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes `intervals.csv`, `cdf.csv` and `summary.txt` into `out_dir`.
pub fn write_run(out_dir: &Path, output: &RunOutput, categories: usize) -> Result<(), ExperimentError> {
    ensure_dir(out_dir)?;
    write_file(&out_dir.join("intervals.csv"), &intervals_csv(&output.reports))?;
    write_file(&out_dir.join("cdf.csv"), &cdf_csv(&output.reports, categories))?;
    write_file(&out_dir.join("summary.txt"), &summary_text(&output.summary))
}

/// Trains the autoencoder on status matrices from the warm-up of a freshly
/// generated world.
pub fn train_encoder(cfg: &ScenarioConfig, exec: Execution) -> Result<TrainOutcome, ExperimentError> {
    let world = World::new(cfg.clone(), exec)?;
    Ok(train_autoencoder(world.warmup_dataset(), &cfg.encoder_train_config())?)
}

#[derive(Debug, Clone)]
pub struct DdqnTraining {
    pub network: QNetwork,
    /// Mean clustering reward of each episode.
    pub episode_rewards: Vec<f64>,
}

/// Trains the K-selection policy over `ddqn.episodes` simulated runs, each
/// generated from its own seed.
pub fn train_ddqn(cfg: &ScenarioConfig, exec: Execution) -> Result<DdqnTraining, ExperimentError> {
    let episodes = cfg.ddqn.episodes;
    let planned = (episodes * cfg.n_intervals) as u64;
    let mut agent = DdqnAgent::new(cfg.ddqn_config(), planned, cfg.seed.wrapping_add(0x5eed))?;
    let mut encoder = None;
    let mut episode_rewards = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut episode_cfg = cfg.clone();
        episode_cfg.seed = cfg.seed.wrapping_add(ep as u64);
        let mut world = World::new(episode_cfg, exec)?;
        if encoder.is_none() {
            encoder = Some(prepare_encoder(&world)?);
        }
        world.set_encoder(encoder.as_ref().expect("encoder prepared").encoder.clone());
        world.set_agent(agent, Mode::Training);
        let mut rewards = Vec::new();
        for i in 0..cfg.n_intervals {
            rewards.extend(world.run_interval(i)?.reward);
        }
        agent = world.take_agent().expect("agent installed");
        let mean = if rewards.is_empty() {
            0.0
        } else {
            rewards.iter().sum::<f64>() / rewards.len() as f64
        };
        episode_rewards.push(mean);
    }
    Ok(DdqnTraining {
        network: agent.online,
        episode_rewards,
    })
}

#[derive(Debug, Clone)]
pub struct TraceSummary {
    pub records: usize,
    pub cdf: SwipeCdf,
    /// Censored exponential rate estimate per category (1/s).
    pub rates: Vec<f64>,
}

pub fn import_trace(path: &Path, categories: usize, bins: usize) -> Result<TraceSummary, ExperimentError> {
    let records = read_trace(path, categories)?;
    let cdf = update_swipe_cdf(&records, &SwipeCdf::new(categories, bins), 0.0)?;
    Ok(TraceSummary {
        records: records.len(),
        rates: fit_swipe_rates(&records, categories),
        cdf,
    })
}

/// Writes `trace_cdf.csv` (category, bin_x, F) and `trace_rates.txt`.
pub fn write_trace_summary(out_dir: &Path, summary: &TraceSummary) -> Result<(), ExperimentError> {
    ensure_dir(out_dir)?;
    let categories = summary.cdf.categories.len();
    let mut cdf = String::from("category,bin_x,F\n");
    let grid = summary.cdf.grid();
    for (c, cat) in summary.cdf.categories.iter().enumerate() {
        for (x, f) in grid.iter().zip(&cat.values) {
            let _ = writeln!(cdf, "{},{:.6},{:.6}", category_name(c, categories), x, f);
        }
    }
    write_file(&out_dir.join("trace_cdf.csv"), &cdf)?;
    let mut rates = format!("records: {}\n", summary.records);
    for (c, r) in summary.rates.iter().enumerate() {
        let _ = writeln!(rates, "rate_{}: {:.6}", category_name(c, categories), r);
    }
    write_file(&out_dir.join("trace_rates.txt"), &rates)
}
