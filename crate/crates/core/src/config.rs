//! Scenario configuration: flat `key=value` text, one entry per line, `#`
//! comments, dotted keys for sections (`ddqn.gamma=0.9`). Every key has a
//! default; unknown keys are rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::encoder::TrainConfig;
use crate::grouping::DdqnConfig;
use crate::predictor::{BitrateLadder, PredictorParams};
use crate::udt::{CollectionSchedule, NormalizationBounds};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for {key}: {message}")]
    Validation { key: String, message: String },
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSection {
    pub filters: usize,
    pub kernel: usize,
    pub dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdqnSection {
    pub k_min: usize,
    pub k_max: usize,
    pub hidden: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub lr: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_frac: f64,
    pub replay: usize,
    pub batch: usize,
    pub sync: u64,
    pub episodes: usize,
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractionSection {
    pub bins: usize,
    pub decay: f64,
    pub alpha: f64,
    pub playlist_len: usize,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorSection {
    pub ladder_bps: Vec<f64>,
    pub kappa: f64,
    pub segment_s: f64,
    pub budget_hz: f64,
    pub snr_history: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSection {
    pub area_m: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub bs_x: Vec<f64>,
    pub bs_y: Vec<f64>,
    pub tx_dbm: f64,
    pub noise_dbm: f64,
    pub bs_bandwidth_hz: f64,
    pub pl0_db: f64,
    pub d0_m: f64,
    pub pathloss_exp: f64,
    pub shadowing_db: f64,
    /// True swipe rate per category (1/s); zero means never swipe.
    pub swipe_rates: Vec<f64>,
    pub preference_strength: f64,
    pub catalog_size: usize,
    pub duration_min_s: f64,
    pub duration_max_s: f64,
    pub popularity_drift: f64,
    pub warmup_intervals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_categories: usize,
    pub n_intervals: usize,
    pub interval_s: f64,
    pub trace_path: Option<PathBuf>,
    pub schedule: CollectionSchedule,
    pub udt_capacity: usize,
    pub snr_bounds_db: (f64, f64),
    pub window_points: usize,
    pub window_horizon_s: f64,
    pub encoder: EncoderSection,
    pub ddqn: DdqnSection,
    pub kmeans_tol: f64,
    pub kmeans_max_iter: usize,
    pub abstraction: AbstractionSection,
    pub predictor: PredictorSection,
    pub sim: SimSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 42,
            n_users: 20,
            n_categories: 4,
            n_intervals: 50,
            interval_s: 300.0,
            trace_path: None,
            schedule: CollectionSchedule::default(),
            udt_capacity: crate::udt::DEFAULT_CAPACITY,
            snr_bounds_db: (10.0, 80.0),
            window_points: 16,
            window_horizon_s: 300.0,
            encoder: EncoderSection {
                filters: 8,
                kernel: 3,
                dim: 8,
                lr: 0.05,
                epochs: 100,
                batch: 8,
                weights: None,
            },
            ddqn: DdqnSection {
                k_min: 1,
                k_max: 8,
                hidden: 32,
                gamma: 0.9,
                lambda: 0.1,
                lr: 0.01,
                epsilon_start: 1.0,
                epsilon_end: 0.05,
                epsilon_decay_frac: 0.8,
                replay: 4096,
                batch: 32,
                sync: 64,
                episodes: 10,
                weights: None,
            },
            kmeans_tol: 1e-9,
            kmeans_max_iter: 100,
            abstraction: AbstractionSection {
                bins: crate::abstraction::DEFAULT_BINS,
                decay: 0.7,
                alpha: 0.5,
                playlist_len: 60,
                beta: 0.1,
            },
            predictor: PredictorSection {
                ladder_bps: vec![25e6, 50e6, 75e6, 100e6, 150e6],
                kappa: 50.0,
                segment_s: 2.0,
                budget_hz: 10e6,
                snr_history: 8,
            },
            sim: SimSection {
                area_m: 2000.0,
                v_min: 0.5,
                v_max: 2.0,
                bs_x: vec![500.0, 1500.0, 500.0, 1500.0],
                bs_y: vec![500.0, 500.0, 1500.0, 1500.0],
                tx_dbm: 30.0,
                noise_dbm: -90.0,
                bs_bandwidth_hz: 100e6,
                pl0_db: 40.0,
                d0_m: 10.0,
                pathloss_exp: 3.0,
                shadowing_db: 4.0,
                swipe_rates: vec![0.02, 0.04, 0.06, 0.1],
                preference_strength: 0.2,
                catalog_size: 300,
                duration_min_s: 15.0,
                duration_max_s: 60.0,
                popularity_drift: 0.1,
                warmup_intervals: 1,
            },
        }
    }
}

fn parse_f64(v: &str) -> Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("expected a real number, found {v:?}"))
}

fn parse_usize(v: &str) -> Result<usize, String> {
    v.parse::<usize>().map_err(|_| format!("expected a non-negative integer, found {v:?}"))
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_f64(s.trim())).collect()
}

fn parse_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl ScenarioConfig {
    /// Applies one `key=value` assignment. `Err(None)` marks an unknown key.
    fn set(&mut self, key: &str, v: &str) -> Result<(), Option<String>> {
        let f = |v: &str| parse_f64(v).map_err(Some);
        let u = |v: &str| parse_usize(v).map_err(Some);
        let l = |v: &str| parse_list(v).map_err(Some);
        match key {
            "seed" => self.seed = v.parse().map_err(|_| Some(format!("bad seed {v:?}")))?,
            "n_users" => self.n_users = u(v)?,
            "n_categories" => self.n_categories = u(v)?,
            "n_intervals" => self.n_intervals = u(v)?,
            "interval_s" => self.interval_s = f(v)?,
            "trace_path" => self.trace_path = parse_path(v),
            "telemetry.snr_period_s" => self.schedule.channel_s = f(v)?,
            "telemetry.location_period_s" => self.schedule.location_s = f(v)?,
            "telemetry.behavior_period_s" => self.schedule.behavior_s = f(v)?,
            "udt.capacity" => self.udt_capacity = u(v)?,
            "udt.snr_min_db" => self.snr_bounds_db.0 = f(v)?,
            "udt.snr_max_db" => self.snr_bounds_db.1 = f(v)?,
            "window.points" => self.window_points = u(v)?,
            "window.horizon_s" => self.window_horizon_s = f(v)?,
            "encoder.filters" => self.encoder.filters = u(v)?,
            "encoder.kernel" => self.encoder.kernel = u(v)?,
            "encoder.dim" => self.encoder.dim = u(v)?,
            "encoder.lr" => self.encoder.lr = f(v)?,
            "encoder.epochs" => self.encoder.epochs = u(v)?,
            "encoder.batch" => self.encoder.batch = u(v)?,
            "encoder.weights" => self.encoder.weights = parse_path(v),
            "ddqn.k_min" => self.ddqn.k_min = u(v)?,
            "ddqn.k_max" => self.ddqn.k_max = u(v)?,
            "ddqn.hidden" => self.ddqn.hidden = u(v)?,
            "ddqn.gamma" => self.ddqn.gamma = f(v)?,
            "ddqn.lambda" => self.ddqn.lambda = f(v)?,
            "ddqn.lr" => self.ddqn.lr = f(v)?,
            "ddqn.epsilon_start" => self.ddqn.epsilon_start = f(v)?,
            "ddqn.epsilon_end" => self.ddqn.epsilon_end = f(v)?,
            "ddqn.epsilon_decay_frac" => self.ddqn.epsilon_decay_frac = f(v)?,
            "ddqn.replay" => self.ddqn.replay = u(v)?,
            "ddqn.batch" => self.ddqn.batch = u(v)?,
            "ddqn.sync" => self.ddqn.sync = u(v)? as u64,
            "ddqn.episodes" => self.ddqn.episodes = u(v)?,
            "ddqn.weights" => self.ddqn.weights = parse_path(v),
            "kmeans.tol" => self.kmeans_tol = f(v)?,
            "kmeans.max_iter" => self.kmeans_max_iter = u(v)?,
            "abstraction.bins" => self.abstraction.bins = u(v)?,
            "abstraction.decay" => self.abstraction.decay = f(v)?,
            "abstraction.alpha" => self.abstraction.alpha = f(v)?,
            "abstraction.playlist_len" => self.abstraction.playlist_len = u(v)?,
            "abstraction.beta" => self.abstraction.beta = f(v)?,
            "predictor.ladder_bps" => self.predictor.ladder_bps = l(v)?,
            "predictor.kappa" => self.predictor.kappa = f(v)?,
            "predictor.segment_s" => self.predictor.segment_s = f(v)?,
            "predictor.budget_hz" => self.predictor.budget_hz = f(v)?,
            "predictor.snr_history" => self.predictor.snr_history = u(v)?,
            "sim.area_m" => self.sim.area_m = f(v)?,
            "sim.v_min" => self.sim.v_min = f(v)?,
            "sim.v_max" => self.sim.v_max = f(v)?,
            "sim.bs_x" => self.sim.bs_x = l(v)?,
            "sim.bs_y" => self.sim.bs_y = l(v)?,
            "sim.tx_dbm" => self.sim.tx_dbm = f(v)?,
            "sim.noise_dbm" => self.sim.noise_dbm = f(v)?,
            "sim.bs_bandwidth_hz" => self.sim.bs_bandwidth_hz = f(v)?,
            "sim.pl0_db" => self.sim.pl0_db = f(v)?,
            "sim.d0_m" => self.sim.d0_m = f(v)?,
            "sim.pathloss_exp" => self.sim.pathloss_exp = f(v)?,
            "sim.shadowing_db" => self.sim.shadowing_db = f(v)?,
            "sim.swipe_rates" => self.sim.swipe_rates = l(v)?,
            "sim.preference_strength" => self.sim.preference_strength = f(v)?,
            "sim.catalog_size" => self.sim.catalog_size = u(v)?,
            "sim.duration_min_s" => self.sim.duration_min_s = f(v)?,
            "sim.duration_max_s" => self.sim.duration_max_s = f(v)?,
            "sim.popularity_drift" => self.sim.popularity_drift = f(v)?,
            "sim.warmup_intervals" => self.sim.warmup_intervals = u(v)?,
            _ => return Err(None),
        }
        Ok(())
    }

    /// Serializes every key in load order; `parse(to_text())` reproduces the
    /// configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("seed", self.seed.to_string());
        put("n_users", self.n_users.to_string());
        put("n_categories", self.n_categories.to_string());
        put("n_intervals", self.n_intervals.to_string());
        put("interval_s", self.interval_s.to_string());
        put("trace_path", fmt_path(&self.trace_path));
        put("telemetry.snr_period_s", self.schedule.channel_s.to_string());
        put("telemetry.location_period_s", self.schedule.location_s.to_string());
        put("telemetry.behavior_period_s", self.schedule.behavior_s.to_string());
        put("udt.capacity", self.udt_capacity.to_string());
        put("udt.snr_min_db", self.snr_bounds_db.0.to_string());
        put("udt.snr_max_db", self.snr_bounds_db.1.to_string());
        put("window.points", self.window_points.to_string());
        put("window.horizon_s", self.window_horizon_s.to_string());
        let e = &self.encoder;
        put("encoder.filters", e.filters.to_string());
        put("encoder.kernel", e.kernel.to_string());
        put("encoder.dim", e.dim.to_string());
        put("encoder.lr", e.lr.to_string());
        put("encoder.epochs", e.epochs.to_string());
        put("encoder.batch", e.batch.to_string());
        put("encoder.weights", fmt_path(&e.weights));
        let d = &self.ddqn;
        put("ddqn.k_min", d.k_min.to_string());
        put("ddqn.k_max", d.k_max.to_string());
        put("ddqn.hidden", d.hidden.to_string());
        put("ddqn.gamma", d.gamma.to_string());
        put("ddqn.lambda", d.lambda.to_string());
        put("ddqn.lr", d.lr.to_string());
        put("ddqn.epsilon_start", d.epsilon_start.to_string());
        put("ddqn.epsilon_end", d.epsilon_end.to_string());
        put("ddqn.epsilon_decay_frac", d.epsilon_decay_frac.to_string());
        put("ddqn.replay", d.replay.to_string());
        put("ddqn.batch", d.batch.to_string());
        put("ddqn.sync", d.sync.to_string());
        put("ddqn.episodes", d.episodes.to_string());
        put("ddqn.weights", fmt_path(&d.weights));
        put("kmeans.tol", self.kmeans_tol.to_string());
        put("kmeans.max_iter", self.kmeans_max_iter.to_string());
        let a = &self.abstraction;
        put("abstraction.bins", a.bins.to_string());
        put("abstraction.decay", a.decay.to_string());
        put("abstraction.alpha", a.alpha.to_string());
        put("abstraction.playlist_len", a.playlist_len.to_string());
        put("abstraction.beta", a.beta.to_string());
        let p = &self.predictor;
        put("predictor.ladder_bps", fmt_list(&p.ladder_bps));
        put("predictor.kappa", p.kappa.to_string());
        put("predictor.segment_s", p.segment_s.to_string());
        put("predictor.budget_hz", p.budget_hz.to_string());
        put("predictor.snr_history", p.snr_history.to_string());
        let m = &self.sim;
        put("sim.area_m", m.area_m.to_string());
        put("sim.v_min", m.v_min.to_string());
        put("sim.v_max", m.v_max.to_string());
        put("sim.bs_x", fmt_list(&m.bs_x));
        put("sim.bs_y", fmt_list(&m.bs_y));
        put("sim.tx_dbm", m.tx_dbm.to_string());
        put("sim.noise_dbm", m.noise_dbm.to_string());
        put("sim.bs_bandwidth_hz", m.bs_bandwidth_hz.to_string());
        put("sim.pl0_db", m.pl0_db.to_string());
        put("sim.d0_m", m.d0_m.to_string());
        put("sim.pathloss_exp", m.pathloss_exp.to_string());
        put("sim.shadowing_db", m.shadowing_db.to_string());
        put("sim.swipe_rates", fmt_list(&m.swipe_rates));
        put("sim.preference_strength", m.preference_strength.to_string());
        put("sim.catalog_size", m.catalog_size.to_string());
        put("sim.duration_min_s", m.duration_min_s.to_string());
        put("sim.duration_max_s", m.duration_max_s.to_string());
        put("sim.popularity_drift", m.popularity_drift.to_string());
        put("sim.warmup_intervals", m.warmup_intervals.to_string());
        s
    }

    /// Parses config text on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut category_count_set = false;
        let mut rates_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: i + 1,
                message: format!("expected key=value, found {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value).map_err(|e| ConfigError::Parse {
                line: i + 1,
                message: match e {
                    None => format!("unknown key {key:?}"),
                    Some(m) => format!("{key}: {m}"),
                },
            })?;
            category_count_set |= key == "n_categories";
            rates_set |= key == "sim.swipe_rates";
        }
        // Scale the default rate table to a non-default category count.
        if category_count_set && !rates_set && cfg.sim.swipe_rates.len() != cfg.n_categories {
            let c = cfg.n_categories.max(1);
            cfg.sim.swipe_rates = (0..c)
                .map(|i| 0.02 + 0.08 * i as f64 / (c - 1).max(1) as f64)
                .collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(ok: bool, key: &str, message: &str) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Validation {
                    key: key.to_string(),
                    message: message.to_string(),
                })
            }
        }
        let pos = |x: f64| x > 0.0 && x.is_finite();
        check(self.n_categories >= 1, "n_categories", "must be at least 1")?;
        check(self.n_intervals >= 1, "n_intervals", "must be at least 1")?;
        check(pos(self.interval_s), "interval_s", "must be positive")?;
        let s = &self.schedule;
        check(pos(s.channel_s), "telemetry.snr_period_s", "must be positive")?;
        check(
            s.location_s.is_finite() && s.location_s >= s.channel_s,
            "telemetry.location_period_s",
            "must be at least the SNR period",
        )?;
        check(
            s.behavior_s.is_finite() && s.behavior_s >= s.location_s,
            "telemetry.behavior_period_s",
            "must be at least the location period",
        )?;
        check(self.udt_capacity >= 1, "udt.capacity", "must be at least 1")?;
        check(self.snr_bounds_db.0.is_finite(), "udt.snr_min_db", "must be finite")?;
        check(
            self.snr_bounds_db.1.is_finite() && self.snr_bounds_db.1 > self.snr_bounds_db.0,
            "udt.snr_max_db",
            "must exceed udt.snr_min_db",
        )?;
        check(self.window_points >= 2, "window.points", "must be at least 2")?;
        check(pos(self.window_horizon_s), "window.horizon_s", "must be positive")?;

        let e = &self.encoder;
        check(e.filters >= 1, "encoder.filters", "must be at least 1")?;
        check(e.kernel % 2 == 1, "encoder.kernel", "must be odd")?;
        check(e.dim >= 1, "encoder.dim", "must be at least 1")?;
        check(pos(e.lr), "encoder.lr", "must be positive")?;
        check(e.batch >= 1, "encoder.batch", "must be at least 1")?;

        let d = &self.ddqn;
        check(d.k_min >= 1, "ddqn.k_min", "must be at least 1")?;
        check(d.k_max >= d.k_min, "ddqn.k_max", "must be at least ddqn.k_min")?;
        check(d.hidden >= 1, "ddqn.hidden", "must be at least 1")?;
        check((0.0..1.0).contains(&d.gamma), "ddqn.gamma", "must lie in [0, 1)")?;
        check(d.lambda >= 0.0 && d.lambda.is_finite(), "ddqn.lambda", "must be non-negative")?;
        check(pos(d.lr), "ddqn.lr", "must be positive")?;
        check((0.0..=1.0).contains(&d.epsilon_start), "ddqn.epsilon_start", "must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&d.epsilon_end), "ddqn.epsilon_end", "must lie in [0, 1]")?;
        check(
            d.epsilon_decay_frac > 0.0 && d.epsilon_decay_frac <= 1.0,
            "ddqn.epsilon_decay_frac",
            "must lie in (0, 1]",
        )?;
        check(d.batch >= 1, "ddqn.batch", "must be at least 1")?;
        check(d.replay >= d.batch, "ddqn.replay", "must be at least ddqn.batch")?;
        check(d.sync >= 1, "ddqn.sync", "must be at least 1")?;

        check(self.kmeans_tol >= 0.0, "kmeans.tol", "must be non-negative")?;
        check(self.kmeans_max_iter >= 1, "kmeans.max_iter", "must be at least 1")?;

        let a = &self.abstraction;
        check(a.bins >= 1, "abstraction.bins", "must be at least 1")?;
        check((0.0..1.0).contains(&a.decay), "abstraction.decay", "must lie in [0, 1)")?;
        check((0.0..=1.0).contains(&a.alpha), "abstraction.alpha", "must lie in [0, 1]")?;
        check(a.playlist_len >= 1, "abstraction.playlist_len", "must be at least 1")?;
        check(a.beta > 0.0 && a.beta < 1.0, "abstraction.beta", "must lie in (0, 1)")?;

        let p = &self.predictor;
        check(
            BitrateLadder::from_bitrates(&p.ladder_bps).is_ok(),
            "predictor.ladder_bps",
            "must be a non-empty, strictly increasing list of positive bitrates",
        )?;
        check(pos(p.kappa), "predictor.kappa", "must be positive")?;
        check(pos(p.segment_s), "predictor.segment_s", "must be positive")?;
        check(pos(p.budget_hz), "predictor.budget_hz", "must be positive")?;
        check(p.snr_history >= 1, "predictor.snr_history", "must be at least 1")?;

        let m = &self.sim;
        check(pos(m.area_m), "sim.area_m", "must be positive")?;
        check(m.v_min >= 0.0 && m.v_min.is_finite(), "sim.v_min", "must be non-negative")?;
        check(m.v_max >= m.v_min && m.v_max.is_finite(), "sim.v_max", "must be at least sim.v_min")?;
        check(!m.bs_x.is_empty(), "sim.bs_x", "needs at least one base station")?;
        check(m.bs_y.len() == m.bs_x.len(), "sim.bs_y", "must have as many entries as sim.bs_x")?;
        let inside = |v: &f64| (0.0..=m.area_m).contains(v);
        check(m.bs_x.iter().all(inside), "sim.bs_x", "base stations must lie in the area")?;
        check(m.bs_y.iter().all(inside), "sim.bs_y", "base stations must lie in the area")?;
        check(m.tx_dbm.is_finite(), "sim.tx_dbm", "must be finite")?;
        check(m.noise_dbm.is_finite(), "sim.noise_dbm", "must be finite")?;
        check(pos(m.bs_bandwidth_hz), "sim.bs_bandwidth_hz", "must be positive")?;
        check(m.pl0_db.is_finite(), "sim.pl0_db", "must be finite")?;
        check(pos(m.d0_m), "sim.d0_m", "must be positive")?;
        check(pos(m.pathloss_exp), "sim.pathloss_exp", "must be positive")?;
        check(
            m.shadowing_db >= 0.0 && m.shadowing_db.is_finite(),
            "sim.shadowing_db",
            "must be non-negative",
        )?;
        check(
            m.swipe_rates.len() == self.n_categories,
            "sim.swipe_rates",
            "needs one rate per category",
        )?;
        check(
            m.swipe_rates.iter().all(|r| *r >= 0.0 && r.is_finite()),
            "sim.swipe_rates",
            "rates must be non-negative",
        )?;
        check(
            m.preference_strength >= 0.0 && m.preference_strength.is_finite(),
            "sim.preference_strength",
            "must be non-negative",
        )?;
        check(m.catalog_size >= 1, "sim.catalog_size", "must be at least 1")?;
        check(pos(m.duration_min_s), "sim.duration_min_s", "must be positive")?;
        check(
            m.duration_max_s.is_finite() && m.duration_max_s >= m.duration_min_s,
            "sim.duration_max_s",
            "must be at least sim.duration_min_s",
        )?;
        check(
            m.popularity_drift >= 0.0 && m.popularity_drift.is_finite(),
            "sim.popularity_drift",
            "must be non-negative",
        )?;
        check(m.warmup_intervals >= 1, "sim.warmup_intervals", "must be at least 1")?;
        Ok(())
    }

    pub fn bounds(&self) -> NormalizationBounds {
        NormalizationBounds {
            snr_db: self.snr_bounds_db,
            x_m: (0.0, self.sim.area_m),
            y_m: (0.0, self.sim.area_m),
        }
    }

    pub fn ladder(&self) -> BitrateLadder {
        BitrateLadder::from_bitrates(&self.predictor.ladder_bps).expect("validated ladder")
    }

    pub fn predictor_params(&self) -> PredictorParams {
        PredictorParams {
            kappa: self.predictor.kappa,
            segment_s: self.predictor.segment_s,
            budget_hz: self.predictor.budget_hz,
            interval_s: self.interval_s,
        }
    }

    pub fn encoder_train_config(&self) -> TrainConfig {
        TrainConfig {
            filters: self.encoder.filters,
            kernel: self.encoder.kernel,
            dim: self.encoder.dim,
            lr: self.encoder.lr,
            epochs: self.encoder.epochs,
            batch: self.encoder.batch,
            seed: self.seed,
        }
    }

    pub fn ddqn_config(&self) -> DdqnConfig {
        let d = &self.ddqn;
        DdqnConfig {
            k_min: d.k_min,
            k_max: d.k_max,
            hidden: d.hidden,
            gamma: d.gamma,
            lambda: d.lambda,
            lr: d.lr,
            epsilon_start: d.epsilon_start,
            epsilon_end: d.epsilon_end,
            epsilon_decay_frac: d.epsilon_decay_frac,
            replay: d.replay,
            batch: d.batch,
            sync: d.sync,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    ScenarioConfig::parse(&fs::read_to_string(path)?)
}
