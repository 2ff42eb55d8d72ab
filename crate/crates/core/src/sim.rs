//! Ground truth generator and the interval loop that drives the pipeline.
//!
//! Users move by random waypoint, attach to the nearest base station at the
//! start of every interval, and swipe videos after exponential times whose
//! rate depends on the video category. Each user owns two random streams
//! split from the master seed, one for motion and channel and one for
//! behavior, so per-user work can run in parallel without changing results.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use thiserror::Error;

use crate::abstraction::{
    group_preference, recommend, update_preference, update_swipe_cdf, AbstractionError, Playlist,
    PreferenceVector, SwipeCdf, Video, WatchRecord,
};
use crate::config::ScenarioConfig;
use crate::encoder::{encode_all, EncoderError, EncoderWeights, Matrix};
use crate::exec::Execution;
use crate::grouping::{
    cluster_reward, cluster_state, construct_groups, pairwise_stats, total_sum_of_squares, DdqnAgent,
    GroupingError, State, Transition,
};
use crate::predictor::{
    accuracy, catalog_video, group_efficiency, predict_group, BitrateLadder, GroupPrediction,
    PredictorError,
};
use crate::udt::{AttributeKind, Sample, UdtError, UdtStore, UserDigitalTwin};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Udt(#[from] UdtError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Grouping(#[from] GroupingError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error("world is not ready: missing {0}")]
    NotReady(&'static str),
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
    #[error("trace I/O failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Point = (f64, f64);

/// Square area `[0, area_m]²` and the waypoint speed range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityModel {
    pub area_m: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl MobilityModel {
    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.area_m).contains(&p.0) && (0.0..=self.area_m).contains(&p.1)
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        (
            rng.random_range(0.0..=self.area_m),
            rng.random_range(0.0..=self.area_m),
        )
    }

    pub fn random_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.v_min..=self.v_max)
    }

    fn clamp(&self, p: Point) -> Point {
        (p.0.clamp(0.0, self.area_m), p.1.clamp(0.0, self.area_m))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserAgent {
    pub user_id: u32,
    pub position: Point,
    pub waypoint: Point,
    pub speed: f64,
    /// Per-category swipe rate in 1/s; zero means the user never swipes.
    pub swipe_rates: Vec<f64>,
    pub preference: Vec<f64>,
}

/// Advances an agent by `dt` seconds of random-waypoint motion.
pub fn step_mobility<R: Rng + ?Sized>(
    agent: &mut UserAgent,
    dt: f64,
    model: &MobilityModel,
    rng: &mut R,
) {
    let mut remaining = dt;
    // Each pass either finishes the step or reaches a waypoint.
    for _ in 0..64 {
        if remaining <= 0.0 {
            return;
        }
        let dx = agent.waypoint.0 - agent.position.0;
        let dy = agent.waypoint.1 - agent.position.1;
        let dist = dx.hypot(dy);
        let reach = agent.speed * remaining;
        if reach < dist {
            let f = reach / dist;
            agent.position = model.clamp((agent.position.0 + dx * f, agent.position.1 + dy * f));
            return;
        }
        agent.position = agent.waypoint;
        remaining = if agent.speed > 0.0 {
            remaining - dist / agent.speed
        } else {
            0.0
        };
        agent.waypoint = model.random_point(rng);
        agent.speed = model.random_speed(rng);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub bs_id: usize,
    pub position: Point,
    pub tx_dbm: f64,
    pub noise_dbm: f64,
    pub bandwidth_hz: f64,
}

/// Log-distance path loss with log-normal shadowing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub pl0_db: f64,
    pub d0_m: f64,
    pub exponent: f64,
    pub shadowing_db: f64,
}

impl ChannelModel {
    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        self.pl0_db + 10.0 * self.exponent * (distance_m.max(self.d0_m) / self.d0_m).log10()
    }

    pub fn draw_shadowing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        z * self.shadowing_db
    }
}

fn distance(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

pub fn snr_db(position: Point, bs: &BaseStation, channel: &ChannelModel, shadow_db: f64) -> f64 {
    let received = bs.tx_dbm - channel.path_loss_db(distance(position, bs.position)) + shadow_db;
    received - bs.noise_dbm
}

/// Index of the closest station; ties go to the lower index.
pub fn nearest_bs(position: Point, stations: &[BaseStation]) -> usize {
    let mut best = 0;
    for (i, bs) in stations.iter().enumerate().skip(1) {
        if distance(position, bs.position) < distance(position, stations[best].position) {
            best = i;
        }
    }
    best
}

/// Exponential swipe time; a zero rate never swipes.
pub fn sample_swipe_time<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    Exp::new(rate).expect("positive rate").sample(rng)
}

pub fn sample_watch<R: Rng + ?Sized>(agent: &UserAgent, video: &Video, rng: &mut R) -> WatchRecord {
    let t = sample_swipe_time(agent.swipe_rates[video.category], rng);
    WatchRecord::new(agent.user_id, video.id, video.category, video.duration_s, t.min(video.duration_s))
}

/// Parses a watch trace with header `user_id,video_id,category,duration_s,watched_s`.
pub fn parse_trace(text: &str, categories: usize) -> Result<Vec<WatchRecord>, SimError> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != "user_id,video_id,category,duration_s,watched_s" {
        return Err(SimError::Trace {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| SimError::Trace { line: i + 1, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let int = |s: &str| s.parse::<u32>().map_err(|_| err(format!("bad integer {s:?}")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
        let user_id = int(fields[0])?;
        let video_id = int(fields[1])?;
        let category = int(fields[2])? as usize;
        let duration = real(fields[3])?;
        let watched = real(fields[4])?;
        let record = WatchRecord::new(user_id, video_id, category, duration, watched);
        record.validate(categories).map_err(|e| err(e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_trace(path: &Path, categories: usize) -> Result<Vec<WatchRecord>, SimError> {
    parse_trace(&fs::read_to_string(path)?, categories)
}

/// Maximum-likelihood exponential rate per category under right censoring:
/// observed swipes divided by total watched seconds.
pub fn fit_swipe_rates(records: &[WatchRecord], categories: usize) -> Vec<f64> {
    (0..categories)
        .map(|c| {
            let (swipes, exposure) = records
                .iter()
                .filter(|r| r.category == c)
                .fold((0usize, 0.0), |(n, t), r| (n + usize::from(!r.completed), t + r.watched_s));
            if exposure > 0.0 {
                swipes as f64 / exposure
            } else {
                0.0
            }
        })
        .collect()
}

/// Empirical watch-fraction pools per category, resampled in place of the
/// exponential generator.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceBehavior {
    fractions: Vec<Vec<f64>>,
}

impl TraceBehavior {
    pub fn from_records(records: &[WatchRecord], categories: usize) -> Self {
        let mut fractions = vec![Vec::new(); categories];
        for r in records {
            fractions[r.category].push(r.fraction().clamp(0.0, 1.0));
        }
        TraceBehavior { fractions }
    }

    pub fn sample<R: Rng + ?Sized>(&self, category: usize, rng: &mut R) -> Option<f64> {
        let pool = self.fractions.get(category)?;
        (!pool.is_empty()).then(|| pool[rng.random_range(0..pool.len())])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayedVideo {
    pub video_id: u32,
    pub category: usize,
    pub duration_s: f64,
    /// Offset from the interval start.
    pub start_s: f64,
    pub play_s: f64,
    pub member_watch_s: Vec<f64>,
    /// Cut off by the end of the interval.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Playback {
    pub interval_s: f64,
    pub videos: Vec<PlayedVideo>,
}

impl Playback {
    pub fn play_s(&self) -> f64 {
        self.videos.iter().map(|v| v.play_s).sum()
    }
}

/// Plays videos in order for one multicast group. A video runs until every
/// member has swiped or it completes; members who swipe early wait for the
/// next video. Once the list is exhausted the group idles.
pub fn play_group<F>(n_members: usize, videos: &[&Video], interval_s: f64, mut watch: F) -> Playback
where
    F: FnMut(usize, &Video) -> f64,
{
    let mut played = Vec::new();
    let mut clock = 0.0;
    for v in videos {
        if clock >= interval_s {
            break;
        }
        let member_watch_s: Vec<f64> = (0..n_members)
            .map(|i| watch(i, v).clamp(0.0, v.duration_s))
            .collect();
        let natural = member_watch_s.iter().copied().fold(0.0, f64::max);
        let truncated = clock + natural > interval_s;
        let play_s = if truncated { interval_s - clock } else { natural };
        played.push(PlayedVideo {
            video_id: v.id,
            category: v.category,
            duration_s: v.duration_s,
            start_s: clock,
            play_s,
            member_watch_s,
            truncated,
        });
        clock += play_s;
    }
    Playback {
        interval_s,
        videos: played,
    }
}

/// Seconds transcoded for one video: every segment the playhead touched
/// plus one segment of lookahead, never more than the video itself.
pub fn transcoded_seconds(play_s: f64, duration_s: f64, segment_s: f64) -> f64 {
    if play_s >= duration_s {
        return duration_s;
    }
    (((play_s / segment_s).ceil() + 1.0) * segment_s).min(duration_s)
}

/// Metered consumption of one group over one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub play_s: f64,
    pub bits: f64,
    pub hz_s: f64,
    pub transcoded_s: f64,
    pub cycles: f64,
    pub radio_hz: f64,
    pub compute_cps: f64,
}

pub fn meter_actual(
    playback: &Playback,
    bitrate_bps: f64,
    transcode: bool,
    eta: f64,
    kappa: f64,
    segment_s: f64,
) -> GroundTruth {
    let play_s = playback.play_s();
    let bits = bitrate_bps * play_s;
    let hz_s = bits / eta;
    assert!(
        (bits - eta * hz_s).abs() <= 1e-12 * bits.abs().max(1.0),
        "bit conservation violated"
    );
    let transcoded_s = if transcode {
        playback
            .videos
            .iter()
            .map(|v| transcoded_seconds(v.play_s, v.duration_s, segment_s))
            .sum()
    } else {
        0.0
    };
    let cycles = kappa * bitrate_bps * transcoded_s;
    GroundTruth {
        play_s,
        bits,
        hz_s,
        transcoded_s,
        cycles,
        radio_hz: hz_s / playback.interval_s,
        compute_cps: cycles / playback.interval_s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Epsilon-greedy K selection with online DDQN updates.
    Training,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRow {
    pub interval_index: usize,
    pub group_id: usize,
    pub n_members: usize,
    pub k: usize,
    pub predicted_radio_hz: f64,
    pub actual_radio_hz: f64,
    pub predicted_compute_cps: f64,
    pub actual_compute_cps: f64,
    pub accuracy_radio: f64,
    pub accuracy_compute: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfRow {
    pub interval_index: usize,
    pub group_id: usize,
    pub category: usize,
    pub bin_x: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReport {
    pub interval_index: usize,
    /// Number of clustered groups; held-out users are served alone on top.
    pub k: usize,
    pub reward: Option<f64>,
    pub held_out: Vec<u32>,
    pub rows: Vec<GroupRow>,
    pub cdf_rows: Vec<CdfRow>,
}

#[derive(Debug, Clone)]
struct UserSim {
    agent: UserAgent,
    motion_rng: ChaCha8Rng,
    behavior_rng: ChaCha8Rng,
    pref: PreferenceVector,
    cdf: SwipeCdf,
    cdf_cursor_t: f64,
    last_pref_t: f64,
}

struct Telemetry {
    snr: Vec<Sample>,
    location: Vec<(f64, Point)>,
    mean_snr: f64,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_watch(user: &mut UserSim, video: &Video, trace: Option<&TraceBehavior>) -> f64 {
    if let Some(f) = trace.and_then(|t| t.sample(video.category, &mut user.behavior_rng)) {
        return f * video.duration_s;
    }
    sample_watch(&user.agent, video, &mut user.behavior_rng).watched_s
}

fn twin_preference(twin: &UserDigitalTwin) -> PreferenceVector {
    let values = (0..twin.categories())
        .map(|c| twin.last(AttributeKind::Preference(c)).map_or(0.0, |s| s.value))
        .collect();
    PreferenceVector::normalized(values)
}

/// Simulated users, their twins, and the learned components.
pub struct World {
    cfg: ScenarioConfig,
    exec: Execution,
    mobility: MobilityModel,
    channel: ChannelModel,
    stations: Vec<BaseStation>,
    ladder: BitrateLadder,
    catalog: Vec<Video>,
    trace: Option<TraceBehavior>,
    store: UdtStore,
    users: Vec<UserSim>,
    population_cdf: SwipeCdf,
    rng: ChaCha8Rng,
    clock: f64,
    encoder: Option<EncoderWeights>,
    agent: Option<DdqnAgent>,
    mode: Mode,
    prev_ratio: f64,
    prev_k: usize,
    pending: Option<(State, usize, f64)>,
    warmup_dataset: Vec<Matrix>,
}

impl World {
    /// Builds the scenario and runs the warm-up intervals, in which every
    /// user watches alone so the twins and swipe statistics fill up before
    /// grouping starts.
    pub fn new(cfg: ScenarioConfig, exec: Execution) -> Result<World, SimError> {
        let c = cfg.n_categories;
        let s = &cfg.sim;
        let mobility = MobilityModel {
            area_m: s.area_m,
            v_min: s.v_min,
            v_max: s.v_max,
        };
        let channel = ChannelModel {
            pl0_db: s.pl0_db,
            d0_m: s.d0_m,
            exponent: s.pathloss_exp,
            shadowing_db: s.shadowing_db,
        };
        let stations: Vec<BaseStation> = s
            .bs_x
            .iter()
            .zip(&s.bs_y)
            .enumerate()
            .map(|(bs_id, (&x, &y))| BaseStation {
                bs_id,
                position: (x, y),
                tx_dbm: s.tx_dbm,
                noise_dbm: s.noise_dbm,
                bandwidth_hz: s.bs_bandwidth_hz,
            })
            .collect();
        let trace = match &cfg.trace_path {
            Some(p) => Some(TraceBehavior::from_records(&read_trace(p, c)?, c)),
            None => None,
        };

        let mut rng = stream_rng(cfg.seed, 0);
        let catalog: Vec<Video> = (0..s.catalog_size)
            .map(|id| Video {
                id: id as u32,
                category: rng.random_range(0..c),
                duration_s: rng.random_range(s.duration_min_s..=s.duration_max_s),
                popularity: rng.random::<f64>(),
            })
            .collect();

        let mut store = UdtStore::new(c);
        let mut users = Vec::with_capacity(cfg.n_users);
        for u in 0..cfg.n_users {
            let user_id = u as u32;
            let mut motion_rng = stream_rng(cfg.seed, 2 * u as u64 + 1);
            let mut behavior_rng = stream_rng(cfg.seed, 2 * u as u64 + 2);
            let position = mobility.random_point(&mut motion_rng);
            let waypoint = mobility.random_point(&mut motion_rng);
            let speed = mobility.random_speed(&mut motion_rng);
            // Flat Dirichlet draw.
            let raw: Vec<f64> = (0..c)
                .map(|_| Exp::new(1.0).expect("unit rate").sample(&mut behavior_rng))
                .collect();
            let total: f64 = raw.iter().sum();
            let preference: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let swipe_rates = s
                .swipe_rates
                .iter()
                .zip(&preference)
                .map(|(&rate, &p)| rate * (-s.preference_strength * (p - 1.0 / c as f64) * c as f64).exp())
                .collect();
            let agent = UserAgent {
                user_id,
                position,
                waypoint,
                speed,
                swipe_rates,
                preference,
            };

            let mut twin = UserDigitalTwin::new(user_id, c, cfg.schedule, cfg.udt_capacity);
            let bs = &stations[nearest_bs(position, &stations)];
            twin.ingest_sample(AttributeKind::ChannelSnr, Sample::new(0.0, snr_db(position, bs, &channel, 0.0)))?;
            twin.ingest_sample(AttributeKind::LocationX, Sample::new(0.0, position.0))?;
            twin.ingest_sample(AttributeKind::LocationY, Sample::new(0.0, position.1))?;
            for k in 0..c {
                twin.ingest_sample(AttributeKind::WatchFraction(k), Sample::new(0.0, 0.0))?;
            }
            let pref = PreferenceVector::uniform(c);
            twin.ingest_preference(0.0, &pref.0)?;
            store.insert(twin);

            users.push(UserSim {
                agent,
                motion_rng,
                behavior_rng,
                pref,
                cdf: SwipeCdf::new(c, cfg.abstraction.bins),
                cdf_cursor_t: 0.0,
                last_pref_t: 0.0,
            });
        }

        let mut world = World {
            population_cdf: SwipeCdf::new(c, cfg.abstraction.bins),
            ladder: cfg.ladder(),
            cfg,
            exec,
            mobility,
            channel,
            stations,
            catalog,
            trace,
            store,
            users,
            rng,
            clock: 0.0,
            encoder: None,
            agent: None,
            mode: Mode::Evaluation,
            prev_ratio: 1.0,
            prev_k: 1,
            pending: None,
            warmup_dataset: Vec::new(),
        };
        for _ in 0..world.cfg.sim.warmup_intervals {
            let groups: Vec<Vec<usize>> = (0..world.users.len()).map(|u| vec![u]).collect();
            let playlists = groups
                .iter()
                .map(|g| {
                    let pref = twin_preference(&world.store.twins()[g[0]]);
                    recommend(&pref, &world.catalog, world.cfg.abstraction.alpha, world.cfg.abstraction.playlist_len)
                })
                .collect::<Result<Vec<_>, _>>()?;
            world.simulate_interval(&groups, &playlists)?;
            let matrices = world.status_matrices(&(0..world.users.len()).collect::<Vec<_>>())?;
            world.warmup_dataset.extend(matrices.into_iter().map(|(_, m)| m));
        }
        Ok(world)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn store(&self) -> &UdtStore {
        &self.store
    }

    pub fn catalog(&self) -> &[Video] {
        &self.catalog
    }

    pub fn agents(&self) -> impl Iterator<Item = &UserAgent> {
        self.users.iter().map(|u| &u.agent)
    }

    pub fn stations(&self) -> &[BaseStation] {
        &self.stations
    }

    /// Swipe distribution over all users' watch records.
    pub fn population_cdf(&self) -> &SwipeCdf {
        &self.population_cdf
    }

    /// Status matrices collected at the end of each warm-up interval.
    pub fn warmup_dataset(&self) -> &[Matrix] {
        &self.warmup_dataset
    }

    pub fn set_encoder(&mut self, weights: EncoderWeights) {
        self.encoder = Some(weights);
    }

    pub fn set_agent(&mut self, agent: DdqnAgent, mode: Mode) {
        self.agent = Some(agent);
        self.mode = mode;
        self.pending = None;
    }

    pub fn agent(&self) -> Option<&DdqnAgent> {
        self.agent.as_ref()
    }

    pub fn take_agent(&mut self) -> Option<DdqnAgent> {
        self.agent.take()
    }

    fn status_matrices(&self, users: &[usize]) -> Result<Vec<(u32, Matrix)>, SimError> {
        let cfg = &self.cfg;
        let bounds = cfg.bounds();
        let twins = self.store.twins();
        let t_end = self.clock;
        self.exec
            .map(users, |&u| {
                let twin = &twins[u];
                twin.status_matrix(t_end, cfg.window_horizon_s, cfg.window_points, &bounds)
                    .map(|m| (twin.user_id(), m))
            })
            .into_iter()
            .map(|r| r.map_err(SimError::from))
            .collect()
    }

    /// One reservation interval: group users on their current twin state,
    /// predict each group's demand for the coming interval, simulate it, and
    /// score the prediction.
    pub fn run_interval(&mut self, interval_index: usize) -> Result<IntervalReport, SimError> {
        let cfg = self.cfg.clone();
        let exec = self.exec;
        let t_now = self.clock;
        let mut report = IntervalReport {
            interval_index,
            k: 0,
            reward: None,
            held_out: Vec::new(),
            rows: Vec::new(),
            cdf_rows: Vec::new(),
        };
        if self.users.is_empty() {
            self.clock += cfg.interval_s;
            return Ok(report);
        }

        // Telemetry for [t_now - I, t_now] was ingested by the previous call.
        let (eligible, held_out): (Vec<usize>, Vec<usize>) =
            (0..self.users.len()).partition(|&u| self.store.twins()[u].has_empty_track().is_none());
        report.held_out = held_out.iter().map(|&u| self.users[u].agent.user_id).collect();

        let mut groups: Vec<Vec<usize>> = Vec::new();
        if eligible.len() >= 2 {
            let encoder = self.encoder.as_ref().ok_or(SimError::NotReady("encoder weights"))?;
            let inputs = self.status_matrices(&eligible)?;
            let features: Vec<Vec<f64>> = encode_all(&inputs, encoder, exec)?
                .into_iter()
                .map(|f| f.values)
                .collect();
            let stats = pairwise_stats(&features, exec)?;
            let k_max = cfg.ddqn.k_max;
            let state = cluster_state(features.len(), cfg.n_users, stats, self.prev_ratio, self.prev_k, k_max);
            let training = self.mode == Mode::Training;
            let agent = self.agent.as_mut().ok_or(SimError::NotReady("DDQN agent"))?;
            let chosen = agent.act(&state, training);
            let k = chosen.min(features.len());
            let assignment = construct_groups(&features, k, &mut self.rng, cfg.kmeans_tol, cfg.kmeans_max_iter, exec)?;
            let total = total_sum_of_squares(&features);
            let reward = cluster_reward(assignment.wcss, total, k, cfg.ddqn.lambda, k_max);
            if training {
                let action = chosen - cfg.ddqn.k_min;
                if let Some((s, a, r)) = self.pending.take() {
                    agent.observe(Transition {
                        state: s,
                        action: a,
                        reward: r,
                        next_state: state,
                        done: false,
                    });
                }
                if interval_index + 1 >= cfg.n_intervals {
                    agent.observe(Transition {
                        state,
                        action,
                        reward,
                        next_state: state,
                        done: true,
                    });
                } else {
                    self.pending = Some((state, action, reward));
                }
            }
            self.prev_ratio = if total > 0.0 { assignment.wcss / total } else { 0.0 };
            self.prev_k = k;
            report.k = k;
            report.reward = Some(reward);
            for g in 0..k {
                groups.push(assignment.members(g).into_iter().map(|i| eligible[i]).collect());
            }
        } else if let Some(&u) = eligible.first() {
            report.k = 1;
            groups.push(vec![u]);
        }
        groups.extend(held_out.iter().map(|&u| vec![u]));

        // Abstraction: fold the last interval's watch fractions into each
        // user's swipe distribution, then combine per group.
        let mut all_records = Vec::new();
        for (user, twin) in self.users.iter_mut().zip(self.store.twins()) {
            let mut records = Vec::new();
            for c in 0..cfg.n_categories {
                for s in twin.track(AttributeKind::WatchFraction(c))? {
                    if s.t > user.cdf_cursor_t && s.t <= t_now {
                        records.push(WatchRecord::new(user.agent.user_id, 0, c, 1.0, s.value));
                    }
                }
            }
            user.cdf = update_swipe_cdf(&records, &user.cdf, cfg.abstraction.decay)?;
            user.cdf_cursor_t = t_now;
            all_records.extend(records);
        }
        self.population_cdf = update_swipe_cdf(&all_records, &self.population_cdf, cfg.abstraction.decay)?;

        let twins = self.store.twins();
        let mut group_cdfs = Vec::with_capacity(groups.len());
        let mut playlists = Vec::with_capacity(groups.len());
        for members in &groups {
            let cdfs: Vec<&SwipeCdf> = members.iter().map(|&u| &self.users[u].cdf).collect();
            group_cdfs.push(SwipeCdf::all_swiped(&cdfs)?);
            let prefs: Vec<PreferenceVector> = members.iter().map(|&u| twin_preference(&twins[u])).collect();
            let pref = group_preference(&prefs.iter().collect::<Vec<_>>())?;
            playlists.push(recommend(&pref, &self.catalog, cfg.abstraction.alpha, cfg.abstraction.playlist_len)?);
        }

        let params = cfg.predictor_params();
        let predictions: Vec<GroupPrediction> = exec
            .map_range(groups.len(), |g| -> Result<GroupPrediction, SimError> {
                let snrs = groups[g]
                    .iter()
                    .map(|&u| twins[u].recent_mean(AttributeKind::ChannelSnr, cfg.predictor.snr_history))
                    .collect::<Result<Vec<f64>, _>>()?;
                Ok(predict_group(
                    g,
                    interval_index,
                    &snrs,
                    &group_cdfs[g],
                    &playlists[g],
                    &self.catalog,
                    &self.ladder,
                    &params,
                )?)
            })
            .into_iter()
            .collect::<Result<_, _>>()?;

        let outcomes = self.simulate_interval(&groups, &playlists)?;

        for (g, ((members, pred), (playback, eta))) in groups.iter().zip(&predictions).zip(&outcomes).enumerate() {
            let rep = pred.representation;
            let truth = meter_actual(
                playback,
                self.ladder.bitrate(rep)?,
                rep != self.ladder.highest(),
                *eta,
                cfg.predictor.kappa,
                cfg.predictor.segment_s,
            );
            report.rows.push(GroupRow {
                interval_index,
                group_id: g,
                n_members: members.len(),
                k: report.k,
                predicted_radio_hz: pred.demand.radio_hz,
                actual_radio_hz: truth.radio_hz,
                predicted_compute_cps: pred.demand.compute_cps,
                actual_compute_cps: truth.compute_cps,
                accuracy_radio: accuracy(pred.demand.radio_hz, truth.radio_hz),
                accuracy_compute: accuracy(pred.demand.compute_cps, truth.compute_cps),
            });
            let grid = group_cdfs[g].grid();
            for (c, cdf) in group_cdfs[g].categories.iter().enumerate() {
                for (x, f) in grid.iter().zip(&cdf.values) {
                    report.cdf_rows.push(CdfRow {
                        interval_index,
                        group_id: g,
                        category: c,
                        bin_x: *x,
                        f: *f,
                    });
                }
            }
        }
        Ok(report)
    }

    /// Simulates `[clock, clock + I]` for the given groups and playlists,
    /// ingests the telemetry, and advances the clock. Returns each group's
    /// playback and its realized multicast spectral efficiency.
    fn simulate_interval(
        &mut self,
        groups: &[Vec<usize>],
        playlists: &[Playlist],
    ) -> Result<Vec<(Playback, f64)>, SimError> {
        let t0 = self.clock;
        let interval = self.cfg.interval_s;
        let schedule = self.cfg.schedule;
        let beta = self.cfg.abstraction.beta;
        let mobility = self.mobility;
        let channel = self.channel;
        let stations = &self.stations;

        let dt = schedule.channel_s;
        let steps = (interval / dt + 1e-9).floor() as usize;
        let location_every = ((schedule.location_s / dt).round() as usize).max(1);
        let telemetry: Vec<Telemetry> = self.exec.map_mut(&mut self.users, |user| {
            let bs = &stations[nearest_bs(user.agent.position, stations)];
            let shadow = channel.draw_shadowing(&mut user.motion_rng);
            let mut snr = Vec::with_capacity(steps);
            let mut location = Vec::with_capacity(steps / location_every + 1);
            let mut sum = 0.0;
            for s in 1..=steps {
                step_mobility(&mut user.agent, dt, &mobility, &mut user.motion_rng);
                let t = t0 + s as f64 * dt;
                let value = snr_db(user.agent.position, bs, &channel, shadow);
                sum += value;
                snr.push(Sample::new(t, value));
                if s % location_every == 0 {
                    location.push((t, user.agent.position));
                }
            }
            let mean_snr = if steps > 0 {
                sum / steps as f64
            } else {
                snr_db(user.agent.position, bs, &channel, shadow)
            };
            Telemetry {
                snr,
                location,
                mean_snr,
            }
        });

        let mut events: Vec<Vec<(f64, WatchRecord)>> = vec![Vec::new(); self.users.len()];
        let mut outcomes = Vec::with_capacity(groups.len());
        let trace = self.trace.as_ref();
        for (members, playlist) in groups.iter().zip(playlists) {
            let videos = playlist
                .entries
                .iter()
                .map(|e| catalog_video(&self.catalog, e.video_id))
                .collect::<Result<Vec<&Video>, _>>()?;
            let users = &mut self.users;
            let playback = play_group(members.len(), &videos, interval, |i, v| {
                draw_watch(&mut users[members[i]], v, trace)
            });
            for v in playback.videos.iter().filter(|v| !v.truncated) {
                for (&u, &w) in members.iter().zip(&v.member_watch_s) {
                    let record = WatchRecord::new(self.users[u].agent.user_id, v.video_id, v.category, v.duration_s, w);
                    events[u].push((t0 + v.start_s + w, record));
                }
            }
            let snrs: Vec<f64> = members.iter().map(|&u| telemetry[u].mean_snr).collect();
            outcomes.push((playback, group_efficiency(&snrs)?));
        }

        let mut jobs: Vec<_> = self
            .store
            .twins_mut()
            .iter_mut()
            .zip(self.users.iter_mut())
            .zip(telemetry.into_iter().zip(events))
            .collect();
        let results = self.exec.map_mut(&mut jobs, |((twin, user), (tel, evs))| -> Result<(), UdtError> {
            for s in &tel.snr {
                twin.ingest_sample(AttributeKind::ChannelSnr, *s)?;
            }
            for &(t, (x, y)) in &tel.location {
                twin.ingest_sample(AttributeKind::LocationX, Sample::new(t, x))?;
                twin.ingest_sample(AttributeKind::LocationY, Sample::new(t, y))?;
            }
            for (t, record) in evs.iter() {
                let kind = AttributeKind::WatchFraction(record.category);
                // Two zero-length views can share a timestamp; keep the first.
                if twin.last(kind).is_none_or(|last| *t > last.t) {
                    twin.ingest_sample(kind, Sample::new(*t, record.fraction()))?;
                }
                user.pref = update_preference(&user.pref, record, beta);
                if *t - user.last_pref_t >= schedule.behavior_s {
                    twin.ingest_preference(*t, &user.pref.0)?;
                    user.last_pref_t = *t;
                }
            }
            Ok(())
        });
        drop(jobs);
        results.into_iter().collect::<Result<(), _>>()?;

        for v in &mut self.catalog {
            let z: f64 = self.rng.sample(StandardNormal);
            v.popularity *= (self.cfg.sim.popularity_drift * z).exp();
        }
        self.clock = t0 + interval;
        Ok(outcomes)
    }
}
