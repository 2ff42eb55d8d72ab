//! User digital twins: per-user telemetry tracks sampled at heterogeneous
//! rates, resampled onto a uniform grid for the encoder.

use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

pub const DEFAULT_CAPACITY: usize = 256;

const SNAPSHOT_MAGIC: &str = "UDTSTORE";
const SNAPSHOT_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum UdtError {
    #[error("non-monotonic timestamp on {kind}: {t} is not after {last}")]
    NonMonotonicTimestamp { kind: AttributeKind, t: f64, last: f64 },
    #[error("unknown attribute {0}")]
    UnknownAttribute(AttributeKind),
    #[error("empty track {0}")]
    EmptyTrack(AttributeKind),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("preference values do not form a simplex (sum {0})")]
    NotSimplex(f64),
    #[error("invalid window request: {0}")]
    InvalidWindow(String),
    #[error("snapshot I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot format mismatch: {0}")]
    FormatVersionMismatch(String),
}

/// One telemetry attribute of a user. Category-indexed kinds carry the
/// video category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttributeKind {
    ChannelSnr,
    LocationX,
    LocationY,
    WatchFraction(usize),
    Preference(usize),
}

impl AttributeKind {
    /// Canonical order: ChannelSnr, LocationX, LocationY, WatchFraction[0..C),
    /// Preference[0..C).
    pub fn canonical(categories: usize) -> Vec<AttributeKind> {
        let mut kinds = vec![
            AttributeKind::ChannelSnr,
            AttributeKind::LocationX,
            AttributeKind::LocationY,
        ];
        kinds.extend((0..categories).map(AttributeKind::WatchFraction));
        kinds.extend((0..categories).map(AttributeKind::Preference));
        kinds
    }

    pub fn track_count(categories: usize) -> usize {
        3 + 2 * categories
    }

    fn track_index(self, categories: usize) -> Result<usize, UdtError> {
        match self {
            AttributeKind::ChannelSnr => Ok(0),
            AttributeKind::LocationX => Ok(1),
            AttributeKind::LocationY => Ok(2),
            AttributeKind::WatchFraction(c) if c < categories => Ok(3 + c),
            AttributeKind::Preference(c) if c < categories => Ok(3 + categories + c),
            _ => Err(UdtError::UnknownAttribute(self)),
        }
    }

    fn token(self) -> String {
        match self {
            AttributeKind::ChannelSnr => "snr".into(),
            AttributeKind::LocationX => "x".into(),
            AttributeKind::LocationY => "y".into(),
            AttributeKind::WatchFraction(c) => format!("watch{c}"),
            AttributeKind::Preference(c) => format!("pref{c}"),
        }
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeKind::ChannelSnr => write!(f, "ChannelSnr"),
            AttributeKind::LocationX => write!(f, "LocationX"),
            AttributeKind::LocationY => write!(f, "LocationY"),
            AttributeKind::WatchFraction(c) => write!(f, "WatchFraction[{c}]"),
            AttributeKind::Preference(c) => write!(f, "Preference[{c}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub value: f64,
}

impl Sample {
    pub fn new(t: f64, value: f64) -> Self {
        Sample { t, value }
    }
}

/// Collection periods in seconds. Watch fractions are recorded per watch
/// event; the behavior period governs preference snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectionSchedule {
    pub channel_s: f64,
    pub location_s: f64,
    pub behavior_s: f64,
}

impl Default for CollectionSchedule {
    fn default() -> Self {
        CollectionSchedule {
            channel_s: 1.0,
            location_s: 5.0,
            behavior_s: 30.0,
        }
    }
}

impl CollectionSchedule {
    pub fn is_valid(&self) -> bool {
        self.channel_s > 0.0
            && self.channel_s <= self.location_s
            && self.location_s <= self.behavior_s
            && self.behavior_s.is_finite()
    }
}

/// Fixed min-max normalization bounds. Fractions and preferences are always
/// normalized against [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationBounds {
    pub snr_db: (f64, f64),
    pub x_m: (f64, f64),
    pub y_m: (f64, f64),
}

impl NormalizationBounds {
    pub fn for_kind(&self, kind: AttributeKind) -> (f64, f64) {
        match kind {
            AttributeKind::ChannelSnr => self.snr_db,
            AttributeKind::LocationX => self.x_m,
            AttributeKind::LocationY => self.y_m,
            AttributeKind::WatchFraction(_) | AttributeKind::Preference(_) => (0.0, 1.0),
        }
    }
}

/// Min-max normalization with clamping to [0, 1].
pub fn normalize(value: f64, (lo, hi): (f64, f64)) -> f64 {
    ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserDigitalTwin {
    user_id: u32,
    categories: usize,
    capacity: usize,
    schedule: CollectionSchedule,
    tracks: Vec<VecDeque<Sample>>,
}

impl UserDigitalTwin {
    pub fn new(
        user_id: u32,
        categories: usize,
        schedule: CollectionSchedule,
        capacity: usize,
    ) -> Self {
        assert!(capacity > 0, "twin capacity must be positive");
        UserDigitalTwin {
            user_id,
            categories,
            capacity,
            schedule,
            tracks: vec![VecDeque::new(); AttributeKind::track_count(categories)],
        }
    }

    pub fn user_id(&self) -> u32 {
        self.user_id
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn schedule(&self) -> &CollectionSchedule {
        &self.schedule
    }

    pub fn track(&self, kind: AttributeKind) -> Result<&VecDeque<Sample>, UdtError> {
        Ok(&self.tracks[kind.track_index(self.categories)?])
    }

    pub fn last(&self, kind: AttributeKind) -> Option<Sample> {
        self.track(kind).ok().and_then(|t| t.back().copied())
    }

    /// Appends a sample, evicting the oldest one when the track is full.
    /// Rejected samples leave the twin unchanged.
    pub fn ingest_sample(&mut self, kind: AttributeKind, sample: Sample) -> Result<(), UdtError> {
        let idx = kind.track_index(self.categories)?;
        if !sample.t.is_finite() || sample.t < 0.0 || !sample.value.is_finite() {
            return Err(UdtError::InvalidSample(format!(
                "{kind} at t={} value={}",
                sample.t, sample.value
            )));
        }
        let track = &mut self.tracks[idx];
        if let Some(last) = track.back() {
            if sample.t <= last.t {
                return Err(UdtError::NonMonotonicTimestamp {
                    kind,
                    t: sample.t,
                    last: last.t,
                });
            }
        }
        track.push_back(sample);
        if track.len() > self.capacity {
            track.pop_front();
        }
        Ok(())
    }

    /// Records a full preference vector at one timestamp. Either every
    /// category is ingested or none is.
    pub fn ingest_preference(&mut self, t: f64, preference: &[f64]) -> Result<(), UdtError> {
        if preference.len() != self.categories {
            return Err(UdtError::UnknownAttribute(AttributeKind::Preference(
                preference.len(),
            )));
        }
        let sum: f64 = preference.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || preference.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(UdtError::NotSimplex(sum));
        }
        for c in 0..self.categories {
            if let Some(last) = self.last(AttributeKind::Preference(c)) {
                if t <= last.t {
                    return Err(UdtError::NonMonotonicTimestamp {
                        kind: AttributeKind::Preference(c),
                        t,
                        last: last.t,
                    });
                }
            }
        }
        for (c, &p) in preference.iter().enumerate() {
            self.ingest_sample(AttributeKind::Preference(c), Sample::new(t, p))?;
        }
        Ok(())
    }

    /// Samples a track on `n_points` uniformly spaced times ending at `t_end`
    /// using a zero-order hold. Grid times before the first sample take the
    /// first sample's value.
    pub fn window(
        &self,
        kind: AttributeKind,
        t_end: f64,
        horizon: f64,
        n_points: usize,
    ) -> Result<Vec<f64>, UdtError> {
        if n_points < 2 {
            return Err(UdtError::InvalidWindow(format!("n_points={n_points} < 2")));
        }
        if !(horizon > 0.0) {
            return Err(UdtError::InvalidWindow(format!("horizon={horizon} <= 0")));
        }
        let track = self.track(kind)?;
        if track.is_empty() {
            return Err(UdtError::EmptyTrack(kind));
        }
        let step = horizon / (n_points - 1) as f64;
        let start = t_end - horizon;
        // Grid times are increasing, so a single cursor walks the track.
        let mut cursor = 0usize;
        let mut out = Vec::with_capacity(n_points);
        for i in 0..n_points {
            let g = start + i as f64 * step;
            while cursor + 1 < track.len() && track[cursor + 1].t <= g {
                cursor += 1;
            }
            out.push(track[cursor].value);
        }
        Ok(out)
    }

    /// Tracks × n_points matrix in canonical attribute order, each row
    /// min-max normalized against the fixed bounds.
    pub fn status_matrix(
        &self,
        t_end: f64,
        horizon: f64,
        n_points: usize,
        bounds: &NormalizationBounds,
    ) -> Result<Vec<Vec<f64>>, UdtError> {
        AttributeKind::canonical(self.categories)
            .into_iter()
            .map(|kind| {
                let range = bounds.for_kind(kind);
                self.window(kind, t_end, horizon, n_points)
                    .map(|row| row.into_iter().map(|v| normalize(v, range)).collect())
            })
            .collect()
    }

    /// Mean of the last `n` samples of a track.
    pub fn recent_mean(&self, kind: AttributeKind, n: usize) -> Result<f64, UdtError> {
        let track = self.track(kind)?;
        if track.is_empty() || n == 0 {
            return Err(UdtError::EmptyTrack(kind));
        }
        let take = n.min(track.len());
        let sum: f64 = track.iter().rev().take(take).map(|s| s.value).sum();
        Ok(sum / take as f64)
    }

    pub fn has_empty_track(&self) -> Option<AttributeKind> {
        AttributeKind::canonical(self.categories)
            .into_iter()
            .zip(&self.tracks)
            .find(|(_, t)| t.is_empty())
            .map(|(k, _)| k)
    }
}

/// All twins of a scenario. Twins are independent, so callers may mutate
/// distinct twins concurrently through `twins_mut`.
#[derive(Debug, Clone, PartialEq)]
pub struct UdtStore {
    categories: usize,
    twins: Vec<UserDigitalTwin>,
}

impl UdtStore {
    pub fn new(categories: usize) -> Self {
        UdtStore {
            categories,
            twins: Vec::new(),
        }
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn insert(&mut self, twin: UserDigitalTwin) {
        assert_eq!(twin.categories, self.categories, "category count mismatch");
        self.twins.push(twin);
    }

    pub fn twins(&self) -> &[UserDigitalTwin] {
        &self.twins
    }

    pub fn twins_mut(&mut self) -> &mut [UserDigitalTwin] {
        &mut self.twins
    }

    pub fn get(&self, user_id: u32) -> Option<&UserDigitalTwin> {
        self.twins.iter().find(|t| t.user_id == user_id)
    }

    pub fn len(&self) -> usize {
        self.twins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.twins.is_empty()
    }

    pub fn snapshot(&self, path: &Path) -> Result<(), UdtError> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        self.write_snapshot(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<(), UdtError> {
        writeln!(
            w,
            "{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION} {} {}",
            self.twins.len(),
            self.categories
        )?;
        for twin in &self.twins {
            let s = &twin.schedule;
            writeln!(
                w,
                "twin {} {} {:.16e} {:.16e} {:.16e}",
                twin.user_id, twin.capacity, s.channel_s, s.location_s, s.behavior_s
            )?;
            for (kind, track) in AttributeKind::canonical(self.categories)
                .into_iter()
                .zip(&twin.tracks)
            {
                write!(w, "{} {}", kind.token(), track.len())?;
                for sample in track {
                    write!(w, " {:.16e} {:.16e}", sample.t, sample.value)?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    pub fn restore(path: &Path) -> Result<UdtStore, UdtError> {
        let file = fs::File::open(path)?;
        Self::read_snapshot(BufReader::new(file))
    }

    pub fn read_snapshot<R: BufRead>(reader: R) -> Result<UdtStore, UdtError> {
        let bad = |msg: String| UdtError::FormatVersionMismatch(msg);
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| bad("missing header".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != SNAPSHOT_MAGIC || fields[1] != SNAPSHOT_VERSION {
            return Err(bad(format!("unexpected header {header:?}")));
        }
        let n_users: usize = fields[2].parse().map_err(|_| bad("user count".into()))?;
        let categories: usize = fields[3].parse().map_err(|_| bad("category count".into()))?;
        let kinds = AttributeKind::canonical(categories);

        let mut store = UdtStore::new(categories);
        for _ in 0..n_users {
            let line = lines.next().ok_or_else(|| bad("truncated store".into()))??;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 || f[0] != "twin" {
                return Err(bad(format!("expected twin line, got {line:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
            let user_id = f[1].parse().map_err(|_| bad("user id".into()))?;
            let capacity: usize = f[2].parse().map_err(|_| bad("capacity".into()))?;
            if capacity == 0 {
                return Err(bad("zero capacity".into()));
            }
            let schedule = CollectionSchedule {
                channel_s: num(f[3])?,
                location_s: num(f[4])?,
                behavior_s: num(f[5])?,
            };
            let mut twin = UserDigitalTwin::new(user_id, categories, schedule, capacity);
            for (i, kind) in kinds.iter().enumerate() {
                let line = lines.next().ok_or_else(|| bad("truncated twin".into()))??;
                let mut tok = line.split_whitespace();
                if tok.next() != Some(kind.token().as_str()) {
                    return Err(bad(format!("expected track {kind}, got {line:?}")));
                }
                let n: usize = tok
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("track length".into()))?;
                let values: Vec<f64> = tok.map(num).collect::<Result<_, _>>()?;
                if values.len() != 2 * n || n > capacity {
                    return Err(bad(format!("track {kind} has inconsistent length")));
                }
                let track: VecDeque<Sample> =
                    values.chunks(2).map(|p| Sample::new(p[0], p[1])).collect();
                if track.iter().zip(track.iter().skip(1)).any(|(a, b)| b.t <= a.t) {
                    return Err(bad(format!("track {kind} is not time ordered")));
                }
                twin.tracks[i] = track;
            }
            store.insert(twin);
        }
        Ok(store)
    }
}
