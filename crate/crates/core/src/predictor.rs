//! Per-group radio and transcoding demand for the next reservation interval.

use thiserror::Error;

use crate::abstraction::{expected_engagement, Playlist, SwipeCdf, Video};

#[derive(Debug, Error, PartialEq)]
pub enum PredictorError {
    #[error("empty group")]
    EmptyGroup,
    #[error("empty playlist")]
    EmptyPlaylist,
    #[error("unknown representation {0}")]
    UnknownRepresentation(usize),
    #[error("unknown video {0}")]
    UnknownVideo(u32),
    #[error("invalid bitrate ladder: {0}")]
    InvalidLadder(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    pub label: String,
    pub bitrate_bps: f64,
}

/// Representations in strictly increasing bitrate order. The last entry is
/// the stored original.
#[derive(Debug, Clone, PartialEq)]
pub struct BitrateLadder {
    reps: Vec<Representation>,
}

impl BitrateLadder {
    pub fn new(reps: Vec<Representation>) -> Result<Self, PredictorError> {
        if reps.is_empty() {
            return Err(PredictorError::InvalidLadder("no representations".into()));
        }
        if reps.iter().any(|r| !(r.bitrate_bps > 0.0) || !r.bitrate_bps.is_finite()) {
            return Err(PredictorError::InvalidLadder("bitrates must be positive".into()));
        }
        if reps.windows(2).any(|w| w[1].bitrate_bps <= w[0].bitrate_bps) {
            return Err(PredictorError::InvalidLadder("bitrates must strictly increase".into()));
        }
        Ok(BitrateLadder { reps })
    }

    pub fn from_bitrates(bitrates: &[f64]) -> Result<Self, PredictorError> {
        Self::new(
            bitrates
                .iter()
                .map(|&b| Representation {
                    label: format!("{:.0}k", b / 1e3),
                    bitrate_bps: b,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn highest(&self) -> usize {
        self.reps.len() - 1
    }

    pub fn get(&self, index: usize) -> Result<&Representation, PredictorError> {
        self.reps
            .get(index)
            .ok_or(PredictorError::UnknownRepresentation(index))
    }

    pub fn bitrate(&self, index: usize) -> Result<f64, PredictorError> {
        Ok(self.get(index)?.bitrate_bps)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Representation> {
        self.reps.iter()
    }
}

/// Shannon spectral efficiency in bit/s/Hz.
pub fn spectral_efficiency(snr_db: f64) -> f64 {
    (1.0 + 10f64.powf(snr_db / 10.0)).log2()
}

/// Multicast efficiency, limited by the worst member's SNR.
pub fn group_efficiency(member_snr_db: &[f64]) -> Result<f64, PredictorError> {
    member_snr_db
        .iter()
        .copied()
        .reduce(f64::min)
        .map(spectral_efficiency)
        .ok_or(PredictorError::EmptyGroup)
}

/// Highest representation whose bitrate fits `eta · budget_hz`, or the
/// lowest representation when none fits.
pub fn select_representation(ladder: &BitrateLadder, eta: f64, budget_hz: f64) -> usize {
    let capacity = eta * budget_hz;
    ladder
        .iter()
        .rposition(|r| r.bitrate_bps <= capacity)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedVideo {
    pub video_id: u32,
    pub category: usize,
    pub duration_s: f64,
    /// Expected engagement from the group swipe distribution.
    pub engagement_s: f64,
    /// Expected playback inside the interval; equals `engagement_s` except
    /// for a final video that would run past the end of the interval.
    pub in_interval_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPlan {
    pub videos: Vec<PlannedVideo>,
    pub undersupplied: bool,
}

impl IntervalPlan {
    pub fn expected_play_s(&self) -> f64 {
        self.videos.iter().map(|v| v.in_interval_s).sum()
    }
}

/// Looks a video up in a catalog indexed by id.
pub fn catalog_video(catalog: &[Video], id: u32) -> Result<&Video, PredictorError> {
    catalog
        .get(id as usize)
        .filter(|v| v.id == id)
        .ok_or(PredictorError::UnknownVideo(id))
}

/// Walks the recommendation ranking until the expected engagement covers the
/// interval. `catalog[id]` must hold the video with that id.
pub fn build_playlist_for_interval(
    playlist: &Playlist,
    catalog: &[Video],
    cdf: &SwipeCdf,
    interval_s: f64,
) -> Result<IntervalPlan, PredictorError> {
    if playlist.entries.is_empty() {
        return Err(PredictorError::EmptyPlaylist);
    }
    let mut videos = Vec::new();
    let mut covered = 0.0;
    for entry in &playlist.entries {
        let v = catalog_video(catalog, entry.video_id)?;
        let engagement = expected_engagement(cdf.category(v.category), v.duration_s);
        videos.push(PlannedVideo {
            video_id: v.id,
            category: v.category,
            duration_s: v.duration_s,
            engagement_s: engagement,
            in_interval_s: engagement.min(interval_s - covered),
        });
        covered += engagement;
        if covered >= interval_s {
            return Ok(IntervalPlan {
                videos,
                undersupplied: false,
            });
        }
    }
    Ok(IntervalPlan {
        videos,
        undersupplied: true,
    })
}

/// Average bandwidth in Hz: expected bits over the interval divided by the
/// interval length and the spectral efficiency.
pub fn predict_radio(plan: &IntervalPlan, bitrate_bps: f64, eta: f64, interval_s: f64) -> f64 {
    let bits = bitrate_bps * plan.expected_play_s();
    bits / (interval_s * eta)
}

/// Seconds of video transcoded when `play_s` seconds are expected to play:
/// whole segments covering the playback, capped at the video duration.
pub fn expected_transcoded_s(play_s: f64, segment_s: f64, duration_s: f64) -> f64 {
    ((play_s / segment_s).ceil() * segment_s).min(duration_s)
}

/// Average transcoding rate in cycles/s. Serving the stored highest
/// representation needs no transcoding.
pub fn predict_compute(
    plan: &IntervalPlan,
    ladder: &BitrateLadder,
    representation: usize,
    kappa: f64,
    segment_s: f64,
    interval_s: f64,
) -> Result<f64, PredictorError> {
    let bitrate = ladder.bitrate(representation)?;
    if representation == ladder.highest() {
        return Ok(0.0);
    }
    let seconds: f64 = plan
        .videos
        .iter()
        .map(|v| expected_transcoded_s(v.in_interval_s, segment_s, v.duration_s))
        .sum();
    Ok(kappa * bitrate * seconds / interval_s)
}

/// `max(0, 1 - |predicted - actual| / actual)`; a zero actual scores 1 only
/// when the prediction is also zero.
pub fn accuracy(predicted: f64, actual: f64) -> f64 {
    if actual == 0.0 {
        return if predicted == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - (predicted - actual).abs() / actual.abs()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceDemand {
    pub group_id: usize,
    pub interval_index: usize,
    pub radio_hz: f64,
    pub compute_cps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorParams {
    pub kappa: f64,
    pub segment_s: f64,
    pub budget_hz: f64,
    pub interval_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupPrediction {
    pub eta: f64,
    pub representation: usize,
    pub plan: IntervalPlan,
    pub demand: ResourceDemand,
}

/// Full prediction for one group from its members' SNR forecasts, its swipe
/// distribution, and its recommendation list.
#[allow(clippy::too_many_arguments)]
pub fn predict_group(
    group_id: usize,
    interval_index: usize,
    member_snr_db: &[f64],
    cdf: &SwipeCdf,
    playlist: &Playlist,
    catalog: &[Video],
    ladder: &BitrateLadder,
    params: &PredictorParams,
) -> Result<GroupPrediction, PredictorError> {
    let eta = group_efficiency(member_snr_db)?;
    let representation = select_representation(ladder, eta, params.budget_hz);
    let plan = build_playlist_for_interval(playlist, catalog, cdf, params.interval_s)?;
    let radio_hz = predict_radio(&plan, ladder.bitrate(representation)?, eta, params.interval_s);
    let compute_cps = predict_compute(
        &plan,
        ladder,
        representation,
        params.kappa,
        params.segment_s,
        params.interval_s,
    )?;
    Ok(GroupPrediction {
        eta,
        representation,
        plan,
        demand: ResourceDemand {
            group_id,
            interval_index,
            radio_hz,
            compute_cps,
        },
    })
}
