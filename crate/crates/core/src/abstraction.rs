//! Group-level abstraction of twin data: swiping distributions over watch
//! progress, preference tracking, and popularity/preference recommendation.

use std::cmp::Ordering;

use thiserror::Error;

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum AbstractionError {
    #[error("invalid watch record: {0}")]
    InvalidRecord(String),
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("empty group")]
    EmptyGroup,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Canonical category names for the default four-category setup.
pub fn category_name(c: usize, categories: usize) -> String {
    const NAMES: [&str; 4] = ["News", "Sports", "Music", "Game"];
    if categories <= NAMES.len() {
        NAMES[c].to_string()
    } else {
        format!("cat{c}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WatchRecord {
    pub user_id: u32,
    pub video_id: u32,
    pub category: usize,
    pub duration_s: f64,
    pub watched_s: f64,
    pub completed: bool,
}

impl WatchRecord {
    pub fn new(user_id: u32, video_id: u32, category: usize, duration_s: f64, watched_s: f64) -> Self {
        WatchRecord {
            user_id,
            video_id,
            category,
            duration_s,
            watched_s,
            completed: watched_s >= duration_s,
        }
    }

    pub fn fraction(&self) -> f64 {
        self.watched_s / self.duration_s
    }

    pub fn validate(&self, categories: usize) -> Result<(), AbstractionError> {
        let ok = self.duration_s > 0.0
            && self.duration_s.is_finite()
            && self.watched_s >= 0.0
            && self.watched_s <= self.duration_s
            && self.completed == (self.watched_s == self.duration_s)
            && self.category < categories;
        if ok {
            Ok(())
        } else {
            Err(AbstractionError::InvalidRecord(format!("{self:?}")))
        }
    }
}

/// One category's CDF sampled at `x_b = b/B`, `b = 0..=B`.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryCdf {
    pub values: Vec<f64>,
    pub samples: u64,
}

impl CategoryCdf {
    pub fn never_swipe(bins: usize) -> Self {
        CategoryCdf {
            values: vec![0.0; bins + 1],
            samples: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.values.len() - 1
    }

    /// Probability mass beyond the end of the video.
    pub fn completion_mass(&self) -> f64 {
        1.0 - self.values[self.bins()]
    }
}

/// Per-category probability that viewers have swiped away at or before a
/// given watch fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SwipeCdf {
    bins: usize,
    pub categories: Vec<CategoryCdf>,
}

impl SwipeCdf {
    pub fn new(categories: usize, bins: usize) -> Self {
        assert!(bins > 0, "at least one bin");
        SwipeCdf {
            bins,
            categories: vec![CategoryCdf::never_swipe(bins); categories],
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.bins).map(|b| b as f64 / self.bins as f64).collect()
    }

    pub fn category(&self, c: usize) -> &CategoryCdf {
        &self.categories[c]
    }

    /// Distribution of the time at which every member has swiped, assuming
    /// members swipe independently: `F_group(x) = Π_i F_i(x)`.
    pub fn all_swiped(members: &[&SwipeCdf]) -> Result<SwipeCdf, AbstractionError> {
        let first = members.first().ok_or(AbstractionError::EmptyGroup)?;
        let mut out = (*first).clone();
        for m in &members[1..] {
            if m.bins != out.bins || m.categories.len() != out.categories.len() {
                return Err(AbstractionError::InvalidParameter("member CDF shapes differ".into()));
            }
            for (dst, src) in out.categories.iter_mut().zip(&m.categories) {
                for (a, b) in dst.values.iter_mut().zip(&src.values) {
                    *a *= b;
                }
                dst.samples = dst.samples.min(src.samples);
            }
        }
        Ok(out)
    }
}

/// Smallest bin index `b` with `b/B >= fraction`.
fn swipe_bin(fraction: f64, bins: usize) -> usize {
    let b_f = bins as f64;
    let mut b = ((fraction * b_f).ceil().max(0.0) as usize).min(bins);
    while b > 0 && (b - 1) as f64 / b_f >= fraction {
        b -= 1;
    }
    while b < bins && (b as f64 / b_f) < fraction {
        b += 1;
    }
    b
}

/// Updates a swipe distribution with one interval's watch records.
///
/// Completed views are right-censored at the end of the video and count
/// toward no bin. Per category, the interval's empirical CDF is blended as
/// `decay·prior + (1-decay)·new`; categories without records keep the prior,
/// and a category whose prior has never seen a sample takes the new CDF as is.
pub fn update_swipe_cdf(
    records: &[WatchRecord],
    prior: &SwipeCdf,
    decay: f64,
) -> Result<SwipeCdf, AbstractionError> {
    if !(0.0..1.0).contains(&decay) {
        return Err(AbstractionError::InvalidParameter(format!("decay {decay} not in [0,1)")));
    }
    let n_cat = prior.categories.len();
    for r in records {
        r.validate(n_cat)?;
    }
    let bins = prior.bins;
    let mut out = prior.clone();
    for (c, cdf) in out.categories.iter_mut().enumerate() {
        let mut counts = vec![0u64; bins + 1];
        let mut n = 0u64;
        for r in records.iter().filter(|r| r.category == c) {
            n += 1;
            if !r.completed {
                counts[swipe_bin(r.fraction(), bins)] += 1;
            }
        }
        if n == 0 {
            continue;
        }
        let mut cum = 0u64;
        let fresh: Vec<f64> = counts
            .iter()
            .map(|&k| {
                cum += k;
                cum as f64 / n as f64
            })
            .collect();
        if cdf.samples == 0 {
            cdf.values = fresh;
        } else {
            for (v, f) in cdf.values.iter_mut().zip(fresh) {
                *v = decay * *v + (1.0 - decay) * f;
            }
        }
        cdf.samples += n;
    }
    Ok(out)
}

/// Expected watch time `D · Σ_{b<B} (1 - F(b/B)) / B`, a left Riemann sum of
/// the survival function over the progress grid.
pub fn expected_engagement(cdf: &CategoryCdf, duration_s: f64) -> f64 {
    let bins = cdf.bins();
    let survival: f64 = cdf.values[..bins].iter().map(|f| (1.0 - f).clamp(0.0, 1.0)).sum();
    duration_s * survival / bins as f64
}

/// Per-category weights on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceVector(pub Vec<f64>);

impl PreferenceVector {
    pub fn uniform(categories: usize) -> Self {
        PreferenceVector(vec![1.0 / categories as f64; categories])
    }

    pub fn is_simplex(&self) -> bool {
        let sum: f64 = self.0.iter().sum();
        (sum - 1.0).abs() <= 1e-9 && self.0.iter().all(|p| (0.0..=1.0).contains(p))
    }

    pub fn normalized(mut values: Vec<f64>) -> Self {
        let sum: f64 = values.iter().sum();
        if sum > 0.0 {
            for v in &mut values {
                *v = (*v / sum).clamp(0.0, 1.0);
            }
            PreferenceVector(values)
        } else {
            PreferenceVector::uniform(values.len())
        }
    }
}

/// Moves the preference toward the engagement fraction of the watched
/// category; every other entry decays by `1 - beta`.
pub fn update_preference(pref: &PreferenceVector, record: &WatchRecord, beta: f64) -> PreferenceVector {
    let engagement = record.fraction().clamp(0.0, 1.0);
    let values = pref
        .0
        .iter()
        .enumerate()
        .map(|(c, &p)| {
            if c == record.category {
                (1.0 - beta) * p + beta * engagement
            } else {
                (1.0 - beta) * p
            }
        })
        .collect();
    PreferenceVector::normalized(values)
}

pub fn group_preference(members: &[&PreferenceVector]) -> Result<PreferenceVector, AbstractionError> {
    let first = members.first().ok_or(AbstractionError::EmptyGroup)?;
    let mut acc = vec![0.0; first.0.len()];
    for m in members {
        for (a, p) in acc.iter_mut().zip(&m.0) {
            *a += p;
        }
    }
    let n = members.len() as f64;
    Ok(PreferenceVector::normalized(acc.into_iter().map(|a| a / n).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub id: u32,
    pub category: usize,
    pub duration_s: f64,
    pub popularity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaylistEntry {
    pub video_id: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Playlist {
    pub entries: Vec<PlaylistEntry>,
}

/// Top-`n` videos by `alpha·pop_norm + (1-alpha)·pref[category]`, where
/// popularity is min-max normalized over the catalog (all zero when the
/// catalog is flat). Ties go to the lower video id.
pub fn recommend(
    group_pref: &PreferenceVector,
    catalog: &[Video],
    alpha: f64,
    n: usize,
) -> Result<Playlist, AbstractionError> {
    if catalog.is_empty() {
        return Err(AbstractionError::EmptyCatalog);
    }
    if !(0.0..=1.0).contains(&alpha) || n == 0 {
        return Err(AbstractionError::InvalidParameter(format!("alpha={alpha} n={n}")));
    }
    let (lo, hi) = catalog.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v.popularity), hi.max(v.popularity))
    });
    let span = hi - lo;
    let mut scored: Vec<PlaylistEntry> = catalog
        .iter()
        .map(|v| {
            let pop = if span > 0.0 { (v.popularity - lo) / span } else { 0.0 };
            let pref = group_pref.0.get(v.category).copied().unwrap_or(0.0);
            PlaylistEntry {
                video_id: v.id,
                score: alpha * pop + (1.0 - alpha) * pref,
            }
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(a.video_id.cmp(&b.video_id))
    });
    scored.truncate(n);
    Ok(Playlist { entries: scored })
}
