//! Multicast group construction: a double deep Q-network picks the number of
//! groups, then K-means++ seeding and Lloyd iterations cluster the users'
//! feature vectors.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exec::Execution;

pub const STATE_DIM: usize = 5;

pub type State = [f64; STATE_DIM];

#[derive(Debug, Error)]
pub enum GroupingError {
    #[error("need at least two users, got {0}")]
    TooFewUsers(usize),
    #[error("invalid group count K={k} for {n} users")]
    BadK { k: usize, n: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("invalid DDQN configuration: {0}")]
    InvalidConfig(String),
    #[error("weights file I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("weights file format: {0}")]
    Format(String),
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dims(features: &[Vec<f64>]) -> Result<(), GroupingError> {
    if let Some(first) = features.first() {
        if features.iter().any(|f| f.len() != first.len()) {
            return Err(GroupingError::ShapeMismatch("features differ in dimension".into()));
        }
    }
    Ok(())
}

/// Mean and population standard deviation of the Euclidean distances over all
/// unordered pairs.
pub fn pairwise_stats(features: &[Vec<f64>], exec: Execution) -> Result<(f64, f64), GroupingError> {
    let n = features.len();
    if n < 2 {
        return Err(GroupingError::TooFewUsers(n));
    }
    check_dims(features)?;
    let rows = exec.map_range(n, |i| {
        features[i + 1..]
            .iter()
            .map(|other| squared_distance(&features[i], other).sqrt())
            .collect::<Vec<f64>>()
    });
    let pairs = (n * (n - 1) / 2) as f64;
    let mean = rows.iter().flatten().sum::<f64>() / pairs;
    let var = rows.iter().flatten().map(|d| (d - mean) * (d - mean)).sum::<f64>() / pairs;
    Ok((mean, var.sqrt()))
}

/// Sum of squared distances to the global mean.
pub fn total_sum_of_squares(features: &[Vec<f64>]) -> f64 {
    if features.is_empty() {
        return 0.0;
    }
    let mean = mean_of(features.iter().map(Vec::as_slice), features[0].len());
    features.iter().map(|f| squared_distance(f, &mean)).sum()
}

fn mean_of<'a>(points: impl Iterator<Item = &'a [f64]>, dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    let mut count = 0usize;
    for p in points {
        for (a, x) in acc.iter_mut().zip(p) {
            *a += x;
        }
        count += 1;
    }
    for a in &mut acc {
        *a /= count as f64;
    }
    acc
}

/// D² seeding. Returns the indices of the chosen points in selection order.
/// When no unchosen point carries squared-distance mass, the lowest-index
/// unchosen point is taken.
pub fn kmeanspp_seed_indices<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>, GroupingError> {
    let n = features.len();
    if k == 0 || k > n {
        return Err(GroupingError::BadK { k, n });
    }
    check_dims(features)?;
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut picks = vec![first];
    let mut d2: Vec<f64> = features
        .iter()
        .map(|f| squared_distance(f, &features[first]))
        .collect();
    while picks.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut cum = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    cum += w;
                    pick = Some(i);
                    if cum > u {
                        break;
                    }
                }
            }
            pick.expect("positive mass implies a candidate")
        } else {
            (0..n).find(|&i| !chosen[i]).expect("k <= n leaves an unchosen point")
        };
        chosen[next] = true;
        picks.push(next);
        for (w, f) in d2.iter_mut().zip(features) {
            *w = w.min(squared_distance(f, &features[next]));
        }
        d2[next] = 0.0;
    }
    Ok(picks)
}

pub fn kmeanspp_seed<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    k: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, GroupingError> {
    Ok(kmeanspp_seed_indices(features, k, rng)?
        .into_iter()
        .map(|i| features[i].clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupAssignment {
    pub k: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub wcss: f64,
    /// WCSS after each Lloyd iteration.
    pub history: Vec<f64>,
}

impl GroupAssignment {
    pub fn members(&self, group: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == group)
            .map(|(i, _)| i)
            .collect()
    }
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (g, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = g;
        }
    }
    best
}

fn recompute_centroids(features: &[Vec<f64>], labels: &mut [usize], k: usize) -> Vec<Vec<f64>> {
    let dim = features[0].len();
    let centroid = |labels: &[usize], g: usize| {
        mean_of(
            features
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == g)
                .map(|(f, _)| f.as_slice()),
            dim,
        )
    };
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let mut centroids: Vec<Vec<f64>> = (0..k)
        .map(|g| if counts[g] > 0 { centroid(labels, g) } else { vec![0.0; dim] })
        .collect();
    for g in 0..k {
        if counts[g] > 0 {
            continue;
        }
        // Reseed with the point farthest from its own centroid, taken from a
        // cluster that can spare it.
        let mut far = None;
        let mut far_d = -1.0;
        for (i, f) in features.iter().enumerate() {
            let l = labels[i];
            if counts[l] < 2 {
                continue;
            }
            let d = squared_distance(f, &centroids[l]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let p = far.expect("k <= n guarantees a cluster with two members");
        let old = labels[p];
        labels[p] = g;
        counts[old] -= 1;
        counts[g] = 1;
        centroids[g] = features[p].clone();
        centroids[old] = centroid(labels, old);
    }
    centroids
}

fn wcss_of(features: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    features
        .iter()
        .zip(labels)
        .map(|(f, &l)| squared_distance(f, &centroids[l]))
        .sum()
}

/// Lloyd iterations from the given centroids. Assignment ties go to the
/// lowest group index; empty clusters are reseeded with the farthest point.
/// Stops when the WCSS improvement drops below `tol`, the labels stop
/// changing, or `max_iter` is reached.
pub fn lloyd(
    features: &[Vec<f64>],
    centroids: Vec<Vec<f64>>,
    tol: f64,
    max_iter: usize,
    exec: Execution,
) -> Result<GroupAssignment, GroupingError> {
    let k = centroids.len();
    let n = features.len();
    if k == 0 || k > n {
        return Err(GroupingError::BadK { k, n });
    }
    check_dims(features)?;
    if centroids.iter().any(|c| c.len() != features[0].len()) {
        return Err(GroupingError::ShapeMismatch("centroid dimension".into()));
    }
    let max_iter = max_iter.max(1);
    let mut centroids = centroids;
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    for _ in 0..max_iter {
        let mut next = exec.map(features, |f| nearest(f, &centroids));
        centroids = recompute_centroids(features, &mut next, k);
        let wcss = wcss_of(features, &next, &centroids);
        let unchanged = next == labels;
        labels = next;
        let improvement = history.last().map(|prev: &f64| prev - wcss);
        history.push(wcss);
        if unchanged || improvement.is_some_and(|d| d < tol) {
            break;
        }
    }
    Ok(GroupAssignment {
        k,
        wcss: *history.last().expect("at least one iteration"),
        labels,
        centroids,
        history,
    })
}

/// D² seeding followed by Lloyd iterations.
pub fn construct_groups<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    k: usize,
    rng: &mut R,
    tol: f64,
    max_iter: usize,
    exec: Execution,
) -> Result<GroupAssignment, GroupingError> {
    let seeds = kmeanspp_seed(features, k, rng)?;
    lloyd(features, seeds, tol, max_iter, exec)
}

/// `-WCSS/TSS - lambda·K/K_max`. With zero total sum of squares the
/// compactness term is dropped.
pub fn cluster_reward(wcss: f64, total_ss: f64, k: usize, lambda: f64, k_max: usize) -> f64 {
    let penalty = lambda * k as f64 / k_max as f64;
    if total_ss > 0.0 {
        -(wcss / total_ss).clamp(0.0, 1.0) - penalty
    } else {
        -penalty
    }
}

/// DDQN observation: user count, pairwise distance spread, and the outcome
/// of the previous grouping decision.
pub fn cluster_state(
    n_users: usize,
    n_max: usize,
    pair_stats: (f64, f64),
    prev_wcss_ratio: f64,
    prev_k: usize,
    k_max: usize,
) -> State {
    [
        (n_users as f64 / n_max.max(1) as f64).clamp(0.0, 1.0),
        pair_stats.0,
        pair_stats.1,
        prev_wcss_ratio.clamp(0.0, 1.0),
        (prev_k as f64 / k_max as f64).clamp(0.0, 1.0),
    ]
}

/// Two-layer perceptron `Q(s) = W2·relu(W1·s + b1) + b2` over the actions
/// K_min..=K_max.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub hidden: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl QNetwork {
    pub fn zeros(hidden: usize, k_min: usize, k_max: usize) -> Self {
        let actions = k_max + 1 - k_min;
        QNetwork {
            hidden,
            k_min,
            k_max,
            w1: vec![0.0; hidden * STATE_DIM],
            b1: vec![0.0; hidden],
            w2: vec![0.0; actions * hidden],
            b2: vec![0.0; actions],
        }
    }

    pub fn init<R: Rng + ?Sized>(hidden: usize, k_min: usize, k_max: usize, rng: &mut R) -> Self {
        let mut net = QNetwork::zeros(hidden, k_min, k_max);
        let b1 = 1.0 / (STATE_DIM as f64).sqrt();
        for w in &mut net.w1 {
            *w = rng.random_range(-b1..=b1);
        }
        let b2 = 1.0 / (hidden as f64).sqrt();
        for w in &mut net.w2 {
            *w = rng.random_range(-b2..=b2);
        }
        net
    }

    pub fn actions(&self) -> usize {
        self.k_max + 1 - self.k_min
    }

    fn hidden_pre(&self, state: &State) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                self.b1[h]
                    + (0..STATE_DIM)
                        .map(|i| self.w1[h * STATE_DIM + i] * state[i])
                        .sum::<f64>()
            })
            .collect()
    }

    fn head(&self, act: &[f64]) -> Vec<f64> {
        (0..self.actions())
            .map(|a| {
                self.b2[a]
                    + (0..self.hidden)
                        .map(|h| self.w2[a * self.hidden + h] * act[h])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("DDQN v1 {} {} {}\n", self.hidden, self.k_min, self.k_max);
        for t in [&self.w1, &self.b1, &self.w2, &self.b2] {
            let line: Vec<String> = t.iter().map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GroupingError> {
        let bad = |m: String| GroupingError::Format(m);
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 5 || f[0] != "DDQN" || f[1] != "v1" {
            return Err(bad(format!("bad header {header:?}")));
        }
        let size = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad size {s:?}")));
        let (hidden, k_min, k_max) = (size(f[2])?, size(f[3])?, size(f[4])?);
        if hidden == 0 || k_min == 0 || k_max < k_min {
            return Err(bad(format!("invalid sizes in {header:?}")));
        }
        let mut net = QNetwork::zeros(hidden, k_min, k_max);
        for (i, t) in [&mut net.w1, &mut net.b1, &mut net.w2, &mut net.b2]
            .into_iter()
            .enumerate()
        {
            let line = lines.next().ok_or_else(|| bad(format!("missing tensor {i}")))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad real {s:?}"))))
                .collect::<Result<_, _>>()?;
            if values.len() != t.len() || values.iter().any(|v| !v.is_finite()) {
                return Err(bad(format!("tensor {i} malformed")));
            }
            *t = values;
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<(), GroupingError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GroupingError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

pub fn q_forward(net: &QNetwork, state: &State) -> Vec<f64> {
    let act: Vec<f64> = net.hidden_pre(state).into_iter().map(|v| v.max(0.0)).collect();
    net.head(&act)
}

/// Index of the largest value; ties resolve to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy choice of K. Exactly one coin is drawn per call, plus one
/// uniform action draw when exploring.
pub fn select_k<R: Rng + ?Sized>(net: &QNetwork, state: &State, epsilon: f64, rng: &mut R) -> usize {
    let explore = rng.random::<f64>() < epsilon;
    let action = if explore {
        rng.random_range(0..net.actions())
    } else {
        argmax(&q_forward(net, state))
    };
    net.k_min + action
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: State,
    /// Action index, i.e. `K - K_min`.
    pub action: usize,
    pub reward: f64,
    pub next_state: State,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Uniform sampling with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..batch)
            .map(|_| self.items[rng.random_range(0..self.items.len())])
            .collect()
    }
}

/// Double-Q targets: `r` for terminal transitions, otherwise
/// `r + gamma · Q_target(s', argmax_a Q_online(s', a))`.
pub fn double_q_targets(online: &QNetwork, target: &QNetwork, batch: &[Transition], gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                t.reward
            } else {
                let a = argmax(&q_forward(online, &t.next_state));
                t.reward + gamma * q_forward(target, &t.next_state)[a]
            }
        })
        .collect()
}

/// One SGD step on the mean squared TD error. Returns the pre-step loss.
pub fn ddqn_update(
    online: &mut QNetwork,
    target: &QNetwork,
    batch: &[Transition],
    gamma: f64,
    lr: f64,
) -> Result<f64, GroupingError> {
    if batch.is_empty() {
        return Err(GroupingError::EmptyBatch);
    }
    let targets = double_q_targets(online, target, batch, gamma);
    let (h_n, s_n) = (online.hidden, STATE_DIM);
    let mut gw1 = vec![0.0; online.w1.len()];
    let mut gb1 = vec![0.0; online.b1.len()];
    let mut gw2 = vec![0.0; online.w2.len()];
    let mut gb2 = vec![0.0; online.b2.len()];
    let scale = 2.0 / batch.len() as f64;
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(&targets) {
        let pre = online.hidden_pre(&t.state);
        let act: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let q = online.head(&act)[t.action];
        let err = q - y;
        loss += err * err;
        let dq = scale * err;
        gb2[t.action] += dq;
        for h in 0..h_n {
            gw2[t.action * h_n + h] += dq * act[h];
            if pre[h] > 0.0 {
                let dh = dq * online.w2[t.action * h_n + h];
                gb1[h] += dh;
                for i in 0..s_n {
                    gw1[h * s_n + i] += dh * t.state[i];
                }
            }
        }
    }
    for (p, g) in [
        (&mut online.w1, gw1),
        (&mut online.b1, gb1),
        (&mut online.w2, gw2),
        (&mut online.b2, gb2),
    ] {
        for (x, d) in p.iter_mut().zip(g) {
            *x -= lr * d;
        }
    }
    Ok(loss / batch.len() as f64)
}

/// Hard copy of the online network every `period` updates.
pub fn sync_target(online: &QNetwork, target: &mut QNetwork, counter: u64, period: u64) -> bool {
    if period > 0 && counter.is_multiple_of(period) {
        target.clone_from(online);
        true
    } else {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdqnConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub hidden: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub lr: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the planned training steps over which epsilon decays.
    pub epsilon_decay_frac: f64,
    pub replay: usize,
    pub batch: usize,
    pub sync: u64,
}

impl Default for DdqnConfig {
    fn default() -> Self {
        DdqnConfig {
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
        }
    }
}

impl DdqnConfig {
    pub fn validate(&self) -> Result<(), GroupingError> {
        let bad = |m: &str| Err(GroupingError::InvalidConfig(m.into()));
        if self.k_min == 0 || self.k_max < self.k_min {
            return bad("require 1 <= k_min <= k_max");
        }
        if self.hidden == 0 {
            return bad("hidden must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if self.batch == 0 || self.replay < self.batch || self.sync == 0 {
            return bad("require 1 <= batch <= replay and sync >= 1");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        Ok(())
    }
}

/// Online/target network pair with replay and an epsilon schedule.
#[derive(Debug, Clone)]
pub struct DdqnAgent {
    pub config: DdqnConfig,
    pub online: QNetwork,
    pub target: QNetwork,
    pub replay: ReplayBuffer,
    planned_steps: u64,
    steps: u64,
    updates: u64,
    rng: ChaCha8Rng,
}

impl DdqnAgent {
    pub fn new(config: DdqnConfig, planned_steps: u64, seed: u64) -> Result<Self, GroupingError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let online = QNetwork::init(config.hidden, config.k_min, config.k_max, &mut rng);
        Ok(DdqnAgent {
            target: online.clone(),
            replay: ReplayBuffer::new(config.replay),
            online,
            config,
            planned_steps,
            steps: 0,
            updates: 0,
            rng,
        })
    }

    pub fn with_network(config: DdqnConfig, online: QNetwork, seed: u64) -> Result<Self, GroupingError> {
        config.validate()?;
        if online.k_min != config.k_min || online.k_max != config.k_max {
            return Err(GroupingError::InvalidConfig(format!(
                "network covers K in [{}, {}], configuration asks for [{}, {}]",
                online.k_min, online.k_max, config.k_min, config.k_max
            )));
        }
        Ok(DdqnAgent {
            target: online.clone(),
            replay: ReplayBuffer::new(config.replay),
            online,
            config,
            planned_steps: 0,
            steps: 0,
            updates: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Linear decay from start to end over the first `epsilon_decay_frac`
    /// of the planned steps.
    pub fn epsilon(&self) -> f64 {
        let c = &self.config;
        let horizon = (self.planned_steps as f64 * c.epsilon_decay_frac).max(1.0);
        let frac = (self.steps as f64 / horizon).min(1.0);
        c.epsilon_start + (c.epsilon_end - c.epsilon_start) * frac
    }

    pub fn act(&mut self, state: &State, explore: bool) -> usize {
        let eps = if explore { self.epsilon() } else { 0.0 };
        let k = select_k(&self.online, state, eps, &mut self.rng);
        if explore {
            self.steps += 1;
        }
        k
    }

    pub fn greedy(&self, state: &State) -> usize {
        self.online.k_min + argmax(&q_forward(&self.online, state))
    }

    /// Stores a transition and runs one update once the buffer holds a batch.
    pub fn observe(&mut self, transition: Transition) -> Option<f64> {
        self.replay.push(transition);
        if self.replay.len() < self.config.batch {
            return None;
        }
        let batch = self.replay.sample(self.config.batch, &mut self.rng);
        let loss = ddqn_update(
            &mut self.online,
            &self.target,
            &batch,
            self.config.gamma,
            self.config.lr,
        )
        .ok()?;
        self.updates += 1;
        sync_target(&self.online, &mut self.target, self.updates, self.config.sync);
        Some(loss)
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn pairwise_stats_examples() {
        let (m, s) = pairwise_stats(&[vec![0.0, 0.0], vec![3.0, 4.0]], Execution::Sequential).unwrap();
        assert_eq!((m, s), (5.0, 0.0));
        let (m, s) = pairwise_stats(&vec![vec![1.5, 2.0]; 4], Execution::Parallel).unwrap();
        assert_eq!((m, s), (0.0, 0.0));
        let (m, s) = pairwise_stats(&[vec![0.0], vec![1.0], vec![2.0]], Execution::Sequential).unwrap();
        assert!((m - 4.0 / 3.0).abs() < 1e-15);
        assert!((s - 2f64.sqrt() / 3.0).abs() < 1e-15);
        assert!(matches!(
            pairwise_stats(&[vec![1.0]], Execution::Sequential),
            Err(GroupingError::TooFewUsers(1))
        ));
    }

    #[test]
    fn seeding_full_k_is_permutation() {
        let pts = vec![vec![0.0], vec![5.0], vec![9.0]];
        for seed in 0..20 {
            let mut idx = kmeanspp_seed_indices(&pts, 3, &mut rng(seed)).unwrap();
            idx.sort();
            assert_eq!(idx, vec![0, 1, 2]);
        }
    }

    #[test]
    fn seeding_duplicates_falls_back() {
        let pts = vec![vec![1.0, 1.0]; 3];
        let c = kmeanspp_seed(&pts, 2, &mut rng(4)).unwrap();
        assert_eq!(c, vec![vec![1.0, 1.0]; 2]);
        let idx = kmeanspp_seed_indices(&pts, 3, &mut rng(4)).unwrap();
        let mut sorted = idx.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn seeding_k_one_and_bad_k() {
        let pts = vec![vec![1.0], vec![2.0]];
        let c = kmeanspp_seed(&pts, 1, &mut rng(1)).unwrap();
        assert!(pts.contains(&c[0]));
        assert!(matches!(kmeanspp_seed(&pts, 3, &mut rng(1)), Err(GroupingError::BadK { .. })));
        assert!(matches!(kmeanspp_seed(&pts, 0, &mut rng(1)), Err(GroupingError::BadK { .. })));
    }

    #[test]
    fn lloyd_four_points() {
        let pts = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 0.0], vec![10.0, 1.0]];
        for seed in 0..10 {
            let a = construct_groups(&pts, 2, &mut rng(seed), 0.0, 100, Execution::Sequential).unwrap();
            assert!((a.wcss - 1.0).abs() < 1e-12);
            assert_eq!(a.labels[0], a.labels[1]);
            assert_eq!(a.labels[2], a.labels[3]);
            assert_ne!(a.labels[0], a.labels[2]);
        }
    }

    #[test]
    fn lloyd_single_cluster_is_total_ss() {
        let pts = vec![vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]];
        let a = lloyd(&pts, vec![pts[1].clone()], 0.0, 10, Execution::Sequential).unwrap();
        assert!((a.wcss - total_sum_of_squares(&pts)).abs() < 1e-12);
        let mean = [1.5, 0.5];
        assert!(a.centroids[0].iter().zip(mean).all(|(c, m)| (c - m).abs() < 1e-12));
    }

    #[test]
    fn lloyd_distinct_locations_zero_wcss() {
        let pts = vec![vec![0.0], vec![0.0], vec![4.0], vec![8.0]];
        let a = lloyd(&pts, vec![vec![0.0], vec![4.0], vec![8.0]], 0.0, 10, Execution::Sequential).unwrap();
        assert_eq!(a.history[0], 0.0);
        assert_eq!(a.wcss, 0.0);
    }

    #[test]
    fn lloyd_repairs_empty_cluster() {
        let pts = vec![vec![0.0], vec![1.0], vec![2.0], vec![10.0]];
        // Two coincident seeds leave group 1 empty after assignment.
        let a = lloyd(&pts, vec![vec![0.0], vec![0.0]], 0.0, 20, Execution::Sequential).unwrap();
        assert!((0..2).all(|g| !a.members(g).is_empty()));
        assert!(a.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn single_user_single_group() {
        let a = construct_groups(&[vec![3.0, 1.0]], 1, &mut rng(0), 0.0, 10, Execution::Sequential).unwrap();
        assert_eq!(a.labels, vec![0]);
        assert_eq!(a.wcss, 0.0);
    }

    #[test]
    fn reward_examples() {
        assert!((cluster_reward(0.0, 5.0, 2, 0.1, 8) + 0.025).abs() < 1e-15);
        assert!((cluster_reward(5.0, 5.0, 1, 0.1, 8) - (-1.0 - 0.1 / 8.0)).abs() < 1e-15);
        assert_eq!(cluster_reward(2.0, 8.0, 5, 0.0, 8), -0.25);
        assert_eq!(cluster_reward(0.0, 0.0, 4, 0.1, 8), -0.05);
    }

    #[test]
    fn q_forward_by_hand() {
        let net = QNetwork::zeros(4, 1, 3);
        assert_eq!(q_forward(&net, &[1.0; 5]), vec![0.0; 3]);

        let mut net = QNetwork::zeros(1, 2, 3);
        net.w1 = vec![1.0, 2.0, 0.0, -1.0, 0.5];
        net.b1 = vec![0.5];
        net.w2 = vec![2.0, -1.0];
        net.b2 = vec![0.25, 0.0];
        // hidden = relu(0.5 + 1 + 2 + 0 - 1 + 0.5) = 3
        assert_eq!(q_forward(&net, &[1.0; 5]), vec![6.25, -3.0]);
    }

    #[test]
    fn select_k_greedy_and_ties() {
        let mut net = QNetwork::zeros(1, 2, 4);
        net.b2 = vec![0.1, 0.9, 0.3];
        assert_eq!(select_k(&net, &[0.0; 5], 0.0, &mut rng(0)), 3);
        let mut tie = QNetwork::zeros(1, 1, 2);
        tie.b2 = vec![0.5, 0.5];
        assert_eq!(select_k(&tie, &[0.0; 5], 0.0, &mut rng(0)), 1);
    }

    #[test]
    fn double_q_target_by_hand() {
        let mut online = QNetwork::zeros(1, 1, 2);
        online.b2 = vec![0.2, 0.5];
        let mut target = QNetwork::zeros(1, 1, 2);
        target.b2 = vec![1.0, 2.0];
        let t = Transition {
            state: [0.0; 5],
            action: 0,
            reward: 1.0,
            next_state: [0.0; 5],
            done: false,
        };
        let done = Transition { reward: 0.7, done: true, ..t };
        let y = double_q_targets(&online, &target, &[t, done], 0.9);
        assert_eq!(y, vec![1.0 + 0.9 * 2.0, 0.7]);
        assert_eq!(double_q_targets(&online, &target, &[t], 0.0), vec![1.0]);
        assert!(matches!(
            ddqn_update(&mut online, &target, &[], 0.9, 0.1),
            Err(GroupingError::EmptyBatch)
        ));
    }

    #[test]
    fn ddqn_update_reduces_loss_on_fixed_batch() {
        let mut r = rng(5);
        let mut online = QNetwork::init(8, 1, 3, &mut r);
        let target = online.clone();
        let batch: Vec<Transition> = (0..8)
            .map(|i| Transition {
                state: [i as f64 * 0.1, 0.2, 0.3, 0.4, 0.5],
                action: i % 3,
                reward: 1.0,
                next_state: [0.1; 5],
                done: true,
            })
            .collect();
        let first = ddqn_update(&mut online, &target, &batch, 0.9, 0.05).unwrap();
        for _ in 0..50 {
            ddqn_update(&mut online, &target, &batch, 0.9, 0.05).unwrap();
        }
        let last = ddqn_update(&mut online, &target, &batch, 0.9, 0.05).unwrap();
        assert!(last < first);
    }

    #[test]
    fn sync_period_behaviour() {
        let mut r = rng(2);
        let online = QNetwork::init(4, 1, 3, &mut r);
        let mut target = QNetwork::zeros(4, 1, 3);
        assert!(!sync_target(&online, &mut target, 50, 100));
        assert_eq!(target, QNetwork::zeros(4, 1, 3));
        assert!(sync_target(&online, &mut target, 3, 1));
        for i in 0..10 {
            let s = [r.random(), r.random(), r.random(), r.random::<f64>() * i as f64, 0.5];
            assert_eq!(q_forward(&online, &s), q_forward(&target, &s));
        }
    }

    #[test]
    fn replay_is_fifo() {
        let mut buf = ReplayBuffer::new(2);
        for i in 0..3 {
            buf.push(Transition {
                state: [i as f64; 5],
                action: 0,
                reward: 0.0,
                next_state: [0.0; 5],
                done: false,
            });
        }
        assert_eq!(buf.len(), 2);
        let firsts: Vec<f64> = buf.iter().map(|t| t.state[0]).collect();
        assert_eq!(firsts, vec![1.0, 2.0]);
    }

    #[test]
    fn qnetwork_text_round_trip() {
        let net = QNetwork::init(6, 2, 5, &mut rng(9));
        let text = net.to_text();
        assert!(text.starts_with("DDQN v1 6 2 5\n"));
        assert_eq!(QNetwork::from_text(&text).unwrap(), net);
        assert!(QNetwork::from_text("DDQN v1 6 5 2\n").is_err());
    }

    #[test]
    fn epsilon_schedule_decays_linearly() {
        let mut agent = DdqnAgent::new(DdqnConfig::default(), 100, 1).unwrap();
        assert_eq!(agent.epsilon(), 1.0);
        for _ in 0..40 {
            agent.act(&[0.0; 5], true);
        }
        assert!((agent.epsilon() - (1.0 - 0.95 * 0.5)).abs() < 1e-12);
        for _ in 0..100 {
            agent.act(&[0.0; 5], true);
        }
        assert!((agent.epsilon() - 0.05).abs() < 1e-12);
    }
}
