//! 1D convolutional encoder that compresses a twin's status matrix into a
//! fixed-dimension feature vector, trained as an autoencoder with
//! hand-derived gradients.
//!
//! Encoder: `relu(conv1d_same(x)) -> mean over time -> linear`.
//! Decoder: `linear -> broadcast over time -> transposed conv`.
//!
//! Parameter canonical order (weights files and gradient vectors): conv
//! kernels `[f][a][j]`, conv biases `[f]`, projection `[e][f]`, projection
//! bias `[e]`, expansion `[f][e]`, expansion bias `[f]`, transposed-conv
//! kernels `[f][a][j]`, output bias `[a]`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exec::Execution;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty training dataset")]
    EmptyDataset,
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    DivergedLoss { epoch: usize, loss: f64 },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
    #[error("weights file I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("weights file format: {0}")]
    Format(String),
}

/// A × T matrix, one row per track.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub filters: usize,
    pub kernel: usize,
    pub dim: usize,
    pub tracks: usize,
}

impl Shape {
    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.filters == 0 || self.dim == 0 || self.tracks == 0 {
            return Err(EncoderError::InvalidHyper(format!("{self:?} has a zero size")));
        }
        if self.kernel.is_multiple_of(2) {
            return Err(EncoderError::InvalidHyper(format!("kernel {} must be odd", self.kernel)));
        }
        Ok(())
    }

    fn half(&self) -> isize {
        (self.kernel as isize - 1) / 2
    }

    fn kidx(&self, f: usize, a: usize, j: usize) -> usize {
        (f * self.tracks + a) * self.kernel + j
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderWeights {
    pub shape: Shape,
    pub conv: Vec<f64>,
    pub conv_bias: Vec<f64>,
    pub proj: Vec<f64>,
    pub proj_bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderWeights {
    pub shape: Shape,
    pub expand: Vec<f64>,
    pub expand_bias: Vec<f64>,
    pub deconv: Vec<f64>,
    pub out_bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub encoder: EncoderWeights,
    pub decoder: DecoderWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub user_id: u32,
    pub values: Vec<f64>,
}

impl EncoderWeights {
    pub fn zeros(shape: Shape) -> Self {
        let Shape { filters: f, kernel: k, dim: d, tracks: a } = shape;
        EncoderWeights {
            shape,
            conv: vec![0.0; f * a * k],
            conv_bias: vec![0.0; f],
            proj: vec![0.0; d * f],
            proj_bias: vec![0.0; d],
        }
    }
}

impl DecoderWeights {
    pub fn zeros(shape: Shape) -> Self {
        let Shape { filters: f, kernel: k, dim: d, tracks: a } = shape;
        DecoderWeights {
            shape,
            expand: vec![0.0; f * d],
            expand_bias: vec![0.0; f],
            deconv: vec![0.0; f * a * k],
            out_bias: vec![0.0; a],
        }
    }
}

impl Autoencoder {
    pub fn zeros(shape: Shape) -> Self {
        Autoencoder {
            encoder: EncoderWeights::zeros(shape),
            decoder: DecoderWeights::zeros(shape),
        }
    }

    /// Seeded initialization: weights uniform in ±1/sqrt(fan_in), biases zero.
    /// The conv fan-in is A·k.
    pub fn init(shape: Shape, seed: u64) -> Result<Self, EncoderError> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ae = Autoencoder::zeros(shape);
        let mut fill = |v: &mut Vec<f64>, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for x in v.iter_mut() {
                *x = rng.random_range(-bound..=bound);
            }
        };
        fill(&mut ae.encoder.conv, shape.tracks * shape.kernel);
        fill(&mut ae.encoder.proj, shape.filters);
        fill(&mut ae.decoder.expand, shape.dim);
        fill(&mut ae.decoder.deconv, shape.filters * shape.kernel);
        Ok(ae)
    }

    pub fn shape(&self) -> Shape {
        self.encoder.shape
    }

    fn tensors(&self) -> [&Vec<f64>; 8] {
        let (e, d) = (&self.encoder, &self.decoder);
        [
            &e.conv,
            &e.conv_bias,
            &e.proj,
            &e.proj_bias,
            &d.expand,
            &d.expand_bias,
            &d.deconv,
            &d.out_bias,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 8] {
        let (e, d) = (&mut self.encoder, &mut self.decoder);
        [
            &mut e.conv,
            &mut e.conv_bias,
            &mut e.proj,
            &mut e.proj_bias,
            &mut d.expand,
            &mut d.expand_bias,
            &mut d.deconv,
            &mut d.out_bias,
        ]
    }

    /// Flattened parameters in canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for t in self.tensors_mut() {
            if index < t.len() {
                return &mut t[index];
            }
            index -= t.len();
        }
        panic!("parameter index out of range");
    }

    fn axpy(&mut self, scale: f64, other: &Autoencoder) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, g) in dst.iter_mut().zip(src) {
                *x += scale * g;
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn save(&self, path: &Path) -> Result<(), EncoderError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let s = self.shape();
        let mut out = format!("ENC v1 {} {} {} {}\n", s.filters, s.kernel, s.dim, s.tracks);
        for t in self.tensors() {
            let line: Vec<String> = t.iter().map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, EncoderError> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn from_text(text: &str) -> Result<Self, EncoderError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 6 || f[0] != "ENC" || f[1] != "v1" {
            return Err(EncoderError::Format(format!("bad header {header:?}")));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| EncoderError::Format(format!("bad size {s:?}")))
        };
        let shape = Shape {
            filters: num(f[2])?,
            kernel: num(f[3])?,
            dim: num(f[4])?,
            tracks: num(f[5])?,
        };
        shape.validate()?;
        let mut ae = Autoencoder::zeros(shape);
        for (i, t) in ae.tensors_mut().into_iter().enumerate() {
            let line = lines
                .next()
                .ok_or_else(|| EncoderError::Format(format!("missing tensor {i}")))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| EncoderError::Format(format!("bad real {s:?}"))))
                .collect::<Result<_, _>>()?;
            if values.len() != t.len() {
                return Err(EncoderError::Format(format!(
                    "tensor {i}: expected {} values, found {}",
                    t.len(),
                    values.len()
                )));
            }
            *t = values;
        }
        if !ae.is_finite() {
            return Err(EncoderError::Format("non-finite parameter".into()));
        }
        Ok(ae)
    }
}

fn check_input(shape: &Shape, input: &Matrix) -> Result<usize, EncoderError> {
    if input.len() != shape.tracks {
        return Err(EncoderError::ShapeMismatch(format!(
            "input has {} rows, weights expect {}",
            input.len(),
            shape.tracks
        )));
    }
    let t = input.first().map_or(0, Vec::len);
    if t == 0 || input.iter().any(|r| r.len() != t) {
        return Err(EncoderError::ShapeMismatch("ragged or empty input rows".into()));
    }
    Ok(t)
}

/// Same-padded 1D cross-correlation:
/// `out[f][t] = bias[f] + Σ_a Σ_j kernel[f][a][j] · input[a][t + j - (k-1)/2]`.
pub fn conv1d_same(
    input: &Matrix,
    kernels: &[f64],
    biases: &[f64],
    kernel: usize,
) -> Result<Matrix, EncoderError> {
    let tracks = input.len();
    let filters = biases.len();
    if kernel.is_multiple_of(2) || kernels.len() != filters * tracks * kernel {
        return Err(EncoderError::ShapeMismatch(format!(
            "kernels of length {} do not match {filters}x{tracks}x{kernel}",
            kernels.len()
        )));
    }
    let t_len = input.first().map_or(0, Vec::len);
    if t_len == 0 || input.iter().any(|r| r.len() != t_len) {
        return Err(EncoderError::ShapeMismatch("ragged or empty input rows".into()));
    }
    let half = (kernel as isize - 1) / 2;
    let mut out = vec![vec![0.0; t_len]; filters];
    for (f, row) in out.iter_mut().enumerate() {
        for (t, o) in row.iter_mut().enumerate() {
            let mut acc = biases[f];
            for (a, x) in input.iter().enumerate() {
                for j in 0..kernel {
                    let src = t as isize + j as isize - half;
                    if src >= 0 && (src as usize) < t_len {
                        acc += kernels[(f * tracks + a) * kernel + j] * x[src as usize];
                    }
                }
            }
            *o = acc;
        }
    }
    Ok(out)
}

struct EncodeTrace {
    pre: Matrix,
    pooled: Vec<f64>,
    feature: Vec<f64>,
}

fn encode_traced(input: &Matrix, w: &EncoderWeights) -> Result<EncodeTrace, EncoderError> {
    let t_len = check_input(&w.shape, input)?;
    let pre = conv1d_same(input, &w.conv, &w.conv_bias, w.shape.kernel)?;
    let pooled: Vec<f64> = pre
        .iter()
        .map(|row| row.iter().map(|&v| v.max(0.0)).sum::<f64>() / t_len as f64)
        .collect();
    let Shape { filters, dim, .. } = w.shape;
    let feature = (0..dim)
        .map(|e| {
            w.proj_bias[e]
                + (0..filters)
                    .map(|f| w.proj[e * filters + f] * pooled[f])
                    .sum::<f64>()
        })
        .collect();
    Ok(EncodeTrace { pre, pooled, feature })
}

/// Compresses an A × T status matrix into a d-dimensional vector.
pub fn encode(input: &Matrix, weights: &EncoderWeights) -> Result<Vec<f64>, EncoderError> {
    Ok(encode_traced(input, weights)?.feature)
}

/// Encodes every user's matrix; output order follows input order.
pub fn encode_all(
    inputs: &[(u32, Matrix)],
    weights: &EncoderWeights,
    exec: Execution,
) -> Result<Vec<FeatureVector>, EncoderError> {
    exec.map(inputs, |(user_id, m)| {
        encode(m, weights).map(|values| FeatureVector {
            user_id: *user_id,
            values,
        })
    })
    .into_iter()
    .collect()
}

fn expand(feature: &[f64], w: &DecoderWeights) -> Vec<f64> {
    let Shape { filters, dim, .. } = w.shape;
    (0..filters)
        .map(|f| {
            w.expand_bias[f]
                + (0..dim)
                    .map(|e| w.expand[f * dim + e] * feature[e])
                    .sum::<f64>()
        })
        .collect()
}

/// Number of kernel taps `j` for which `t - (j - half)` lands inside `[0, T)`.
fn tap_valid(t: usize, j: usize, half: isize, t_len: usize) -> bool {
    let src = t as isize - (j as isize - half);
    src >= 0 && (src as usize) < t_len
}

/// Reconstructs an A × T matrix from a feature vector.
pub fn decode(feature: &[f64], w: &DecoderWeights, t_len: usize) -> Result<Matrix, EncoderError> {
    let s = w.shape;
    if feature.len() != s.dim {
        return Err(EncoderError::ShapeMismatch(format!(
            "feature length {} != {}",
            feature.len(),
            s.dim
        )));
    }
    if t_len == 0 {
        return Err(EncoderError::ShapeMismatch("T must be positive".into()));
    }
    let z = expand(feature, w);
    let half = s.half();
    let mut out = vec![vec![0.0; t_len]; s.tracks];
    for (a, row) in out.iter_mut().enumerate() {
        for (t, o) in row.iter_mut().enumerate() {
            let mut acc = w.out_bias[a];
            for (f, zf) in z.iter().enumerate() {
                for j in 0..s.kernel {
                    if tap_valid(t, j, half, t_len) {
                        acc += w.deconv[s.kidx(f, a, j)] * zf;
                    }
                }
            }
            *o = acc;
        }
    }
    Ok(out)
}

/// Mean squared reconstruction error of one sample and its gradient with
/// respect to every parameter.
pub fn loss_and_gradient(
    ae: &Autoencoder,
    input: &Matrix,
) -> Result<(f64, Autoencoder), EncoderError> {
    let s = ae.shape();
    let t_len = check_input(&s, input)?;
    let half = s.half();
    let trace = encode_traced(input, &ae.encoder)?;
    let z = expand(&trace.feature, &ae.decoder);
    let out = decode(&trace.feature, &ae.decoder, t_len)?;

    let n = (s.tracks * t_len) as f64;
    let mut loss = 0.0;
    let mut d_out = vec![vec![0.0; t_len]; s.tracks];
    for a in 0..s.tracks {
        for t in 0..t_len {
            let r = out[a][t] - input[a][t];
            loss += r * r;
            d_out[a][t] = 2.0 * r / n;
        }
    }
    loss /= n;

    let mut g = Autoencoder::zeros(s);
    let dec = &ae.decoder;
    let mut d_z = vec![0.0; s.filters];
    for a in 0..s.tracks {
        g.decoder.out_bias[a] = d_out[a].iter().sum();
        for f in 0..s.filters {
            for j in 0..s.kernel {
                let col: f64 = (0..t_len)
                    .filter(|&t| tap_valid(t, j, half, t_len))
                    .map(|t| d_out[a][t])
                    .sum();
                g.decoder.deconv[s.kidx(f, a, j)] = col * z[f];
                d_z[f] += dec.deconv[s.kidx(f, a, j)] * col;
            }
        }
    }
    let mut d_feat = vec![0.0; s.dim];
    for f in 0..s.filters {
        g.decoder.expand_bias[f] = d_z[f];
        for e in 0..s.dim {
            g.decoder.expand[f * s.dim + e] = d_z[f] * trace.feature[e];
            d_feat[e] += dec.expand[f * s.dim + e] * d_z[f];
        }
    }
    let enc = &ae.encoder;
    let mut d_pooled = vec![0.0; s.filters];
    for e in 0..s.dim {
        g.encoder.proj_bias[e] = d_feat[e];
        for f in 0..s.filters {
            g.encoder.proj[e * s.filters + f] = d_feat[e] * trace.pooled[f];
            d_pooled[f] += enc.proj[e * s.filters + f] * d_feat[e];
        }
    }
    for f in 0..s.filters {
        let d_pre: Vec<f64> = trace.pre[f]
            .iter()
            .map(|&p| if p > 0.0 { d_pooled[f] / t_len as f64 } else { 0.0 })
            .collect();
        g.encoder.conv_bias[f] = d_pre.iter().sum();
        for a in 0..s.tracks {
            for j in 0..s.kernel {
                let mut acc = 0.0;
                for (t, dp) in d_pre.iter().enumerate() {
                    let src = t as isize + j as isize - half;
                    if src >= 0 && (src as usize) < t_len {
                        acc += dp * input[a][src as usize];
                    }
                }
                g.encoder.conv[s.kidx(f, a, j)] = acc;
            }
        }
    }
    Ok((loss, g))
}

pub fn reconstruction_loss(ae: &Autoencoder, input: &Matrix) -> Result<f64, EncoderError> {
    let t_len = check_input(&ae.shape(), input)?;
    let feature = encode(input, &ae.encoder)?;
    let out = decode(&feature, &ae.decoder, t_len)?;
    let n = (ae.shape().tracks * t_len) as f64;
    Ok(out
        .iter()
        .zip(input)
        .flat_map(|(o, x)| o.iter().zip(x).map(|(a, b)| (a - b) * (a - b)))
        .sum::<f64>()
        / n)
}

/// Largest relative disagreement between the analytic gradient and central
/// finite differences, `|g_a - g_n| / max(1e-12, |g_a| + |g_n|)`.
///
/// A degenerate `epsilon` (say 1e-300) yields a meaningless but returned value.
pub fn gradient_check(ae: &Autoencoder, input: &Matrix, epsilon: f64) -> Result<f64, EncoderError> {
    let (_, analytic) = loss_and_gradient(ae, input)?;
    let analytic = analytic.flatten();
    let mut probe = ae.clone();
    let mut worst: f64 = 0.0;
    for (i, &ga) in analytic.iter().enumerate() {
        let orig = *probe.param_mut(i);
        *probe.param_mut(i) = orig + epsilon;
        let plus = reconstruction_loss(&probe, input)?;
        *probe.param_mut(i) = orig - epsilon;
        let minus = reconstruction_loss(&probe, input)?;
        *probe.param_mut(i) = orig;
        let gn = (plus - minus) / (2.0 * epsilon);
        let rel = (ga - gn).abs() / (ga.abs() + gn.abs()).max(1e-12);
        if rel.is_nan() {
            worst = f64::NAN;
        } else if !worst.is_nan() {
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub filters: usize,
    pub kernel: usize,
    pub dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            filters: 8,
            kernel: 3,
            dim: 8,
            lr: 0.05,
            epochs: 50,
            batch: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Autoencoder,
    /// Mean per-sample loss of each epoch, measured before each batch step.
    pub losses: Vec<f64>,
}

/// Mini-batch SGD on mean squared reconstruction error. Batch order is a
/// seeded shuffle per epoch, so the whole run is deterministic.
pub fn train_autoencoder(dataset: &[Matrix], hyper: &TrainConfig) -> Result<TrainOutcome, EncoderError> {
    let first = dataset.first().ok_or(EncoderError::EmptyDataset)?;
    if !(hyper.lr > 0.0) || hyper.batch == 0 {
        return Err(EncoderError::InvalidHyper(format!(
            "lr={} batch={}",
            hyper.lr, hyper.batch
        )));
    }
    let shape = Shape {
        filters: hyper.filters,
        kernel: hyper.kernel,
        dim: hyper.dim,
        tracks: first.len(),
    };
    let mut model = Autoencoder::init(shape, hyper.seed)?;
    for m in dataset {
        check_input(&shape, m)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut losses = Vec::with_capacity(hyper.epochs);
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(hyper.batch) {
            let mut grad = Autoencoder::zeros(shape);
            for &i in chunk {
                let (loss, g) = loss_and_gradient(&model, &dataset[i])?;
                total += loss;
                grad.axpy(1.0, &g);
            }
            model.axpy(-hyper.lr / chunk.len() as f64, &grad);
        }
        let mean = total / dataset.len() as f64;
        if !mean.is_finite() || !model.is_finite() {
            return Err(EncoderError::DivergedLoss { epoch, loss: mean });
        }
        losses.push(mean);
    }
    Ok(TrainOutcome { model, losses })
}
