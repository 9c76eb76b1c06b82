//! Contextual-number encoding and decoding over a trained map.
//!
//! The posterior over nodes is a softmax of `s(w_j, x) = -beta·||x - w_j||²`.
//! An observation encodes either to its most probable node or to the
//! posterior-weighted mean index of its `g` most probable nodes. Decoding
//! interpolates linearly between the two neighboring integer nodes.

use crate::error::{check_dims, Error, Result};
use crate::som::SomModel;
use crate::types::{ContextualNumber, Posterior};

/// Probabilities below this flush to zero before renormalizing.
const FLUSH: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeMode {
    Argmax,
    Weighted,
}

impl EncodeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EncodeMode::Argmax => "argmax",
            EncodeMode::Weighted => "weighted",
        }
    }
}

impl std::str::FromStr for EncodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "argmax" => Ok(EncodeMode::Argmax),
            "weighted" => Ok(EncodeMode::Weighted),
            other => Err(Error::config(format!("unknown encode mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeConfig {
    pub mode: EncodeMode,
    /// Number of top-posterior nodes averaged in weighted mode.
    pub g: usize,
    /// Similarity sharpness.
    pub beta: f64,
}

impl EncodeConfig {
    pub const DEFAULT_G: usize = 3;

    pub fn weighted(beta: f64) -> Self {
        Self {
            mode: EncodeMode::Weighted,
            g: Self::DEFAULT_G,
            beta,
        }
    }

    pub fn argmax(beta: f64) -> Self {
        Self {
            mode: EncodeMode::Argmax,
            g: 1,
            beta,
        }
    }

    pub fn validate(&self, nodes: usize) -> Result<()> {
        if self.g < 1 || self.g > nodes {
            return Err(Error::config(format!(
                "g must lie in [1, {nodes}], got {}",
                self.g
            )));
        }
        check_beta(self.beta)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!(
            "beta must be finite and > 0, got {beta}"
        )))
    }
}

/// `1 / (2·v)` where `v` is the total variance of the training data, so the
/// kernel bandwidth matches the overall spread of the data. Falls back to 1
/// when `v` is zero.
///
/// A bandwidth at the scale of the local quantization error would make
/// off-map inputs look *more* certain than training rows: far from the map,
/// squared-distance gaps between nodes grow with the distance itself.
pub fn default_beta(total_variance: f64) -> f64 {
    if total_variance > 0.0 && total_variance.is_finite() {
        1.0 / (2.0 * total_variance)
    } else {
        1.0
    }
}

/// Default sharpness for a trained map, from its recorded training statistics.
pub fn model_beta(model: &SomModel) -> f64 {
    default_beta(model.meta().total_variance)
}

/// `-beta·||x - w||²`.
pub fn similarity(w: &[f64], x: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let d = crate::metrics::squared_distance(w, x)?;
    Ok(-beta * d)
}

fn softmax_from_sq(sq: &[f64], beta: f64) -> Vec<f64> {
    let scores: Vec<f64> = sq.iter().map(|d| -beta * d).collect();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        // Every distance overflowed; fall back to a one-hot on the nearest node.
        let best = sq
            .iter()
            .enumerate()
            .fold(0, |b, (j, d)| if *d < sq[b] { j } else { b });
        let mut out = vec![0.0; sq.len()];
        out[best] = 1.0;
        return out;
    }
    let mut probs: Vec<f64> = scores
        .iter()
        .map(|s| {
            let e = (s - top).exp();
            if e < FLUSH {
                0.0
            } else {
                e
            }
        })
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}

/// Softmax posterior over all `K` contextual numbers.
pub fn posterior(model: &SomModel, x: &[f64], beta: f64) -> Result<Posterior> {
    check_dims(model.dim(), x.len())?;
    check_beta(beta)?;
    Posterior::new(softmax_from_sq(&model.sq_distances(x), beta))
}

/// Largest posterior entry.
pub fn p_max(model: &SomModel, x: &[f64], beta: f64) -> Result<f64> {
    Ok(posterior(model, x, beta)?.max())
}

/// Index of the most probable node; equal probabilities resolve to the
/// nearer node, then the lower index. Always agrees with the best matching unit.
fn argmax_index(probs: &[f64], sq: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..probs.len() {
        if probs[j] > probs[best] || (probs[j] == probs[best] && sq[j] < sq[best]) {
            best = j;
        }
    }
    best + 1
}

pub fn encode_argmax(model: &SomModel, x: &[f64], beta: f64) -> Result<ContextualNumber> {
    check_dims(model.dim(), x.len())?;
    check_beta(beta)?;
    let sq = model.sq_distances(x);
    let probs = softmax_from_sq(&sq, beta);
    ContextualNumber::new(argmax_index(&probs, &sq) as f64, model.nodes())
}

/// Result of a weighted encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Encoding {
    pub cn: ContextualNumber,
    pub p_max: f64,
    /// False when the selected top-`g` indices do not form a contiguous run,
    /// i.e. the posterior has several separated peaks.
    pub contiguous: bool,
}

fn weighted_from_probs(probs: &[f64], g: usize) -> (f64, bool) {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let picked = &order[..g];
    let lo = picked.iter().min().copied().unwrap_or(0);
    let hi = picked.iter().max().copied().unwrap_or(0);
    // Offsets from the lowest selected index keep the mean exact in
    // symmetric cases.
    let mut num = 0.0;
    let mut den = 0.0;
    for &j in picked {
        num += probs[j] * (j - lo) as f64;
        den += probs[j];
    }
    let contiguous = hi - lo + 1 == g;
    let value = (lo + 1) as f64 + num / den;
    (value.clamp((lo + 1) as f64, (hi + 1) as f64), contiguous)
}

/// Posterior-weighted mean index over the `g` most probable nodes
/// (equal probabilities prefer the lower index).
pub fn encode_weighted(model: &SomModel, x: &[f64], cfg: &EncodeConfig) -> Result<Encoding> {
    check_dims(model.dim(), x.len())?;
    cfg.validate(model.nodes())?;
    let sq = model.sq_distances(x);
    let probs = softmax_from_sq(&sq, cfg.beta);
    let p_max = probs.iter().copied().fold(0.0, f64::max);
    if cfg.g == 1 {
        let cn = ContextualNumber::new(argmax_index(&probs, &sq) as f64, model.nodes())?;
        return Ok(Encoding {
            cn,
            p_max,
            contiguous: true,
        });
    }
    let (value, contiguous) = weighted_from_probs(&probs, cfg.g);
    Ok(Encoding {
        cn: ContextualNumber::new(value, model.nodes())?,
        p_max,
        contiguous,
    })
}

/// Encodes with whichever mode `cfg` selects.
pub fn encode(model: &SomModel, x: &[f64], cfg: &EncodeConfig) -> Result<Encoding> {
    match cfg.mode {
        EncodeMode::Weighted => encode_weighted(model, x, cfg),
        EncodeMode::Argmax => {
            check_dims(model.dim(), x.len())?;
            check_beta(cfg.beta)?;
            let sq = model.sq_distances(x);
            let probs = softmax_from_sq(&sq, cfg.beta);
            Ok(Encoding {
                cn: ContextualNumber::new(argmax_index(&probs, &sq) as f64, model.nodes())?,
                p_max: probs.iter().copied().fold(0.0, f64::max),
                contiguous: true,
            })
        }
    }
}

/// Maps a contextual number back to observation space, interpolating between
/// the weights of the adjacent integer nodes.
pub fn decode(model: &SomModel, cn: f64) -> Result<Vec<f64>> {
    let cn = ContextualNumber::new(cn, model.nodes())?.value();
    let j = cn.floor();
    let t = cn - j;
    let lower = model.weight(j as usize);
    if t == 0.0 {
        return Ok(lower.to_vec());
    }
    let upper = model.weight(j as usize + 1);
    Ok(lower
        .iter()
        .zip(upper)
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect())
}

/// Reference level that `drift_monitor` compares against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftBaseline {
    /// Stored mean `p_max` over the training set.
    Value(f64),
    /// Mean of the first `len` entries of the monitored series.
    Prefix(usize),
}

/// Flags every time step whose trailing-window mean `p_max` falls below
/// `threshold × baseline`. Steps before the first full window are never flagged.
pub fn drift_monitor(
    p_max_series: &[f64],
    threshold: f64,
    window: usize,
    baseline: DriftBaseline,
) -> Result<Vec<bool>> {
    if p_max_series.is_empty() {
        return Err(Error::contract("p_max series must be non-empty"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::contract(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if window == 0 {
        return Err(Error::contract("window must be at least 1"));
    }
    let reference = match baseline {
        DriftBaseline::Value(v) => v,
        DriftBaseline::Prefix(len) => {
            if len == 0 || len > p_max_series.len() {
                return Err(Error::contract(format!(
                    "baseline prefix {len} invalid for a series of {}",
                    p_max_series.len()
                )));
            }
            p_max_series[..len].iter().sum::<f64>() / len as f64
        }
    };
    let cutoff = threshold * reference;
    Ok((0..p_max_series.len())
        .map(|t| {
            if t + 1 < window {
                return false;
            }
            let mean = p_max_series[t + 1 - window..=t].iter().sum::<f64>() / window as f64;
            mean < cutoff
        })
        .collect())
}
