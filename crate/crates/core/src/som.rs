//! Batch training of a one-dimensional self-organizing map.
//!
//! Nodes carry 1-based indices `1..=K`. Training alternates a competition
//! step (every row picks its best matching unit) with a batch adaptation step
//! in which each weight becomes the neighborhood-weighted mean of the data.
//! The neighborhood is a Gaussian over index distance whose radius shrinks
//! geometrically from `radius_start` to `radius_end`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_dims, Error, Result};
use crate::metrics::{euclidean_distance, squared_distance_unchecked};
use crate::types::Dataset;

/// Name of the generator behind every seeded draw in the crate.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Denominators below this leave a node's weight untouched.
const EMPTY_NEIGHBORHOOD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Evenly spaced along the first principal direction, spanning ±2σ.
    Linear,
    /// `K` distinct data rows drawn without replacement.
    RandomSample,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Linear => "linear",
            InitMode::RandomSample => "random_sample",
        }
    }
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(InitMode::Linear),
            "random_sample" | "random-sample" => Ok(InitMode::RandomSample),
            other => Err(Error::config(format!("unknown init mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub nodes: usize,
    pub epochs: usize,
    pub radius_start: f64,
    pub radius_end: f64,
    pub seed: u64,
    pub init: InitMode,
}

impl TrainConfig {
    /// Toolbox-style defaults: `2·ceil(10·K/N) + 10` epochs, radius from
    /// `max(K/8, 1)` down to 1, linear initialization.
    pub fn with_defaults(nodes: usize, rows: usize, seed: u64) -> Self {
        let rows = rows.max(1);
        let epochs = 2 * (10 * nodes).div_ceil(rows) + 10;
        Self {
            nodes,
            epochs,
            radius_start: (nodes as f64 / 8.0).max(1.0),
            radius_end: 1.0,
            seed,
            init: InitMode::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::config("a map needs at least 2 nodes"));
        }
        if self.epochs < 1 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.radius_end > 0.0 && self.radius_start >= self.radius_end) {
            return Err(Error::config(format!(
                "radius schedule must satisfy start >= end > 0 (got {} -> {})",
                self.radius_start, self.radius_end
            )));
        }
        if !self.radius_start.is_finite() {
            return Err(Error::config("radius_start must be finite"));
        }
        Ok(())
    }

    /// Radius used in epoch `epoch` (0-based), interpolated geometrically.
    pub fn radius_at(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.radius_end;
        }
        let t = epoch as f64 / (self.epochs - 1) as f64;
        self.radius_start * (self.radius_end / self.radius_start).powf(t)
    }
}

/// What training recorded about itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub radius_start: f64,
    pub radius_end: f64,
    pub init: InitMode,
    pub seed: u64,
    pub final_quantization_error: f64,
    /// Mean squared distance of the training rows from their centroid.
    pub total_variance: f64,
}

impl TrainingMeta {
    fn untrained() -> Self {
        Self {
            epochs: 0,
            radius_start: 1.0,
            radius_end: 1.0,
            init: InitMode::Linear,
            seed: 0,
            final_quantization_error: 0.0,
            total_variance: 0.0,
        }
    }
}

/// A trained one-dimensional map: `K` ordered nodes with `n`-dimensional weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SomModel {
    weights: Vec<f64>,
    nodes: usize,
    dim: usize,
    meta: TrainingMeta,
}

impl SomModel {
    /// Wraps a row-major `K×n` weight matrix, e.g. for hand-built maps.
    pub fn from_weights(weights: Vec<f64>, dim: usize) -> Result<Self> {
        Self::with_meta(weights, dim, TrainingMeta::untrained())
    }

    pub fn with_meta(weights: Vec<f64>, dim: usize, meta: TrainingMeta) -> Result<Self> {
        if dim == 0 || weights.is_empty() || !weights.len().is_multiple_of(dim) {
            return Err(Error::contract("weights must form a non-empty K×n matrix"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::contract("weights must be finite"));
        }
        let nodes = weights.len() / dim;
        Ok(Self {
            weights,
            nodes,
            dim,
            meta,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Weight vector of the 1-based node `index`.
    pub fn weight(&self, index: usize) -> &[f64] {
        let j = index - 1;
        &self.weights[j * self.dim..(j + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub(crate) fn sq_distances(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.dim)
            .map(|w| squared_distance_unchecked(w, x))
            .collect()
    }
}

/// Gaussian neighborhood `exp(-(i-j)^2 / (2 r^2))` over index distance.
pub fn neighborhood(i: usize, j: usize, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::contract(format!("radius must be > 0, got {radius}")));
    }
    Ok(kernel(i.abs_diff(j), radius))
}

#[inline]
fn kernel(index_gap: usize, radius: f64) -> f64 {
    let d = index_gap as f64;
    (-(d * d) / (2.0 * radius * radius)).exp()
}

/// 0-based position of the nearest weight row; ties go to the lowest index.
#[inline]
fn nearest(weights: &[f64], dim: usize, x: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, w) in weights.chunks_exact(dim).enumerate() {
        let d = squared_distance_unchecked(w, x);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    (best, best_d)
}

/// 1-based index of the node nearest to `x` (lowest index on ties).
pub fn best_matching_unit(model: &SomModel, x: &[f64]) -> Result<usize> {
    check_dims(model.dim, x.len())?;
    Ok(nearest(&model.weights, model.dim, x).0 + 1)
}

/// Places the initial `K×n` weights.
pub fn init_weights(data: &Dataset, cfg: &TrainConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 1,
            available: data.len(),
        });
    }
    match cfg.init {
        InitMode::Linear => Ok(linear_init(data, cfg.nodes)),
        InitMode::RandomSample => {
            if cfg.nodes > data.len() {
                return Err(Error::config(format!(
                    "random_sample init needs K <= N (K = {}, N = {})",
                    cfg.nodes,
                    data.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let picks = index::sample(&mut rng, data.len(), cfg.nodes);
            let mut out = Vec::with_capacity(cfg.nodes * data.dim());
            for i in picks.iter() {
                out.extend_from_slice(data.row(i));
            }
            Ok(out)
        }
    }
}

fn linear_init(data: &Dataset, nodes: usize) -> Vec<f64> {
    let dim = data.dim();
    let n = data.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in data.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let centered: Vec<f64> = data
        .rows()
        .flat_map(|row| row.iter().zip(&mean).map(|(v, m)| v - m))
        .collect();
    let (axis, sigma) = principal_axis(&centered, dim);

    let mut out = Vec::with_capacity(nodes * dim);
    for j in 0..nodes {
        let offset = -2.0 * sigma + 4.0 * sigma * j as f64 / (nodes - 1) as f64;
        out.extend(mean.iter().zip(&axis).map(|(m, u)| m + offset * u));
    }
    out
}

/// Leading eigenvector of the covariance of `centered` (by power iteration)
/// and the standard deviation of the data along it.
fn principal_axis(centered: &[f64], dim: usize) -> (Vec<f64>, f64) {
    let rows = centered.len() / dim;
    let project = |v: &[f64]| -> Vec<f64> {
        centered
            .chunks_exact(dim)
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    };

    // Start from the row farthest from the mean.
    let start = centered
        .chunks_exact(dim)
        .map(|r| r.iter().map(|x| x * x).sum::<f64>())
        .enumerate()
        .fold((0, 0.0), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
    if start.1 == 0.0 {
        let mut axis = vec![0.0; dim];
        axis[0] = 1.0;
        return (axis, 0.0);
    }
    let mut v: Vec<f64> = centered[start.0 * dim..(start.0 + 1) * dim].to_vec();
    normalize_in_place(&mut v);

    for _ in 0..500 {
        let scores = project(&v);
        let mut next = vec![0.0; dim];
        for (r, s) in centered.chunks_exact(dim).zip(&scores) {
            for (acc, x) in next.iter_mut().zip(r) {
                *acc += s * x;
            }
        }
        if normalize_in_place(&mut next) == 0.0 {
            break;
        }
        let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if delta < 1e-13 {
            break;
        }
    }

    // Sign convention: the largest-magnitude component is positive.
    let pivot = v.iter().enumerate().fold(
        0,
        |best, (i, x)| if x.abs() > v[best].abs() { i } else { best },
    );
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }

    let var = project(&v).iter().map(|s| s * s).sum::<f64>() / rows as f64;
    (v, var.sqrt())
}

fn normalize_in_place(v: &mut [f64]) -> f64 {
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len > 0.0 {
        v.iter_mut().for_each(|x| *x /= len);
    }
    len
}

/// One batch update: assign every row to its best matching unit, then set
/// each weight to the neighborhood-weighted mean of the data.
///
/// Rows are accumulated per winning node in ascending row order, so the
/// result does not depend on how the assignment pass is scheduled.
pub fn batch_epoch(weights: &[f64], data: &Dataset, radius: f64) -> Result<Vec<f64>> {
    let dim = data.dim();
    if weights.is_empty() || !weights.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: weights.len(),
        });
    }
    if !(radius > 0.0) {
        return Err(Error::contract(format!("radius must be > 0, got {radius}")));
    }
    let nodes = weights.len() / dim;

    let winners: Vec<usize> = data
        .values()
        .par_chunks(dim)
        .map(|x| nearest(weights, dim, x).0)
        .collect();

    // Per-node running means, updated in ascending row order.
    let mut means = vec![0.0; nodes * dim];
    let mut counts = vec![0usize; nodes];
    for (x, &b) in data.rows().zip(&winners) {
        counts[b] += 1;
        let k = counts[b] as f64;
        for (m, v) in means[b * dim..(b + 1) * dim].iter_mut().zip(x) {
            *m += (v - *m) / k;
        }
    }

    let h: Vec<f64> = (0..nodes).map(|gap| kernel(gap, radius)).collect();
    let hit: Vec<usize> = (0..nodes).filter(|&b| counts[b] > 0).collect();

    let mut out = weights.to_vec();
    let mut acc = vec![0.0; dim];
    for j in 0..nodes {
        let den: f64 = hit
            .iter()
            .map(|&b| h[b.abs_diff(j)] * counts[b] as f64)
            .sum();
        if den < EMPTY_NEIGHBORHOOD {
            continue;
        }
        acc.iter_mut().for_each(|v| *v = 0.0);
        for &b in &hit {
            let share = h[b.abs_diff(j)] * counts[b] as f64 / den;
            if share == 0.0 {
                continue;
            }
            for (a, m) in acc.iter_mut().zip(&means[b * dim..(b + 1) * dim]) {
                *a += share * m;
            }
        }
        out[j * dim..(j + 1) * dim].copy_from_slice(&acc);
    }
    Ok(out)
}

/// Trains a map. A pure function of `(data, cfg)`.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<SomModel> {
    let mut weights = init_weights(data, cfg)?;
    for epoch in 0..cfg.epochs {
        weights = batch_epoch(&weights, data, cfg.radius_at(epoch))?;
    }
    let dim = data.dim();
    let sq: Vec<f64> = data
        .values()
        .par_chunks(dim)
        .map(|x| nearest(&weights, dim, x).1)
        .collect();
    let qe = sq.iter().map(|d| d.sqrt()).sum::<f64>() / data.len() as f64;
    SomModel::with_meta(
        weights,
        dim,
        TrainingMeta {
            epochs: cfg.epochs,
            radius_start: cfg.radius_start,
            radius_end: cfg.radius_end,
            init: cfg.init,
            seed: cfg.seed,
            final_quantization_error: qe,
            total_variance: total_variance(data),
        },
    )
}

/// Mean squared distance from the rows to their centroid (the trace of the
/// population covariance).
pub fn total_variance(data: &Dataset) -> f64 {
    let n = data.len() as f64;
    let mut mean = vec![0.0; data.dim()];
    for row in data.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    data.rows()
        .map(|r| squared_distance_unchecked(r, &mean))
        .sum::<f64>()
        / n
}

/// Mean distance from each row to its best matching unit.
pub fn quantization_error(model: &SomModel, data: &Dataset) -> Result<f64> {
    check_dims(model.dim, data.dim())?;
    let total: f64 = data
        .rows()
        .map(|x| nearest(&model.weights, model.dim, x).1.sqrt())
        .sum();
    Ok(total / data.len() as f64)
}

/// `K×K` matrix of Euclidean distances between node weights.
pub fn pairwise_weight_distances(model: &SomModel) -> Vec<Vec<f64>> {
    let k = model.nodes;
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = squared_distance_unchecked(model.weight(i + 1), model.weight(j + 1)).sqrt();
            out[i][j] = d;
            out[j][i] = d;
        }
    }
    out
}

/// Fraction of nodes whose nearest other node (in weight space) is an index
/// neighbor. Ties resolve to the lowest index.
pub fn neighbor_banding(model: &SomModel) -> f64 {
    let dist = pairwise_weight_distances(model);
    let k = model.nodes;
    let hits = (0..k)
        .filter(|&j| {
            let nearest_other = (0..k)
                .filter(|&i| i != j)
                .fold(None::<usize>, |best, i| match best {
                    Some(b) if dist[b][j] <= dist[i][j] => Some(b),
                    _ => Some(i),
                })
                .expect("K >= 2");
            nearest_other.abs_diff(j) == 1
        })
        .count();
    hits as f64 / k as f64
}

/// Share of index triples `(i, j, k)` with `|i-j| < |i-k|` whose weights
/// satisfy `||w_i - w_j|| < ||w_i - w_k||`.
///
/// Enumerates every triple when `K^3 <= 10^6`; otherwise draws
/// `sample_size` triples uniformly with a seeded generator.
pub fn ordering_score(model: &SomModel, sample_size: usize, seed: u64) -> Result<f64> {
    let k = model.nodes;
    if k < 3 {
        return Err(Error::contract("ordering score needs at least 3 nodes"));
    }
    if k.pow(3) <= 1_000_000 {
        let dist = pairwise_weight_distances(model);
        let mut good = 0u64;
        let mut total = 0u64;
        for i in 0..k {
            for j in 0..k {
                if j == i {
                    continue;
                }
                let near = i.abs_diff(j);
                for kk in 0..k {
                    if i.abs_diff(kk) > near {
                        total += 1;
                        if dist[i][j] < dist[i][kk] {
                            good += 1;
                        }
                    }
                }
            }
        }
        return Ok(good as f64 / total as f64);
    }
    if sample_size == 0 {
        return Err(Error::contract("sample_size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut good = 0usize;
    let mut drawn = 0usize;
    while drawn < sample_size {
        let i = rng.random_range(0..k);
        let j = rng.random_range(0..k);
        let kk = rng.random_range(0..k);
        if j == i || i.abs_diff(j) >= i.abs_diff(kk) {
            continue;
        }
        drawn += 1;
        let wi = model.weight(i + 1);
        if euclidean_distance(wi, model.weight(j + 1))?
            < euclidean_distance(wi, model.weight(kk + 1))?
        {
            good += 1;
        }
    }
    Ok(good as f64 / sample_size as f64)
}
