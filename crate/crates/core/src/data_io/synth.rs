//! Seeded synthetic datasets.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::types::Dataset;

/// `count` scalar draws uniform on `[low, high)`.
pub fn synth_uniform_1d(count: usize, low: f64, high: f64, seed: u64) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::config("count must be at least 1"));
    }
    if !(low < high) || !low.is_finite() || !high.is_finite() {
        return Err(Error::config(format!(
            "need finite low < high, got [{low}, {high})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..count).map(|_| rng.random_range(low..high)).collect();
    Dataset::new(values, 1)
}

/// A `rows × cols` field drifting along the columns, flattened row-major per
/// time step: `sin(2π(c/cols - speed·t)) · cos(2π r/rows)` plus Gaussian noise.
pub fn synth_traveling_wave(
    rows: usize,
    cols: usize,
    steps: usize,
    speed: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    if rows * cols < 2 {
        return Err(Error::config("the field needs at least 2 cells"));
    }
    if steps < 2 {
        return Err(Error::config("need at least 2 time steps"));
    }
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() || !speed.is_finite() {
        return Err(Error::config("speed must be finite and noise_sd >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::config(e.to_string()))?;
    let mut values = Vec::with_capacity(steps * rows * cols);
    for t in 0..steps {
        // Reduce the drift first so whole periods map to identical phases.
        let shift = (speed * t as f64).rem_euclid(1.0);
        for r in 0..rows {
            let amp = (2.0 * PI * r as f64 / rows as f64).cos();
            for c in 0..cols {
                let phase = 2.0 * PI * (c as f64 / cols as f64 - shift);
                let mut v = phase.sin() * amp;
                if noise_sd > 0.0 {
                    v += noise.sample(&mut rng);
                }
                values.push(v);
            }
        }
    }
    Dataset::new(values, rows * cols)
}
