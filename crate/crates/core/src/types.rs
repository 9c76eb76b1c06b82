//! Shared domain types and their validity rules.

use crate::error::{Error, Result};

/// An ordered set of `N` observations of dimension `n`, stored row-major.
///
/// Every entry is finite, `N >= 1` and `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    rows: usize,
    dim: usize,
}

impl Dataset {
    /// Builds a dataset from row-major values with `dim` columns.
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::contract("dataset dimension must be at least 1"));
        }
        if values.is_empty() {
            return Err(Error::contract("dataset must hold at least one row"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::contract(format!(
                "{} values do not form rows of length {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "non-finite entry at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        let rows = values.len() / dim;
        Ok(Self { values, rows, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::contract("dataset must hold at least one row"))?;
        let mut values = Vec::with_capacity(dim * rows.len());
        for row in rows {
            crate::error::check_dims(dim, row.as_ref().len())?;
            values.extend_from_slice(row.as_ref());
        }
        Self::new(values, dim)
    }

    /// Number of observations `N`.
    pub fn len(&self) -> usize {
        self.rows
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Observation dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Rows `start..end` as a new dataset.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.rows {
            return Err(Error::contract(format!(
                "row range {start}..{end} invalid for {} rows",
                self.rows
            )));
        }
        Self::new(
            self.values[start * self.dim..end * self.dim].to_vec(),
            self.dim,
        )
    }

    /// The last `count` rows.
    pub fn tail(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.rows {
            return Err(Error::InsufficientData {
                needed: count.saturating_sub(1),
                available: self.rows,
            });
        }
        self.slice(self.rows - count, self.rows)
    }
}

/// A probability vector over the `K` contextual numbers of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    probs: Vec<f64>,
}

impl Posterior {
    /// Wraps probabilities that are non-negative and sum to one within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::contract("posterior must be non-empty"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::contract("posterior entries must be finite and >= 0"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!("posterior sums to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of the 1-based contextual number `index`.
    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index - 1]
    }

    pub fn max(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }
}

/// A position on a trained one-dimensional map, in `[1, K]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ContextualNumber(f64);

impl ContextualNumber {
    pub fn new(value: f64, nodes: usize) -> Result<Self> {
        if value.is_finite() && value >= 1.0 && value <= nodes as f64 {
            Ok(Self(value))
        } else {
            Err(Error::OutOfRange { value, nodes })
        }
    }

    /// Clamps `value` into `[1, nodes]`, reporting whether clamping occurred.
    pub fn clamped(value: f64, nodes: usize) -> (Self, bool) {
        let hi = nodes as f64;
        if value.is_nan() {
            return (Self(1.0), true);
        }
        if value < 1.0 {
            (Self(1.0), true)
        } else if value > hi {
            (Self(hi), true)
        } else {
            (Self(value), false)
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Intercept plus `d` autoregressive coefficients; coefficient `i` multiplies
/// the value `i + 1` steps back.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    intercept: f64,
    coefficients: Vec<f64>,
    ridge: bool,
}

impl ForecastModel {
    pub fn new(intercept: f64, coefficients: Vec<f64>, ridge: bool) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::contract("autoregressive lag must be at least 1"));
        }
        if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::contract(
                "autoregressive coefficients must be finite",
            ));
        }
        Ok(Self {
            intercept,
            coefficients,
            ridge,
        })
    }

    pub fn lag(&self) -> usize {
        self.coefficients.len()
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// True when the fit fell back to ridge regression on a rank-deficient system.
    pub fn used_ridge(&self) -> bool {
        self.ridge
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    None,
    ZScore,
}

impl NormMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormMode::None => "none",
            NormMode::ZScore => "zscore",
        }
    }
}

impl std::str::FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NormMode::None),
            "zscore" => Ok(NormMode::ZScore),
            other => Err(Error::config(format!(
                "unknown normalization mode `{other}`"
            ))),
        }
    }
}

/// Per-column affine normalization `(x - center) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationParams {
    pub mode: NormMode,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    /// Columns whose spread was below 1e-12 and got unit scale.
    pub constant_columns: Vec<usize>,
}

impl NormalizationParams {
    pub fn identity(dim: usize) -> Self {
        Self {
            mode: NormMode::None,
            center: vec![0.0; dim],
            scale: vec![1.0; dim],
            constant_columns: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}
