//! Per-column z-score normalization.

use crate::error::{check_dims, Result};
use crate::types::{Dataset, NormMode, NormalizationParams};

/// Columns whose standard deviation falls below this get unit scale.
const CONSTANT_COLUMN: f64 = 1e-12;

/// Fits per-column mean and (population) standard deviation. Constant
/// columns are centered, given scale 1 and listed in `constant_columns`.
pub fn normalize_fit(data: &Dataset, mode: NormMode) -> Result<NormalizationParams> {
    let dim = data.dim();
    if mode == NormMode::None {
        return Ok(NormalizationParams::identity(dim));
    }
    let n = data.len() as f64;
    let mut center = vec![0.0; dim];
    for row in data.rows() {
        for (c, v) in center.iter_mut().zip(row) {
            *c += v;
        }
    }
    center.iter_mut().for_each(|c| *c /= n);
    let mut var = vec![0.0; dim];
    for row in data.rows() {
        for ((acc, v), c) in var.iter_mut().zip(row).zip(&center) {
            *acc += (v - c) * (v - c);
        }
    }
    let mut constant_columns = Vec::new();
    let scale = var
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let sd = (v / n).sqrt();
            if sd < CONSTANT_COLUMN {
                constant_columns.push(j);
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(NormalizationParams {
        mode,
        center,
        scale,
        constant_columns,
    })
}

pub fn apply_row(params: &NormalizationParams, row: &[f64]) -> Result<Vec<f64>> {
    check_dims(params.dim(), row.len())?;
    Ok(match params.mode {
        NormMode::None => row.to_vec(),
        NormMode::ZScore => row
            .iter()
            .zip(&params.center)
            .zip(&params.scale)
            .map(|((v, c), s)| (v - c) / s)
            .collect(),
    })
}

pub fn invert_row(params: &NormalizationParams, row: &[f64]) -> Result<Vec<f64>> {
    check_dims(params.dim(), row.len())?;
    Ok(match params.mode {
        NormMode::None => row.to_vec(),
        NormMode::ZScore => row
            .iter()
            .zip(&params.center)
            .zip(&params.scale)
            .map(|((v, c), s)| v * s + c)
            .collect(),
    })
}

fn map_rows(data: &Dataset, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Dataset> {
    let mut values = Vec::with_capacity(data.values().len());
    for row in data.rows() {
        values.extend(f(row)?);
    }
    Dataset::new(values, data.dim())
}

pub fn normalize_apply(params: &NormalizationParams, data: &Dataset) -> Result<Dataset> {
    check_dims(params.dim(), data.dim())?;
    if params.mode == NormMode::None {
        return Ok(data.clone());
    }
    map_rows(data, |r| apply_row(params, r))
}

pub fn normalize_invert(params: &NormalizationParams, data: &Dataset) -> Result<Dataset> {
    check_dims(params.dim(), data.dim())?;
    if params.mode == NormMode::None {
        return Ok(data.clone());
    }
    map_rows(data, |r| invert_row(params, r))
}
