//! Distance and error measures shared by every stage.

use crate::error::{check_dims, Error, Result};

#[inline]
pub(crate) fn squared_distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    Ok(squared_distance_unchecked(a, b))
}

/// Euclidean distance `sqrt(sum (a_k - b_k)^2)`.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    squared_distance(a, b).map(f64::sqrt)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||est - real|| / ||real||`. A zero reference norm is reported as
/// [`Error::DegenerateReference`] rather than returning infinity.
pub fn relative_error(est: &[f64], real: &[f64]) -> Result<f64> {
    let diff = euclidean_distance(est, real)?;
    let scale = norm(real);
    if scale == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok(diff / scale)
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            out[idx] = rank;
        }
        start = end;
    }
    out
}

/// Spearman rank correlation between two equally long samples.
///
/// Returns 0 when either sample is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    if a.len() < 2 {
        return Err(Error::contract(
            "rank correlation needs at least two points",
        ));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va * vb).sqrt())
}
