//! Extrapolation metrics comparing a prediction vector with a reference vector.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub rel_l2: f64,
    pub explained_variance: f64,
    pub max_error: f64,
    pub mean_abs_error: f64,
}

fn check_len(pred: &[f64], reference: &[f64]) -> Result<()> {
    if pred.len() != reference.len() {
        return Err(Error::ShapeMismatch {
            expected: reference.len(),
            actual: pred.len(),
        });
    }
    Ok(())
}

/// `||pred - ref||_2 / ||ref||_2`.
pub fn rel_l2(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_len(pred, reference)?;
    let num: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum();
    let den: f64 = reference.iter().map(|r| r * r).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference("norm"));
    }
    Ok((num / den).sqrt())
}

fn mean(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    v.sum::<f64>() / n
}

fn variance(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = mean(v.clone());
    mean(v.map(|x| (x - m) * (x - m)))
}

/// `1 - Var(ref - pred) / Var(ref)` with population variances.
pub fn explained_variance(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_len(pred, reference)?;
    let var_ref = variance(reference.iter().copied());
    if reference.is_empty() || var_ref == 0.0 {
        return Err(Error::ZeroReference("variance"));
    }
    let var_res = variance(reference.iter().zip(pred).map(|(r, p)| r - p));
    Ok(1.0 - var_res / var_ref)
}

pub fn max_error(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_len(pred, reference)?;
    Ok(pred
        .iter()
        .zip(reference)
        .map(|(p, r)| (p - r).abs())
        .fold(0.0, f64::max))
}

pub fn mean_abs_error(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_len(pred, reference)?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    Ok(pred.iter().zip(reference).map(|(p, r)| (p - r).abs()).sum::<f64>() / pred.len() as f64)
}

/// Pointwise modulus of interleaved `(re, im)` pairs.
pub fn magnitudes(interleaved: &[f64]) -> Vec<f64> {
    interleaved
        .chunks_exact(2)
        .map(|c| c[0].hypot(c[1]))
        .collect()
}

impl MetricsReport {
    pub fn compute(pred: &[f64], reference: &[f64]) -> Result<Self> {
        Ok(Self {
            rel_l2: rel_l2(pred, reference)?,
            explained_variance: explained_variance(pred, reference)?,
            max_error: max_error(pred, reference)?,
            mean_abs_error: mean_abs_error(pred, reference)?,
        })
    }

    /// Compares sample-major predictions with `channels` values per point;
    /// two-channel (complex) fields are compared through their moduli.
    pub fn compare_fields(pred: &[f64], reference: &[f64], channels: usize) -> Result<Self> {
        if channels == 2 {
            check_len(pred, reference)?;
            Self::compute(&magnitudes(pred), &magnitudes(reference))
        } else {
            Self::compute(pred, reference)
        }
    }

    pub const CSV_HEADER: [&'static str; 4] = ["rel_l2", "explained_variance", "max_error", "mean_abs_error"];

    pub fn csv_fields(&self) -> [String; 4] {
        [
            format!("{:?}", self.rel_l2),
            format!("{:?}", self.explained_variance),
            format!("{:?}", self.max_error),
            format!("{:?}", self.mean_abs_error),
        ]
    }
}
