use ndarray::ArrayView2;
use serde::Serialize;

use crate::error::{Error, Result};

/// Squared Pearson correlation; 0 when the prediction is constant.
pub fn r_squared(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch(format!("{} predictions vs {} targets", pred.len(), target.len())));
    }
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let mt = target.iter().sum::<f64>() / n;
    let (mut spp, mut stt, mut spt) = (0.0, 0.0, 0.0);
    for (&p, &t) in pred.iter().zip(target) {
        spp += (p - mp) * (p - mp);
        stt += (t - mt) * (t - mt);
        spt += (p - mp) * (t - mt);
    }
    if stt == 0.0 {
        return Err(Error::DegenerateTarget("target is constant on the evaluated rows".into()));
    }
    if spp == 0.0 {
        return Ok(0.0);
    }
    Ok((spt * spt / (spp * stt)).clamp(0.0, 1.0))
}

/// Per-depth r² of column K against target column K, and their sum.
pub fn capacity(pred: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<(Vec<f64>, f64)> {
    capacity_with_floor(pred, targets, 0.0)
}

/// As [`capacity`], zeroing any r² below `floor` before summing.
pub fn capacity_with_floor(pred: ArrayView2<f64>, targets: ArrayView2<f64>, floor: f64) -> Result<(Vec<f64>, f64)> {
    if pred.dim() != targets.dim() {
        return Err(Error::DimensionMismatch(format!("{:?} predictions vs {:?} targets", pred.dim(), targets.dim())));
    }
    if targets.ncols() == 0 {
        return Err(Error::DimensionMismatch("no memory depths".into()));
    }
    let r2 = pred
        .columns()
        .into_iter()
        .zip(targets.columns())
        .map(|(p, t)| {
            let r = r_squared(&p.to_vec(), &t.to_vec())?;
            Ok(if r < floor { 0.0 } else { r })
        })
        .collect::<Result<Vec<f64>>>()?;
    let total = r2.iter().sum();
    Ok((r2, total))
}

/// `sum (pred - target)^2 / sum (target - mean(target))^2`.
pub fn nmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch(format!("{} predictions vs {} targets", pred.len(), target.len())));
    }
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    let var: f64 = target.iter().map(|t| (t - mean) * (t - mean)).sum();
    if !(var > 0.0) {
        return Err(Error::DegenerateTarget("target has zero variance".into()));
    }
    let err: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(err / var)
}

/// Collected task scores; fields a task does not produce stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub r2_per_k: Vec<f64>,
    pub capacity: Option<f64>,
    pub nmse: Option<f64>,
    pub accuracy: Option<f64>,
    pub confusion: Option<Vec<Vec<usize>>>,
}

impl Metrics {
    /// `(metric, value)` rows in a fixed order.
    pub fn rows(&self) -> Vec<(String, f64)> {
        let mut rows: Vec<(String, f64)> =
            self.r2_per_k.iter().enumerate().map(|(k, r)| (format!("r2_K{}", k + 1), *r)).collect();
        rows.extend(self.capacity.map(|c| ("capacity".to_string(), c)));
        rows.extend(self.nmse.map(|c| ("nmse".to_string(), c)));
        rows.extend(self.accuracy.map(|c| ("accuracy".to_string(), c)));
        if let Some(conf) = &self.confusion {
            for (i, row) in conf.iter().enumerate() {
                for (j, &c) in row.iter().enumerate() {
                    rows.push((format!("confusion_{i}_{j}"), c as f64));
                }
            }
        }
        rows
    }
}
