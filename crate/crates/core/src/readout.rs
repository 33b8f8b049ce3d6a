//! Ridge-regression readout with per-column standardization, washout and splitting.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Cholesky;
use crate::nodes::StateMatrix;
use crate::scalar::Real;

/// Symbols dropped from the front of time-series tasks unless configured.
pub const DEFAULT_WASHOUT: usize = 50;

/// Share of the training rows held out for lambda selection.
pub const VALIDATION_FRACTION: f64 = 0.2;

/// `{0, 1e-8, 1e-7, ..., 1e-1}`.
pub fn default_lambda_grid() -> Vec<f64> {
    std::iter::once(0.0).chain((-8..=-1).map(|e| 10f64.powi(e))).collect()
}

/// Trained linear map `y = ((x - mean) / scale) W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel<T> {
    /// `[n_nodes x n_outputs]`, acting on standardized states.
    pub weights: Array2<T>,
    pub bias: Array1<T>,
    pub lambda: f64,
    pub state_mean: Array1<T>,
    /// Training standard deviation per column; 1 for constant columns.
    pub state_scale: Array1<T>,
    /// Mean squared training residual over all outputs.
    pub training_mse: f64,
}

/// Ridge solution `(X^T X + lambda I)^-1 X^T Y` with no intercept or scaling.
pub fn ridge_solve<T: Real>(x: ArrayView2<T>, y: ArrayView2<T>, lambda: f64) -> Result<Array2<T>> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!("{} state rows vs {} target rows", x.nrows(), y.nrows())));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda", "must be finite and >= 0"));
    }
    let mut a = x.t().dot(&x);
    let l = T::lit(lambda);
    for i in 0..a.nrows() {
        a[[i, i]] += l;
    }
    let b = x.t().dot(&y);
    let chol = Cholesky::new(a.view())
        .ok_or_else(|| Error::Singular(format!("{} x {} Gram matrix at lambda = {lambda:e}", a.nrows(), a.ncols())))?;
    Ok(chol.solve(b.view()))
}

/// Column means and standard deviations; constant columns get scale 1 and are flagged.
pub(crate) fn column_stats<T: Real>(x: ArrayView2<T>) -> (Array1<T>, Array1<T>, Vec<usize>) {
    let n = T::lit(x.nrows() as f64);
    let mut mean = Array1::zeros(x.ncols());
    let mut scale = Array1::ones(x.ncols());
    let mut constant = Vec::new();
    for (j, col) in x.columns().into_iter().enumerate() {
        let m = col.sum() / n;
        mean[j] = m;
        if col.iter().all(|&v| v == col[0]) {
            constant.push(j);
            mean[j] = col[0];
            continue;
        }
        let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / n;
        if var > T::zero() {
            scale[j] = var.sqrt();
        }
    }
    (mean, scale, constant)
}

fn standardize<T: Real>(x: ArrayView2<T>, mean: &Array1<T>, scale: &Array1<T>) -> Array2<T> {
    let mut z = x.to_owned();
    for (j, mut col) in z.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|v| (v - mean[j]) / scale[j]);
    }
    z
}

/// Minimizes `|Z W + b - Y|^2 + lambda |W|^2` over standardized states `Z`, bias unpenalized.
pub fn train_ridge_matrix<T: Real>(x: ArrayView2<T>, y: ArrayView2<T>, lambda: f64) -> Result<ReadoutModel<T>> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!("{} state rows vs {} target rows", x.nrows(), y.nrows())));
    }
    if x.nrows() == 0 {
        return Err(Error::EmptyPartition("no training rows".into()));
    }
    let (state_mean, state_scale, constant) = column_stats(x);
    if lambda == 0.0 && !constant.is_empty() {
        return Err(Error::Singular(format!("state columns {constant:?} are constant over the training rows")));
    }
    let z = standardize(x, &state_mean, &state_scale);
    let y_mean = y.mean_axis(Axis(0)).expect("non-empty");
    let yc = &y - &y_mean;
    let weights = ridge_solve(z.view(), yc.view(), lambda)?;
    let resid = z.dot(&weights) - &yc;
    let training_mse = resid.iter().map(|v| v.as_f64().powi(2)).sum::<f64>() / resid.len().max(1) as f64;
    Ok(ReadoutModel { weights, bias: y_mean, lambda, state_mean, state_scale, training_mse })
}

pub fn train_ridge<T: Real>(states: &StateMatrix<T>, targets: &Array2<T>, lambda: f64) -> Result<ReadoutModel<T>> {
    train_ridge_matrix(states.values.view(), targets.view(), lambda)
}

/// Fixed regularization or a grid searched on the last 20% of the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaChoice {
    Fixed(f64),
    Grid(Vec<f64>),
}

impl Default for LambdaChoice {
    fn default() -> Self {
        LambdaChoice::Grid(default_lambda_grid())
    }
}

/// Picks lambda by validation MSE, then retrains on all training rows.
///
/// Grid values whose system is singular are skipped.
pub fn train_with_choice<T: Real>(
    x: ArrayView2<T>,
    y: ArrayView2<T>,
    choice: &LambdaChoice,
) -> Result<ReadoutModel<T>> {
    let grid = match choice {
        LambdaChoice::Fixed(l) => return train_ridge_matrix(x, y, *l),
        LambdaChoice::Grid(g) if g.is_empty() => return Err(invalid("readout.lambda", "empty grid")),
        LambdaChoice::Grid(g) => g,
    };
    let n = x.nrows();
    let n_val = ((n as f64) * VALIDATION_FRACTION).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(Error::EmptyPartition(format!("{n} training rows leave no validation tail")));
    }
    let cut = n - n_val;
    let (xt, xv) = x.split_at(Axis(0), cut);
    let (yt, yv) = y.split_at(Axis(0), cut);
    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    for &lambda in grid {
        match train_ridge_matrix(xt, yt, lambda) {
            Ok(model) => {
                let pred = predict_matrix(&model, xv)?;
                let mse = (&pred - &yv).iter().map(|v| v.as_f64().powi(2)).sum::<f64>();
                if mse.is_finite() && best.is_none_or(|(_, b)| mse < b) {
                    best = Some((lambda, mse));
                }
            }
            Err(e @ Error::Singular(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    match best {
        Some((lambda, _)) => train_ridge_matrix(x, y, lambda),
        None => Err(last_err.unwrap_or_else(|| Error::Singular("every grid value failed".into()))),
    }
}

pub fn predict_matrix<T: Real>(model: &ReadoutModel<T>, x: ArrayView2<T>) -> Result<Array2<T>> {
    if x.ncols() != model.weights.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} nodes, states have {}",
            model.weights.nrows(),
            x.ncols()
        )));
    }
    let z = standardize(x, &model.state_mean, &model.state_scale);
    Ok(z.dot(&model.weights) + &model.bias)
}

/// `XW + b`, row-aligned with `states`.
pub fn predict<T: Real>(model: &ReadoutModel<T>, states: &StateMatrix<T>) -> Result<Array2<T>> {
    predict_matrix(model, states.values.view())
}

const MAGIC: &[u8; 8] = b"SDRCRDT\0";
const FORMAT_VERSION: u32 = 1;

impl<T: Real> ReadoutModel<T> {
    pub fn n_nodes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.weights.ncols()
    }

    /// Versioned little-endian bundle: magic, version, nodes, outputs, lambda,
    /// training MSE, then mean, scale, row-major weights and bias as `f64`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_nodes() as u64).to_le_bytes())?;
        w.write_all(&(self.n_outputs() as u64).to_le_bytes())?;
        w.write_all(&self.lambda.to_le_bytes())?;
        w.write_all(&self.training_mse.to_le_bytes())?;
        let all = self.state_mean.iter().chain(&self.state_scale).chain(&self.weights).chain(&self.bias);
        for v in all {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| Error::Format("truncated readout header".into()))?;
        if &magic != MAGIC {
            return Err(Error::Format("not a readout bundle".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(|_| Error::Format("truncated readout header".into()))?;
        let version = u32::from_le_bytes(b4);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported readout version {version}")));
        }
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut b8).map_err(|_| Error::Format("truncated readout bundle".into()))?;
            Ok(b8)
        };
        let nodes = u64::from_le_bytes(next(&mut r)?) as usize;
        let outputs = u64::from_le_bytes(next(&mut r)?) as usize;
        let lambda = f64::from_le_bytes(next(&mut r)?);
        let training_mse = f64::from_le_bytes(next(&mut r)?);
        let mut take = |count: usize, r: &mut R| -> Result<Vec<T>> {
            (0..count).map(|_| Ok(T::lit(f64::from_le_bytes(next(r)?)))).collect()
        };
        let state_mean = Array1::from(take(nodes, &mut r)?);
        let state_scale = Array1::from(take(nodes, &mut r)?);
        let weights = Array2::from_shape_vec((nodes, outputs), take(nodes * outputs, &mut r)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        let bias = Array1::from(take(outputs, &mut r)?);
        Ok(Self { weights, bias, lambda, state_mean, state_scale, training_mse })
    }
}

/// How rows are divided into training and test sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub washout: usize,
    pub train_fraction: f64,
    /// `Some` shuffles items (classification); `None` keeps a contiguous time split.
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { washout: DEFAULT_WASHOUT, train_fraction: 0.5, shuffle_seed: None }
    }
}

impl SplitSpec {
    /// Train and test item indices for `n_items` items.
    pub fn indices(&self, n_items: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid("split.train_fraction", "must lie in (0, 1)"));
        }
        if self.washout >= n_items {
            return Err(Error::EmptyPartition(format!("washout {} leaves none of {n_items} rows", self.washout)));
        }
        let mut items: Vec<usize> = (self.washout..n_items).collect();
        let n_train = (items.len() as f64 * self.train_fraction).round() as usize;
        if n_train == 0 || n_train == items.len() {
            return Err(Error::EmptyPartition(format!(
                "train fraction {} of {} rows",
                self.train_fraction,
                items.len()
            )));
        }
        if let Some(seed) = self.shuffle_seed {
            items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let test = items.split_off(n_train);
        Ok((items, test))
    }
}

/// Row-aligned states and targets for one partition, with the source row indices.
#[derive(Debug, Clone)]
pub struct Partition<T> {
    pub states: StateMatrix<T>,
    pub targets: Array2<T>,
    pub rows: Vec<usize>,
}

pub fn split<T: Real>(
    states: &StateMatrix<T>,
    targets: &Array2<T>,
    spec: &SplitSpec,
) -> Result<(Partition<T>, Partition<T>)> {
    if states.n_symbols() != targets.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} state rows vs {} target rows",
            states.n_symbols(),
            targets.nrows()
        )));
    }
    let (train, test) = spec.indices(states.n_symbols())?;
    Ok((partition(states, targets, train)?, partition(states, targets, test)?))
}

/// Splits whole groups of rows (for example every symbol of one recording).
///
/// `bounds[i]` is the row range of group `i`; washout and shuffling act on groups.
pub fn split_groups<T: Real>(
    states: &StateMatrix<T>,
    targets: &Array2<T>,
    bounds: &[std::ops::Range<usize>],
    spec: &SplitSpec,
) -> Result<(Partition<T>, Partition<T>)> {
    if states.n_symbols() != targets.nrows() {
        return Err(Error::DimensionMismatch("state and target rows differ".into()));
    }
    if bounds.iter().any(|r| r.end > states.n_symbols()) {
        return Err(Error::DimensionMismatch("group bound beyond the state rows".into()));
    }
    let (train, test) = spec.indices(bounds.len())?;
    let rows = |groups: Vec<usize>| -> Vec<usize> { groups.into_iter().flat_map(|g| bounds[g].clone()).collect() };
    Ok((partition(states, targets, rows(train))?, partition(states, targets, rows(test))?))
}

fn partition<T: Real>(states: &StateMatrix<T>, targets: &Array2<T>, rows: Vec<usize>) -> Result<Partition<T>> {
    Ok(Partition { states: states.select_rows(&rows)?, targets: targets.select(Axis(0), &rows), rows })
}
