//! Node-subset selection over a precomputed pool of state columns.
//!
//! The pool is laid out detector-major: column `d * per_detector + i` holds node
//! `i` of detector `d`. A trial picks node indices and evaluates the readout on
//! the corresponding columns. Training and test moments of the whole pool are
//! computed once, so a trial only solves a small ridge system.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::Write;

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Cholesky;
use crate::nodes::{pool_nodes, Envelope, FilterSpec, StateMatrix};
use crate::pipeline::{extract_states, run_reservoir, Extraction, PipelineConfig};
use crate::readout::{column_stats, predict, split, train_ridge, SplitSpec};
use crate::scalar::Real;
use crate::tasks::{capacity, nmse, TaskDataset, TaskKind};

/// Ridge penalty used inside the search unless configured.
pub const DEFAULT_SEARCH_LAMBDA: f64 = 1e-6;

/// What a trial is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Sum of r² over all target columns; higher is better.
    Capacity,
    /// Mean NMSE over target columns; lower is better.
    Nmse,
}

impl Objective {
    pub fn for_task(kind: TaskKind) -> Result<Self> {
        match kind {
            TaskKind::Parity { .. } => Ok(Objective::Capacity),
            TaskKind::Narma2 => Ok(Objective::Nmse),
            TaskKind::Classify { .. } => Err(invalid("task.kind", "node search supports parity and NARMA-2 tasks")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Capacity => "capacity",
            Objective::Nmse => "nmse",
        }
    }

    /// Orders metric values best first; NaN sorts last.
    pub fn compare(self, a: f64, b: f64) -> Ordering {
        match (a.is_nan(), b.is_nan()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => match self {
                Objective::Capacity => b.total_cmp(&a),
                Objective::Nmse => a.total_cmp(&b),
            },
        }
    }
}

/// Whether a trial's node indices are shared by all detectors or drawn per detector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMode {
    #[default]
    Shared,
    /// `node_indices` holds `n_per_detector` indices for detector 0, then detector 1, ...
    PerDetector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub n_per_detector: usize,
    pub n_trials: usize,
    pub master_seed: u64,
    pub lambda: f64,
    pub split: SplitSpec,
    pub index_mode: IndexMode,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            n_per_detector: 5,
            n_trials: 10_000,
            master_seed: 1,
            lambda: DEFAULT_SEARCH_LAMBDA,
            split: SplitSpec::default(),
            index_mode: IndexMode::Shared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTrial {
    pub node_indices: Vec<usize>,
    pub metric_value: f64,
    pub seed: u64,
}

/// SplitMix64 finalizer; the per-trial seed is `mix(master ^ mix(index))`.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(master_seed ^ mix(trial_index))
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Advances `c` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..k {
        c[j] = c[j - 1] + 1;
    }
    true
}

/// Precomputed standardized moments of a pool for fast trial scoring.
#[derive(Debug, Clone)]
pub struct Evaluator {
    objective: Objective,
    n_detectors: usize,
    per_detector: usize,
    lambda: f64,
    n_test: f64,
    gram: Array2<f64>,
    cross: Array2<f64>,
    test_mean: Array1<f64>,
    test_scatter: Array2<f64>,
    test_cross: Array2<f64>,
    test_target_var: Array1<f64>,
    bias_offset: Array1<f64>,
}

impl Evaluator {
    pub fn new<T: Real>(
        pool: &StateMatrix<T>,
        n_detectors: usize,
        task: &TaskDataset,
        split_spec: &SplitSpec,
        lambda: f64,
    ) -> Result<Self> {
        let objective = Objective::for_task(task.kind)?;
        if n_detectors == 0 || pool.n_nodes() % n_detectors != 0 {
            return Err(invalid("n_detectors", format!("{} pool columns do not split into {n_detectors} detectors", pool.n_nodes())));
        }
        if pool.n_symbols() != task.len() {
            return Err(Error::DimensionMismatch(format!("{} state rows vs {} task rows", pool.n_symbols(), task.len())));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid("search.lambda", "must be finite and >= 0"));
        }
        let (train_rows, test_rows) = split_spec.indices(pool.n_symbols())?;
        let x = pool.values.mapv(|v| v.as_f64());
        let (xtr, xte) = (x.select(Axis(0), &train_rows), x.select(Axis(0), &test_rows));
        let (ytr, yte) = (task.targets.select(Axis(0), &train_rows), task.targets.select(Axis(0), &test_rows));
        let (mean, scale, _) = column_stats(xtr.view());
        let z = |m: &Array2<f64>| (m - &mean) / &scale;
        let (ztr, zte) = (z(&xtr), z(&xte));
        let ytr_mean = ytr.mean_axis(Axis(0)).expect("train rows");
        let gram = ztr.t().dot(&ztr);
        let cross = ztr.t().dot(&(&ytr - &ytr_mean));
        let test_mean = zte.mean_axis(Axis(0)).expect("test rows");
        let dte = &zte - &test_mean;
        let yte_mean = yte.mean_axis(Axis(0)).expect("test rows");
        let ete = &yte - &yte_mean;
        let test_target_var = ete.map_axis(Axis(0), |c| c.dot(&c));
        if let Some(k) = test_target_var.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::DegenerateTarget(format!("target column {k} is constant on the test rows")));
        }
        Ok(Self {
            objective,
            n_detectors,
            per_detector: pool.n_nodes() / n_detectors,
            lambda,
            n_test: test_rows.len() as f64,
            gram,
            cross,
            test_scatter: dte.t().dot(&dte),
            test_cross: dte.t().dot(&ete),
            test_mean,
            test_target_var,
            bias_offset: ytr_mean - yte_mean,
        })
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn per_detector(&self) -> usize {
        self.per_detector
    }

    /// Pool columns selected by `indices` under `mode`.
    pub fn columns(&self, indices: &[usize], mode: IndexMode) -> Vec<usize> {
        pool_columns(indices, mode, self.n_detectors, self.per_detector)
    }

    /// Test-set metric of a ridge readout trained on `columns`.
    pub fn evaluate(&self, columns: &[usize]) -> Result<f64> {
        if columns.is_empty() || columns.iter().any(|&c| c >= self.gram.nrows()) {
            return Err(invalid("columns", "empty or out of range"));
        }
        let mut a = self.gram.select(Axis(0), columns).select(Axis(1), columns);
        for i in 0..columns.len() {
            a[[i, i]] += self.lambda;
        }
        let b = self.cross.select(Axis(0), columns);
        let w = Cholesky::new(a.view())
            .ok_or_else(|| Error::Singular(format!("columns {columns:?} at lambda = {:e}", self.lambda)))?
            .solve(b.view());
        let sxx = self.test_scatter.select(Axis(0), columns).select(Axis(1), columns);
        let m: Array1<f64> = columns.iter().map(|&c| self.test_mean[c]).collect();
        let outputs = w.ncols();
        let mut total = 0.0;
        for k in 0..outputs {
            let wk = w.column(k);
            let vp = wk.dot(&sxx.dot(&wk));
            let cv: f64 = columns.iter().zip(wk).map(|(&c, &wi)| wi * self.test_cross[[c, k]]).sum();
            let syy = self.test_target_var[k];
            total += match self.objective {
                Objective::Capacity => {
                    if vp > 0.0 {
                        (cv * cv / (vp * syy)).clamp(0.0, 1.0)
                    } else {
                        0.0
                    }
                }
                Objective::Nmse => {
                    let shift = m.dot(&wk) + self.bias_offset[k];
                    (vp - 2.0 * cv + syy + self.n_test * shift * shift) / syy
                }
            };
        }
        Ok(match self.objective {
            Objective::Capacity => total,
            Objective::Nmse => total / outputs as f64,
        })
    }
}

fn pool_columns(indices: &[usize], mode: IndexMode, n_detectors: usize, per_detector: usize) -> Vec<usize> {
    match mode {
        IndexMode::Shared => (0..n_detectors).flat_map(|d| indices.iter().map(move |&i| d * per_detector + i)).collect(),
        IndexMode::PerDetector => {
            let n = indices.len() / n_detectors;
            indices.iter().enumerate().map(|(j, &i)| (j / n) * per_detector + i).collect()
        }
    }
}

/// Reference scoring path: slice the pool, split, train, predict, score.
pub fn evaluate_direct<T: Real>(
    pool: &StateMatrix<T>,
    task: &TaskDataset,
    columns: &[usize],
    split_spec: &SplitSpec,
    lambda: f64,
) -> Result<f64> {
    let objective = Objective::for_task(task.kind)?;
    let states = pool.select_columns(columns)?;
    let (train, test) = split(&states, &task.targets_as::<T>(), split_spec)?;
    let model = train_ridge(&train.states, &train.targets, lambda)?;
    let pred = predict(&model, &test.states)?.mapv(|v| v.as_f64());
    let target = test.targets.mapv(|v| v.as_f64());
    match objective {
        Objective::Capacity => Ok(capacity(pred.view(), target.view())?.1),
        Objective::Nmse => {
            let per: Result<Vec<f64>> = pred
                .columns()
                .into_iter()
                .zip(target.columns())
                .map(|(p, t)| nmse(&p.to_vec(), &t.to_vec()))
                .collect();
            let per = per?;
            Ok(per.iter().sum::<f64>() / per.len() as f64)
        }
    }
}

/// Candidate index sets: every combination when there are at most `n_trials`,
/// otherwise `n_trials` distinct random draws. Returns `(indices, seed)` pairs.
fn candidate_sets(per_detector: usize, n_detectors: usize, cfg: &SelectionConfig) -> Vec<(Vec<usize>, u64)> {
    let n = cfg.n_per_detector;
    let groups = match cfg.index_mode {
        IndexMode::Shared => 1,
        IndexMode::PerDetector => n_detectors,
    };
    let per_group = binomial(per_detector, n);
    let total = (0..groups).try_fold(1u64, |acc, _| acc.checked_mul(per_group)).unwrap_or(u64::MAX);
    let seed = |i: usize| trial_seed(cfg.master_seed, i as u64);
    if total <= cfg.n_trials as u64 {
        let mut out = Vec::with_capacity(total as usize);
        let mut combos: Vec<Vec<usize>> = vec![(0..n).collect(); groups];
        loop {
            out.push((combos.concat(), seed(out.len())));
            // Odometer over groups, last group fastest.
            let mut g = groups;
            loop {
                if g == 0 {
                    return out;
                }
                g -= 1;
                if next_combination(&mut combos[g], per_detector) {
                    break;
                }
                combos[g] = (0..n).collect();
            }
        }
    }
    let mut seen = HashSet::with_capacity(cfg.n_trials);
    let mut out = Vec::with_capacity(cfg.n_trials);
    for i in 0..cfg.n_trials {
        let s = seed(i);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        loop {
            let set: Vec<usize> = (0..groups)
                .flat_map(|_| {
                    let mut v = rand::seq::index::sample(&mut rng, per_detector, n).into_vec();
                    v.sort_unstable();
                    v
                })
                .collect();
            if seen.insert(set.clone()) {
                out.push((set, s));
                break;
            }
        }
    }
    out
}

/// Scores candidate subsets (exhaustive or random) and returns them best first.
///
/// Ties in the metric fall back to lexicographic order of the node indices.
pub fn run_selection<T: Real>(
    pool: &StateMatrix<T>,
    n_detectors: usize,
    task: &TaskDataset,
    cfg: &SelectionConfig,
) -> Result<Vec<SelectionTrial>> {
    let eval = Evaluator::new(pool, n_detectors, task, &cfg.split, cfg.lambda)?;
    select_with(&eval, n_detectors, cfg)
}

/// [`run_selection`] on an existing evaluator.
pub fn select_with(eval: &Evaluator, n_detectors: usize, cfg: &SelectionConfig) -> Result<Vec<SelectionTrial>> {
    if cfg.n_per_detector == 0 || cfg.n_per_detector > eval.per_detector() {
        return Err(invalid(
            "search.n_per_detector",
            format!("{} with {} nodes per detector", cfg.n_per_detector, eval.per_detector()),
        ));
    }
    if cfg.n_trials == 0 {
        return Err(invalid("search.n_trials", "must be >= 1"));
    }
    let sets = candidate_sets(eval.per_detector(), n_detectors, cfg);
    let mut trials = sets
        .into_par_iter()
        .map(|(node_indices, seed)| {
            let metric_value = eval.evaluate(&eval.columns(&node_indices, cfg.index_mode))?;
            Ok(SelectionTrial { node_indices, metric_value, seed })
        })
        .collect::<Result<Vec<_>>>()?;
    let objective = eval.objective();
    trials.sort_by(|a, b| {
        objective.compare(a.metric_value, b.metric_value).then_with(|| a.node_indices.cmp(&b.node_indices))
    });
    Ok(trials)
}

/// How often each node index appears in the `k` best trials.
pub fn occurrence_histogram(trials: &[SelectionTrial], k: usize, pool_size: usize) -> Result<Vec<usize>> {
    if k > trials.len() {
        return Err(invalid("top_k", format!("{k} exceeds {} trials", trials.len())));
    }
    let mut counts = vec![0; pool_size];
    for t in &trials[..k] {
        for &i in &t.node_indices {
            *counts
                .get_mut(i)
                .ok_or_else(|| invalid("node_indices", format!("{i} outside pool of {pool_size}")))? += 1;
        }
    }
    Ok(counts)
}

/// Min, max and mean metric over trials (best/worst follow the objective).
pub fn summarize(trials: &[SelectionTrial], objective: Objective) -> (f64, f64, f64) {
    let values: Vec<f64> = trials.iter().map(|t| t.metric_value).collect();
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let best = values.iter().copied().min_by(|a, b| objective.compare(*a, *b)).unwrap_or(f64::NAN);
    let worst = values.iter().copied().max_by(|a, b| objective.compare(*a, *b)).unwrap_or(f64::NAN);
    (best, worst, mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Bias fields (T).
    pub fields: Vec<f64>,
    pub selection: SelectionConfig,
    pub top_k: usize,
    pub pool: Vec<FilterSpec>,
    pub envelope: Envelope,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            fields: Vec::new(),
            selection: SelectionConfig::default(),
            top_k: 20,
            pool: crate::nodes::emulation_pool_filters(),
            envelope: Envelope::RmsPerSymbol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldResult {
    pub bias_field: f64,
    pub best: f64,
    pub worst: f64,
    pub mean: f64,
    pub top: Vec<SelectionTrial>,
    pub occurrences: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub objective: Objective,
    pub pool_centers: Vec<f64>,
    pub rows: Vec<FieldResult>,
}

impl SweepResult {
    pub fn bias_fields(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.bias_field).collect()
    }

    /// `config_hash,field_mT,metric_name,best,worst,mean`.
    pub fn write_summary_csv<W: Write>(&self, config_hash: &str, mut w: W) -> Result<()> {
        writeln!(w, "config_hash,field_mT,metric_name,best,worst,mean")?;
        for r in &self.rows {
            writeln!(
                w,
                "{config_hash},{:.4},{},{:e},{:e},{:e}",
                r.bias_field * 1e3,
                self.objective.name(),
                r.best,
                r.worst,
                r.mean
            )?;
        }
        Ok(())
    }

    /// `config_hash,node_index,center_GHz,occurrence_count,field_mT`.
    pub fn write_occurrence_csv<W: Write>(&self, config_hash: &str, mut w: W) -> Result<()> {
        writeln!(w, "config_hash,node_index,center_GHz,occurrence_count,field_mT")?;
        for r in &self.rows {
            for (i, (&c, &f)) in r.occurrences.iter().zip(&self.pool_centers).enumerate() {
                writeln!(w, "{config_hash},{i},{:.4},{c},{:.4}", f / 1e9, r.bias_field * 1e3)?;
            }
        }
        Ok(())
    }
}

/// For each field: simulate, extract the pool, search, and tally the top `k`.
pub fn field_sweep<T: Real>(
    inputs: &[T],
    task: &TaskDataset,
    pipeline: &PipelineConfig,
    sweep: &SweepConfig,
) -> Result<SweepResult> {
    if sweep.fields.is_empty() {
        return Err(invalid("search.fields", "no bias fields given"));
    }
    if sweep.pool.is_empty() {
        return Err(invalid("search.pool", "empty filter pool"));
    }
    let objective = Objective::for_task(task.kind)?;
    let mut rows = Vec::with_capacity(sweep.fields.len());
    for &field in &sweep.fields {
        let mut cfg = pipeline.clone();
        cfg.reservoir.bias_field = field;
        let recorded = run_reservoir(inputs, &cfg)?;
        let n_det = recorded.responses.len();
        let nodes = pool_nodes(&sweep.pool, n_det, sweep.envelope);
        let pool = extract_states(&recorded, &Extraction::Spectral { nodes })?;
        let trials = run_selection(&pool, n_det, task, &sweep.selection)?;
        let k = sweep.top_k.min(trials.len());
        let occurrences = occurrence_histogram(&trials, k, sweep.pool.len())?;
        let (best, worst, mean) = summarize(&trials, objective);
        rows.push(FieldResult { bias_field: field, best, worst, mean, top: trials[..k].to_vec(), occurrences });
    }
    Ok(SweepResult { objective, pool_centers: sweep.pool.iter().map(|f| f.center).collect(), rows })
}

/// Occurrence-weighted mean of `centers`, skipping centers rejected by `keep`.
pub fn weighted_mean_frequency(counts: &[usize], centers: &[f64], keep: impl Fn(f64) -> bool) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (&c, &f) in counts.iter().zip(centers) {
        if keep(f) {
            num += c as f64 * f;
            den += c as f64;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Least-squares `(slope, intercept)` of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| (sxy / sxx, my - sxy / sxx * mx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Spectral,
    Virtual,
}

impl Approach {
    pub fn name(self) -> &'static str {
        match self {
            Approach::Spectral => "spectral",
            Approach::Virtual => "virtual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub n_per_detector: usize,
    pub approach: Approach,
    pub best: f64,
    pub worst: f64,
    pub trials: usize,
}

/// Best/worst metric per node count for spectral and virtual pools built from the same responses.
pub fn compare_extraction<T: Real>(
    spectral: &StateMatrix<T>,
    virtual_pool: &StateMatrix<T>,
    n_detectors: usize,
    task: &TaskDataset,
    node_counts: &[usize],
    cfg: &SelectionConfig,
) -> Result<Vec<ComparisonRow>> {
    if spectral.n_symbols() != virtual_pool.n_symbols() {
        return Err(Error::DimensionMismatch(format!(
            "spectral pool has {} rows, virtual pool {}",
            spectral.n_symbols(),
            virtual_pool.n_symbols()
        )));
    }
    let evals = [
        (Approach::Spectral, Evaluator::new(spectral, n_detectors, task, &cfg.split, cfg.lambda)?),
        (Approach::Virtual, Evaluator::new(virtual_pool, n_detectors, task, &cfg.split, cfg.lambda)?),
    ];
    let mut rows = Vec::new();
    for &n in node_counts {
        for (approach, eval) in &evals {
            let c = SelectionConfig { n_per_detector: n, ..cfg.clone() };
            let trials = select_with(eval, n_detectors, &c)?;
            let (best, worst, _) = summarize(&trials, eval.objective());
            rows.push(ComparisonRow { n_per_detector: n, approach: *approach, best, worst, trials: trials.len() });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(50, 5), 2_118_760);
        assert_eq!(binomial(20, 5), 15_504);
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(1000, 500), u64::MAX);
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn shared_and_per_detector_columns() {
        assert_eq!(pool_columns(&[1, 3], IndexMode::Shared, 3, 10), vec![1, 3, 11, 13, 21, 23]);
        assert_eq!(pool_columns(&[1, 3, 0, 2], IndexMode::PerDetector, 2, 10), vec![1, 3, 10, 12]);
    }

    #[test]
    fn exhaustive_when_budget_allows() {
        let cfg = SelectionConfig { n_per_detector: 3, n_trials: 200, ..Default::default() };
        let sets = candidate_sets(10, 7, &cfg);
        assert_eq!(sets.len(), 120);
        let unique: HashSet<_> = sets.iter().map(|s| s.0.clone()).collect();
        assert_eq!(unique.len(), 120);
        let per = SelectionConfig { index_mode: IndexMode::PerDetector, n_per_detector: 1, n_trials: 9, ..cfg };
        assert_eq!(candidate_sets(3, 2, &per).len(), 9);
    }

    #[test]
    fn random_sets_are_distinct_and_seeded() {
        let cfg = SelectionConfig { n_per_detector: 3, n_trials: 100, master_seed: 5, ..Default::default() };
        let a = candidate_sets(10, 7, &cfg);
        assert_eq!(a.len(), 100);
        assert_eq!(a.iter().map(|s| s.0.clone()).collect::<HashSet<_>>().len(), 100);
        assert_eq!(a, candidate_sets(10, 7, &cfg));
        assert!(a.iter().all(|(s, _)| s.windows(2).all(|w| w[0] < w[1]) && s.iter().all(|&i| i < 10)));
        assert_eq!(a[7].1, trial_seed(5, 7));
    }

    #[test]
    fn fit_and_weighted_mean() {
        let (s, b) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        let m = weighted_mean_frequency(&[1, 3, 10], &[1.0, 2.0, 3.0], |f| f < 2.5).unwrap();
        assert!((m - 7.0 / 4.0).abs() < 1e-12);
        assert!(weighted_mean_frequency(&[0, 0], &[1.0, 2.0], |_| true).is_none());
    }
}
