//! Streaming speaker classification: every audio point drives one pulse, states
//! are taken per group of points, and a one-hot readout is scored by
//! winner-takes-all per symbol and majority vote per recording.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::nodes::{NodeLabel, StateMatrix, SymbolWindows};
use crate::pipeline::{extract_states, Extraction, PipelineConfig, Recorded};
use crate::readout::{predict, split_groups, train_with_choice, LambdaChoice, SplitSpec};
use crate::scalar::Real;
use crate::search::trial_seed;
use crate::signal::{modulate_pulse_train, resample, PulseParams};
use crate::spinwave::{simulate, DetectorResponse};
use crate::tasks::{classify_stream, ClassificationStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeechConfig {
    /// `pulse.symbol_duration` is the time slot of one audio point.
    pub pipeline: PipelineConfig,
    pub extraction: Extraction,
    pub symbols_per_sample: usize,
    /// Points per recording after standardization.
    pub length: usize,
    pub n_shuffles: usize,
    /// Fraction of recordings used for training in each shuffle.
    pub train_fraction: f64,
    pub shuffle_seed: u64,
    pub lambda: LambdaChoice,
}

impl Default for SpeechConfig {
    fn default() -> Self {
        let pipeline = PipelineConfig {
            pulse: PulseParams { symbol_duration: 1e-9, flat_top: 0.36e-9, ramp: 0.32e-9, amplitude_scale: 1.0 },
            drive_rate: 12.5e9,
            record_rate: 12.5e9,
            ..Default::default()
        };
        Self {
            pipeline,
            extraction: Extraction::HardwarePreset,
            symbols_per_sample: 100,
            length: crate::tasks::STANDARD_LENGTH,
            n_shuffles: 20,
            train_fraction: 0.8,
            shuffle_seed: 1,
            lambda: LambdaChoice::default(),
        }
    }
}

impl SpeechConfig {
    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        if self.symbols_per_sample == 0 || self.length % self.symbols_per_sample != 0 {
            return Err(invalid(
                "speech.symbols_per_sample",
                format!("{} does not divide length {}", self.symbols_per_sample, self.length),
            ));
        }
        if self.n_shuffles == 0 {
            return Err(invalid("speech.n_shuffles", "must be >= 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid("speech.train_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn split(&self, trial: usize) -> SplitSpec {
        SplitSpec {
            washout: 0,
            train_fraction: self.train_fraction,
            shuffle_seed: Some(trial_seed(self.shuffle_seed, trial as u64)),
        }
    }
}

/// Simulates one recording and returns one state row per symbol.
pub fn recording_states<T: Real>(waveform: &[f64], points_per_symbol: usize, cfg: &SpeechConfig) -> Result<StateMatrix<T>> {
    let p = &cfg.pipeline;
    if waveform.is_empty() || points_per_symbol == 0 || waveform.len() % points_per_symbol != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} points do not split into symbols of {points_per_symbol}",
            waveform.len()
        )));
    }
    let t0 = p.pulse.symbol_duration;
    let tail = 1 + (p.window_offset / t0).ceil() as usize;
    let mut u: Vec<T> = waveform.iter().map(|&v| T::lit(v)).collect();
    u.resize(waveform.len() + tail, T::zero());
    let drive = modulate_pulse_train(&u, &p.pulse, p.drive_rate)?;
    let responses = simulate(&drive, &p.reservoir)?
        .into_iter()
        .map(|r| Ok(DetectorResponse { detector_index: r.detector_index, signal: resample(&r.signal, p.record_rate)? }))
        .collect::<Result<Vec<_>>>()?;
    let n_symbols = waveform.len() / points_per_symbol;
    let windows = SymbolWindows::new(t0 + p.window_offset, t0 * points_per_symbol as f64, n_symbols);
    extract_states(&Recorded { responses, windows }, &cfg.extraction)
}

/// Reservoir states of every recording in the stream, stacked in stream order.
pub fn speech_states<T: Real>(stream: &ClassificationStream, cfg: &SpeechConfig) -> Result<StateMatrix<T>> {
    cfg.validate()?;
    let parts = stream
        .waveforms
        .par_iter()
        .map(|w| recording_states::<T>(w, stream.points_per_symbol, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut iter = parts.into_iter();
    let first = iter.next().ok_or_else(|| Error::Corpus("no recordings".into()))?;
    iter.try_fold(first, |acc, s| acc.vstack(&s))
}

/// The no-reservoir baseline: one column holding the mean of the raw points of each symbol.
///
/// The symbol duration is recorded in points.
pub fn raw_symbol_means(stream: &ClassificationStream) -> Result<StateMatrix<f64>> {
    let p = stream.points_per_symbol;
    let values: Vec<f64> = stream.dataset.inputs.chunks(p).map(|c| c.iter().sum::<f64>() / p as f64).collect();
    let rows = values.len();
    StateMatrix::new(
        Array2::from_shape_vec((rows, 1), values).expect("one column"),
        vec![NodeLabel::Feature("raw_mean".into())],
        p as f64,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeechTrial {
    pub seed: u64,
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
    pub lambda: f64,
}

/// Per-symbol readout outputs of one trial's test recordings.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTrace {
    /// Recording index in the stream.
    pub recording: usize,
    pub label: usize,
    pub outputs: Array2<f64>,
    pub decisions: Vec<usize>,
    pub decision: usize,
}

#[derive(Debug, Clone)]
pub struct SpeechReport {
    pub trials: Vec<SpeechTrial>,
    pub mean_accuracy: f64,
    /// Summed over trials.
    pub confusion: Vec<Vec<usize>>,
    /// Test recordings of the first trial.
    pub traces: Vec<SymbolTrace>,
}

/// Repeated shuffled train/test splits over whole recordings.
pub fn run_protocol<T: Real>(states: &StateMatrix<T>, stream: &ClassificationStream, cfg: &SpeechConfig) -> Result<SpeechReport> {
    cfg.validate()?;
    let targets = stream.dataset.targets_as::<T>();
    let n_classes = targets.ncols();
    let n_rec = stream.bounds.len();
    let mut trials = Vec::with_capacity(cfg.n_shuffles);
    let mut confusion = vec![vec![0; n_classes]; n_classes];
    let mut traces = Vec::new();
    for t in 0..cfg.n_shuffles {
        let split = cfg.split(t);
        let (_, test_groups) = split.indices(n_rec)?;
        let (train, test) = split_groups(states, &targets, &stream.bounds, &split)?;
        let model = train_with_choice(train.states.values.view(), train.targets.view(), &cfg.lambda)?;
        let pred = predict(&model, &test.states)?.mapv(|v| v.as_f64());
        let mut bounds = Vec::with_capacity(test_groups.len());
        let mut start = 0;
        for &g in &test_groups {
            let len = stream.bounds[g].len();
            bounds.push(start..start + len);
            start += len;
        }
        let labels: Vec<usize> = test_groups.iter().map(|&g| stream.labels[g]).collect();
        let result = classify_stream(pred.view(), &bounds, &labels)?;
        for (acc, row) in confusion.iter_mut().zip(&result.confusion) {
            for (a, &c) in acc.iter_mut().zip(row) {
                *a += c;
            }
        }
        if t == 0 {
            traces = test_groups
                .iter()
                .zip(&bounds)
                .enumerate()
                .map(|(i, (&g, b))| SymbolTrace {
                    recording: g,
                    label: stream.labels[g],
                    outputs: pred.select(Axis(0), &b.clone().collect::<Vec<_>>()),
                    decisions: result.symbol_decisions[b.clone()].to_vec(),
                    decision: result.sample_decisions[i],
                })
                .collect();
        }
        trials.push(SpeechTrial {
            seed: split.shuffle_seed.expect("shuffled split"),
            accuracy: result.accuracy,
            confusion: result.confusion,
            lambda: model.lambda,
        });
    }
    let mean_accuracy = trials.iter().map(|t| t.accuracy).sum::<f64>() / trials.len() as f64;
    Ok(SpeechReport { trials, mean_accuracy, confusion, traces })
}
