use std::ops::Range;

use ndarray::{Array2, ArrayView2};

use super::{Corpus, TaskDataset, TaskKind};
use crate::error::{invalid, Error, Result};

/// Points per recording after trimming and cropping/padding.
pub const STANDARD_LENGTH: usize = 10_000;
/// Frame length (points) for silence detection.
pub const SILENCE_FRAME: usize = 100;
/// Frames below this fraction of the peak frame energy count as silence.
pub const SILENCE_THRESHOLD: f64 = 0.01;

/// Trims leading and trailing silent frames, then centre-crops or zero-pads to `length`.
pub fn standardize_waveform(x: &[f64], length: usize) -> Result<Vec<f64>> {
    let energy: Vec<f64> = x.chunks(SILENCE_FRAME).map(|f| f.iter().map(|v| v * v).sum()).collect();
    let peak = energy.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::Corpus("waveform is silent or non-finite".into()));
    }
    let loud = |e: &f64| *e >= SILENCE_THRESHOLD * peak;
    let first = energy.iter().position(loud).expect("peak frame is loud");
    let last = energy.iter().rposition(loud).expect("peak frame is loud");
    let trimmed = &x[first * SILENCE_FRAME..((last + 1) * SILENCE_FRAME).min(x.len())];
    let mut out = vec![0.0; length];
    if trimmed.len() >= length {
        let start = (trimmed.len() - length) / 2;
        out.copy_from_slice(&trimmed[start..start + length]);
    } else {
        let start = (length - trimmed.len()) / 2;
        out[start..start + trimmed.len()].copy_from_slice(trimmed);
    }
    Ok(out)
}

/// Recordings laid end to end: each contributes `symbols_per_sample` target rows.
#[derive(Debug, Clone)]
pub struct ClassificationStream {
    /// `inputs` are the concatenated standardized waveform points; `targets` are one-hot per symbol.
    pub dataset: TaskDataset,
    pub waveforms: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Target rows of each recording.
    pub bounds: Vec<Range<usize>>,
    pub points_per_symbol: usize,
    pub class_names: Vec<String>,
}

pub fn gen_classification_stream(corpus: &Corpus, symbols_per_sample: usize, length: usize) -> Result<ClassificationStream> {
    if symbols_per_sample == 0 || length % symbols_per_sample != 0 {
        return Err(invalid(
            "task.symbols_per_sample",
            format!("{symbols_per_sample} does not divide the standard length {length}"),
        ));
    }
    corpus.validate(1, 0)?;
    let n_classes = corpus.n_classes();
    let waveforms = corpus
        .recordings
        .iter()
        .map(|r| standardize_waveform(&r.samples, length).map_err(|e| Error::Corpus(format!("{}: {e}", r.name))))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = corpus.recordings.iter().map(|r| r.label).collect();
    let rows = labels.len() * symbols_per_sample;
    let mut targets = Array2::zeros((rows, n_classes));
    let mut bounds = Vec::with_capacity(labels.len());
    for (i, &label) in labels.iter().enumerate() {
        let range = i * symbols_per_sample..(i + 1) * symbols_per_sample;
        for r in range.clone() {
            targets[[r, label]] = 1.0;
        }
        bounds.push(range);
    }
    Ok(ClassificationStream {
        dataset: TaskDataset { inputs: waveforms.concat(), targets, kind: TaskKind::Classify { n_classes } },
        waveforms,
        labels,
        bounds,
        points_per_symbol: length / symbols_per_sample,
        class_names: corpus.class_names.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub symbol_decisions: Vec<usize>,
    pub sample_decisions: Vec<usize>,
}

fn argmax(row: ndarray::ArrayView1<f64>) -> usize {
    // First index wins ties.
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Winner-takes-all per symbol, then a majority vote per recording (lowest class wins ties).
pub fn classify_stream(pred: ArrayView2<f64>, bounds: &[Range<usize>], labels: &[usize]) -> Result<ClassificationResult> {
    let n_classes = pred.ncols();
    if bounds.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} segments vs {} labels", bounds.len(), labels.len())));
    }
    let mut expected = 0;
    for b in bounds {
        if b.is_empty() {
            return Err(Error::EmptyPartition(format!("sample segment {b:?} is empty")));
        }
        if b.start != expected {
            return Err(Error::DimensionMismatch(format!("segment {b:?} does not start at row {expected}")));
        }
        expected = b.end;
    }
    if expected != pred.nrows() {
        return Err(Error::DimensionMismatch(format!("segments cover {expected} of {} rows", pred.nrows())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::DimensionMismatch(format!("label {bad} with {n_classes} outputs")));
    }
    let symbol_decisions: Vec<usize> = pred.rows().into_iter().map(argmax).collect();
    let mut confusion = vec![vec![0; n_classes]; n_classes];
    let mut sample_decisions = Vec::with_capacity(bounds.len());
    let mut correct = 0;
    for (b, &label) in bounds.iter().zip(labels) {
        let mut votes = vec![0usize; n_classes];
        for &d in &symbol_decisions[b.clone()] {
            votes[d] += 1;
        }
        let decision = (0..n_classes).fold(0, |best, c| if votes[c] > votes[best] { c } else { best });
        confusion[label][decision] += 1;
        correct += usize::from(decision == label);
        sample_decisions.push(decision);
    }
    Ok(ClassificationResult {
        accuracy: correct as f64 / labels.len() as f64,
        confusion,
        symbol_decisions,
        sample_decisions,
    })
}
