//! Benchmark task generators and performance metrics.

mod classify;
mod corpus;
mod metrics;
mod series;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

pub use classify::{classify_stream, gen_classification_stream, standardize_waveform, ClassificationResult, ClassificationStream, SILENCE_FRAME, SILENCE_THRESHOLD, STANDARD_LENGTH};
pub use corpus::{load_wav_dir, synthetic_corpus, Corpus, Recording, SyntheticSpec};
pub use metrics::{capacity, capacity_with_floor, nmse, r_squared, Metrics};
pub use series::{gen_narma2, gen_parity, narma2_fixed_point, narma2_response, DEFAULT_K_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    Parity { k_max: usize },
    Narma2,
    Classify { n_classes: usize },
}

/// Symbol-aligned inputs and targets (one target column per output).
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub inputs: Vec<f64>,
    pub targets: Array2<f64>,
    pub kind: TaskKind,
}

impl TaskDataset {
    pub fn len(&self) -> usize {
        self.targets.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.nrows() == 0
    }

    pub fn targets_as<T: Real>(&self) -> Array2<T> {
        self.targets.mapv(T::lit)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            TaskKind::Parity { k_max } => {
                if self.inputs.iter().any(|&u| u != 0.0 && u != 1.0) {
                    return Err(invalid("task.inputs", "parity inputs must be 0 or 1"));
                }
                if self.targets.ncols() != k_max || self.inputs.len() != self.len() {
                    return Err(invalid("task.targets", "expected one column per memory depth"));
                }
            }
            TaskKind::Narma2 => {
                if self.inputs.iter().any(|&u| !(0.0..=0.5).contains(&u)) {
                    return Err(invalid("task.inputs", "NARMA-2 inputs must lie in [0, 0.5]"));
                }
            }
            TaskKind::Classify { n_classes } => {
                let one_hot = self.targets.ncols() == n_classes
                    && self.targets.rows().into_iter().all(|r| {
                        r.iter().all(|&v| v == 0.0 || v == 1.0) && r.iter().filter(|&&v| v == 1.0).count() == 1
                    });
                if !one_hot {
                    return Err(invalid("task.targets", "classification targets must be one-hot rows"));
                }
            }
        }
        Ok(())
    }
}
