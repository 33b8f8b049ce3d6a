//! Spectral-domain reservoir computing on a spin-wave delay medium.
//!
//! Pipeline: pulse-modulate an input sequence, run the coupled-mode reservoir,
//! band-pass each detector waveform into spectral nodes, reduce them to one
//! value per symbol, and train a ridge readout on the resulting state matrix.

pub mod error;
pub mod linalg;
pub mod nodes;
pub mod pipeline;
pub mod readout;
pub mod scalar;
pub mod search;
pub mod signal;
pub mod speech;
pub mod spinwave;
pub mod tasks;

pub use error::{Error, Result};
pub use nodes::{NodeLabel, NodeSpec, StateMatrix};
pub use pipeline::{Extraction, PipelineConfig};
pub use readout::{ReadoutModel, SplitSpec};
pub use scalar::Real;
pub use signal::SampledSignal;
pub use spinwave::{DetectorResponse, ReservoirConfig};
pub use tasks::{Metrics, TaskDataset, TaskKind};

pub type Signal = SampledSignal<f64>;
pub type Signal32 = SampledSignal<f32>;
pub type States = StateMatrix<f64>;
pub type States32 = StateMatrix<f32>;
pub type Readout = ReadoutModel<f64>;
