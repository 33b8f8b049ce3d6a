//! Input sequence to state matrix: pulse modulation, reservoir, recorder resampling, node extraction.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::nodes::{
    extract_spectral_states, extract_virtual_states, hardware_preset_nodes, NodeSpec, StateMatrix, SymbolWindows,
};
use crate::scalar::Real;
use crate::signal::{modulate_pulse_train, resample, PulseParams, SampledSignal};
use crate::spinwave::{simulate, DetectorResponse, ReservoirConfig};

/// Arbitrary-waveform generator rate (Hz).
pub const DEFAULT_DRIVE_RATE: f64 = 16e9;
/// Oscilloscope rate (Hz).
pub const DEFAULT_RECORD_RATE: f64 = 12.5e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub reservoir: ReservoirConfig,
    pub pulse: PulseParams,
    pub drive_rate: f64,
    pub record_rate: f64,
    /// Delay (s) of every state window relative to its symbol slot.
    pub window_offset: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            reservoir: ReservoirConfig::default(),
            pulse: PulseParams::default(),
            drive_rate: DEFAULT_DRIVE_RATE,
            record_rate: DEFAULT_RECORD_RATE,
            window_offset: 0.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.reservoir.validate()?;
        self.pulse.validate()?;
        for (name, v) in [("drive_rate", self.drive_rate), ("record_rate", self.record_rate)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.window_offset >= 0.0 && self.window_offset.is_finite()) {
            return Err(invalid("window_offset", "must be >= 0"));
        }
        Ok(())
    }

    /// Window of symbol `k` (0-based): `[(k+1) T0 + offset, (k+2) T0 + offset)`.
    pub fn symbol_windows(&self, n_symbols: usize) -> SymbolWindows {
        let t0 = self.pulse.symbol_duration;
        SymbolWindows::new(t0 + self.window_offset, t0, n_symbols)
    }
}

/// Detector waveforms at the recorder rate plus the matching symbol windows.
#[derive(Debug, Clone)]
pub struct Recorded<T> {
    pub responses: Vec<DetectorResponse<T>>,
    pub windows: SymbolWindows,
}

/// Pulse-modulates `inputs`, simulates every detector and resamples to the recorder rate.
///
/// Zero symbols are appended so that offset windows stay inside the record.
pub fn run_reservoir<T: Real>(inputs: &[T], cfg: &PipelineConfig) -> Result<Recorded<T>> {
    cfg.validate()?;
    let tail = (cfg.window_offset / cfg.pulse.symbol_duration).ceil() as usize;
    let mut u = inputs.to_vec();
    u.resize(inputs.len() + tail, T::zero());
    let drive = modulate_pulse_train(&u, &cfg.pulse, cfg.drive_rate)?;
    let responses = simulate(&drive, &cfg.reservoir)?
        .into_iter()
        .map(|r| {
            Ok(DetectorResponse { detector_index: r.detector_index, signal: resample(&r.signal, cfg.record_rate)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Recorded { responses, windows: cfg.symbol_windows(inputs.len()) })
}

/// How detector waveforms become state columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Extraction {
    Spectral { nodes: Vec<NodeSpec> },
    Virtual { nodes_per_symbol: usize },
    HardwarePreset,
}

pub fn extract_states<T: Real>(recorded: &Recorded<T>, extraction: &Extraction) -> Result<StateMatrix<T>> {
    match extraction {
        Extraction::Spectral { nodes } => extract_spectral_states(&recorded.responses, nodes, &recorded.windows),
        Extraction::Virtual { nodes_per_symbol } => {
            extract_virtual_states(&recorded.responses, &recorded.windows, *nodes_per_symbol)
        }
        Extraction::HardwarePreset => {
            extract_spectral_states(&recorded.responses, &hardware_preset_nodes(), &recorded.windows)
        }
    }
}

/// The drive waveform alone, for inspection.
pub fn drive_signal<T: Real>(inputs: &[T], cfg: &PipelineConfig) -> Result<SampledSignal<T>> {
    modulate_pulse_train(inputs, &cfg.pulse, cfg.drive_rate)
}
