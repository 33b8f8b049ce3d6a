//! Experiment configuration file (TOML) and its hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sdrc::nodes::{emulation_pool_filters, pool_nodes, Envelope, FilterSpec};
use sdrc::readout::{LambdaChoice, DEFAULT_WASHOUT};
use sdrc::search::{IndexMode, SelectionConfig, SweepConfig, DEFAULT_SEARCH_LAMBDA};
use sdrc::signal::PulseParams;
use sdrc::speech::SpeechConfig;
use sdrc::tasks::{gen_narma2, gen_parity, SyntheticSpec, TaskDataset, DEFAULT_K_MAX, STANDARD_LENGTH};
use sdrc::{Extraction, PipelineConfig, ReservoirConfig, SplitSpec};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Where every output goes; `--output` overrides it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub reservoir: ReservoirConfig,
    pub pulse: PulseParams,
    pub recorder: RecorderConfig,
    pub extraction: ExtractionConfig,
    pub readout: ReadoutConfig,
    pub task: TaskConfig,
    pub benchmark: BenchmarkConfig,
    pub search: SearchConfig,
    pub speech: SpeechSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output_dir: None,
            reservoir: ReservoirConfig::default(),
            pulse: PulseParams::default(),
            recorder: RecorderConfig::default(),
            extraction: ExtractionConfig::default(),
            readout: ReadoutConfig::default(),
            task: TaskConfig::default(),
            benchmark: BenchmarkConfig::default(),
            search: SearchConfig::default(),
            speech: SpeechSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecorderConfig {
    /// Drive (waveform generator) rate, Hz.
    pub drive_rate: f64,
    /// Detector recording rate, Hz.
    pub record_rate: f64,
    /// Delay of each state window after its symbol slot, s.
    pub window_offset: f64,
}

impl Default for RecorderConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self { drive_rate: p.drive_rate, record_rate: p.record_rate, window_offset: p.window_offset }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    Spectral,
    Virtual,
    HardwarePreset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub mode: ExtractionMode,
    /// Filter bank for spectral mode; empty means the 50-filter emulation pool.
    pub filters: Vec<FilterSpec>,
    /// Keep only these entries of the filter bank (0-based), e.g. a reduced pool.
    pub pool_indices: Vec<usize>,
    pub envelope: Envelope,
    pub nodes_per_symbol: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            mode: ExtractionMode::Spectral,
            filters: Vec::new(),
            pool_indices: Vec::new(),
            envelope: Envelope::RmsPerSymbol,
            nodes_per_symbol: 20,
        }
    }
}

impl ExtractionConfig {
    pub fn filter_bank(&self) -> Result<Vec<FilterSpec>, CliError> {
        let bank = if self.filters.is_empty() { emulation_pool_filters() } else { self.filters.clone() };
        if self.pool_indices.is_empty() {
            return Ok(bank);
        }
        self.pool_indices
            .iter()
            .map(|&i| {
                bank.get(i).copied().ok_or_else(|| {
                    CliError::Config(format!("extraction.pool_indices: {i} is beyond the {}-filter bank", bank.len()))
                })
            })
            .collect()
    }

    pub fn to_extraction(&self, n_detectors: usize) -> Result<Extraction, CliError> {
        Ok(match self.mode {
            ExtractionMode::Spectral => {
                Extraction::Spectral { nodes: pool_nodes(&self.filter_bank()?, n_detectors, self.envelope) }
            }
            ExtractionMode::Virtual => Extraction::Virtual { nodes_per_symbol: self.nodes_per_symbol },
            ExtractionMode::HardwarePreset => Extraction::HardwarePreset,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutConfig {
    pub lambda: LambdaChoice,
    /// Leading symbols dropped before the split.
    pub washout: usize,
    /// Contiguous leading fraction used for training.
    pub train_fraction: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self { lambda: LambdaChoice::default(), washout: DEFAULT_WASHOUT, train_fraction: 0.5 }
    }
}

impl ReadoutConfig {
    pub fn split(&self) -> SplitSpec {
        SplitSpec { washout: self.washout, train_fraction: self.train_fraction, shuffle_seed: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskName {
    Parity,
    Narma2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskName,
    /// Symbols.
    pub length: usize,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self { kind: TaskName::Parity, length: 2000, k_max: DEFAULT_K_MAX, seed: 1 }
    }
}

impl TaskConfig {
    pub fn generate(&self) -> Result<TaskDataset, CliError> {
        Ok(match self.kind {
            TaskName::Parity => gen_parity(self.length, self.k_max, self.seed).map_err(crate::stage("task"))?,
            TaskName::Narma2 => gen_narma2(self.length, self.seed).map_err(crate::stage("task"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReservoirKind {
    Simulator,
    /// Ideal shift register of the inputs; an oracle for the readout and task plumbing.
    DelayLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub reservoir: ReservoirKind,
    pub delay_depth: usize,
    /// Polynomial expansion of the states before the readout (1 = none).
    pub feature_degree: usize,
    /// Search for the best node subset (search section) before the final readout.
    pub select_nodes: bool,
    /// Nodes per detector at which spectral and virtual pools are compared; empty skips it.
    pub compare_node_counts: Vec<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            reservoir: ReservoirKind::Simulator,
            delay_depth: 3,
            feature_degree: 1,
            select_nodes: false,
            compare_node_counts: Vec::new(),
        }
    }
}

/// `start`, `stop`, `step` in mT; `stop` is included when it falls on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub n_per_detector: usize,
    pub n_trials: usize,
    pub master_seed: u64,
    pub lambda: f64,
    pub index_mode: IndexMode,
    pub top_k: usize,
    /// Bias fields for the sweep (mT).
    pub fields_mt: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_range_mt: Option<FieldRange>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let s = SelectionConfig::default();
        Self {
            n_per_detector: s.n_per_detector,
            n_trials: s.n_trials,
            master_seed: s.master_seed,
            lambda: DEFAULT_SEARCH_LAMBDA,
            index_mode: s.index_mode,
            top_k: SweepConfig::default().top_k,
            fields_mt: Vec::new(),
            field_range_mt: None,
        }
    }
}

impl SearchConfig {
    pub fn selection(&self, split: SplitSpec) -> SelectionConfig {
        SelectionConfig {
            n_per_detector: self.n_per_detector,
            n_trials: self.n_trials,
            master_seed: self.master_seed,
            lambda: self.lambda,
            split,
            index_mode: self.index_mode,
        }
    }

    /// Sweep fields in tesla: the explicit list followed by the range.
    pub fn fields_tesla(&self) -> Result<Vec<f64>, CliError> {
        let mut mt = self.fields_mt.clone();
        if let Some(r) = self.field_range_mt {
            if !(r.step > 0.0 && r.start.is_finite() && r.stop.is_finite() && r.stop >= r.start) {
                return Err(CliError::Config("search.field_range_mt: need step > 0 and stop >= start".into()));
            }
            let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
            mt.extend((0..=n).map(|i| r.start + i as f64 * r.step));
        }
        if let Some(bad) = mt.iter().find(|f| !f.is_finite()) {
            return Err(CliError::Config(format!("search.fields_mt: {bad} is not finite")));
        }
        Ok(mt.into_iter().map(|f| f * 1e-3).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeechSection {
    /// Labelled WAV tree `<dir>/<label>/*.wav`; ignored with `--synthetic`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wav_dir: Option<PathBuf>,
    pub synthetic: SyntheticSpec,
    /// One audio point per pulse.
    pub pulse: PulseParams,
    pub drive_rate: f64,
    pub record_rate: f64,
    pub extraction: ExtractionConfig,
    pub symbols_per_sample: usize,
    pub length: usize,
    pub n_shuffles: usize,
    pub train_fraction: f64,
    pub shuffle_seed: u64,
    pub lambda: LambdaChoice,
    /// Also score the raw per-symbol means without a reservoir.
    pub baseline: bool,
}

impl Default for SpeechSection {
    fn default() -> Self {
        let s = SpeechConfig::default();
        Self {
            wav_dir: None,
            synthetic: SyntheticSpec::default(),
            pulse: s.pipeline.pulse,
            drive_rate: s.pipeline.drive_rate,
            record_rate: s.pipeline.record_rate,
            extraction: ExtractionConfig { mode: ExtractionMode::HardwarePreset, ..Default::default() },
            symbols_per_sample: s.symbols_per_sample,
            length: STANDARD_LENGTH,
            n_shuffles: s.n_shuffles,
            train_fraction: s.train_fraction,
            shuffle_seed: s.shuffle_seed,
            lambda: s.lambda,
            baseline: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Replaces every seed (noise, task, search, speech shuffles and corpus).
    pub fn apply_seed(&mut self, seed: u64) {
        self.reservoir.seed = seed;
        self.task.seed = seed;
        self.search.master_seed = seed;
        self.speech.shuffle_seed = seed;
        self.speech.synthetic.seed = seed;
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            reservoir: self.reservoir.clone(),
            pulse: self.pulse,
            drive_rate: self.recorder.drive_rate,
            record_rate: self.recorder.record_rate,
            window_offset: self.recorder.window_offset,
        }
    }

    pub fn speech_config(&self) -> Result<SpeechConfig, CliError> {
        let s = &self.speech;
        Ok(SpeechConfig {
            pipeline: PipelineConfig {
                reservoir: self.reservoir.clone(),
                pulse: s.pulse,
                drive_rate: s.drive_rate,
                record_rate: s.record_rate,
                window_offset: self.recorder.window_offset,
            },
            extraction: s.extraction.to_extraction(self.reservoir.n_detectors())?,
            symbols_per_sample: s.symbols_per_sample,
            length: s.length,
            n_shuffles: s.n_shuffles,
            train_fraction: s.train_fraction,
            shuffle_seed: s.shuffle_seed,
            lambda: s.lambda.clone(),
        })
    }

    /// Checks everything every subcommand relies on.
    pub fn validate(&self) -> Result<(), CliError> {
        self.pipeline().validate()?;
        let e = &self.extraction;
        e.to_extraction(self.reservoir.n_detectors())?;
        if e.mode == ExtractionMode::Virtual && e.nodes_per_symbol == 0 {
            return Err(CliError::Config("extraction.nodes_per_symbol: must be >= 1".into()));
        }
        let r = &self.readout;
        if !(r.train_fraction > 0.0 && r.train_fraction < 1.0) {
            return Err(CliError::Config("readout.train_fraction: must lie in (0, 1)".into()));
        }
        if let LambdaChoice::Fixed(l) = r.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(CliError::Config("readout.lambda: must be finite and >= 0".into()));
            }
        }
        let t = &self.task;
        if t.length <= r.washout + 1 {
            return Err(CliError::Config(format!("task.length: {} leaves nothing after washout {}", t.length, r.washout)));
        }
        if t.kind == TaskName::Parity && (t.k_max == 0 || t.k_max >= t.length) {
            return Err(CliError::Config("task.k_max: must lie in 1..length".into()));
        }
        let b = &self.benchmark;
        if b.delay_depth == 0 || b.feature_degree == 0 {
            return Err(CliError::Config("benchmark.delay_depth and feature_degree must be >= 1".into()));
        }
        let s = &self.search;
        if s.n_per_detector == 0 || s.n_trials == 0 || s.top_k == 0 {
            return Err(CliError::Config("search.n_per_detector, n_trials and top_k must be >= 1".into()));
        }
        if !(s.lambda >= 0.0 && s.lambda.is_finite()) {
            return Err(CliError::Config("search.lambda: must be finite and >= 0".into()));
        }
        s.fields_tesla()?;
        self.speech_config()?.validate()?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Annotated default configuration.
pub const TEMPLATE: &str = include_str!("template.toml");
