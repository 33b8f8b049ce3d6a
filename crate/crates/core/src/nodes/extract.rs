//! Reservoir-state extraction: spectral nodes (filter + envelope) and
//! time-multiplexed virtual nodes (in-symbol sub-sampling).

use std::fmt;
use std::io::Write;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::envelope::{envelope_diode, envelope_rms, DiodeParams, SymbolWindows};
use super::filter::{design_bandpass, FilterSpec};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::spinwave::DetectorResponse;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Envelope {
    RmsPerSymbol,
    DiodeMean(DiodeParams),
}

/// One spectral node: a band-pass on one detector followed by an envelope detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub detector_index: usize,
    pub filter: FilterSpec,
    pub envelope: Envelope,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeLabel {
    Spectral(NodeSpec),
    Virtual { detector_index: usize, offset: usize },
    Feature(String),
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeLabel::Spectral(n) => {
                let env = match n.envelope {
                    Envelope::RmsPerSymbol => "rms",
                    Envelope::DiodeMean(_) => "diode",
                };
                write!(
                    f,
                    "d{}_{:.4}GHz_bw{:.4}_{}",
                    n.detector_index,
                    n.filter.center / 1e9,
                    n.filter.bandwidth_3db / 1e9,
                    env
                )
            }
            NodeLabel::Virtual { detector_index, offset } => write!(f, "d{detector_index}_v{offset}"),
            NodeLabel::Feature(name) => f.write_str(name),
        }
    }
}

/// Reservoir states: one row per symbol, one column per node.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix<T> {
    pub values: Array2<T>,
    pub labels: Vec<NodeLabel>,
    pub symbol_duration: f64,
}

impl<T: Real> StateMatrix<T> {
    pub fn new(values: Array2<T>, labels: Vec<NodeLabel>, symbol_duration: f64) -> Result<Self> {
        if labels.len() != values.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} columns",
                labels.len(),
                values.ncols()
            )));
        }
        if let Some(((r, c), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid("states", format!("non-finite value at row {r}, column {c}")));
        }
        Ok(Self { values, labels, symbol_duration })
    }

    /// Builds from per-node columns of equal length.
    pub fn from_columns(columns: Vec<Vec<T>>, labels: Vec<NodeLabel>, symbol_duration: f64) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns differ in length".into()));
        }
        let mut values = Array2::zeros((rows, columns.len()));
        for (j, col) in columns.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                values[[i, j]] = v;
            }
        }
        Self::new(values, labels, symbol_duration)
    }

    pub fn n_symbols(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.n_nodes()) {
            return Err(Error::DimensionMismatch(format!("column {bad} out of {}", self.n_nodes())));
        }
        Ok(Self {
            values: self.values.select(Axis(1), columns),
            labels: columns.iter().map(|&c| self.labels[c].clone()).collect(),
            symbol_duration: self.symbol_duration,
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_symbols()) {
            return Err(Error::DimensionMismatch(format!("row {bad} out of {}", self.n_symbols())));
        }
        Ok(Self {
            values: self.values.select(Axis(0), rows),
            labels: self.labels.clone(),
            symbol_duration: self.symbol_duration,
        })
    }

    /// Appends rows of `other` (same nodes) below `self`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.n_nodes() != other.n_nodes() {
            return Err(Error::DimensionMismatch("node counts differ".into()));
        }
        let values = ndarray::concatenate(Axis(0), &[self.values.view(), other.values.view()])
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Ok(Self { values, labels: self.labels.clone(), symbol_duration: self.symbol_duration })
    }

    /// Header of node labels, then one row per symbol.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(w);
        let header: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in self.values.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{:e}", v.as_f64())).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Binary layout (little-endian): `rows: u64`, `cols: u64`,
    /// `symbol_duration: f64`, then row-major `f64` values.
    pub fn write_container<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n_symbols() as u64).to_le_bytes())?;
        w.write_all(&(self.n_nodes() as u64).to_le_bytes())?;
        w.write_all(&self.symbol_duration.to_le_bytes())?;
        for v in self.values.iter() {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_detectors<T: Real>(responses: &[DetectorResponse<T>]) -> Result<()> {
    let first = responses.first().ok_or_else(|| invalid("responses", "no detector responses"))?;
    for r in responses {
        if r.signal.sample_rate() != first.signal.sample_rate() || r.signal.len() != first.signal.len() {
            return Err(Error::DimensionMismatch("detector responses differ in rate or length".into()));
        }
    }
    Ok(())
}

fn extract_node<T: Real>(
    responses: &[DetectorResponse<T>],
    node: &NodeSpec,
    windows: &SymbolWindows,
) -> Result<Vec<T>> {
    let resp = responses.get(node.detector_index).ok_or_else(|| {
        invalid("node.detector_index", format!("{} but only {} detectors", node.detector_index, responses.len()))
    })?;
    let filter = design_bandpass(&node.filter, resp.signal.sample_rate())?;
    let filtered = super::filter::filter_signal(&resp.signal, &filter)?;
    match &node.envelope {
        Envelope::RmsPerSymbol => envelope_rms(&filtered, windows),
        Envelope::DiodeMean(p) => envelope_diode(&filtered, windows, p),
    }
}

/// Column `j` is `envelope(filter(response[nodes[j].detector], nodes[j].filter))`.
///
/// Nodes are processed in parallel; column order always follows `nodes`.
pub fn extract_spectral_states<T: Real>(
    responses: &[DetectorResponse<T>],
    nodes: &[NodeSpec],
    windows: &SymbolWindows,
) -> Result<StateMatrix<T>> {
    check_detectors(responses)?;
    let columns = nodes
        .par_iter()
        .map(|n| extract_node(responses, n, windows))
        .collect::<Result<Vec<_>>>()?;
    let labels = nodes.iter().map(|n| NodeLabel::Spectral(*n)).collect();
    StateMatrix::from_columns(columns, labels, windows.symbol_duration)
}

/// Largest number of virtual nodes a symbol window can hold at `sample_rate`.
pub fn max_virtual_nodes(symbol_duration: f64, sample_rate: f64) -> usize {
    (symbol_duration * sample_rate + 1e-9).floor() as usize
}

/// `nodes_per_symbol` evenly spaced samples from every symbol window of every
/// detector; columns are grouped by detector.
pub fn extract_virtual_states<T: Real>(
    responses: &[DetectorResponse<T>],
    windows: &SymbolWindows,
    nodes_per_symbol: usize,
) -> Result<StateMatrix<T>> {
    check_detectors(responses)?;
    let fs = responses[0].signal.sample_rate();
    let max = max_virtual_nodes(windows.symbol_duration, fs);
    if nodes_per_symbol == 0 || nodes_per_symbol > max {
        return Err(invalid(
            "nodes_per_symbol",
            format!("{nodes_per_symbol} requested, a {} s symbol at {fs} Hz holds at most {max}", windows.symbol_duration),
        ));
    }
    let offsets: Vec<usize> = (0..nodes_per_symbol).map(|j| j * max / nodes_per_symbol).collect();
    let mut columns = Vec::with_capacity(responses.len() * nodes_per_symbol);
    let mut labels = Vec::with_capacity(columns.capacity());
    for resp in responses {
        let ranges = windows.ranges(&resp.signal)?;
        let x = resp.signal.samples();
        for &off in &offsets {
            columns.push(ranges.iter().map(|r| x[r.start + off]).collect());
            labels.push(NodeLabel::Virtual { detector_index: resp.detector_index, offset: off });
        }
    }
    StateMatrix::from_columns(columns, labels, windows.symbol_duration)
}

/// Centers 0.1..=5.0 GHz in 0.1 GHz steps, 0.2 GHz wide, order 2.
///
/// The 0.1 GHz node would put its lower edge at DC, which no band-pass can
/// realize; its width is narrowed to 1.9 x center.
pub fn emulation_pool_filters() -> Vec<FilterSpec> {
    (1..=50)
        .map(|k| {
            let center = k as f64 * 0.1e9;
            FilterSpec { center, bandwidth_3db: (0.2e9f64).min(1.9 * center), order: 2 }
        })
        .collect()
}

/// Every filter on every detector, grouped by detector.
pub fn pool_nodes(filters: &[FilterSpec], n_detectors: usize, envelope: Envelope) -> Vec<NodeSpec> {
    (0..n_detectors)
        .flat_map(|d| filters.iter().map(move |&filter| NodeSpec { detector_index: d, filter, envelope }))
        .collect()
}

/// Passbands (MHz) of the eight physical band-pass filters of the hardware build.
pub const HARDWARE_PASSBANDS_MHZ: [(f64, f64); 8] = [
    (1480.0, 1570.0),
    (1530.0, 1620.0),
    (1750.0, 1930.0),
    (1850.0, 2040.0),
    (2000.0, 2260.0),
    (2170.0, 2380.0),
    (2250.0, 2470.0),
    (2340.0, 2530.0),
];

pub const HARDWARE_DETECTORS: usize = 7;

pub fn hardware_preset_filters() -> Vec<FilterSpec> {
    HARDWARE_PASSBANDS_MHZ
        .iter()
        .map(|&(lo, hi)| FilterSpec { center: (lo + hi) / 2.0 * 1e6, bandwidth_3db: (hi - lo) * 1e6, order: 2 })
        .collect()
}

/// 8 filters x 7 detectors, diode-detected.
pub fn hardware_preset_nodes() -> Vec<NodeSpec> {
    pool_nodes(&hardware_preset_filters(), HARDWARE_DETECTORS, Envelope::DiodeMean(DiodeParams::default()))
}
