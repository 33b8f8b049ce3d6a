//! Lumped coupled-mode spin-wave reservoir and a shift-register reference reservoir.

mod config;
mod delay_line;
mod modes;
mod sim;

pub use config::{ReservoirConfig, DEFAULT_DETECTORS};
pub use delay_line::delay_line_reference;
pub use modes::{build_mode_table, ModeSpec};
pub use sim::{simulate, simulate_detailed, DetectorResponse, SimulationOutput, INSTABILITY_FACTOR};
