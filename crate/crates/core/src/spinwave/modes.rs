use serde::{Deserialize, Serialize};

use super::ReservoirConfig;
use crate::error::{invalid, Result};

/// One spin-wave mode of the lumped model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Hz.
    pub frequency: f64,
    /// 1/s.
    pub damping: f64,
    /// 1/s per drive unit.
    pub drive_coupling: f64,
    /// m/s.
    pub group_velocity: f64,
}

/// Modes at `f_FMR + (n - n_modes/2) * spacing`; modes at or below 0 Hz are dropped.
///
/// Coupling falls off as a Gaussian in detuning from FMR, and group velocity
/// varies linearly with detuning.
pub fn build_mode_table(cfg: &ReservoirConfig) -> Result<Vec<ModeSpec>> {
    cfg.validate()?;
    let f_fmr = cfg.fmr_frequency();
    let center = (cfg.n_modes / 2) as f64;
    let modes: Vec<ModeSpec> = (0..cfg.n_modes)
        .filter_map(|n| {
            let detuning = (n as f64 - center) * cfg.mode_spacing;
            let frequency = f_fmr + detuning;
            if frequency <= 0.0 {
                return None;
            }
            let taper = (-0.5 * (detuning / cfg.excitation_width).powi(2)).exp();
            let group_velocity = cfg.group_velocity * (1.0 + cfg.velocity_dispersion * detuning).max(0.05);
            Some(ModeSpec { frequency, damping: cfg.damping, drive_coupling: cfg.drive_coupling * taper, group_velocity })
        })
        .collect();
    if modes.is_empty() {
        return Err(invalid(
            "reservoir.bias_field",
            format!("every mode has non-positive frequency (f_FMR = {f_fmr:e} Hz)"),
        ));
    }
    Ok(modes)
}
