use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Full parameterization of the coupled-mode spin-wave reservoir.
///
/// The FMR branch is linear in the bias field: `f_FMR = fmr_intercept + fmr_slope * bias_field`.
/// The defaults put it at 1 GHz for 147.3 mT, 2 GHz for 187.3 mT and ~6 GHz for
/// 347.5 mT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirConfig {
    /// T.
    pub bias_field: f64,
    /// Hz.
    pub fmr_intercept: f64,
    /// Hz/T.
    pub fmr_slope: f64,
    pub n_modes: usize,
    /// Hz.
    pub mode_spacing: f64,
    /// Amplitude damping rate of every mode (1/s).
    pub damping: f64,
    /// Drive coupling of the FMR mode (1/s per drive unit).
    pub drive_coupling: f64,
    /// Gaussian width (Hz) of the coupling taper around the FMR frequency.
    pub excitation_width: f64,
    /// 3-dB width (Hz) of the antenna excitation band-pass centred on the FMR
    /// frequency, applied to the drive before it reaches the modes; 0 disables it.
    pub antenna_bandwidth: f64,
    /// Group velocity at the FMR frequency (m/s).
    pub group_velocity: f64,
    /// Relative velocity change per Hz of detuning from FMR (1/Hz).
    pub velocity_dispersion: f64,
    /// Quadratic mixing strength (1/s per squared amplitude); 0 gives a linear reservoir.
    pub chi: f64,
    /// Hz.
    pub match_tolerance: f64,
    /// Exciter-to-detector distances (m), strictly increasing.
    pub detector_positions: Vec<f64>,
    /// Electromagnetic feedthrough: band-pass centre (Hz), 3-dB width (Hz), gain and delay (s).
    pub em_center: f64,
    pub em_bandwidth: f64,
    pub em_gain: f64,
    pub em_delay: f64,
    /// Integrator step (s); `None` picks the largest step that divides the drive
    /// sample period and resolves the highest mode by 10 steps per period.
    pub integrator_dt: Option<f64>,
    /// Standard deviation of additive Gaussian detector noise.
    pub noise_floor: f64,
    pub seed: u64,
}

pub const DEFAULT_DETECTORS: usize = 7;

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            bias_field: 0.1873,
            fmr_intercept: 1.0e9 - 25.0e9 * 0.1473,
            fmr_slope: 25.0e9,
            n_modes: 32,
            mode_spacing: 30e6,
            damping: 4e8,
            drive_coupling: 2e10,
            excitation_width: 200e6,
            antenna_bandwidth: 0.8e9,
            group_velocity: 3.5e5,
            velocity_dispersion: 0.0,
            chi: 2e7,
            match_tolerance: 15e6,
            detector_positions: (1..=DEFAULT_DETECTORS).map(|d| 0.7e-3 * d as f64).collect(),
            em_center: 2.0e9,
            em_bandwidth: 0.4e9,
            em_gain: 1.0,
            em_delay: 0.0,
            integrator_dt: None,
            noise_floor: 1e-3,
            seed: 1,
        }
    }
}

impl ReservoirConfig {
    pub fn fmr_frequency(&self) -> f64 {
        self.fmr_intercept + self.fmr_slope * self.bias_field
    }

    pub fn n_detectors(&self) -> usize {
        self.detector_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("reservoir.bias_field", self.bias_field),
            ("reservoir.fmr_intercept", self.fmr_intercept),
            ("reservoir.fmr_slope", self.fmr_slope),
            ("reservoir.em_gain", self.em_gain),
            ("reservoir.drive_coupling", self.drive_coupling),
            ("reservoir.velocity_dispersion", self.velocity_dispersion),
        ];
        if !(self.antenna_bandwidth >= 0.0 && self.antenna_bandwidth.is_finite()) {
            return Err(invalid("reservoir.antenna_bandwidth", "must be finite and >= 0"));
        }
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        let positive = [
            ("reservoir.mode_spacing", self.mode_spacing),
            ("reservoir.damping", self.damping),
            ("reservoir.excitation_width", self.excitation_width),
            ("reservoir.group_velocity", self.group_velocity),
            ("reservoir.match_tolerance", self.match_tolerance),
            ("reservoir.em_center", self.em_center),
            ("reservoir.em_bandwidth", self.em_bandwidth),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.n_modes == 0 {
            return Err(invalid("reservoir.n_modes", "must be >= 1"));
        }
        if !(self.chi >= 0.0 && self.chi.is_finite()) {
            return Err(invalid("reservoir.chi", format!("must be >= 0, got {}", self.chi)));
        }
        if !(self.noise_floor >= 0.0 && self.noise_floor.is_finite()) {
            return Err(invalid("reservoir.noise_floor", "must be >= 0"));
        }
        if !(self.em_delay >= 0.0 && self.em_delay.is_finite()) {
            return Err(invalid("reservoir.em_delay", "must be >= 0"));
        }
        if self.em_bandwidth >= 2.0 * self.em_center {
            return Err(invalid("reservoir.em_bandwidth", "must be below 2 x em_center"));
        }
        if self.detector_positions.is_empty() {
            return Err(invalid("reservoir.detector_positions", "at least one detector is required"));
        }
        if self.detector_positions[0] <= 0.0 || self.detector_positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("reservoir.detector_positions", "must be positive and strictly increasing"));
        }
        if let Some(dt) = self.integrator_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("reservoir.integrator_dt", "must be positive"));
            }
        }
        Ok(())
    }
}
