//! Per-symbol envelope detection: RMS and diode (rectifier + RC) paths.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::signal::SampledSignal;

/// Consecutive symbol windows `[start + k*T0, start + (k+1)*T0)`, k = 0..count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolWindows {
    /// Absolute time of the first window (s).
    pub start: f64,
    pub symbol_duration: f64,
    pub count: usize,
}

impl SymbolWindows {
    pub fn new(start: f64, symbol_duration: f64, count: usize) -> Self {
        Self { start, symbol_duration, count }
    }

    /// Sample index ranges of every window in `sig`.
    pub fn ranges<T: Real>(&self, sig: &SampledSignal<T>) -> Result<Vec<std::ops::Range<usize>>> {
        if !(self.symbol_duration > 0.0) {
            return Err(invalid("symbol_duration", "must be positive"));
        }
        let end = self.start + self.count as f64 * self.symbol_duration;
        let sig_end = sig.t0() + sig.duration();
        // Tolerate rounding of the final boundary onto the last sample instant.
        if self.start < sig.t0() - 1e-15 || end > sig_end + 0.5 / sig.sample_rate() {
            return Err(Error::WindowExceedsSignal { start: self.start, end, duration: sig.duration() });
        }
        let fs = sig.sample_rate();
        let boundary = |k: usize| -> usize {
            let t = self.start + k as f64 * self.symbol_duration - sig.t0();
            (((t * fs) - 1e-9).ceil().max(0.0) as usize).min(sig.len())
        };
        let ranges: Vec<_> = (0..self.count).map(|k| boundary(k)..boundary(k + 1)).collect();
        if let Some(r) = ranges.iter().find(|r| r.is_empty()) {
            return Err(invalid("symbol_duration", format!("window {:?} holds no samples", r)));
        }
        Ok(ranges)
    }
}

pub fn envelope_rms<T: Real>(sig: &SampledSignal<T>, windows: &SymbolWindows) -> Result<Vec<T>> {
    let x = sig.samples();
    Ok(windows
        .ranges(sig)?
        .into_iter()
        .map(|r| {
            let n = T::from_usize(r.len()).unwrap();
            (x[r].iter().map(|&v| v * v).sum::<T>() / n).sqrt()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rectifier {
    /// `max(v, 0)`.
    IdealHalfWave,
    /// `knee * ln(1 + exp(v / knee)) - knee * ln 2`; smooth, exponential below zero.
    SoftExp { knee: f64 },
}

impl Rectifier {
    fn apply(&self, v: f64) -> f64 {
        match *self {
            Rectifier::IdealHalfWave => v.max(0.0),
            Rectifier::SoftExp { knee } => {
                let x = v / knee;
                // Stable softplus.
                let sp = if x > 30.0 { x } else { x.exp().ln_1p() };
                knee * (sp - std::f64::consts::LN_2)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeParams {
    /// Detector low-pass time constant (s); 0 bypasses the RC stage.
    pub rc_time_constant: f64,
    pub rectifier: Rectifier,
}

impl Default for DiodeParams {
    fn default() -> Self {
        Self { rc_time_constant: 2e-9, rectifier: Rectifier::IdealHalfWave }
    }
}

impl DiodeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rc_time_constant >= 0.0 && self.rc_time_constant.is_finite()) {
            return Err(invalid("diode.rc_time_constant", "must be >= 0"));
        }
        if let Rectifier::SoftExp { knee } = self.rectifier {
            if !(knee > 0.0) {
                return Err(invalid("diode.rectifier.knee", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Rectifies, then applies the first-order RC low-pass, sample by sample.
///
/// The RC stage is discretized exactly for an input held between samples, so a
/// unit step applied at sample 0 yields `1 - exp(-t_i / RC)` at every sample.
pub fn detect_diode<T: Real>(x: &[T], sample_rate: f64, params: &DiodeParams) -> Vec<T> {
    let rect: Vec<f64> = x.iter().map(|&v| params.rectifier.apply(v.as_f64())).collect();
    if params.rc_time_constant == 0.0 {
        return rect.into_iter().map(T::lit).collect();
    }
    let decay = (-1.0 / (sample_rate * params.rc_time_constant)).exp();
    let mut y = 0.0;
    let mut prev_in = 0.0;
    rect.into_iter()
        .map(|r| {
            y = decay * y + (1.0 - decay) * prev_in;
            prev_in = r;
            T::lit(y)
        })
        .collect()
}

/// Mean of the diode-detected signal within each symbol window.
pub fn envelope_diode<T: Real>(
    sig: &SampledSignal<T>,
    windows: &SymbolWindows,
    params: &DiodeParams,
) -> Result<Vec<T>> {
    params.validate()?;
    let ranges = windows.ranges(sig)?;
    let detected = detect_diode(sig.samples(), sig.sample_rate(), params);
    Ok(ranges
        .into_iter()
        .map(|r| {
            let n = T::from_usize(r.len()).unwrap();
            detected[r].iter().copied().sum::<T>() / n
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const FS: f64 = 12.5e9;
    const T0: f64 = 5e-9;

    fn sine(amplitude: f64, freq: f64, n: usize) -> SampledSignal<f64> {
        SampledSignal::from_fn(n, FS, 0.0, |t| amplitude * (2.0 * PI * freq * t).sin()).unwrap()
    }

    #[test]
    fn rms_of_full_period_sine() {
        // 2.5 GHz: 12.5 periods per 5 ns symbol; use a 4 ns symbol for integer periods.
        let sig = sine(0.8, 2.5e9, 1000);
        let w = SymbolWindows::new(0.0, 4e-9, 10);
        for v in envelope_rms(&sig, &w).unwrap() {
            assert!((v - 0.8 / 2f64.sqrt()).abs() < 0.01 * 0.8 / 2f64.sqrt());
        }
    }

    #[test]
    fn half_wave_mean_of_sine() {
        // 25 samples per period keeps the sampled mean within 0.2% of A/pi.
        let sig = sine(1.3, 0.5e9, 1000);
        let w = SymbolWindows::new(0.0, 4e-9, 10);
        let p = DiodeParams { rc_time_constant: 0.0, rectifier: Rectifier::IdealHalfWave };
        for v in envelope_diode(&sig, &w, &p).unwrap() {
            assert!((v - 1.3 / PI).abs() < 0.01 * 1.3 / PI);
        }
    }

    #[test]
    fn rc_step_response_is_analytic() {
        let rc = 2e-9;
        let sig = SampledSignal::<f64>::new(vec![1.0; 500], FS, 0.0).unwrap();
        let p = DiodeParams { rc_time_constant: rc, rectifier: Rectifier::IdealHalfWave };
        let y = detect_diode(sig.samples(), FS, &p);
        for (i, v) in y.iter().enumerate() {
            let t = i as f64 / FS;
            assert!((v - (1.0 - (-t / rc).exp())).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_signal_gives_zero_states() {
        let sig = SampledSignal::<f32>::zeros(700, FS).unwrap();
        let w = SymbolWindows::new(0.0, T0, 10);
        assert!(envelope_rms(&sig, &w).unwrap().iter().all(|&v| v == 0.0));
        for rect in [Rectifier::IdealHalfWave, Rectifier::SoftExp { knee: 0.05 }] {
            let p = DiodeParams { rc_time_constant: 2e-9, rectifier: rect };
            assert!(envelope_diode(&sig, &w, &p).unwrap().iter().all(|&v| v.abs() < 1e-7));
        }
    }

    #[test]
    fn rms_matches_brute_force_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..2000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sig = SampledSignal::new(x.clone(), FS, 0.0).unwrap();
        let w = SymbolWindows::new(T0, T0, 30);
        let got = envelope_rms(&sig, &w).unwrap();
        for (k, g) in got.iter().enumerate() {
            // Samples with t in [start + k T0, start + (k+1) T0).
            let members: Vec<f64> = (0..x.len())
                .filter(|&i| {
                    let t = i as f64 / FS;
                    let lo = T0 + k as f64 * T0;
                    t >= lo - 1e-18 && t < lo + T0 - 1e-18
                })
                .map(|i| x[i])
                .collect();
            let oracle = (members.iter().map(|v| v * v).sum::<f64>() / members.len() as f64).sqrt();
            assert!((g - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn windows_alternate_62_and_63_samples() {
        let sig = SampledSignal::<f64>::zeros(1250, FS).unwrap();
        let r = SymbolWindows::new(0.0, T0, 20).ranges(&sig).unwrap();
        let total: usize = r.iter().map(|r| r.len()).sum();
        assert_eq!(total, 1250);
        assert!(r.iter().all(|r| r.len() == 62 || r.len() == 63));
    }

    #[test]
    fn window_beyond_signal_is_an_error() {
        let sig = SampledSignal::<f64>::zeros(100, FS).unwrap();
        let w = SymbolWindows::new(0.0, T0, 2);
        assert!(matches!(envelope_rms(&sig, &w), Err(Error::WindowExceedsSignal { .. })));
        assert!(envelope_diode(&sig, &w, &DiodeParams::default()).is_err());
    }

    #[test]
    fn rectification_breaks_odd_symmetry() {
        // Asymmetric pulse: a tall positive lobe and a shallow negative one.
        let sig = SampledSignal::<f64>::from_fn(625, FS, 0.0, |t| {
            let x = (2.0 * PI * 1e9 * t).sin();
            if x > 0.0 { x } else { 0.3 * x }
        })
        .unwrap();
        let neg = sig.scaled(-1.0);
        let w = SymbolWindows::new(0.0, T0, 5);
        let p = DiodeParams::default();
        let a = envelope_diode(&sig, &w, &p).unwrap();
        let b = envelope_diode(&neg, &w, &p).unwrap();
        assert!(a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-3));
    }
}
