//! Trapezoidal pulse modulation of discrete input sequences.

use serde::{Deserialize, Serialize};

use super::SampledSignal;
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Timing of the trapezoidal symbol pulse.
///
/// Symbol `n` (1-based) occupies `[n*T0, (n+1)*T0)`; its pulse rises linearly for
/// `ramp`, stays flat for `flat_top`, then falls for `ramp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// T0 (s).
    pub symbol_duration: f64,
    /// T_on (s).
    pub flat_top: f64,
    /// T_off (s).
    pub ramp: f64,
    #[serde(default = "default_amplitude_scale")]
    pub amplitude_scale: f64,
}

fn default_amplitude_scale() -> f64 {
    1.0
}

impl Default for PulseParams {
    fn default() -> Self {
        Self { symbol_duration: 5e-9, flat_top: 0.375e-9, ramp: 0.375e-9, amplitude_scale: 1.0 }
    }
}

impl PulseParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pulse.symbol_duration", self.symbol_duration),
            ("pulse.flat_top", self.flat_top),
            ("pulse.ramp", self.ramp),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !self.amplitude_scale.is_finite() {
            return Err(invalid("pulse.amplitude_scale", "must be finite"));
        }
        if self.support() > self.symbol_duration * (1.0 + 1e-12) {
            return Err(invalid(
                "pulse",
                format!(
                    "pulses overlap: 2*ramp + flat_top = {:e} s exceeds symbol_duration {:e} s",
                    self.support(),
                    self.symbol_duration
                ),
            ));
        }
        Ok(())
    }

    /// Length of the nonzero part of one pulse, `2*T_off + T_on`.
    pub fn support(&self) -> f64 {
        2.0 * self.ramp + self.flat_top
    }

    /// Unit pulse shape p(t).
    pub fn shape(&self, t: f64) -> f64 {
        let (off, on) = (self.ramp, self.flat_top);
        if t < 0.0 {
            0.0
        } else if t < off {
            t / off
        } else if t < off + on {
            1.0
        } else if t < 2.0 * off + on {
            1.0 - (t - off - on) / off
        } else {
            0.0
        }
    }
}

/// Evaluates `sum_n u(n) p(t - n T0)` (n = 1..=N) on the sample grid starting at t = 0.
///
/// The returned signal covers `(N + 1) * T0` so that the last pulse is complete.
pub fn modulate_pulse_train<T: Real>(
    u: &[T],
    params: &PulseParams,
    sample_rate: f64,
) -> Result<SampledSignal<T>> {
    params.validate()?;
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(invalid("sample_rate", format!("must be positive, got {sample_rate}")));
    }
    if sample_rate * params.ramp < 4.0 - 1e-9 {
        return Err(invalid(
            "sample_rate",
            format!("{sample_rate} Hz resolves the {:e} s ramp with fewer than 4 samples", params.ramp),
        ));
    }
    if u.is_empty() {
        return Err(invalid("u", "input sequence is empty"));
    }

    let t0 = params.symbol_duration;
    let len = ((u.len() + 1) as f64 * t0 * sample_rate - 1e-6).ceil() as usize;
    let mut samples = vec![T::zero(); len];
    for (i, out) in samples.iter_mut().enumerate() {
        // Integer-first arithmetic keeps grid points that coincide with pulse
        // corners exact.
        let t = i as f64 / sample_rate;
        let n = (t / t0).floor() as usize;
        if n == 0 || n > u.len() {
            continue;
        }
        let local = t - n as f64 * t0;
        let p = params.shape(local);
        if p != 0.0 {
            *out = u[n - 1] * T::lit(p * params.amplitude_scale);
        }
    }
    SampledSignal::new(samples, sample_rate, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FS: f64 = 16e9;

    fn default_params() -> PulseParams {
        PulseParams::default()
    }

    fn value_at(sig: &SampledSignal<f64>, t: f64) -> f64 {
        let i = (t * sig.sample_rate()).round() as usize;
        assert!((i as f64 / sig.sample_rate() - t).abs() < 1e-15, "t not on grid");
        sig.samples()[i]
    }

    #[test]
    fn flat_top_value_is_exact() {
        let p = default_params();
        let sig = modulate_pulse_train(&[1.0f64], &p, FS).unwrap();
        let t = p.symbol_duration + p.ramp + p.flat_top / 2.0;
        assert_eq!(value_at(&sig, t), 1.0);
    }

    #[test]
    fn mid_ramp_is_linear() {
        let p = default_params();
        let sig = modulate_pulse_train(&[0.5f64], &p, FS).unwrap();
        let t = p.symbol_duration + p.ramp / 2.0;
        assert!((value_at(&sig, t) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_input_gives_zero_signal() {
        let sig = modulate_pulse_train(&[0.0f64; 3], &default_params(), FS).unwrap();
        assert!(sig.samples().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn duration_covers_one_extra_symbol() {
        let p = default_params();
        let sig = modulate_pulse_train(&[1.0f64; 4], &p, FS).unwrap();
        assert!(sig.duration() >= 5.0 * p.symbol_duration);
        assert_eq!(sig.len(), 400);
    }

    #[test]
    fn overlap_and_rate_errors() {
        let mut p = default_params();
        p.flat_top = 4.5e-9;
        assert!(modulate_pulse_train(&[1.0f64], &p, FS).is_err());
        assert!(modulate_pulse_train(&[1.0f64], &default_params(), 0.0).is_err());
        assert!(modulate_pulse_train(&[1.0f64], &default_params(), -1.0).is_err());
        // 4 / 0.375 ns = 10.67 GHz
        assert!(modulate_pulse_train(&[1.0f64], &default_params(), 10e9).is_err());
        assert!(modulate_pulse_train(&[1.0f64], &default_params(), 12.5e9).is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let sig = modulate_pulse_train(&[1.0f32, -0.5], &default_params(), FS).unwrap();
        let peak = sig.samples().iter().fold(0.0f32, |m, x| m.max(x.abs()));
        assert_eq!(peak, 1.0);
    }

    proptest! {
        #[test]
        fn support_peak_and_linearity(u in prop::collection::vec(-2.0f64..2.0, 1..12),
                                      alpha in -3.0f64..3.0,
                                      scale in 0.1f64..2.0) {
            let p = PulseParams { amplitude_scale: scale, ..default_params() };
            let sig = modulate_pulse_train(&u, &p, FS).unwrap();
            let per_symbol = (p.symbol_duration * FS).round() as usize;
            let ramp_step = 1.0 / (p.ramp * FS);
            for (i, &x) in sig.samples().iter().enumerate() {
                let t = i as f64 / FS;
                let n = (t / p.symbol_duration).floor();
                let local = t - n * p.symbol_duration;
                if n < 1.0 || local >= p.support() {
                    prop_assert_eq!(x, 0.0);
                }
            }
            for (n, &un) in u.iter().enumerate() {
                let start = (n + 1) * per_symbol;
                let window = &sig.samples()[start..start + per_symbol];
                let peak = window.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                prop_assert!((peak - un.abs() * scale).abs() <= un.abs() * scale * ramp_step + 1e-12);
            }
            let ua: Vec<f64> = u.iter().map(|x| alpha * x).collect();
            let scaled = modulate_pulse_train(&ua, &p, FS).unwrap();
            for (a, b) in scaled.samples().iter().zip(sig.samples()) {
                prop_assert!((a - alpha * b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
