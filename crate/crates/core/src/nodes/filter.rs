//! Butterworth band-pass design (bilinear transform) and second-order-section filtering.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::signal::SampledSignal;

/// Identity of one band-pass filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Hz.
    pub center: f64,
    /// 3-dB width (Hz).
    pub bandwidth_3db: f64,
    /// Order of the low-pass prototype; the band-pass has `order` sections.
    pub order: usize,
}

impl FilterSpec {
    pub fn new(center: f64, bandwidth_3db: f64, order: usize) -> Result<Self> {
        let spec = Self { center, bandwidth_3db, order };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center > 0.0 && self.center.is_finite()) {
            return Err(invalid("filter.center", format!("must be positive, got {}", self.center)));
        }
        if !(self.bandwidth_3db > 0.0 && self.bandwidth_3db < 2.0 * self.center) {
            return Err(invalid(
                "filter.bandwidth_3db",
                format!("must lie in (0, 2*center) = (0, {}), got {}", 2.0 * self.center, self.bandwidth_3db),
            ));
        }
        if self.order == 0 {
            return Err(invalid("filter.order", "must be >= 1"));
        }
        Ok(())
    }

    pub fn lower_edge(&self) -> f64 {
        self.center - self.bandwidth_3db / 2.0
    }

    pub fn upper_edge(&self) -> f64 {
        self.center + self.bandwidth_3db / 2.0
    }

    /// Magnitude of the continuous-time Butterworth band-pass with the same 3-dB edges.
    pub fn analog_magnitude(&self, f: f64) -> f64 {
        if f <= 0.0 {
            return 0.0;
        }
        let (f1, f2) = (self.lower_edge(), self.upper_edge());
        let x = (f * f - f1 * f2) / (f * (f2 - f1));
        1.0 / (1.0 + x.powi(2 * self.order as i32)).sqrt()
    }
}

/// One biquad, `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (1.0 + self.a[0] * z_inv + self.a[1] * z2)
    }
}

/// A digital filter as a cascade of biquads, tied to the rate it was designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub sample_rate: f64,
}

impl SosFilter {
    pub fn response(&self, f: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f / self.sample_rate);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    pub fn magnitude_db(&self, f: f64) -> f64 {
        20.0 * self.response(f).norm().log10()
    }

    /// Zero-state causal filtering of raw samples (transposed direct form II).
    pub fn apply<T: Real>(&self, input: &[T]) -> Vec<T> {
        let mut data = input.to_vec();
        for s in &self.sections {
            let [b0, b1, b2] = s.b.map(T::lit);
            let [a1, a2] = s.a.map(T::lit);
            let (mut z1, mut z2) = (T::zero(), T::zero());
            for x in data.iter_mut() {
                let y = b0 * *x + z1;
                z1 = b1 * *x - a1 * y + z2;
                z2 = b2 * *x - a2 * y;
                *x = y;
            }
        }
        data
    }
}

/// Designs a Butterworth band-pass whose 3-dB edges land exactly on
/// `center +- bandwidth_3db/2` (both edges pre-warped).
pub fn design_bandpass(spec: &FilterSpec, sample_rate: f64) -> Result<SosFilter> {
    spec.validate()?;
    if !(sample_rate > 0.0) {
        return Err(invalid("sample_rate", format!("must be positive, got {sample_rate}")));
    }
    if spec.upper_edge() >= 0.45 * sample_rate {
        return Err(Error::BandEdgeBeyondNyquist { edge_hz: spec.upper_edge(), sample_rate });
    }
    let fs2 = 2.0 * sample_rate;
    let warp = |f: f64| fs2 * (PI * f / sample_rate).tan();
    let (w1, w2) = (warp(spec.lower_edge()), warp(spec.upper_edge()));
    let w0 = (w1 * w2).sqrt();
    let bw = w2 - w1;
    let n = spec.order;

    // Low-pass prototype poles -> band-pass poles -> z-plane.
    let mut z_poles = Vec::with_capacity(2 * n);
    for k in 1..=n {
        let theta = PI * (2 * k + n - 1) as f64 / (2 * n) as f64;
        let p = Complex64::from_polar(1.0, theta);
        let half = p * (bw / 2.0);
        let disc = (half * half - w0 * w0).sqrt();
        for s in [half + disc, half - disc] {
            z_poles.push((fs2 + s) / (fs2 - s));
        }
    }

    // Pair conjugates; every section gets one zero at DC and one at Nyquist.
    let mut upper: Vec<Complex64> = z_poles.iter().copied().filter(|z| z.im > 1e-12).collect();
    let mut real: Vec<f64> = z_poles.iter().filter(|z| z.im.abs() <= 1e-12).map(|z| z.re).collect();
    upper.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap());
    real.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut denominators: Vec<[f64; 2]> = upper.iter().map(|z| [-2.0 * z.re, z.norm_sqr()]).collect();
    for pair in real.chunks(2) {
        let (r1, r2) = (pair[0], *pair.get(1).unwrap_or(&0.0));
        denominators.push([-(r1 + r2), r1 * r2]);
    }

    let f_peak = sample_rate / PI * (w0 / fs2).atan();
    let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f_peak / sample_rate);
    let sections = denominators
        .into_iter()
        .map(|a| {
            let raw = Biquad { b: [1.0, 0.0, -1.0], a };
            let g = 1.0 / raw.response(z_inv).norm();
            Biquad { b: [g, 0.0, -g], a }
        })
        .collect();
    Ok(SosFilter { sections, sample_rate })
}

/// Filters `sig` from zero initial state.
pub fn filter_signal<T: Real>(sig: &SampledSignal<T>, filter: &SosFilter) -> Result<SampledSignal<T>> {
    if (filter.sample_rate - sig.sample_rate()).abs() > 1e-9 * sig.sample_rate() {
        return Err(Error::RateMismatch { expected: filter.sample_rate, actual: sig.sample_rate() });
    }
    sig.with_samples(filter.apply(sig.samples()))
}
