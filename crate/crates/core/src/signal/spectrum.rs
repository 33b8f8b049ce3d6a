use std::sync::Arc;

use num_complex::Complex;
use rustfft::FftPlanner;

use super::SampledSignal;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Floor applied to normalized power so silent bins stay finite.
pub const POWER_FLOOR_DB: f64 = -400.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

/// One-sided power spectrum.
#[derive(Debug, Clone)]
pub struct PowerSpectrum {
    /// Bin frequencies (Hz), `0..=sample_rate/2`.
    pub freqs: Vec<f64>,
    /// Power per bin normalized so that the strongest bin is 0 dB.
    pub power_db: Vec<f64>,
    /// Linear power per bin; sums to the (window-normalized) mean square.
    pub power: Vec<f64>,
    pub bin_width: f64,
}

impl PowerSpectrum {
    pub fn peak_frequency(&self) -> f64 {
        let (i, _) = self
            .power
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bp), (i, &p)| if p > bp { (i, p) } else { (bi, bp) });
        self.freqs[i]
    }

    pub fn bin_of(&self, freq: f64) -> usize {
        ((freq / self.bin_width).round() as usize).min(self.freqs.len() - 1)
    }

    /// Largest linear power within `half_width` bins of `freq`.
    pub fn power_near(&self, freq: f64, half_width: usize) -> f64 {
        let c = self.bin_of(freq);
        let lo = c.saturating_sub(half_width);
        let hi = (c + half_width).min(self.power.len() - 1);
        self.power[lo..=hi].iter().cloned().fold(0.0, f64::max)
    }
}

pub fn power_spectrum<T: Real>(sig: &SampledSignal<T>, window: Window) -> Result<PowerSpectrum> {
    let n = sig.len();
    if n < 2 {
        return Err(Error::EmptySignal);
    }
    let weights: Vec<f64> = match window {
        Window::Rectangular => vec![1.0; n],
        Window::Hann => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect(),
    };
    let window_power = weights.iter().map(|w| w * w).sum::<f64>() / n as f64;

    let mut buf: Vec<Complex<T>> = sig
        .samples()
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| Complex::new(x * T::lit(w), T::zero()))
        .collect();
    let fft: Arc<dyn rustfft::Fft<T>> = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);

    let half = n / 2;
    let norm = 1.0 / (n as f64 * n as f64 * window_power);
    let power: Vec<f64> = (0..=half)
        .map(|k| {
            let mag2 = buf[k].norm_sqr().as_f64() * norm;
            // Bins other than DC and (for even n) Nyquist fold in their negative twin.
            if k == 0 || (n % 2 == 0 && k == half) {
                mag2
            } else {
                2.0 * mag2
            }
        })
        .collect();
    let bin_width = sig.sample_rate() / n as f64;
    let freqs = (0..=half).map(|k| k as f64 * bin_width).collect();
    let max = power.iter().cloned().fold(0.0, f64::max);
    let power_db = power
        .iter()
        .map(|&p| if max > 0.0 { (10.0 * (p / max).log10()).max(POWER_FLOOR_DB) } else { POWER_FLOOR_DB })
        .collect();
    Ok(PowerSpectrum { freqs, power_db, power, bin_width })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Direct DFT power at one frequency, independent of the FFT path.
    fn dft_power(x: &[f64], fs: f64, f: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &v) in x.iter().enumerate() {
            let ph = 2.0 * PI * f * i as f64 / fs;
            re += v * ph.cos();
            im -= v * ph.sin();
        }
        let n = x.len() as f64;
        2.0 * (re * re + im * im) / (n * n)
    }

    #[test]
    fn sine_peak_lands_on_its_bin() {
        let fs = 12.5e9;
        let sig = SampledSignal::<f64>::from_fn(12_500, fs, 0.0, |t| (2.0 * PI * 2e9 * t).sin()).unwrap();
        let s = power_spectrum(&sig, Window::Rectangular).unwrap();
        assert!((s.peak_frequency() - 2e9).abs() <= s.bin_width);
        assert_eq!(s.freqs[0], 0.0);
        assert_eq!(*s.freqs.last().unwrap(), fs / 2.0);
        assert_eq!(s.power_db.iter().cloned().fold(f64::MIN, f64::max), 0.0);
    }

    #[test]
    fn zero_signal_is_finite() {
        let sig = SampledSignal::<f64>::zeros(64, 1e9).unwrap();
        let s = power_spectrum(&sig, Window::Hann).unwrap();
        assert!(s.power_db.iter().all(|p| p.is_finite()));
        assert!(s.power_db.iter().all(|&p| p == POWER_FLOOR_DB));
    }

    #[test]
    fn two_tone_peaks_match_direct_dft() {
        let fs = 12.5e9;
        let n = 12_500;
        let sig = SampledSignal::<f64>::from_fn(n, fs, 0.0, |t| {
            (2.0 * PI * 1.8e9 * t).sin() + (2.0 * PI * 2.1e9 * t + 0.3).sin()
        })
        .unwrap();
        let s = power_spectrum(&sig, Window::Rectangular).unwrap();
        let p1 = dft_power(sig.samples(), fs, 1.8e9);
        let p2 = dft_power(sig.samples(), fs, 2.1e9);
        assert!((10.0 * (p1 / p2).log10()).abs() < 0.1);
        let (b1, b2) = (s.bin_of(1.8e9), s.bin_of(2.1e9));
        assert!((s.power[b1] - p1).abs() < 1e-9 * p1);
        assert!((s.power[b2] - p2).abs() < 1e-9 * p2);
        assert!((s.power_db[b1] - s.power_db[b2]).abs() < 0.1);
        assert!(s.power_db[b1] > -0.1 && s.power_db[b2] > -0.1);
    }

    #[test]
    fn parseval_rectangular() {
        for n in [2usize, 7, 64, 1001] {
            let sig = SampledSignal::<f64>::from_fn(n, 1.0, 0.0, |t| (t * 1.7).sin() + 0.3 * (t * 0.31).cos() + 0.1)
                .unwrap();
            let s = power_spectrum(&sig, Window::Rectangular).unwrap();
            let total: f64 = s.power.iter().sum();
            let ms = sig.mean_square();
            assert!((total - ms).abs() <= 1e-6 * ms, "n={n}: {total} vs {ms}");
        }
    }

    #[test]
    fn too_short_is_an_error() {
        let sig = SampledSignal::<f64>::new(vec![1.0], 1.0, 0.0).unwrap();
        assert!(power_spectrum(&sig, Window::Rectangular).is_err());
    }
}
