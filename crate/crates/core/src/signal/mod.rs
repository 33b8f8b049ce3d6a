//! Uniformly sampled waveforms, pulse modulation and basic spectral utilities.

mod io;
mod pulse;
mod resample;
mod spectrum;

pub use io::{read_container, read_container_file, write_container, write_container_file, write_csv};
pub use pulse::{modulate_pulse_train, PulseParams};
pub use resample::resample;
pub use spectrum::{power_spectrum, PowerSpectrum, Window};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// A real waveform sampled at a fixed rate, starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal<T> {
    samples: Vec<T>,
    sample_rate: f64,
    t0: f64,
}

impl<T: Real> SampledSignal<T> {
    pub fn new(samples: Vec<T>, sample_rate: f64, t0: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid("sample_rate", format!("must be positive and finite, got {sample_rate}")));
        }
        if !t0.is_finite() {
            return Err(invalid("t0", "must be finite"));
        }
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        Ok(Self { samples, sample_rate, t0 })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![T::zero(); len], sample_rate, 0.0)
    }

    /// Samples `f(t)` on `len` points starting at `t0`.
    pub fn from_fn(len: usize, sample_rate: f64, t0: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..len).map(|i| T::lit(f(t0 + i as f64 / sample_rate))).collect();
        Self::new(samples, sample_rate, t0)
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `len / sample_rate`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.t0 + index as f64 / self.sample_rate
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn peak_abs(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn mean_square(&self) -> T {
        let n = T::from_usize(self.samples.len()).unwrap();
        self.samples.iter().map(|&x| x * x).sum::<T>() / n
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            samples: self.samples.iter().map(|&x| x * factor).collect(),
            sample_rate: self.sample_rate,
            t0: self.t0,
        }
    }

    /// Replaces the samples, keeping rate and start time.
    pub fn with_samples(&self, samples: Vec<T>) -> Result<Self> {
        Self::new(samples, self.sample_rate, self.t0)
    }

    pub fn cast<U: Real>(&self) -> SampledSignal<U> {
        SampledSignal {
            samples: self.samples.iter().map(|&x| U::lit(x.as_f64())).collect(),
            sample_rate: self.sample_rate,
            t0: self.t0,
        }
    }
}
