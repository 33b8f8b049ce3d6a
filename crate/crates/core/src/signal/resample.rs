//! Band-limited rate conversion with a Kaiser-windowed sinc kernel.

use super::SampledSignal;
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Kernel half-width in samples of the lower of the two rates.
const HALF_WIDTH: usize = 24;
/// Cutoff as a fraction of the lower rate; the transition band ends at Nyquist.
const CUTOFF: f64 = 0.45;
const KAISER_BETA: f64 = 8.0;
const TABLE_OVERSAMPLE: usize = 1024;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

struct Kernel {
    table: Vec<f64>,
}

impl Kernel {
    fn new() -> Self {
        let n = HALF_WIDTH * TABLE_OVERSAMPLE;
        let norm = bessel_i0(KAISER_BETA);
        let table = (0..=n + 1)
            .map(|i| {
                let u = i as f64 / TABLE_OVERSAMPLE as f64;
                if u >= HALF_WIDTH as f64 {
                    return 0.0;
                }
                let x = 2.0 * CUTOFF * u;
                let sinc = if x == 0.0 { 1.0 } else { (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x) };
                let r = u / HALF_WIDTH as f64;
                sinc * bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm
            })
            .collect();
        Self { table }
    }

    /// Kernel at `u` (in samples of the lower rate).
    fn eval(&self, u: f64) -> f64 {
        let pos = u.abs() * TABLE_OVERSAMPLE as f64;
        let i = pos as usize;
        if i + 1 >= self.table.len() {
            return 0.0;
        }
        let frac = pos - i as f64;
        self.table[i] * (1.0 - frac) + self.table[i + 1] * frac
    }
}

/// Converts `sig` to `new_rate`, preserving `t0` and (to within one sample) the duration.
///
/// The kernel is renormalized at every output instant, so constant signals are
/// reproduced exactly, including near the edges.
pub fn resample<T: Real>(sig: &SampledSignal<T>, new_rate: f64) -> Result<SampledSignal<T>> {
    if !(new_rate > 0.0 && new_rate.is_finite()) {
        return Err(invalid("new_rate", format!("must be positive, got {new_rate}")));
    }
    let old_rate = sig.sample_rate();
    if new_rate == old_rate {
        return Ok(sig.clone());
    }
    let kernel = Kernel::new();
    let min_rate = old_rate.min(new_rate);
    let reach = HALF_WIDTH as f64 * old_rate / min_rate;
    let input = sig.samples();
    let n_in = input.len() as isize;
    let n_out = ((input.len() as f64 * new_rate / old_rate).round() as usize).max(1);
    let to_kernel_units = min_rate / old_rate;

    let out = (0..n_out)
        .map(|j| {
            let x = j as f64 * old_rate / new_rate;
            let lo = ((x - reach).ceil() as isize).max(0);
            let hi = ((x + reach).floor() as isize).min(n_in - 1);
            let (mut acc, mut wsum) = (0.0f64, 0.0f64);
            for i in lo..=hi {
                let w = kernel.eval((i as f64 - x) * to_kernel_units);
                acc += w * input[i as usize].as_f64();
                wsum += w;
            }
            T::lit(if wsum != 0.0 { acc / wsum } else { 0.0 })
        })
        .collect();
    SampledSignal::new(out, new_rate, sig.t0())
}
