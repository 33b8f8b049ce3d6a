//! Coupled-mode integration.
//!
//! Per detector `d`, every mode amplitude obeys
//!
//! ```text
//! da_n/dt = (i 2 pi f_n - G_n) a_n + k_n s_A(t - x_d / v_n)
//!           + i chi [ sum_{f_p + f_q ~ f_n} a_p a_q + sum_{f_p - f_q ~ f_n} a_p conj(a_q) ]
//! ```
//!
//! where `s_A` is the drive after the antenna band-pass around f_FMR
//! (`antenna_bandwidth`), and the detector voltage is
//!
//! ```text
//! v_d = m + (chi / w_FMR^2) d(p^2)/dt + g_em BP(s(t - t_em)) + noise,
//! p   = Im sum_n a_n,   m = Im sum_n (da_n/dt) / w_n,   w = 2 pi f.
//! ```
//!
//! Each complex mode is the normal coordinate of a damped real oscillator whose
//! position is `Im a_n`; `m` is its velocity over `w_n`, i.e. inductive pickup
//! (EMF proportional to dm/dt). That is a true band-pass: zero at DC, unit gain at
//! resonance, rolling off above, so the quasi-static response of a strongly damped
//! mode to the baseband pulse train does not reach the detector. The real drive
//! term drops out of the imaginary part.
//!
//! The `d(p^2)/dt` term is the non-resonant (bound) part of the same quadratic
//! interaction, picked up the same way: a longitudinal component that goes as the
//! square of the precession. It carries the sum and difference frequencies that
//! fall outside the mode table, weighted by their frequency, so there is no
//! rectified DC.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{build_mode_table, ModeSpec, ReservoirConfig};
use crate::error::{invalid, Error, Result};
use crate::nodes::{design_bandpass, FilterSpec};
use crate::scalar::Real;
use crate::signal::SampledSignal;

/// Amplitudes beyond this multiple of the drive peak abort the run.
pub const INSTABILITY_FACTOR: f64 = 1e6;

/// Waveform recorded at one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorResponse<T> {
    pub detector_index: usize,
    pub signal: SampledSignal<T>,
}

/// Responses plus the total modal energy `sum |a_n|^2` at each output sample.
#[derive(Debug, Clone)]
pub struct SimulationOutput<T> {
    pub responses: Vec<DetectorResponse<T>>,
    pub modal_energy: Vec<Vec<f64>>,
}

/// Third-order Lagrange fractional-delay taps for reading `x[i + offset + {-1,0,1,2}]`.
#[derive(Debug, Clone, Copy)]
struct Taps<T> {
    offset: isize,
    w: [T; 4],
}

impl<T: Real> Taps<T> {
    fn new(position: f64) -> Self {
        let base = position.floor();
        let mu = position - base;
        let w = [
            -mu * (mu - 1.0) * (mu - 2.0) / 6.0,
            (mu + 1.0) * (mu - 1.0) * (mu - 2.0) / 2.0,
            -(mu + 1.0) * mu * (mu - 2.0) / 2.0,
            (mu + 1.0) * mu * (mu - 1.0) / 6.0,
        ];
        Self { offset: base as isize, w: w.map(T::lit) }
    }

    #[inline]
    fn read(&self, x: &[T], i: usize) -> T {
        let start = i as isize + self.offset - 1;
        if start >= 0 && (start as usize) + 4 <= x.len() {
            let s = start as usize;
            return self.w[0] * x[s] + self.w[1] * x[s + 1] + self.w[2] * x[s + 2] + self.w[3] * x[s + 3];
        }
        let mut acc = T::zero();
        for k in 0..4 {
            let j = start + k as isize;
            if j >= 0 && (j as usize) < x.len() {
                acc += self.w[k] * x[j as usize];
            }
        }
        acc
    }
}

#[derive(Debug, Clone, Copy)]
enum Coupling {
    Sum(usize, usize),
    Difference(usize, usize),
}

/// Pairs whose sum or difference frequency lands within `tolerance` of each mode.
fn matched_pairs(modes: &[ModeSpec], tolerance: f64) -> Vec<Vec<Coupling>> {
    let n = modes.len();
    let mut table = vec![Vec::new(); n];
    for (target, couplings) in table.iter_mut().enumerate() {
        let ft = modes[target].frequency;
        for p in 0..n {
            for q in 0..n {
                let (fp, fq) = (modes[p].frequency, modes[q].frequency);
                if p <= q && (fp + fq - ft).abs() < tolerance {
                    couplings.push(Coupling::Sum(p, q));
                }
                if p != q && (fp - fq - ft).abs() < tolerance {
                    couplings.push(Coupling::Difference(p, q));
                }
            }
        }
    }
    table
}

struct Stepper<T> {
    rate: Vec<Complex<T>>,
    inv_omega: Vec<T>,
    propagator: Vec<Complex<T>>,
    forcing_gain: Vec<Complex<T>>,
    coupling: Vec<T>,
    pairs: Vec<Vec<Coupling>>,
    has_mixing: bool,
    chi: T,
    substeps: usize,
}

fn integrator_step(cfg: &ReservoirConfig, modes: &[ModeSpec], sample_rate: f64) -> Result<usize> {
    let f_max = modes.iter().map(|m| m.frequency).fold(0.0, f64::max);
    let limit = 1.0 / (10.0 * f_max);
    let period = 1.0 / sample_rate;
    match cfg.integrator_dt {
        Some(dt) if dt > limit * (1.0 + 1e-12) => Err(invalid(
            "reservoir.integrator_dt",
            format!("{dt:e} s does not resolve the {f_max:e} Hz mode (need <= {limit:e} s)"),
        )),
        Some(dt) => Ok(((period / dt) - 1e-9).ceil().max(1.0) as usize),
        None => Ok(((period / limit) - 1e-9).ceil().max(1.0) as usize),
    }
}

fn stepper<T: Real>(cfg: &ReservoirConfig, modes: &[ModeSpec], h: f64, substeps: usize) -> Stepper<T> {
    let mut rate = Vec::with_capacity(modes.len());
    let mut propagator = Vec::with_capacity(modes.len());
    let mut forcing_gain = Vec::with_capacity(modes.len());
    for m in modes {
        let lambda = num_complex::Complex64::new(-m.damping, 2.0 * std::f64::consts::PI * m.frequency);
        let e = (lambda * h).exp();
        let phi = (e - 1.0) / lambda;
        rate.push(Complex::new(T::lit(lambda.re), T::lit(lambda.im)));
        propagator.push(Complex::new(T::lit(e.re), T::lit(e.im)));
        forcing_gain.push(Complex::new(T::lit(phi.re), T::lit(phi.im)));
    }
    let pairs = if cfg.chi > 0.0 { matched_pairs(modes, cfg.match_tolerance) } else { vec![Vec::new(); modes.len()] };
    Stepper {
        rate,
        inv_omega: modes.iter().map(|m| T::lit(1.0 / (2.0 * std::f64::consts::PI * m.frequency))).collect(),
        propagator,
        forcing_gain,
        coupling: modes.iter().map(|m| T::lit(m.drive_coupling)).collect(),
        has_mixing: pairs.iter().any(|p| !p.is_empty()),
        pairs,
        chi: T::lit(cfg.chi),
        substeps,
    }
}

fn em_feedthrough<T: Real>(drive: &SampledSignal<T>, cfg: &ReservoirConfig) -> Result<Vec<T>> {
    let n = drive.len();
    if cfg.em_gain == 0.0 {
        return Ok(vec![T::zero(); n]);
    }
    let spec = FilterSpec::new(cfg.em_center, cfg.em_bandwidth, 2)?;
    let filter = design_bandpass(&spec, drive.sample_rate())?;
    let taps = Taps::<T>::new(-cfg.em_delay * drive.sample_rate());
    let delayed: Vec<T> = (0..n).map(|i| taps.read(drive.samples(), i)).collect();
    let gain = T::lit(cfg.em_gain);
    Ok(filter.apply(&delayed).into_iter().map(|v| v * gain).collect())
}

/// Drive as seen by the modes: band-passed around f_FMR by the antenna.
fn antenna_drive<T: Real>(drive: &SampledSignal<T>, cfg: &ReservoirConfig) -> Result<Vec<T>> {
    let f_fmr = cfg.fmr_frequency();
    if cfg.antenna_bandwidth == 0.0 || f_fmr <= 0.0 {
        return Ok(drive.samples().to_vec());
    }
    let spec = FilterSpec::new(f_fmr, cfg.antenna_bandwidth.min(1.9 * f_fmr), 2)?;
    Ok(design_bandpass(&spec, drive.sample_rate())?.apply(drive.samples()))
}

struct DetectorRun<T> {
    samples: Vec<T>,
    energy: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn run_detector<T: Real>(
    drive: &SampledSignal<T>,
    x: &[T],
    cfg: &ReservoirConfig,
    modes: &[ModeSpec],
    st: &Stepper<T>,
    position: f64,
    detector: usize,
    em: &[T],
    limit: f64,
) -> Result<DetectorRun<T>> {
    let fs = drive.sample_rate();
    let m = st.substeps;
    let n_modes = modes.len();
    // Modes sharing a group velocity share a delay and hence the interpolated drive.
    let mut delays: Vec<f64> = Vec::new();
    let group_of: Vec<usize> = modes
        .iter()
        .map(|md| {
            let delay = position / md.group_velocity;
            delays.iter().position(|&d| d == delay).unwrap_or_else(|| {
                delays.push(delay);
                delays.len() - 1
            })
        })
        .collect();
    let n_groups = delays.len();
    // taps[k * n_groups + g]: drive of group g read at the midpoint of substep k.
    let taps: Vec<Taps<T>> = (0..m)
        .flat_map(|k| delays.iter().map(move |d| Taps::new((k as f64 + 0.5) / m as f64 - d * fs)))
        .collect();
    let mut drive_now = vec![T::zero(); n_groups];
    let w_fmr = 2.0 * std::f64::consts::PI * cfg.fmr_frequency().abs().max(1.0);
    let bound_gain = T::lit(2.0 * cfg.chi / (w_fmr * w_fmr));
    let limit_sq = limit * limit;

    let zero = Complex::new(T::zero(), T::zero());
    let mut a = vec![zero; n_modes];
    let mut nl = a.clone();
    let mut out = Vec::with_capacity(x.len());
    let mut energy = Vec::with_capacity(x.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(detector as u64);
    let noise = (cfg.noise_floor > 0.0).then(|| Normal::new(0.0, cfg.noise_floor).unwrap());
    let i_chi = Complex::new(T::zero(), st.chi);
    let mixing = |a: &[Complex<T>], nl: &mut [Complex<T>]| {
        for (n, couplings) in st.pairs.iter().enumerate() {
            let mut acc = zero;
            for c in couplings {
                acc = acc
                    + match *c {
                        Coupling::Sum(p, q) => a[p] * a[q],
                        Coupling::Difference(p, q) => a[p] * a[q].conj(),
                    };
            }
            nl[n] = i_chi * acc;
        }
    };

    for (j, &em_j) in em.iter().enumerate() {
        if st.has_mixing {
            mixing(&a, &mut nl);
        }
        // Pickup at t_j; Im(k_n s) = 0.
        let mut p = T::zero();
        let mut p_dot = T::zero();
        let mut magnetization = T::zero();
        let mut e = 0.0;
        for n in 0..n_modes {
            let mag = a[n].norm_sqr().as_f64();
            if !(mag <= limit_sq) {
                return Err(Error::Unstable { amplitude: mag.sqrt(), limit, time: drive.time_of(j), detector, mode: n });
            }
            e += mag;
            let da = (st.rate[n] * a[n] + nl[n]).im;
            p += a[n].im;
            p_dot += da;
            magnetization += da * st.inv_omega[n];
        }
        for k in 0..m {
            if st.has_mixing && k > 0 {
                mixing(&a, &mut nl);
            }
            for (v, t) in drive_now.iter_mut().zip(&taps[k * n_groups..(k + 1) * n_groups]) {
                *v = t.read(x, j);
            }
            for n in 0..n_modes {
                let s = drive_now[group_of[n]] * st.coupling[n];
                let forcing = if st.has_mixing { nl[n] + s } else { Complex::new(s, T::zero()) };
                a[n] = st.propagator[n] * a[n] + st.forcing_gain[n] * forcing;
            }
        }
        let mut v = magnetization + bound_gain * p * p_dot + em_j;
        if let Some(dist) = &noise {
            v += T::lit(dist.sample(&mut rng));
        }
        out.push(v);
        energy.push(e);
    }
    Ok(DetectorRun { samples: out, energy })
}

/// Runs the reservoir for every detector; detectors integrate independently and in parallel.
pub fn simulate_detailed<T: Real>(drive: &SampledSignal<T>, cfg: &ReservoirConfig) -> Result<SimulationOutput<T>> {
    let modes = build_mode_table(cfg)?;
    let fs = drive.sample_rate();
    let f_max = modes.iter().map(|m| m.frequency).fold(0.0, f64::max);
    if fs <= 2.0 * f_max {
        return Err(invalid(
            "drive.sample_rate",
            format!("{fs:e} Hz does not exceed twice the highest mode frequency {f_max:e} Hz"),
        ));
    }
    let substeps = integrator_step(cfg, &modes, fs)?;
    let h = 1.0 / (fs * substeps as f64);
    let st = stepper::<T>(cfg, &modes, h, substeps);
    let em = em_feedthrough(drive, cfg)?;
    let excited = antenna_drive(drive, cfg)?;
    let limit = INSTABILITY_FACTOR * drive.peak_abs().as_f64().max(f64::MIN_POSITIVE);

    let runs = cfg
        .detector_positions
        .par_iter()
        .enumerate()
        .map(|(d, &x)| run_detector(drive, &excited, cfg, &modes, &st, x, d, &em, limit))
        .collect::<Result<Vec<_>>>()?;

    let mut responses = Vec::with_capacity(runs.len());
    let mut modal_energy = Vec::with_capacity(runs.len());
    for (d, run) in runs.into_iter().enumerate() {
        responses.push(DetectorResponse { detector_index: d, signal: drive.with_samples(run.samples)? });
        modal_energy.push(run.energy);
    }
    Ok(SimulationOutput { responses, modal_energy })
}

pub fn simulate<T: Real>(drive: &SampledSignal<T>, cfg: &ReservoirConfig) -> Result<Vec<DetectorResponse<T>>> {
    simulate_detailed(drive, cfg).map(|o| o.responses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{power_spectrum, Window};
    use std::f64::consts::PI;

    const FS: f64 = 16e9;

    fn quiet(cfg: ReservoirConfig) -> ReservoirConfig {
        ReservoirConfig { noise_floor: 0.0, ..cfg }
    }

    fn impulse(len: usize, at: usize) -> SampledSignal<f64> {
        let mut x = vec![0.0; len];
        x[at] = 1.0;
        SampledSignal::new(x, FS, 0.0).unwrap()
    }

    #[test]
    fn lagrange_taps_reproduce_cubics() {
        let x: Vec<f64> = (0..20).map(|i| {
            let t = i as f64 * 0.3;
            1.0 - 2.0 * t + 0.5 * t * t - 0.1 * t * t * t
        }).collect();
        for pos in [3.25, 7.9, -0.5 + 9.0, 4.0] {
            let taps = Taps::<f64>::new(pos);
            let t = (5.0 + pos) * 0.3;
            let exact = 1.0 - 2.0 * t + 0.5 * t * t - 0.1 * t * t * t;
            assert!((taps.read(&x, 5) - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn highest_sweep_field_runs_at_the_default_drive_rate() {
        // 347.3 mT puts the top mode near 6.45 GHz, just under the 8 GHz Nyquist limit.
        let cfg = ReservoirConfig { bias_field: 0.3473, ..Default::default() };
        assert!(simulate(&impulse(400, 10), &cfg).is_ok());
        let slow = SampledSignal::new(vec![0.0; 400], 12e9, 0.0).unwrap();
        assert!(simulate(&slow, &cfg).is_err());
    }

    #[test]
    fn zero_drive_gives_zero_output() {
        let cfg = quiet(ReservoirConfig::default());
        let drive = SampledSignal::<f64>::zeros(2000, FS).unwrap();
        for r in simulate(&drive, &cfg).unwrap() {
            assert!(r.signal.samples().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn seven_default_detectors_share_grid() {
        let out = simulate(&impulse(1000, 10), &ReservoirConfig::default()).unwrap();
        assert_eq!(out.len(), 7);
        assert!(out.iter().all(|r| r.signal.len() == 1000 && r.signal.sample_rate() == FS));
    }

    #[test]
    fn linear_when_chi_is_zero() {
        let cfg = quiet(ReservoirConfig { chi: 0.0, ..Default::default() });
        let drive = SampledSignal::<f64>::from_fn(3000, FS, 0.0, |t| (2.0 * PI * 1.9e9 * t).sin() * (t * 3e8).cos()).unwrap();
        let a = simulate(&drive, &cfg).unwrap();
        let b = simulate(&drive.scaled(-3.7), &cfg).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            let scale = ra.signal.peak_abs();
            for (x, y) in ra.signal.samples().iter().zip(rb.signal.samples()) {
                assert!((-3.7 * x - y).abs() <= 1e-6 * 3.7 * scale);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = ReservoirConfig { noise_floor: 0.1, ..Default::default() };
        let drive = impulse(800, 3);
        let a = simulate(&drive, &cfg).unwrap();
        assert_eq!(a, simulate(&drive, &cfg).unwrap());
        let other = ReservoirConfig { seed: 2, ..cfg };
        assert_ne!(a, simulate(&drive, &other).unwrap());
    }

    #[test]
    fn impulse_spectrum_peaks_near_fmr() {
        let cfg = quiet(ReservoirConfig { chi: 0.0, em_gain: 0.0, ..Default::default() });
        let out = simulate(&impulse(16_000, 8), &cfg).unwrap();
        for r in out {
            let s = power_spectrum(&r.signal, Window::Rectangular).unwrap();
            assert!((s.peak_frequency() - cfg.fmr_frequency()).abs() <= cfg.mode_spacing, "{}", s.peak_frequency());
        }
    }

    #[test]
    fn em_branch_peaks_at_em_center_for_any_field() {
        let mut peaks = Vec::new();
        for field in [0.1673, 0.1873, 0.2273] {
            let cfg = quiet(ReservoirConfig { drive_coupling: 0.0, bias_field: field, ..Default::default() });
            let out = simulate(&impulse(16_000, 8), &cfg).unwrap();
            let s = power_spectrum(&out[0].signal, Window::Rectangular).unwrap();
            assert!((s.peak_frequency() - cfg.em_center).abs() < 0.05 * cfg.em_bandwidth);
            peaks.push((s.peak_frequency(), s.bin_width));
        }
        assert!(peaks.windows(2).all(|w| (w[0].0 - w[1].0).abs() < w[0].1));
    }

    #[test]
    fn modal_energy_decays_after_drive_stops() {
        let cfg = quiet(ReservoirConfig { chi: 0.0, em_gain: 0.0, ..Default::default() });
        let drive = SampledSignal::<f64>::from_fn(8000, FS, 0.0, |t| if t < 20e-9 { (2.0 * PI * 2e9 * t).sin() } else { 0.0 }).unwrap();
        let out = simulate_detailed(&drive, &cfg).unwrap();
        let stop = (20e-9 * FS) as usize + 64;
        for (energy, resp) in out.modal_energy.iter().zip(&out.responses) {
            // Once the delayed drive has passed the last mode, no energy is added.
            let last_arrival = (cfg.detector_positions[6] / (cfg.group_velocity * 0.5) * FS) as usize;
            let from = stop + last_arrival.min(2000);
            assert!(energy[from..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            // Mode beating makes windowed RMS non-monotone; it stays under the
            // Cauchy-Schwarz bound (sum |da_n/dt| / w_n)^2 <= N r^2 sum |a|^2,
            // r = max |G - i w_n| / w_n, and decays overall.
            let modes = build_mode_table(&cfg).unwrap();
            let r = modes.iter().map(|m| (m.damping.powi(2) + (2.0 * PI * m.frequency).powi(2)).sqrt() / (2.0 * PI * m.frequency)).fold(0.0, f64::max);
            let n_modes = modes.len() as f64 * r * r;
            let win = (10e-9 * FS) as usize;
            let x = resp.signal.samples();
            let mut rms = Vec::new();
            for start in (from..x.len() - win).step_by(win) {
                let r = (x[start..start + win].iter().map(|v| v * v).sum::<f64>() / win as f64).sqrt();
                assert!(r <= (n_modes * energy[start]).sqrt());
                rms.push(r);
            }
            let head = rms[..3].iter().cloned().fold(0.0, f64::max);
            let tail = rms[rms.len() - 3..].iter().cloned().fold(0.0, f64::max);
            assert!(tail < 0.2 * head, "{tail} vs {head}");
        }
    }

    #[test]
    fn unresolved_step_and_slow_drive_are_rejected() {
        let cfg = ReservoirConfig { integrator_dt: Some(1e-10), ..Default::default() };
        assert!(simulate(&impulse(100, 1), &cfg).is_err());
        let slow = SampledSignal::<f64>::zeros(100, 4e9).unwrap();
        assert!(simulate(&slow, &ReservoirConfig::default()).is_err());
    }

    #[test]
    fn runaway_mixing_is_reported() {
        // Low field: sum-frequency resonances exist inside the mode table.
        let cfg = ReservoirConfig { bias_field: 0.1473, chi: 1e13, noise_floor: 0.0, ..Default::default() };
        let drive = SampledSignal::<f64>::from_fn(20_000, FS, 0.0, |t| (2.0 * PI * 1e9 * t).sin()).unwrap();
        assert!(matches!(simulate(&drive, &cfg), Err(Error::Unstable { .. })));
    }

    #[test]
    fn matched_pairs_follow_frequency_rule() {
        let cfg = ReservoirConfig { bias_field: 0.1473, ..Default::default() };
        let modes = build_mode_table(&cfg).unwrap();
        let pairs = matched_pairs(&modes, cfg.match_tolerance);
        let mut any = false;
        for (n, list) in pairs.iter().enumerate() {
            for c in list {
                any = true;
                let f = match *c {
                    Coupling::Sum(p, q) => modes[p].frequency + modes[q].frequency,
                    Coupling::Difference(p, q) => modes[p].frequency - modes[q].frequency,
                };
                assert!((f - modes[n].frequency).abs() < cfg.match_tolerance);
            }
        }
        assert!(any);
        let high = build_mode_table(&ReservoirConfig::default()).unwrap();
        assert!(matched_pairs(&high, 15e6).iter().all(|l| l.is_empty()));
    }

    #[test]
    fn single_precision_tracks_double() {
        let cfg = quiet(ReservoirConfig::default());
        let drive = impulse(2000, 5);
        let a = simulate(&drive, &cfg).unwrap();
        let b = simulate(&drive.cast::<f32>(), &cfg).unwrap();
        let scale = a[0].signal.peak_abs();
        for (x, y) in a[0].signal.samples().iter().zip(b[0].signal.samples()) {
            assert!((x - *y as f64).abs() < 1e-3 * scale);
        }
    }
}
