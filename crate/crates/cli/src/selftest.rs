//! Fast oracle checks over every stage of the library.

use std::fmt;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdrc::nodes::{design_bandpass, emulation_pool_filters, envelope_rms, polynomial_features, SymbolWindows};
use sdrc::pipeline::{run_reservoir, PipelineConfig};
use sdrc::readout::{predict, ridge_solve, split, train_ridge};
use sdrc::spinwave::delay_line_reference;
use sdrc::tasks::{capacity, gen_narma2, gen_parity, narma2_fixed_point};
use sdrc::{SampledSignal, SplitSpec};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub struct Report(pub Vec<Check>);

impl Report {
    pub fn passed(&self) -> bool {
        self.0.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            writeln!(f, "{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn check(name: &'static str, body: impl FnOnce() -> Result<(bool, String), sdrc::Error>) -> Check {
    match body() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

/// Every pool filter with the full 0.2 GHz width: 0 dB at center, -3 dB at the edges.
fn filters() -> Result<(bool, String), sdrc::Error> {
    let (mut center, mut edge): (f64, f64) = (0.0, 0.0);
    for spec in emulation_pool_filters().into_iter().filter(|s| s.bandwidth_3db == 0.2e9) {
        let f = design_bandpass(&spec, 12.5e9)?;
        center = center.max(f.magnitude_db(spec.center).abs());
        for e in [spec.lower_edge(), spec.upper_edge()] {
            edge = edge.max((f.magnitude_db(e) + 3.0103).abs());
        }
    }
    Ok((center <= 0.1 && edge <= 0.3, format!("center {center:.3} dB, edges {edge:.3} dB off")))
}

fn rms() -> Result<(bool, String), sdrc::Error> {
    let fs = 12.5e9;
    let sig = SampledSignal::<f64>::from_fn(1250, fs, 0.0, |t| 0.7 * (2.0 * std::f64::consts::PI * 2.5e9 * t).sin())?;
    let v = envelope_rms(&sig, &SymbolWindows::new(0.0, 20e-9, 4))?;
    let rel = v.iter().map(|x| (x / (0.7 / 2f64.sqrt()) - 1.0).abs()).fold(0.0, f64::max);
    Ok((rel < 0.01, format!("relative error {rel:.1e}")))
}

/// Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Array2<f64>, mut b: Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[[i, c]].abs().total_cmp(&a[[j, c]].abs())).unwrap();
        for j in 0..n {
            a.swap([c, j], [p, j]);
        }
        for j in 0..b.ncols() {
            b.swap([c, j], [p, j]);
        }
        for r in c + 1..n {
            let f = a[[r, c]] / a[[c, c]];
            for j in c..n {
                a[[r, j]] -= f * a[[c, j]];
            }
            for j in 0..b.ncols() {
                b[[r, j]] -= f * b[[c, j]];
            }
        }
    }
    for c in (0..n).rev() {
        for j in 0..b.ncols() {
            let s: f64 = (c + 1..n).map(|k| a[[c, k]] * b[[k, j]]).sum();
            b[[c, j]] = (b[[c, j]] - s) / a[[c, c]];
        }
    }
    b
}

fn ridge() -> Result<(bool, String), sdrc::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = Array2::from_shape_fn((40, 6), |_| rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((40, 2), |_| rng.random_range(-1.0..1.0));
        let lambda = 0.1;
        let w = ridge_solve(x.view(), y.view(), lambda)?;
        let mut a = x.t().dot(&x);
        for i in 0..6 {
            a[[i, i]] += lambda;
        }
        let direct = gauss_solve(a, x.t().dot(&y));
        worst = worst.max((&w - &direct).iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    Ok((worst < 1e-8, format!("max |dW| {worst:.1e}")))
}

fn parity() -> Result<(bool, String), sdrc::Error> {
    let d = gen_parity(2000, 5, 11)?;
    let bad = (0..d.len())
        .flat_map(|n| (0..5).map(move |k| (n, k)))
        .filter(|&(n, k)| {
            let ones = (0..=k).filter(|&j| j <= n && d.inputs[n - j] == 1.0).count();
            d.targets[[n, k]] != (ones % 2) as f64
        })
        .count();
    Ok((bad == 0, format!("{bad} mismatches")))
}

fn narma() -> Result<(bool, String), sdrc::Error> {
    let (mut y1, mut y0) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        (y1, y0) = (0.4 * y1 + 0.4 * y1 * y0 + 0.1, y1);
    }
    let fixed = narma2_fixed_point();
    let d = gen_narma2(500, 5)?;
    let t = d.targets.column(0);
    let recursion = (2..d.len())
        .map(|i| {
            let u = d.inputs[i];
            (t[i] - (0.4 * t[i - 1] + 0.4 * t[i - 1] * t[i - 2] + 0.6 * u * u * u + 0.1)).abs()
        })
        .fold(0.0, f64::max);
    Ok(((y1 - fixed).abs() < 1e-6 && recursion < 1e-12, format!("fixed point {fixed:.5}, recursion error {recursion:.1e}")))
}

/// Delay line plus pairwise products solves parity up to K = 3.
fn delay_line_parity() -> Result<(bool, String), sdrc::Error> {
    let d = gen_parity(3000, 3, 2)?;
    let states = polynomial_features(&delay_line_reference(&d.inputs, 3, 1.0)?, 3, false)?;
    let spec = SplitSpec::default();
    let (train, test) = split(&states, &d.targets, &spec)?;
    let model = train_ridge(&train.states, &train.targets, 1e-9)?;
    let (r2, _) = capacity(predict(&model, &test.states)?.view(), test.targets.view())?;
    let min = r2.iter().copied().fold(1.0, f64::min);
    Ok((min > 0.99, format!("min r2 {min:.4}")))
}

fn simulator_determinism() -> Result<(bool, String), sdrc::Error> {
    let inputs: Vec<f64> = (0..20).map(|i| (i % 3) as f64 / 2.0).collect();
    let cfg = PipelineConfig::default();
    let a = run_reservoir(&inputs, &cfg)?;
    let b = run_reservoir(&inputs, &cfg)?;
    let same = a.responses.iter().zip(&b.responses).all(|(x, y)| x.signal.samples() == y.signal.samples());
    let finite = a.responses.iter().all(|r| r.signal.samples().iter().all(|v| v.is_finite()));
    Ok((same && finite && a.responses.len() == 7, format!("{} detectors", a.responses.len())))
}

pub fn run() -> Report {
    Report(vec![
        check("filter passbands", filters),
        check("rms envelope", rms),
        check("ridge normal equations", ridge),
        check("parity targets", parity),
        check("narma2 recursion", narma),
        check("delay-line parity", delay_line_parity),
        check("simulator determinism", simulator_determinism),
    ])
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        let report = super::run();
        assert!(report.passed(), "{report}");
    }
}
