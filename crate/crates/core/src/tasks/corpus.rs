//! Labeled waveform sets: a synthetic multi-speaker generator and WAV directory ingestion.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{resample, SampledSignal};

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub label: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub recordings: Vec<Recording>,
    pub class_names: Vec<String>,
}

impl Corpus {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for r in &self.recordings {
            counts[r.label] += 1;
        }
        counts
    }

    /// At least `min_classes` classes, each with `min_per_class` recordings, and valid labels.
    pub fn validate(&self, min_classes: usize, min_per_class: usize) -> Result<()> {
        if let Some(r) = self.recordings.iter().find(|r| r.label >= self.n_classes()) {
            return Err(Error::Corpus(format!("{}: label {} out of {} classes", r.name, r.label, self.n_classes())));
        }
        if self.n_classes() < min_classes {
            return Err(Error::Corpus(format!("{} classes, need at least {min_classes}", self.n_classes())));
        }
        for (name, count) in self.class_names.iter().zip(self.class_counts()) {
            if count < min_per_class {
                return Err(Error::Corpus(format!("class `{name}` has {count} recordings, need {min_per_class}")));
            }
        }
        if let Some(r) = self.recordings.iter().find(|r| r.samples.iter().any(|v| !v.is_finite())) {
            return Err(Error::Corpus(format!("{}: non-finite samples", r.name)));
        }
        Ok(())
    }
}

/// Parameters of the synthetic speaker corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub per_class: usize,
    /// Points per raw recording, silence included.
    pub length: usize,
    /// Nominal audio rate (Hz).
    pub sample_rate: f64,
    /// Relative standard deviation of pitch and formant frequencies between utterances.
    pub jitter: f64,
    /// Additive noise relative to the voiced peak.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { n_classes: 5, per_class: 100, length: 12_000, sample_rate: 10_000.0, jitter: 0.04, noise: 0.02, seed: 7 }
    }
}

/// Pitch (Hz) and three formant centres (Hz) for class `c`.
fn voice(c: usize) -> (f64, [f64; 3]) {
    const VOICES: [(f64, [f64; 3]); 8] = [
        (190.0, [450.0, 1500.0, 2600.0]),
        (215.0, [750.0, 1150.0, 2900.0]),
        (240.0, [320.0, 2100.0, 3100.0]),
        (175.0, [600.0, 1850.0, 2350.0]),
        (260.0, [500.0, 950.0, 3400.0]),
        (205.0, [880.0, 1650.0, 2750.0]),
        (230.0, [400.0, 1300.0, 3600.0]),
        (165.0, [680.0, 2300.0, 3000.0]),
    ];
    let (f0, f) = VOICES[c % VOICES.len()];
    // Classes beyond the table get shifted copies.
    let shift = 1.0 + 0.07 * (c / VOICES.len()) as f64;
    (f0 * shift, f.map(|x| x * shift))
}

fn utterance(c: usize, spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let jitter = Normal::new(1.0, spec.jitter).expect("finite jitter");
    let (f0, formants) = voice(c);
    let f0 = f0 * jitter.sample(rng);
    let formants = formants.map(|f| f * jitter.sample(rng));
    let bandwidth = 120.0;
    let nyquist = spec.sample_rate / 2.0;
    let harmonics: Vec<(f64, f64, f64)> = (1..)
        .map(|h| h as f64 * f0)
        .take_while(|&f| f < 0.9 * nyquist)
        .map(|f| {
            let gain: f64 = formants.iter().map(|&fc| 1.0 / (1.0 + ((f - fc) / bandwidth).powi(2))).sum();
            (f, gain, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();

    let n = spec.length;
    let voiced = ((n as f64) * rng.random_range(0.55..0.8)) as usize;
    let onset = rng.random_range(0..=(n - voiced));
    let vibrato = rng.random_range(3.0..6.0);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x = vec![0.0; n];
    for (k, slot) in x[onset..onset + voiced].iter_mut().enumerate() {
        let t = k as f64 / spec.sample_rate;
        let env = (std::f64::consts::PI * k as f64 / voiced as f64).sin().powf(0.6);
        let bend = 1.0 + 0.01 * (std::f64::consts::TAU * vibrato * t).sin();
        *slot = env * harmonics.iter().map(|&(f, g, p)| g * (std::f64::consts::TAU * f * bend * t + p).sin()).sum::<f64>();
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for v in &mut x {
        *v = *v / peak + spec.noise * noise.sample(rng);
    }
    x
}

/// Multi-tone "speakers" with class-specific pitch and formants plus per-utterance jitter.
pub fn synthetic_corpus(spec: &SyntheticSpec) -> Result<Corpus> {
    if spec.n_classes < 2 || spec.per_class == 0 || spec.length < 200 {
        return Err(Error::Corpus("synthetic corpus needs >= 2 classes, >= 1 sample each, >= 200 points".into()));
    }
    if !(spec.sample_rate > 0.0 && spec.jitter >= 0.0 && spec.noise >= 0.0) {
        return Err(Error::Corpus("synthetic corpus needs positive rate and non-negative jitter/noise".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut recordings = Vec::with_capacity(spec.n_classes * spec.per_class);
    for i in 0..spec.per_class {
        for c in 0..spec.n_classes {
            recordings.push(Recording {
                samples: utterance(c, spec, &mut rng),
                sample_rate: spec.sample_rate,
                label: c,
                name: format!("speaker{c}/utt{i:03}"),
            });
        }
    }
    Ok(Corpus { recordings, class_names: (0..spec.n_classes).map(|c| format!("speaker{c}")).collect() })
}

fn read_wav(path: &Path) -> Result<(Vec<f64>, f64)> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::Corpus(format!(
            "{}: expected 16-bit PCM mono, found {} channel(s), {} bits, {:?}",
            path.display(),
            spec.channels,
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if samples.is_empty() {
        return Err(Error::Corpus(format!("{}: no samples", path.display())));
    }
    Ok((samples, spec.sample_rate as f64))
}

/// Reads `dir/<label>/*.wav`; labels are sorted directory names.
///
/// Recordings at another rate are resampled to `target_rate` (default: rate of the first file).
pub fn load_wav_dir(dir: impl AsRef<Path>, target_rate: Option<f64>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Corpus(format!("{}: {e}", dir.display())))?;
    let mut class_dirs: Vec<_> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    class_dirs.sort();
    let mut class_names = Vec::new();
    let mut recordings = Vec::new();
    let mut rate = target_rate;
    for class_dir in class_dirs {
        let label = class_names.len();
        class_names.push(class_dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
        let mut files: Vec<_> = std::fs::read_dir(&class_dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        files.sort();
        for path in files {
            let (samples, fs) = read_wav(&path)?;
            let target = *rate.get_or_insert(fs);
            let samples = if fs == target {
                samples
            } else {
                resample(&SampledSignal::new(samples, fs, 0.0)?, target)?.into_samples()
            };
            recordings.push(Recording {
                samples,
                sample_rate: target,
                label,
                name: path.strip_prefix(dir).unwrap_or(&path).display().to_string(),
            });
        }
    }
    if recordings.is_empty() {
        return Err(Error::Corpus(format!("{}: no WAV files in label subdirectories", dir.display())));
    }
    Ok(Corpus { recordings, class_names })
}
