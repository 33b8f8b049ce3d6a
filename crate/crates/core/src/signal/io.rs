//! Binary container and CSV export for sampled signals.
//!
//! Container layout (little-endian): `sample_rate: f64`, `t0: f64`,
//! `count: u64`, then `count` samples as `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::SampledSignal;
use crate::error::{Error, Result};
use crate::scalar::Real;

const HEADER_LEN: usize = 24;

pub fn write_container<T: Real, W: Write>(sig: &SampledSignal<T>, mut w: W) -> Result<()> {
    w.write_all(&sig.sample_rate().to_le_bytes())?;
    w.write_all(&sig.t0().to_le_bytes())?;
    w.write_all(&(sig.len() as u64).to_le_bytes())?;
    for &x in sig.samples() {
        w.write_all(&x.as_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_container<T: Real, R: Read>(mut r: R) -> Result<SampledSignal<T>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    let word = |i: usize| <[u8; 8]>::try_from(&header[8 * i..8 * i + 8]).unwrap();
    let sample_rate = f64::from_le_bytes(word(0));
    let t0 = f64::from_le_bytes(word(1));
    let count = u64::from_le_bytes(word(2));
    let count = usize::try_from(count).map_err(|_| Error::Format(format!("count {count} overflows usize")))?;

    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != count * 8 {
        return Err(Error::Format(format!(
            "header declares {count} samples but body holds {} bytes",
            body.len()
        )));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    SampledSignal::new(samples, sample_rate, t0)
}

pub fn write_container_file<T: Real>(sig: &SampledSignal<T>, path: impl AsRef<Path>) -> Result<()> {
    write_container(sig, BufWriter::new(File::create(path)?))
}

pub fn read_container_file<T: Real>(path: impl AsRef<Path>) -> Result<SampledSignal<T>> {
    read_container(BufReader::new(File::open(path)?))
}

/// `time_s,value` rows, for debugging and plotting.
pub fn write_csv<T: Real, W: Write>(sig: &SampledSignal<T>, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "time_s,value")?;
    for (i, &x) in sig.samples().iter().enumerate() {
        writeln!(w, "{:e},{:e}", sig.time_of(i), x.as_f64())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_little_endian() {
        let sig = SampledSignal::<f64>::new(vec![1.5, -2.0], 12.5e9, 1e-9).unwrap();
        let mut buf = Vec::new();
        write_container(&sig, &mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 16);
        assert_eq!(&buf[0..8], &12.5e9f64.to_le_bytes());
        assert_eq!(&buf[8..16], &1e-9f64.to_le_bytes());
        assert_eq!(&buf[16..24], &2u64.to_le_bytes());
        assert_eq!(&buf[24..32], &1.5f64.to_le_bytes());
    }

    #[test]
    fn truncated_body_is_rejected() {
        let sig = SampledSignal::<f64>::new(vec![1.0, 2.0, 3.0], 1.0, 0.0).unwrap();
        let mut buf = Vec::new();
        write_container(&sig, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_container::<f64, _>(&buf[..]), Err(Error::Format(_))));
        assert!(matches!(read_container::<f64, _>(&buf[..10]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_has_header_and_one_row_per_sample() {
        let sig = SampledSignal::<f32>::new(vec![0.0, 1.0], 2.0, 0.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&sig, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines, ["time_s,value", "0e0,0e0", "5e-1,1e0"]);
    }

    proptest! {
        #[test]
        fn container_roundtrip(samples in prop::collection::vec(-1e6f64..1e6, 1..200),
                               rate in 1.0f64..1e11, t0 in -1.0f64..1.0) {
            let sig = SampledSignal::new(samples, rate, t0).unwrap();
            let mut buf = Vec::new();
            write_container(&sig, &mut buf).unwrap();
            let back: SampledSignal<f64> = read_container(&buf[..]).unwrap();
            prop_assert_eq!(back, sig);
        }
    }
}
