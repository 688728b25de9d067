//! Uniformly sampled receiver voltage records and their text file format.
//!
//! File layout:
//!
//! ```text
//! # svp waveform v1
//! sample_rate = 100000000
//! t0 = 0
//! count = 3
//! 0
//! 0.125
//! -0.25
//! ```
//!
//! Samples are written with the shortest decimal form that parses back to
//! the same `f64`, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &str = "# svp waveform v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: f64,
    t0: f64,
}

impl Waveform {
    /// `samples` in mV, `sample_rate` in Hz, `t0` the time of sample 0 in
    /// seconds relative to the emission trigger.
    pub fn new(samples: Vec<f64>, sample_rate: f64, t0: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Domain(format!("sample rate {sample_rate} Hz must be positive")));
        }
        if !t0.is_finite() {
            return Err(Error::Domain("t0 must be finite".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("sample {i} is not finite")));
        }
        Ok(Waveform {
            samples,
            sample_rate,
            t0,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
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

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Time of sample `i`.
    pub fn time_at(&self, i: f64) -> f64 {
        self.t0 + i / self.sample_rate
    }

    /// Fractional sample position of time `t`.
    pub fn index_at(&self, t: f64) -> f64 {
        (t - self.t0) * self.sample_rate
    }

    /// Time just past the last sample.
    pub fn end_time(&self) -> f64 {
        self.time_at(self.samples.len() as f64)
    }

    /// Sample range `[start, end)` covering the time span, clipped to the record.
    pub fn index_span(&self, start: f64, end: f64) -> (usize, usize) {
        let clip = |t: f64| self.index_at(t).ceil().clamp(0.0, self.samples.len() as f64) as usize;
        (clip(start), clip(end))
    }

    /// Rejects records sampled at fewer than 20 points per carrier period.
    pub fn check_oversampling(&self, carrier_frequency: f64) -> Result<()> {
        if self.sample_rate < 20.0 * carrier_frequency {
            return Err(Error::Domain(format!(
                "sample rate {} Hz is below 20 × carrier ({} Hz)",
                self.sample_rate, carrier_frequency
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 * self.samples.len() + 64);
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "sample_rate = {:?}", self.sample_rate);
        let _ = writeln!(out, "t0 = {:?}", self.t0);
        let _ = writeln!(out, "count = {}", self.samples.len());
        for s in &self.samples {
            let _ = writeln!(out, "{s:?}");
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(self.to_text().as_bytes())?;
        file.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

        let mut next_line = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((n, Err(e))) => Err(err(n, e.to_string())),
                None => Err(err(0, format!("unexpected end of file, expected {what}"))),
            }
        };

        let (n, magic) = next_line("header")?;
        if magic.trim() != MAGIC {
            return Err(err(n, format!("expected '{MAGIC}'")));
        }
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (n, line) = next_line(key)?;
            match line.split_once('=') {
                Some((k, v)) if k.trim() == key => Ok((n, v.trim().to_string())),
                _ => Err(err(n, format!("expected '{key} = <value>'"))),
            }
        };
        let (n, v) = header("sample_rate")?;
        let sample_rate: f64 = v.parse().map_err(|_| err(n, format!("bad sample_rate '{v}'")))?;
        let (n, v) = header("t0")?;
        let t0: f64 = v.parse().map_err(|_| err(n, format!("bad t0 '{v}'")))?;
        let (n, v) = header("count")?;
        let count: usize = v.parse().map_err(|_| err(n, format!("bad count '{v}'")))?;

        let mut samples = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            let (n, line) = next_line("sample")?;
            let token = line.trim();
            let value: f64 = token
                .parse()
                .map_err(|_| err(n, format!("bad sample '{token}'")))?;
            if !value.is_finite() {
                return Err(err(n, format!("non-finite sample '{token}'")));
            }
            samples.push(value);
        }
        if let Some((n, Ok(extra))) = lines.next() {
            if !extra.trim().is_empty() {
                return Err(err(n, "trailing data after the declared sample count".into()));
            }
        }
        Waveform::new(samples, sample_rate, t0).map_err(|e| err(0, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_finite_samples() {
        assert!(Waveform::new(vec![0.0, f64::NAN], 1e6, 0.0).is_err());
        assert!(Waveform::new(vec![f64::INFINITY], 1e6, 0.0).is_err());
        assert!(Waveform::new(vec![], 0.0, 0.0).is_err());
    }

    #[test]
    fn nan_token_is_a_parse_error() {
        let text = format!("{MAGIC}\nsample_rate = 1e8\nt0 = 0\ncount = 2\n1.0\nNaN\n");
        match Waveform::parse(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(Waveform::parse(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn short_file_is_a_parse_error() {
        let text = format!("{MAGIC}\nsample_rate = 1e8\nt0 = 0\ncount = 3\n1.0\n2.0\n");
        assert!(matches!(Waveform::parse(&text), Err(Error::Parse { line: 0, .. })));
    }

    #[test]
    fn oversampling_check() {
        let w = Waveform::new(vec![0.0; 4], 100e6, 0.0).unwrap();
        assert!(w.check_oversampling(2e6).is_ok());
        assert!(w.check_oversampling(6e6).is_err());
    }

    #[test]
    fn file_round_trip() {
        let w = Waveform::new(vec![0.1, -3.25e-7, 1234.5678901234567], 1e8, 1.5e-6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.txt");
        w.write(&path).unwrap();
        assert_eq!(Waveform::read(&path).unwrap(), w);
    }

    proptest! {
        #[test]
        fn text_round_trip_is_lossless(
            samples in proptest::collection::vec(-1e6f64..1e6, 0..200),
            rate in 1.0f64..1e9,
            t0 in -1.0f64..1.0,
        ) {
            let w = Waveform::new(samples, rate, t0).unwrap();
            let back = Waveform::parse(&w.to_text()).unwrap();
            prop_assert_eq!(back, w);
        }
    }
}
