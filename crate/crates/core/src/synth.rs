//! Received-signal synthesis for the two-reflector sensor.
//!
//! The emitted pulse is a sine tone burst under a raised-cosine envelope.
//! It comes back twice: once from the semitransparent first reflector and
//! once from the second reflector after crossing the base in both
//! directions. Amplitude decay is attributed to the medium attenuation and
//! to interface losses only; beam spreading is not modelled.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::acoustics::{reflection_magnitude, MediumState, SensorGeometry};
use crate::error::{Error, Result};
use crate::waveform::Waveform;

/// Default digitiser rate: 50 samples per period of a 2 MHz carrier.
pub const DEFAULT_SAMPLE_RATE: f64 = 100.0e6;

/// Everything needed to produce one received waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisScenario {
    pub geometry: SensorGeometry,
    /// Must carry the true sound speed.
    pub medium: MediumState,
    /// Np/m
    pub true_attenuation: f64,
    /// Envelope amplitude of the emitted burst, mV.
    pub emit_amplitude: f64,
    pub burst_cycles: u32,
    /// Standard deviation of additive white Gaussian noise, mV.
    pub noise_rms: f64,
    pub seed: u64,
    /// Hz
    pub sample_rate: f64,
    /// Quiet time recorded after the second echo, s.
    pub tail: f64,
}

impl Default for SynthesisScenario {
    fn default() -> Self {
        SynthesisScenario {
            geometry: SensorGeometry::default(),
            medium: MediumState::default(),
            true_attenuation: 0.0,
            emit_amplitude: 400.0,
            burst_cycles: 5,
            noise_rms: 0.0,
            seed: 0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            tail: 2.0e-6,
        }
    }
}

/// Exact echo parameters behind a synthesized waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Start of the first echo, s.
    pub t1: f64,
    /// Start of the second echo, s.
    pub t2: f64,
    /// Envelope amplitude of the first echo, mV.
    pub a1: f64,
    /// Envelope amplitude of the second echo, mV.
    pub a2: f64,
    /// Largest positive excursion of the noiseless first echo, mV.
    pub peak1: f64,
    /// Largest positive excursion of the noiseless second echo, mV.
    pub peak2: f64,
    pub sound_speed: f64,
    pub attenuation: f64,
    /// |k| of the reflector interface.
    pub reflection: f64,
}

impl GroundTruth {
    pub fn delta_t(&self) -> f64 {
        self.t2 - self.t1
    }
}

impl SynthesisScenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: SynthesisScenario =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        scenario.check()?;
        Ok(scenario)
    }

    pub fn sound_speed(&self) -> Result<f64> {
        self.medium
            .sound_speed
            .ok_or_else(|| Error::Scenario("medium sound speed must be set for synthesis".into()))
    }

    pub fn burst_duration(&self) -> f64 {
        self.burst_cycles as f64 / self.geometry.carrier_frequency
    }

    pub fn check(&self) -> Result<()> {
        self.geometry.check()?;
        self.medium.check()?;
        self.sound_speed()?;
        if self.burst_cycles < 1 {
            return Err(Error::Scenario("burst needs at least one cycle".into()));
        }
        if !(self.noise_rms >= 0.0 && self.noise_rms.is_finite()) {
            return Err(Error::Scenario(format!("noise rms {} must be ≥ 0", self.noise_rms)));
        }
        if !(self.emit_amplitude > 0.0 && self.emit_amplitude.is_finite()) {
            return Err(Error::Scenario("emit amplitude must be positive".into()));
        }
        if !(self.true_attenuation >= 0.0 && self.true_attenuation.is_finite()) {
            return Err(Error::Scenario("attenuation must be finite and ≥ 0".into()));
        }
        if !(self.tail >= 0.0 && self.tail.is_finite()) {
            return Err(Error::Scenario("tail must be ≥ 0".into()));
        }
        if !(self.sample_rate >= 20.0 * self.geometry.carrier_frequency) {
            return Err(Error::Scenario(format!(
                "sample rate {} Hz gives fewer than 20 samples per carrier period",
                self.sample_rate
            )));
        }
        Ok(())
    }

    /// Echo timing and amplitudes without rendering a waveform.
    pub fn ground_truth(&self) -> Result<GroundTruth> {
        self.check()?;
        let g = &self.geometry;
        let c = self.sound_speed()?;
        let alpha = self.true_attenuation;
        let k = reflection_magnitude(self.medium.impedance()?, g.reflector_material.impedance()?)?;

        let near_path = 2.0 * g.first_reflector_offset;
        let far_path = 2.0 * (g.first_reflector_offset + g.base_length);
        let t1 = near_path / c;
        let t2 = far_path / c;
        if t2 - t1 < self.burst_duration() {
            return Err(Error::Scenario(format!(
                "echoes overlap: separation {:.3e} s is shorter than the {:.3e} s burst",
                t2 - t1,
                self.burst_duration()
            )));
        }
        let a1 = self.emit_amplitude * k * (-alpha * near_path).exp();
        let tr = g.first_reflector_transmission;
        let a2 = self.emit_amplitude * tr * tr * k * (-alpha * far_path).exp();
        let burst_peak = burst_peak(self.burst_cycles);
        Ok(GroundTruth {
            t1,
            t2,
            a1,
            a2,
            peak1: a1 * burst_peak,
            peak2: a2 * burst_peak,
            sound_speed: c,
            attenuation: alpha,
            reflection: k,
        })
    }
}

/// Unit-amplitude burst value at `tau` seconds after its start.
fn burst(tau: f64, frequency: f64, duration: f64) -> f64 {
    if !(0.0..=duration).contains(&tau) {
        return 0.0;
    }
    let envelope = 0.5 * (1.0 - (2.0 * PI * tau / duration).cos());
    envelope * (2.0 * PI * frequency * tau).sin()
}

/// Largest positive value of a unit-amplitude burst of `cycles` cycles.
/// Independent of carrier frequency, so evaluated in units of periods.
pub fn burst_peak(cycles: u32) -> f64 {
    let n = cycles as f64;
    let value = |x: f64| burst(x, 1.0, n);
    // Coarse scan then golden-section refinement around the best point.
    let steps = 2000 * cycles as usize;
    let h = n / steps as f64;
    let best = (0..=steps)
        .map(|i| i as f64 * h)
        .max_by(|a, b| value(*a).total_cmp(&value(*b)))
        .unwrap_or(0.0);
    let (mut lo, mut hi) = ((best - h).max(0.0), (best + h).min(n));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let m1 = hi - ratio * (hi - lo);
        let m2 = lo + ratio * (hi - lo);
        if value(m1) < value(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    value(0.5 * (lo + hi))
}

/// Noise rms giving the requested amplitude SNR, `20·log10(peak/σ)` dB.
pub fn noise_rms_for_snr(peak: f64, snr_db: f64) -> f64 {
    peak / 10f64.powf(snr_db / 20.0)
}

/// Render the received waveform of `scenario` together with its ground truth.
pub fn synthesize(scenario: &SynthesisScenario) -> Result<(Waveform, GroundTruth)> {
    let truth = scenario.ground_truth()?;
    let f = scenario.geometry.carrier_frequency;
    let duration = scenario.burst_duration();
    let fs = scenario.sample_rate;
    let end = truth.t2 + duration + scenario.tail;
    let count = (end * fs).ceil() as usize + 1;

    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 / fs;
        samples.push(truth.a1 * burst(t - truth.t1, f, duration) + truth.a2 * burst(t - truth.t2, f, duration));
    }

    if scenario.noise_rms > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let normal = Normal::new(0.0, scenario.noise_rms)
            .map_err(|e| Error::Scenario(e.to_string()))?;
        for s in samples.iter_mut() {
            *s += normal.sample(&mut rng);
        }
    }

    Ok((Waveform::new(samples, fs, 0.0)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(c: f64) -> SynthesisScenario {
        let mut s = SynthesisScenario::default();
        s.medium.sound_speed = Some(c);
        s
    }

    #[test]
    fn echo_delays() {
        let t = scenario(1500.0).ground_truth().unwrap();
        assert!((t.t1 - 13.333_333e-6).abs() < 1e-11);
        assert!((t.t2 - 93.333_333e-6).abs() < 1e-11);
        assert!((t.delta_t() - 80e-6).abs() < 1e-15);
    }

    #[test]
    fn zero_attenuation_ratio_is_transmission_squared() {
        let mut s = scenario(1500.0);
        s.geometry.first_reflector_transmission = 0.7;
        let t = s.ground_truth().unwrap();
        assert!((t.a2 / t.a1 - 0.49).abs() < 1e-12);
    }

    #[test]
    fn attenuation_halves_far_echo() {
        let mut s = scenario(1500.0);
        s.geometry.first_reflector_transmission = 1.0;
        s.true_attenuation = 5.776_226_504_666_211;
        let t = s.ground_truth().unwrap();
        assert!((t.a2 / t.a1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn overlapping_echoes_rejected() {
        let mut s = scenario(1500.0);
        s.geometry.base_length = 1e-3;
        s.burst_cycles = 10;
        assert!(matches!(synthesize(&s), Err(Error::Scenario(_))));
    }

    #[test]
    fn invariants_enforced() {
        let mut s = scenario(1500.0);
        s.burst_cycles = 0;
        assert!(s.check().is_err());
        let mut s = scenario(1500.0);
        s.noise_rms = -1.0;
        assert!(s.check().is_err());
        let mut s = scenario(1500.0);
        s.emit_amplitude = 0.0;
        assert!(s.check().is_err());
        let mut s = scenario(1500.0);
        s.sample_rate = 30e6;
        assert!(s.check().is_err());
        let mut s = scenario(1500.0);
        s.medium.sound_speed = None;
        assert!(s.check().is_err());
    }

    #[test]
    fn burst_peak_by_dense_scan() {
        // 1e6-point brute force over a 5-cycle burst
        let n = 1_000_000;
        let brute = (0..=n)
            .map(|i| burst(5.0 * i as f64 / n as f64, 1.0, 5.0))
            .fold(f64::MIN, f64::max);
        assert!((burst_peak(5) - brute).abs() < 1e-9);
        assert!(burst_peak(5) < 1.0 && burst_peak(5) > 0.9);
    }

    #[test]
    fn first_half_wave_is_smaller_than_later_ones() {
        let d = 5.0;
        let first = burst(0.25, 1.0, d);
        let third = burst(2.25, 1.0, d);
        assert!(first < 0.1 * third);
    }

    #[test]
    fn determinism_per_seed() {
        let mut s = scenario(1500.0);
        s.noise_rms = 1.0;
        s.seed = 42;
        let (a, _) = synthesize(&s).unwrap();
        let (b, _) = synthesize(&s).unwrap();
        assert_eq!(a.samples(), b.samples());
        s.seed = 43;
        let (c, _) = synthesize(&s).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn scenario_from_toml() {
        let s = SynthesisScenario::from_toml(
            "true_attenuation = 1.0\nnoise_rms = 0.5\n[geometry]\nbase_length = 0.05\n[medium]\nsound_speed = 1450.0\n",
        )
        .unwrap();
        assert_eq!(s.geometry.base_length, 0.05);
        assert_eq!(s.geometry.carrier_frequency, 2e6);
        assert_eq!(s.medium.sound_speed, Some(1450.0));
        assert_eq!(s.true_attenuation, 1.0);
        assert!(SynthesisScenario::from_toml("burst_cycles = 0").is_err());
        assert!(SynthesisScenario::from_toml("bogus = ").is_err());
    }
}
