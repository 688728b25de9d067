//! Run manifest for `simulate`, a TOML file:
//!
//! ```toml
//! records_per_point = 2
//! csv = "profile.csv"
//! truth = "truth.jsonl"
//! dump = "memory.bin"          # optional
//!
//! [scenario]                   # synthesis parameters, defaults if omitted
//! noise_rms = 0.5
//! seed = 7
//!
//! [settings]                   # device settings overrides
//! cycle_rate = 18.0
//!
//! [sweep]                      # sound_speeds or temperatures, not both
//! sound_speeds = [1425.0, 1500.0, 1575.0]
//! attenuations = [0.0, 1.0]
//! ```
//!
//! Relative paths are taken from the manifest's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use svp_core::constants::Constants;
use svp_core::device::memory::DEFAULT_CAPACITY;
use svp_core::{DeviceSettings, SynthesisScenario};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// m/s
    pub sound_speeds: Option<Vec<f64>>,
    /// °C; the sound speed follows the pure-water calibration.
    pub temperatures: Option<Vec<f64>>,
    /// Np/m; defaults to the scenario's own value.
    pub attenuations: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default)]
    pub scenario: SynthesisScenario,
    #[serde(default)]
    pub settings: DeviceSettings,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default = "one")]
    pub records_per_point: u32,
    pub csv: PathBuf,
    pub truth: PathBuf,
    pub dump: Option<PathBuf>,
}

fn one() -> u32 {
    1
}

/// One operating point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub sound_speed: f64,
    pub temperature: f64,
    pub attenuation: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        let mut m: RunManifest =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [Some(&mut m.csv), Some(&mut m.truth), m.dump.as_mut()].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> CliResult<()> {
        let usage = |m: String| CliError::Usage(m);
        if self.records_per_point < 1 {
            return Err(usage("records_per_point must be at least 1".into()));
        }
        self.settings.check().map_err(|e| usage(format!("settings: {e}")))?;
        let points = self.points()?;
        for p in &points {
            let mut s = self.scenario.clone();
            apply_point(&mut s, p);
            s.check().map_err(|e| usage(format!("scenario at {p:?}: {e}")))?;
            s.ground_truth().map_err(|e| usage(format!("scenario at {p:?}: {e}")))?;
        }
        let total = points.len() as u64 * self.records_per_point as u64;
        if total > DEFAULT_CAPACITY as u64 {
            return Err(usage(format!("{total} records exceed the {DEFAULT_CAPACITY}-record memory")));
        }
        Ok(())
    }

    /// Sweep points in output order: speed (or temperature) major, attenuation minor.
    pub fn points(&self) -> CliResult<Vec<Point>> {
        let s = &self.scenario;
        let speeds: Vec<(f64, f64)> = match (&self.sweep.sound_speeds, &self.sweep.temperatures) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("sweep takes sound_speeds or temperatures, not both".into()))
            }
            (Some(c), None) => c.iter().map(|&c| (c, s.medium.temperature)).collect(),
            (None, Some(t)) => t
                .iter()
                .map(|&t| {
                    Constants::bundled()
                        .pure_water_sound_speed(t)
                        .map(|c| (c, t))
                        .map_err(|e| CliError::Usage(format!("temperature {t} °C: {e}")))
                })
                .collect::<CliResult<_>>()?,
            (None, None) => {
                let c = s
                    .sound_speed()
                    .map_err(|_| CliError::Usage("no sweep and no scenario.medium.sound_speed".into()))?;
                vec![(c, s.medium.temperature)]
            }
        };
        let alphas = self.sweep.attenuations.clone().unwrap_or_else(|| vec![s.true_attenuation]);
        if speeds.is_empty() || alphas.is_empty() {
            return Err(CliError::Usage("sweep is empty".into()));
        }
        Ok(speeds
            .iter()
            .flat_map(|&(sound_speed, temperature)| {
                alphas.iter().map(move |&attenuation| Point {
                    sound_speed,
                    temperature,
                    attenuation,
                })
            })
            .collect())
    }
}

pub fn apply_point(s: &mut SynthesisScenario, p: &Point) {
    s.medium.sound_speed = Some(p.sound_speed);
    s.medium.temperature = p.temperature;
    s.true_attenuation = p.attenuation;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<RunManifest> {
        let m: RunManifest = toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
        m.check()?;
        Ok(m)
    }

    #[test]
    fn sweep_order() {
        let m = parse(
            r#"
            csv = "a.csv"
            truth = "a.jsonl"
            [sweep]
            sound_speeds = [1425.0, 1500.0]
            attenuations = [0.0, 1.0]
            "#,
        )
        .unwrap();
        let p = m.points().unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!((p[1].sound_speed, p[1].attenuation), (1425.0, 1.0));
        assert_eq!((p[2].sound_speed, p[2].attenuation), (1500.0, 0.0));
    }

    #[test]
    fn temperature_sweep_uses_calibration() {
        let m = parse("csv = \"a\"\ntruth = \"b\"\n[sweep]\ntemperatures = [20.0]\n").unwrap();
        let p = m.points().unwrap();
        assert!((p[0].sound_speed - 1482.34330848).abs() < 1e-6);
        assert_eq!(p[0].temperature, 20.0);
    }

    #[test]
    fn rejects_bad_manifests() {
        let zero = "csv = \"a\"\ntruth = \"b\"\nrecords_per_point = 0\n";
        assert!(matches!(parse(zero), Err(CliError::Usage(_))));
        let both = "csv = \"a\"\ntruth = \"b\"\n[sweep]\ntemperatures = [1.0]\nsound_speeds = [1500.0]\n";
        assert!(matches!(parse(both), Err(CliError::Usage(_))));
        let unknown = "csv = \"a\"\ntruth = \"b\"\nrecords = 3\n";
        assert!(matches!(parse(unknown), Err(CliError::Usage(_))));
        let missing = "csv = \"a\"\n";
        assert!(matches!(parse(missing), Err(CliError::Usage(_))));
        let hot = "csv = \"a\"\ntruth = \"b\"\n[sweep]\ntemperatures = [120.0]\n";
        assert!(matches!(parse(hot), Err(CliError::Usage(_))));
    }
}
