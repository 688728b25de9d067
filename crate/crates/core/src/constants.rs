//! Reference constants file: pure-water sound speed polynomial and the
//! instrument's channel ranges.
//!
//! The file is TOML (`key = value` lines grouped in tables). A copy is
//! compiled into the library and used unless another file is loaded.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Text of the bundled constants file.
pub const DEFAULT_CONSTANTS: &str = include_str!("../data/constants.toml");

/// Polynomial in temperature (°C) giving sound speed (m/s) in pure water at
/// atmospheric pressure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureWaterPolynomial {
    /// Ascending-power coefficients.
    pub coefficients: Vec<f64>,
    pub temperature_min: f64,
    pub temperature_max: f64,
}

impl PureWaterPolynomial {
    pub fn evaluate(&self, temperature: f64) -> Result<f64> {
        if !temperature.is_finite()
            || temperature < self.temperature_min
            || temperature > self.temperature_max
        {
            return Err(Error::Domain(format!(
                "temperature {temperature} °C outside [{}, {}] °C",
                self.temperature_min, self.temperature_max
            )));
        }
        Ok(self
            .coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &k| acc * temperature + k))
    }
}

/// Closed ranges of the profiler's measurement channels. Values outside are
/// flagged by [`crate::acoustics::validate_record`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationBounds {
    pub sound_speed_min: f64,
    pub sound_speed_max: f64,
    pub temperature_min: f64,
    pub temperature_max: f64,
    pub pressure_min: f64,
    pub pressure_max: f64,
}

impl Default for ValidationBounds {
    fn default() -> Self {
        Constants::bundled().instrument_range
    }
}

/// Sound speed span covered by commercial time-of-flight sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorRange {
    pub sound_speed_min: f64,
    pub sound_speed_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub pure_water: PureWaterPolynomial,
    pub instrument_range: ValidationBounds,
    pub sensor_range: SensorRange,
}

impl Constants {
    pub fn parse(text: &str) -> Result<Self> {
        let constants: Constants = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|span| text[..span.start].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })?;
        constants.check()?;
        Ok(constants)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// The constants compiled into the library.
    pub fn bundled() -> &'static Constants {
        static BUNDLED: OnceLock<Constants> = OnceLock::new();
        BUNDLED.get_or_init(|| {
            Constants::parse(DEFAULT_CONSTANTS).expect("bundled constants file is valid")
        })
    }

    pub fn pure_water_sound_speed(&self, temperature: f64) -> Result<f64> {
        self.pure_water.evaluate(temperature)
    }

    fn check(&self) -> Result<()> {
        let pw = &self.pure_water;
        if pw.coefficients.is_empty() || pw.coefficients.iter().any(|k| !k.is_finite()) {
            return Err(Error::Config(
                "pure_water.coefficients must be non-empty and finite".into(),
            ));
        }
        if !(pw.temperature_min < pw.temperature_max) {
            return Err(Error::Config("pure_water temperature span is empty".into()));
        }
        let b = &self.instrument_range;
        if !(b.sound_speed_min < b.sound_speed_max
            && b.temperature_min < b.temperature_max
            && b.pressure_min < b.pressure_max)
        {
            return Err(Error::Config("instrument_range bounds are inverted".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_parses() {
        let c = Constants::bundled();
        assert_eq!(c.pure_water.coefficients.len(), 6);
        assert_eq!(c.instrument_range.sound_speed_min, 1375.0);
        assert_eq!(c.instrument_range.sound_speed_max, 1900.0);
        assert_eq!(c.instrument_range.temperature_min, -2.0);
        assert_eq!(c.instrument_range.pressure_max, 20000.0);
        assert_eq!(c.sensor_range.sound_speed_min, 1400.0);
    }

    #[test]
    fn coefficients_parse_at_full_precision() {
        let c = Constants::bundled();
        assert_eq!(c.pure_water.coefficients[5], 3.1464e-9);
        assert_eq!(c.pure_water.coefficients[2], -5.80852e-2);
    }

    #[test]
    fn malformed_file_reports_line() {
        let text = "[pure_water]\ncoefficients = [1.0]\ntemperature_min = oops\n";
        match Constants::parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverted_bounds_rejected() {
        let text = DEFAULT_CONSTANTS.replace("sound_speed_max = 1900.0", "sound_speed_max = 1000.0");
        assert!(matches!(Constants::parse(&text), Err(Error::Config(_))));
    }
}
