//! Non-volatile device settings and their binary block.
//!
//! Block layout, schema version 1, all multi-byte fields little-endian:
//!
//! | field                               | type          |
//! |-------------------------------------|---------------|
//! | schema version (= 1)                | u8            |
//! | comparator threshold, mV            | u8            |
//! | AMC_H, AMC_L (ns), V_CAL (mV)       | 3 × f64       |
//! | base length, reflector offset (m)   | 2 × f64       |
//! | carrier frequency (Hz)              | f64           |
//! | first reflector transmission        | f64           |
//! | reflector density, sound speed      | 2 × f64       |
//! | reflector name length, name (UTF-8) | u8, n bytes   |
//! | cycle rate (Hz)                     | f64           |
//! | validation bounds c/T/P min,max     | 6 × f64       |
//! | TDC LSB (s)                         | f64           |
//! | zero crossing index                 | u8            |
//! | timing trigger fraction             | f64           |
//! | quiet periods                       | f64           |

use serde::{Deserialize, Serialize};

use super::protocol::crc16;
use crate::acoustics::{ReflectorMaterial, SensorGeometry};
use crate::constants::ValidationBounds;
use crate::error::{Error, Result};
use crate::tdc::{AmplitudeCalibration, ComparatorConfig, EchoTiming, Tdc, DEFAULT_LSB};

pub const SCHEMA_VERSION: u8 = 1;
pub const MAX_NAME_LEN: usize = 64;
pub const DEFAULT_CYCLE_RATE: f64 = 18.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceSettings {
    pub comparator: ComparatorConfig,
    pub amplitude_cal: AmplitudeCalibration,
    pub geometry: SensorGeometry,
    /// Work cycles per second.
    pub cycle_rate: f64,
    pub bounds: ValidationBounds,
    /// s
    pub tdc_lsb: f64,
    pub timing: EchoTiming,
}

impl Default for DeviceSettings {
    fn default() -> Self {
        DeviceSettings {
            comparator: ComparatorConfig::default(),
            amplitude_cal: AmplitudeCalibration::default(),
            geometry: SensorGeometry::default(),
            cycle_rate: DEFAULT_CYCLE_RATE,
            bounds: ValidationBounds::default(),
            tdc_lsb: DEFAULT_LSB,
            timing: EchoTiming::default(),
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Parse {
                line: 0,
                message: format!("settings block truncated at byte {}", self.bytes.len()),
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl DeviceSettings {
    pub fn check(&self) -> Result<()> {
        self.amplitude_cal.check()?;
        self.geometry.check()?;
        self.timing.check()?;
        Tdc::new(self.tdc_lsb)?;
        if !(self.cycle_rate > 0.0 && self.cycle_rate.is_finite()) {
            return Err(Error::Domain(format!("cycle rate {} Hz must be positive", self.cycle_rate)));
        }
        let b = &self.bounds;
        let ordered = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo < hi;
        if !(ordered(b.sound_speed_min, b.sound_speed_max)
            && ordered(b.temperature_min, b.temperature_max)
            && ordered(b.pressure_min, b.pressure_max))
        {
            return Err(Error::Domain("validation bounds must be finite and ordered".into()));
        }
        if self.geometry.reflector_material.name.len() > MAX_NAME_LEN {
            return Err(Error::Domain(format!("reflector name longer than {MAX_NAME_LEN} bytes")));
        }
        Ok(())
    }

    pub fn tdc(&self) -> Tdc {
        Tdc::new(self.tdc_lsb).unwrap_or_default()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(160);
        let f = |out: &mut Vec<u8>, v: f64| out.extend_from_slice(&v.to_le_bytes());
        out.push(SCHEMA_VERSION);
        out.push(self.comparator.threshold_mv());
        f(&mut out, self.amplitude_cal.amc_high);
        f(&mut out, self.amplitude_cal.amc_low);
        f(&mut out, self.amplitude_cal.v_cal);
        let g = &self.geometry;
        f(&mut out, g.base_length);
        f(&mut out, g.first_reflector_offset);
        f(&mut out, g.carrier_frequency);
        f(&mut out, g.first_reflector_transmission);
        f(&mut out, g.reflector_material.density);
        f(&mut out, g.reflector_material.sound_speed);
        let name = g.reflector_material.name.as_bytes();
        let name = &name[..name.len().min(MAX_NAME_LEN)];
        out.push(name.len() as u8);
        out.extend_from_slice(name);
        f(&mut out, self.cycle_rate);
        let b = &self.bounds;
        for v in [
            b.sound_speed_min,
            b.sound_speed_max,
            b.temperature_min,
            b.temperature_max,
            b.pressure_min,
            b.pressure_max,
        ] {
            f(&mut out, v);
        }
        f(&mut out, self.tdc_lsb);
        out.push(self.timing.zero_crossing_index);
        f(&mut out, self.timing.trigger_fraction);
        f(&mut out, self.timing.quiet_periods);
        out
    }

    /// Parse and validate a settings block.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let version = r.u8()?;
        if version != SCHEMA_VERSION {
            return Err(Error::Parse {
                line: 0,
                message: format!("unsupported settings schema version {version}"),
            });
        }
        let comparator = ComparatorConfig::new(r.u8()?)?;
        let amplitude_cal = AmplitudeCalibration {
            amc_high: r.f64()?,
            amc_low: r.f64()?,
            v_cal: r.f64()?,
        };
        let base_length = r.f64()?;
        let first_reflector_offset = r.f64()?;
        let carrier_frequency = r.f64()?;
        let first_reflector_transmission = r.f64()?;
        let density = r.f64()?;
        let sound_speed = r.f64()?;
        let name_len = r.u8()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Parse {
                line: 0,
                message: "reflector name is not UTF-8".into(),
            })?
            .to_string();
        let cycle_rate = r.f64()?;
        let bounds = ValidationBounds {
            sound_speed_min: r.f64()?,
            sound_speed_max: r.f64()?,
            temperature_min: r.f64()?,
            temperature_max: r.f64()?,
            pressure_min: r.f64()?,
            pressure_max: r.f64()?,
        };
        let tdc_lsb = r.f64()?;
        let timing = EchoTiming {
            zero_crossing_index: r.u8()?,
            trigger_fraction: r.f64()?,
            quiet_periods: r.f64()?,
        };
        if r.pos != bytes.len() {
            return Err(Error::Parse {
                line: 0,
                message: format!("{} trailing bytes after settings block", bytes.len() - r.pos),
            });
        }
        let settings = DeviceSettings {
            comparator,
            amplitude_cal,
            geometry: SensorGeometry {
                base_length,
                first_reflector_offset,
                carrier_frequency,
                first_reflector_transmission,
                reflector_material: ReflectorMaterial {
                    name,
                    density,
                    sound_speed,
                },
            },
            cycle_rate,
            bounds,
            tdc_lsb,
            timing,
        };
        settings.check()?;
        Ok(settings)
    }
}

/// Non-volatile settings area: the settings block followed by its CRC-16
/// (little-endian). Empty when nothing has been written.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SettingsStore {
    area: Vec<u8>,
}

impl SettingsStore {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Wrap raw contents of the non-volatile area.
    pub fn from_raw(area: Vec<u8>) -> Self {
        SettingsStore { area }
    }

    pub fn raw(&self) -> &[u8] {
        &self.area
    }

    pub fn is_empty(&self) -> bool {
        self.area.is_empty()
    }

    pub fn write(&mut self, block: &[u8]) {
        self.area.clear();
        self.area.extend_from_slice(block);
        self.area.extend_from_slice(&crc16(block).to_le_bytes());
    }

    /// The stored block, `Ok(None)` when empty, or an error when the CRC
    /// does not match.
    pub fn block(&self) -> Result<Option<&[u8]>> {
        if self.area.is_empty() {
            return Ok(None);
        }
        if self.area.len() < 2 {
            return Err(Error::Parse {
                line: 0,
                message: "settings area shorter than its CRC".into(),
            });
        }
        let (block, crc) = self.area.split_at(self.area.len() - 2);
        if crc16(block).to_le_bytes() != crc {
            return Err(Error::Parse {
                line: 0,
                message: "settings CRC mismatch".into(),
            });
        }
        Ok(Some(block))
    }
}
