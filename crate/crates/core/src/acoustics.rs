//! Physics layer: acoustic impedance, interface reflection, time of flight
//! to sound speed, echo amplitude ratio to attenuation, pure-water
//! calibration reference and channel range checks.
//!
//! Conventions: amplitudes in mV, times in seconds, lengths in metres,
//! attenuation in Np/m. The sensor is a pulse-echo device, so every
//! acoustic path between the two reflectors is traversed twice.

use serde::{Deserialize, Serialize};

use crate::constants::{Constants, ValidationBounds};
use crate::error::{domain, Result};
use crate::record::{DeviceRecord, RecordFlags};

/// Decibels per neper, 20·log10(e).
pub const DB_PER_NEPER: f64 = 8.685_889_638_065_037;

/// Water (or other medium) conditions at the time of a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MediumState {
    /// °C
    pub temperature: f64,
    /// kPa, absolute
    pub pressure: f64,
    /// kg/m³
    pub density: f64,
    /// m/s; `None` when sound speed is the quantity being measured.
    pub sound_speed: Option<f64>,
}

impl MediumState {
    pub fn new(temperature: f64, pressure: f64, density: f64, sound_speed: Option<f64>) -> Result<Self> {
        let state = MediumState {
            temperature,
            pressure,
            density,
            sound_speed,
        };
        state.check()?;
        Ok(state)
    }

    pub fn check(&self) -> Result<()> {
        if !self.temperature.is_finite() || !self.pressure.is_finite() {
            return Err(domain("medium temperature and pressure must be finite"));
        }
        if !(self.density > 0.0) || !self.density.is_finite() {
            return Err(domain(format!("medium density {} must be positive", self.density)));
        }
        if let Some(c) = self.sound_speed {
            if !(c > 0.0) || !c.is_finite() {
                return Err(domain(format!("medium sound speed {c} must be positive")));
            }
        }
        Ok(())
    }

    /// Whether temperature and pressure lie in the instrument's ranges.
    pub fn within(&self, bounds: &ValidationBounds) -> bool {
        (bounds.temperature_min..=bounds.temperature_max).contains(&self.temperature)
            && (bounds.pressure_min..=bounds.pressure_max).contains(&self.pressure)
    }

    pub fn impedance(&self) -> Result<f64> {
        let c = self
            .sound_speed
            .ok_or_else(|| domain("medium sound speed is not set"))?;
        acoustic_impedance(self.density, c)
    }
}

impl Default for MediumState {
    /// Fresh water at 20 °C and one standard atmosphere.
    fn default() -> Self {
        MediumState {
            temperature: 20.0,
            pressure: 101.325,
            density: 998.2,
            sound_speed: Some(1482.343),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReflectorMaterial {
    pub name: String,
    /// kg/m³
    pub density: f64,
    /// m/s
    pub sound_speed: f64,
}

impl Default for ReflectorMaterial {
    fn default() -> Self {
        ReflectorMaterial::stainless_steel()
    }
}

impl ReflectorMaterial {
    pub fn stainless_steel() -> Self {
        ReflectorMaterial {
            name: "stainless steel".into(),
            density: 7900.0,
            sound_speed: 5790.0,
        }
    }

    pub fn titanium() -> Self {
        ReflectorMaterial {
            name: "titanium".into(),
            density: 4500.0,
            sound_speed: 6070.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density.is_finite())
            || !(self.sound_speed > 0.0 && self.sound_speed.is_finite())
        {
            return Err(domain(format!(
                "reflector '{}' needs positive density and sound speed",
                self.name
            )));
        }
        Ok(())
    }

    pub fn impedance(&self) -> Result<f64> {
        acoustic_impedance(self.density, self.sound_speed)
    }
}

/// Two-reflector sensor head.
///
/// The emitter fires towards a semitransparent first reflector at
/// `first_reflector_offset`; the part of the pulse that passes it travels
/// `base_length` further to the second reflector. Both echoes return to the
/// emitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorGeometry {
    /// One-way distance between the reflectors, m.
    pub base_length: f64,
    /// One-way distance from the emitter to the first reflector, m.
    pub first_reflector_offset: f64,
    /// Hz
    pub carrier_frequency: f64,
    /// One-pass amplitude transmission of the first reflector, in (0, 1].
    pub first_reflector_transmission: f64,
    pub reflector_material: ReflectorMaterial,
}

impl Default for SensorGeometry {
    fn default() -> Self {
        SensorGeometry {
            base_length: 0.06,
            first_reflector_offset: 0.01,
            carrier_frequency: 2.0e6,
            first_reflector_transmission: 0.5,
            reflector_material: ReflectorMaterial::stainless_steel(),
        }
    }
}

impl SensorGeometry {
    pub fn check(&self) -> Result<()> {
        if !(self.base_length > 0.0 && self.base_length.is_finite()) {
            return Err(domain(format!("base length {} must be positive", self.base_length)));
        }
        if !(self.first_reflector_offset >= 0.0 && self.first_reflector_offset.is_finite()) {
            return Err(domain("first reflector offset must be non-negative"));
        }
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(domain("carrier frequency must be positive"));
        }
        let t = self.first_reflector_transmission;
        if !(t > 0.0 && t <= 1.0) {
            return Err(domain(format!("first reflector transmission {t} outside (0, 1]")));
        }
        self.reflector_material.check()
    }

    /// Acoustic path length between the two echoes (there and back).
    pub fn echo_path_length(&self) -> f64 {
        2.0 * self.base_length
    }
}

/// z = ρ·c, in Pa·s/m.
pub fn acoustic_impedance(density: f64, sound_speed: f64) -> Result<f64> {
    if !(density > 0.0 && density.is_finite()) || !(sound_speed > 0.0 && sound_speed.is_finite()) {
        return Err(domain(format!(
            "impedance needs positive density and sound speed, got ({density}, {sound_speed})"
        )));
    }
    Ok(density * sound_speed)
}

/// Pressure reflection coefficient of a water/reflector interface, signed:
/// `(z_water − z_reflector) / (z_water + z_reflector)`. Negative for a
/// reflector stiffer than water.
pub fn reflection_coefficient(z_water: f64, z_reflector: f64) -> Result<f64> {
    if !(z_water > 0.0 && z_water.is_finite()) || !(z_reflector > 0.0 && z_reflector.is_finite()) {
        return Err(domain(format!(
            "impedances must be positive, got ({z_water}, {z_reflector})"
        )));
    }
    Ok((z_water - z_reflector) / (z_water + z_reflector))
}

/// |k|, the fraction of pressure amplitude sent back.
pub fn reflection_magnitude(z_water: f64, z_reflector: f64) -> Result<f64> {
    reflection_coefficient(z_water, z_reflector).map(f64::abs)
}

/// Sound speed from the delay between the two echoes. The delay covers the
/// base twice: `c = 2·L / Δt`.
pub fn sound_speed_from_tof(delta_t: f64, base_length: f64) -> Result<f64> {
    if !(delta_t > 0.0 && delta_t.is_finite()) {
        return Err(domain(format!("echo delay {delta_t} s must be positive")));
    }
    if !(base_length > 0.0 && base_length.is_finite()) {
        return Err(domain(format!("base length {base_length} m must be positive")));
    }
    Ok(2.0 * base_length / delta_t)
}

/// Attenuation in Np/m from the near and far echo amplitudes:
/// `α = ln(u_near / u_far) / (2·L)`.
///
/// `u_near` must already carry the first-reflector transmission correction
/// so that `u_near == u_far` in a lossless medium. Decaying signals give
/// α ≥ 0.
pub fn attenuation_coefficient(u_near: f64, u_far: f64, base_length: f64) -> Result<f64> {
    if !(u_near > 0.0 && u_near.is_finite()) || !(u_far > 0.0 && u_far.is_finite()) {
        return Err(domain(format!(
            "echo amplitudes must be positive, got ({u_near}, {u_far}) mV"
        )));
    }
    if !(base_length > 0.0 && base_length.is_finite()) {
        return Err(domain(format!("base length {base_length} m must be positive")));
    }
    Ok((u_near / u_far).ln() / (2.0 * base_length))
}

pub fn nepers_to_db(alpha: f64) -> f64 {
    alpha * DB_PER_NEPER
}

pub fn db_to_nepers(alpha_db: f64) -> f64 {
    alpha_db / DB_PER_NEPER
}

/// Sound speed in pure water at atmospheric pressure from the bundled
/// calibration polynomial. Valid over 0..95 °C.
pub fn pure_water_sound_speed(temperature: f64) -> Result<f64> {
    Constants::bundled().pure_water_sound_speed(temperature)
}

/// Which channels of a record fall outside the instrument ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValidityReport {
    pub sound_speed_out_of_range: bool,
    pub temperature_out_of_range: bool,
    pub pressure_out_of_range: bool,
}

impl ValidityReport {
    pub fn all_valid(&self) -> bool {
        !(self.sound_speed_out_of_range || self.temperature_out_of_range || self.pressure_out_of_range)
    }

    pub fn flags(&self) -> RecordFlags {
        let mut flags = RecordFlags::empty();
        flags.set(RecordFlags::SOUND_SPEED_RANGE, self.sound_speed_out_of_range);
        flags.set(RecordFlags::TEMPERATURE_RANGE, self.temperature_out_of_range);
        flags.set(RecordFlags::PRESSURE_RANGE, self.pressure_out_of_range);
        flags
    }
}

/// Report-only range check. NaN readings count as out of range.
pub fn validate_record(record: &DeviceRecord, bounds: &ValidationBounds) -> ValidityReport {
    let outside = |v: f64, lo: f64, hi: f64| !(lo..=hi).contains(&v);
    ValidityReport {
        sound_speed_out_of_range: outside(record.sound_speed, bounds.sound_speed_min, bounds.sound_speed_max),
        temperature_out_of_range: outside(record.temperature, bounds.temperature_min, bounds.temperature_max),
        pressure_out_of_range: outside(record.pressure, bounds.pressure_min, bounds.pressure_max),
    }
}
