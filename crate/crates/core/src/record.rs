//! One work-cycle result and its fixed little-endian encoding.

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

bitflags! {
    /// Per-record status bits.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
    pub struct RecordFlags: u16 {
        const SOUND_SPEED_RANGE = 0x0001;
        const TEMPERATURE_RANGE = 0x0002;
        const PRESSURE_RANGE = 0x0004;
        /// No usable echo pair; sound speed and attenuation are NaN.
        const INVALID = 0x0008;
        /// The comparator threshold was lowered during this cycle.
        const THRESHOLD_ADAPTED = 0x0010;
    }
}

impl RecordFlags {
    /// Flag names in bit order, as used for tabular output.
    pub const NAMED: [(&'static str, RecordFlags); 5] = [
        ("sound_speed_range", RecordFlags::SOUND_SPEED_RANGE),
        ("temperature_range", RecordFlags::TEMPERATURE_RANGE),
        ("pressure_range", RecordFlags::PRESSURE_RANGE),
        ("invalid", RecordFlags::INVALID),
        ("threshold_adapted", RecordFlags::THRESHOLD_ADAPTED),
    ];

    /// Bits owned by range validation.
    pub const RANGE: RecordFlags = RecordFlags::SOUND_SPEED_RANGE
        .union(RecordFlags::TEMPERATURE_RANGE)
        .union(RecordFlags::PRESSURE_RANGE);
}

/// Result of one measurement cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub sequence: u32,
    /// Seconds since power-on on the simulated clock.
    pub timestamp: f64,
    /// m/s
    pub sound_speed: f64,
    /// Np/m
    pub attenuation: f64,
    /// Near-echo amplitude after transmission correction, mV.
    pub u_near: f64,
    /// mV
    pub u_far: f64,
    /// °C
    pub temperature: f64,
    /// kPa
    pub pressure: f64,
    pub flags: RecordFlags,
}

impl DeviceRecord {
    pub const ENCODED_LEN: usize = 4 + 7 * 8 + 2;

    pub fn encode(&self) -> [u8; Self::ENCODED_LEN] {
        let mut out = [0u8; Self::ENCODED_LEN];
        out[0..4].copy_from_slice(&self.sequence.to_le_bytes());
        let values = [
            self.timestamp,
            self.sound_speed,
            self.attenuation,
            self.u_near,
            self.u_far,
            self.temperature,
            self.pressure,
        ];
        for (i, v) in values.iter().enumerate() {
            out[4 + 8 * i..12 + 8 * i].copy_from_slice(&v.to_le_bytes());
        }
        out[60..62].copy_from_slice(&self.flags.bits().to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != Self::ENCODED_LEN {
            return Err(Error::Domain(format!(
                "record payload is {} bytes, expected {}",
                bytes.len(),
                Self::ENCODED_LEN
            )));
        }
        let f = |i: usize| {
            let start = 4 + 8 * i;
            f64::from_le_bytes(bytes[start..start + 8].try_into().unwrap())
        };
        Ok(DeviceRecord {
            sequence: u32::from_le_bytes(bytes[0..4].try_into().unwrap()),
            timestamp: f(0),
            sound_speed: f(1),
            attenuation: f(2),
            u_near: f(3),
            u_far: f(4),
            temperature: f(5),
            pressure: f(6),
            flags: RecordFlags::from_bits_retain(u16::from_le_bytes([bytes[60], bytes[61]])),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn encoding_is_lossless(
            seq in any::<u32>(),
            vals in proptest::array::uniform7(any::<f64>()),
            flags in any::<u16>(),
        ) {
            let r = DeviceRecord {
                sequence: seq,
                timestamp: vals[0],
                sound_speed: vals[1],
                attenuation: vals[2],
                u_near: vals[3],
                u_far: vals[4],
                temperature: vals[5],
                pressure: vals[6],
                flags: RecordFlags::from_bits_retain(flags),
            };
            let bytes = r.encode();
            let back = DeviceRecord::decode(&bytes).unwrap();
            prop_assert_eq!(back.encode(), bytes);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(DeviceRecord::decode(&[0u8; 61]).is_err());
    }
}
