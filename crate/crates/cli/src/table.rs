//! Record table: CSV layout shared by `simulate` and `decode`.

use std::io::Write;

use svp_core::{DeviceRecord, RecordFlags};

pub const HEADER: [&str; 9] = [
    "seq",
    "time_s",
    "sound_speed_m_s",
    "attenuation_np_m",
    "u_near_mv",
    "u_far_mv",
    "temperature_c",
    "pressure_kpa",
    "flags",
];

/// `v` with 9 significant digits, shortest of fixed or exponent form.
pub fn sig9(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub struct RecordTable<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> RecordTable<W> {
    pub fn new(out: W) -> csv::Result<Self> {
        let mut out = csv::Writer::from_writer(out);
        let names = HEADER
            .iter()
            .copied()
            .chain(RecordFlags::NAMED.iter().map(|(name, _)| *name));
        out.write_record(names)?;
        Ok(RecordTable { out })
    }

    pub fn push(&mut self, r: &DeviceRecord) -> csv::Result<()> {
        let mut row = vec![
            r.sequence.to_string(),
            sig9(r.timestamp),
            sig9(r.sound_speed),
            sig9(r.attenuation),
            sig9(r.u_near),
            sig9(r.u_far),
            sig9(r.temperature),
            sig9(r.pressure),
            format!("0x{:04X}", r.flags.bits()),
        ];
        row.extend(
            RecordFlags::NAMED
                .iter()
                .map(|(_, flag)| u8::from(r.flags.contains(*flag)).to_string()),
        );
        self.out.write_record(&row)
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(1482.3433084), "1482.34331");
        assert_eq!(sig9(0.055555555555), "0.0555555556");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(-2.5e-9), "-2.5e-9");
        assert_eq!(sig9(123456789012.0), "1.23456789e11");
        assert_eq!(sig9(9.9999999999), "10");
        assert_eq!(sig9(f64::NAN), "NaN");
        assert_eq!(sig9(0.0), "0");
    }

    #[test]
    fn nine_digits_reparse_within_half_ulp_of_the_ninth_digit() {
        for v in [1482.343308, 5.776226504666211, 0.0001234567891, 101.325, 3.3e12] {
            let back: f64 = sig9(v).parse().unwrap();
            assert!(((back - v) / v).abs() <= 5e-9, "{v} -> {back}");
        }
    }
}
