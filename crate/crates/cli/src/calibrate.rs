use std::io::Write;

use svp_core::constants::Constants;
use svp_core::{Device, DeviceSettings, SettingsStore, SynthesisScenario, SynthesizedSource};

use crate::error::{CliError, CliResult};
use crate::table::sig9;

/// Largest accepted |measured − reference|, m/s.
pub const TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy)]
pub struct Residual {
    pub temperature: f64,
    pub reference: f64,
    pub measured: f64,
}

impl Residual {
    pub fn residual(&self) -> f64 {
        self.measured - self.reference
    }

    pub fn passes(&self) -> bool {
        self.residual().abs() <= TOLERANCE
    }
}

pub struct Options<'a> {
    pub constants: &'a Constants,
    pub scenario: SynthesisScenario,
    pub settings: DeviceSettings,
}

/// One device cycle per temperature against the pure-water reference.
pub fn run(temperatures: &[f64], opts: &Options) -> CliResult<Vec<Residual>> {
    if temperatures.is_empty() {
        return Err(CliError::Usage("no temperatures given".into()));
    }
    let references = temperatures
        .iter()
        .map(|&t| {
            opts.constants
                .pure_water_sound_speed(t)
                .map_err(|e| CliError::Usage(format!("temperature {t} °C: {e}")))
        })
        .collect::<CliResult<Vec<f64>>>()?;

    let mut store = SettingsStore::empty();
    store.write(&opts.settings.encode());
    let mut device = Device::power_on(store);
    let mut out = Vec::with_capacity(temperatures.len());
    for (i, (&temperature, &reference)) in temperatures.iter().zip(&references).enumerate() {
        let mut s = opts.scenario.clone();
        s.medium.temperature = temperature;
        s.medium.sound_speed = Some(reference);
        s.seed = opts.scenario.seed.wrapping_add(i as u64);
        let mut source = SynthesizedSource::new(s).map_err(|e| CliError::Usage(e.to_string()))?;
        let record = device
            .run_cycle(&mut source)
            .map_err(|e| CliError::Data(format!("work cycle: {e}")))?;
        out.push(Residual {
            temperature,
            reference,
            measured: record.sound_speed,
        });
    }
    Ok(out)
}

pub fn write_report(rows: &[Residual], out: impl Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["temperature_c", "reference_m_s", "measured_m_s", "residual_m_s", "pass"])?;
    for r in rows {
        w.write_record([
            sig9(r.temperature),
            sig9(r.reference),
            sig9(r.measured),
            sig9(r.residual()),
            u8::from(r.passes()).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> Options<'static> {
        Options {
            constants: Constants::bundled(),
            scenario: SynthesisScenario::default(),
            settings: DeviceSettings::default(),
        }
    }

    #[test]
    fn four_temperatures_within_budget() {
        let rows = run(&[0.0, 10.0, 20.0, 30.0], &opts()).unwrap();
        assert_eq!(rows.len(), 4);
        assert!((rows[2].reference - 1482.34330848).abs() < 1e-6);
        assert!(rows.iter().all(Residual::passes), "{rows:?}");
    }

    #[test]
    fn out_of_domain_is_usage() {
        assert!(matches!(run(&[-10.0], &opts()), Err(CliError::Usage(_))));
    }

    #[test]
    fn nan_residual_fails() {
        let r = Residual {
            temperature: 1.0,
            reference: 1500.0,
            measured: f64::NAN,
        };
        assert!(!r.passes());
    }
}
