//! Instrument controller simulation.
//!
//! After power-on the controller loads its settings and enters Autonomous
//! mode. The host can switch modes at any time with SET_MODE:
//!
//! * Autonomous: work cycles run and records go to internal memory;
//! * Telemetric: work cycles run and records are sent to the host;
//! * Memory: the host reads or formats the record memory;
//! * Settings: the host writes or reads the non-volatile settings.
//!
//! Each work cycle programs the comparator, takes an intermediate First
//! Wave measurement, lowers the threshold if nothing triggered, then takes
//! the final echo-pair measurement. The clock is simulated and advances one
//! cycle period per work cycle.

pub mod memory;
pub mod protocol;
pub mod settings;

use serde::{Deserialize, Serialize};

use crate::acoustics::validate_record;
use crate::error::{Error, Result};
use crate::record::{DeviceRecord, RecordFlags};
use crate::synth::{synthesize, GroundTruth, SynthesisScenario};
use crate::tdc::{ComparatorConfig, EchoPair};
use crate::waveform::Waveform;

use memory::RecordMemory;
use protocol::{Command, DecoderStats, Frame, FrameDecoder, NakCode, Response, StatusReport, MAX_RECORDS_PER_FRAME};
use settings::{DeviceSettings, SettingsStore};

/// Largest command payload the device accepts; longer frames are discarded
/// by the input decoder.
pub const MAX_COMMAND_PAYLOAD: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum DeviceMode {
    Autonomous = 0,
    Telemetric = 1,
    Memory = 2,
    Settings = 3,
}

impl DeviceMode {
    pub const ALL: [DeviceMode; 4] = [
        DeviceMode::Autonomous,
        DeviceMode::Telemetric,
        DeviceMode::Memory,
        DeviceMode::Settings,
    ];

    pub fn from_u8(v: u8) -> Option<Self> {
        DeviceMode::ALL.get(v as usize).copied()
    }

    pub fn runs_cycles(self) -> bool {
        matches!(self, DeviceMode::Autonomous | DeviceMode::Telemetric)
    }
}

/// One acquisition handed to a work cycle: the received waveform and the
/// auxiliary channel readings taken with it.
#[derive(Debug, Clone)]
pub struct Acquisition {
    pub waveform: Waveform,
    /// °C
    pub temperature: f64,
    /// kPa
    pub pressure: f64,
}

/// Supplier of received waveforms, standing in for the transducer.
pub trait WaveformSource {
    fn acquire(&mut self) -> Result<Acquisition>;
}

/// Synthesizes a fresh noisy waveform per cycle from a scenario, advancing
/// the noise seed each time.
#[derive(Debug, Clone)]
pub struct SynthesizedSource {
    scenario: SynthesisScenario,
    last_truth: Option<GroundTruth>,
}

impl SynthesizedSource {
    pub fn new(scenario: SynthesisScenario) -> Result<Self> {
        scenario.check()?;
        Ok(SynthesizedSource {
            scenario,
            last_truth: None,
        })
    }

    pub fn scenario(&self) -> &SynthesisScenario {
        &self.scenario
    }

    /// Ground truth of the most recent acquisition.
    pub fn last_truth(&self) -> Option<GroundTruth> {
        self.last_truth
    }
}

impl WaveformSource for SynthesizedSource {
    fn acquire(&mut self) -> Result<Acquisition> {
        let (waveform, truth) = synthesize(&self.scenario)?;
        self.scenario.seed = self.scenario.seed.wrapping_add(1);
        self.last_truth = Some(truth);
        Ok(Acquisition {
            waveform,
            temperature: self.scenario.medium.temperature,
            pressure: self.scenario.medium.pressure,
        })
    }
}

/// Replays one fixed acquisition forever.
#[derive(Debug, Clone)]
pub struct FixedSource(pub Acquisition);

impl WaveformSource for FixedSource {
    fn acquire(&mut self) -> Result<Acquisition> {
        Ok(self.0.clone())
    }
}

pub struct Device {
    mode: DeviceMode,
    settings: DeviceSettings,
    /// Settings block exactly as last written (or encoded defaults).
    settings_block: Vec<u8>,
    store: SettingsStore,
    corrupt_settings: bool,
    active_comparator: ComparatorConfig,
    memory: RecordMemory,
    next_sequence: u32,
    /// Seconds accumulated at earlier cycle rates.
    clock_epoch: f64,
    /// Cycles run at the current rate.
    clock_ticks: u64,
    total_cycles: u64,
    last_record: Option<DeviceRecord>,
    last_pair: Option<EchoPair>,
    decoder: FrameDecoder,
    outbox: Vec<Frame>,
}

impl Device {
    /// Boot: load settings from the store (defaults when empty or corrupt)
    /// and enter Autonomous mode.
    pub fn power_on(store: SettingsStore) -> Self {
        Self::power_on_with_memory(store, RecordMemory::default())
    }

    pub fn power_on_with_memory(store: SettingsStore, memory: RecordMemory) -> Self {
        let loaded = match store.block() {
            Ok(Some(block)) => DeviceSettings::decode(block).map(|s| Some((s, block.to_vec()))),
            Ok(None) => Ok(None),
            Err(e) => Err(e),
        };
        let (settings, settings_block, corrupt_settings) = match loaded {
            Ok(Some((settings, block))) => (settings, block, false),
            Ok(None) => {
                let settings = DeviceSettings::default();
                let block = settings.encode();
                (settings, block, false)
            }
            Err(_) => {
                let settings = DeviceSettings::default();
                let block = settings.encode();
                (settings, block, true)
            }
        };
        Device {
            mode: DeviceMode::Autonomous,
            active_comparator: settings.comparator,
            settings,
            settings_block,
            store,
            corrupt_settings,
            memory,
            next_sequence: 0,
            clock_epoch: 0.0,
            clock_ticks: 0,
            total_cycles: 0,
            last_record: None,
            last_pair: None,
            decoder: FrameDecoder::new(MAX_COMMAND_PAYLOAD),
            outbox: Vec::new(),
        }
    }

    pub fn mode(&self) -> DeviceMode {
        self.mode
    }

    pub fn settings(&self) -> &DeviceSettings {
        &self.settings
    }

    pub fn settings_store(&self) -> &SettingsStore {
        &self.store
    }

    pub fn corrupt_settings(&self) -> bool {
        self.corrupt_settings
    }

    /// Comparator threshold currently in use, after any adaptation.
    pub fn active_comparator(&self) -> ComparatorConfig {
        self.active_comparator
    }

    pub fn memory(&self) -> &RecordMemory {
        &self.memory
    }

    pub fn next_sequence(&self) -> u32 {
        self.next_sequence
    }

    pub fn last_record(&self) -> Option<&DeviceRecord> {
        self.last_record.as_ref()
    }

    /// Echo-pair measurement behind the last valid record.
    pub fn last_echo_pair(&self) -> Option<&EchoPair> {
        self.last_pair.as_ref()
    }

    pub fn decoder_stats(&self) -> DecoderStats {
        self.decoder.stats()
    }

    /// Simulated seconds since power-on.
    pub fn clock(&self) -> f64 {
        self.clock_epoch + self.clock_ticks as f64 / self.settings.cycle_rate
    }

    /// Frames sent spontaneously (telemetry) since the last call.
    pub fn take_outbox(&mut self) -> Vec<Frame> {
        std::mem::take(&mut self.outbox)
    }

    fn status(&self) -> StatusReport {
        StatusReport {
            mode: self.mode,
            status_flags: if self.corrupt_settings {
                StatusReport::CORRUPT_SETTINGS
            } else {
                0
            },
            threshold_mv: self.active_comparator.threshold_mv(),
            stored_records: self.memory.len() as u32,
            next_sequence: self.next_sequence,
            bad_crc: self.decoder.stats().bad_crc.min(u32::MAX as u64) as u32,
            cycles: self.total_cycles,
        }
    }

    /// One work cycle. Only allowed in Autonomous and Telemetric modes.
    pub fn run_cycle(&mut self, source: &mut dyn WaveformSource) -> Result<DeviceRecord> {
        if !self.mode.runs_cycles() {
            return Err(Error::WrongMode(format!("{:?}", self.mode)));
        }
        let acquisition = source.acquire()?;
        let w = &acquisition.waveform;
        let tdc = self.settings.tdc();
        let mut flags = RecordFlags::empty();

        // Intermediate result: First Wave measurement and echo hit count at
        // the current threshold.
        let intermediate = tdc.first_wave_ratio(w, self.active_comparator);
        let hits = tdc.count_echoes(w, &self.settings.geometry, self.active_comparator, &self.settings.timing, 2);
        let needs_step = hits < 2
            || match &intermediate {
                Ok(m) => !m.ratio_in_range(),
                Err(Error::NoTrigger { .. }) => true,
                Err(_) => false,
            };
        if needs_step {
            if let Some(lower) = self.active_comparator.step_down() {
                self.active_comparator = lower;
                flags |= RecordFlags::THRESHOLD_ADAPTED;
            }
        }

        // Final result.
        let pair = tdc.measure_echo_pair(
            w,
            &self.settings.geometry,
            self.active_comparator,
            &self.settings.amplitude_cal,
            &self.settings.timing,
        );
        let geometry = &self.settings.geometry;
        let measured = pair.and_then(|p| Ok((p.sound_speed(geometry)?, p.attenuation(geometry)?, p)));
        let (sound_speed, attenuation, u_near, u_far) = match measured {
            Ok((c, alpha, p)) => {
                self.last_pair = Some(p);
                (c, alpha, p.u_near, p.u_far)
            }
            Err(_) => {
                flags |= RecordFlags::INVALID;
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            }
        };

        self.clock_ticks += 1;
        self.total_cycles += 1;
        let mut record = DeviceRecord {
            sequence: self.next_sequence,
            timestamp: self.clock(),
            sound_speed,
            attenuation,
            u_near,
            u_far,
            temperature: acquisition.temperature,
            pressure: acquisition.pressure,
            flags,
        };
        record.flags |= validate_record(&record, &self.settings.bounds).flags();
        self.next_sequence = self.next_sequence.wrapping_add(1);
        self.last_record = Some(record);

        match self.mode {
            DeviceMode::Autonomous => self.memory.store(record),
            DeviceMode::Telemetric => self.outbox.push(Response::Telemetry(record).to_frame()),
            _ => unreachable!("checked above"),
        }
        Ok(record)
    }

    /// Feed raw bytes from the host; returns response frames in order.
    /// Frames with a bad CRC are dropped silently and counted.
    pub fn receive_bytes(&mut self, bytes: &[u8]) -> Vec<Frame> {
        let frames = self.decoder.push(bytes);
        frames.iter().flat_map(|f| self.handle_command(f)).collect()
    }

    /// The host line went quiet; a partial frame is abandoned and any
    /// commands it was hiding are executed.
    pub fn line_idle(&mut self) -> Vec<Frame> {
        let frames = self.decoder.idle();
        frames.iter().flat_map(|f| self.handle_command(f)).collect()
    }

    /// Execute one CRC-valid command frame.
    pub fn handle_command(&mut self, frame: &Frame) -> Vec<Frame> {
        let op = frame.opcode;
        let nak = |code| vec![Response::Nak { opcode: op, code }.to_frame()];
        let ack = || vec![Response::Ack { opcode: op }.to_frame()];
        let command = match Command::from_frame(frame) {
            Ok(c) => c,
            Err(code) => return nak(code),
        };
        match command {
            Command::SetMode(mode) => {
                self.mode = mode;
                ack()
            }
            Command::ReadRecord => match self.last_record {
                Some(r) => vec![Response::Record(r).to_frame()],
                None => nak(NakCode::NoData),
            },
            Command::ReadMem { start, count } => {
                if self.mode != DeviceMode::Memory {
                    return nak(NakCode::WrongMode);
                }
                let count = (count as usize).min(MAX_RECORDS_PER_FRAME);
                let records = self.memory.read(start as usize, count);
                vec![Response::MemData { start, records }.to_frame()]
            }
            Command::FormatMem => {
                if self.mode != DeviceMode::Memory {
                    return nak(NakCode::WrongMode);
                }
                self.memory.format();
                self.next_sequence = 0;
                self.last_record = None;
                ack()
            }
            Command::WriteSettings(block) => {
                if self.mode != DeviceMode::Settings {
                    return nak(NakCode::WrongMode);
                }
                match DeviceSettings::decode(&block) {
                    Ok(settings) => {
                        self.apply_settings(settings, block);
                        ack()
                    }
                    Err(_) => nak(NakCode::BadPayload),
                }
            }
            Command::ReadSettings => vec![Response::Settings(self.settings_block.clone()).to_frame()],
            Command::Status => vec![Response::Status(self.status()).to_frame()],
        }
    }

    fn apply_settings(&mut self, settings: DeviceSettings, block: Vec<u8>) {
        // Keep the clock continuous across a change of cycle rate.
        self.clock_epoch = self.clock();
        self.clock_ticks = 0;
        self.store.write(&block);
        self.active_comparator = settings.comparator;
        self.settings = settings;
        self.settings_block = block;
        self.corrupt_settings = false;
    }

    /// Memory contents as a stream of RECORD frames, oldest first.
    pub fn dump_memory(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.memory.len() * (DeviceRecord::ENCODED_LEN + 6));
        for r in self.memory.iter() {
            out.extend(Response::Record(*r).to_frame().encode().expect("record fits a frame"));
        }
        out
    }

    /// Internal consistency check used by tests and fuzzing.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.memory.len() > self.memory.capacity() {
            return Err("memory over capacity".into());
        }
        let mut prev: Option<u32> = None;
        for r in self.memory.iter() {
            if let Some(p) = prev {
                if r.sequence <= p {
                    return Err(format!("sequence {} follows {}", r.sequence, p));
                }
            }
            prev = Some(r.sequence);
        }
        if let Some(p) = prev {
            if self.next_sequence <= p {
                return Err("next sequence not ahead of stored records".into());
            }
        }
        self.settings.check().map_err(|e| e.to_string())?;
        match DeviceSettings::decode(&self.settings_block) {
            Ok(s) if s == self.settings => {}
            _ => return Err("settings block disagrees with active settings".into()),
        }
        if self.active_comparator.threshold_mv() > self.settings.comparator.threshold_mv() {
            return Err("active threshold above programmed threshold".into());
        }
        if !(self.clock().is_finite() && self.clock() >= 0.0) {
            return Err("clock is not finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn send(device: &mut Device, command: Command) -> Vec<Response> {
        device
            .receive_bytes(&command.to_frame().encode().unwrap())
            .iter()
            .map(|f| Response::from_frame(f).expect("device frames parse"))
            .collect()
    }

    fn clean_source(c: f64, alpha: f64) -> SynthesizedSource {
        let mut s = SynthesisScenario::default();
        s.medium.sound_speed = Some(c);
        s.true_attenuation = alpha;
        SynthesizedSource::new(s).unwrap()
    }

    #[test]
    fn empty_store_boots_autonomous_with_defaults() {
        let d = Device::power_on(SettingsStore::empty());
        assert_eq!(d.mode(), DeviceMode::Autonomous);
        assert_eq!(d.settings(), &DeviceSettings::default());
        assert!(!d.corrupt_settings());
    }

    #[test]
    fn stored_settings_are_loaded() {
        let mut s = DeviceSettings::default();
        s.cycle_rate = 9.0;
        s.comparator = ComparatorConfig::new(12).unwrap();
        let mut store = SettingsStore::empty();
        store.write(&s.encode());
        let d = Device::power_on(store);
        assert_eq!(d.settings(), &s);
        assert_eq!(d.active_comparator().threshold_mv(), 12);
    }

    #[test]
    fn corrupt_store_loads_defaults_and_flags() {
        let mut store = SettingsStore::empty();
        store.write(&DeviceSettings::default().encode());
        let mut raw = store.raw().to_vec();
        raw[3] ^= 0xFF;
        let mut d = Device::power_on(SettingsStore::from_raw(raw));
        assert!(d.corrupt_settings());
        assert_eq!(d.settings(), &DeviceSettings::default());
        match &send(&mut d, Command::Status)[..] {
            [Response::Status(s)] => assert_eq!(s.status_flags & StatusReport::CORRUPT_SETTINGS, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clean_cycle_matches_truth() {
        let mut d = Device::power_on(SettingsStore::empty());
        let mut src = clean_source(1500.0, 1.0);
        let r = d.run_cycle(&mut src).unwrap();
        assert!((r.sound_speed - 1500.0).abs() < 0.02, "{}", r.sound_speed);
        assert!((r.attenuation - 1.0).abs() < 0.02, "{}", r.attenuation);
        assert!(!r.flags.contains(RecordFlags::INVALID));
        assert_eq!(d.memory().len(), 1);
    }

    #[test]
    fn noise_only_waveform_gives_invalid_record() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, 3.0).unwrap();
        let samples = (0..20_000).map(|_| normal.sample(&mut rng)).collect();
        let mut src = FixedSource(Acquisition {
            waveform: Waveform::new(samples, 100e6, 0.0).unwrap(),
            temperature: 10.0,
            pressure: 100.0,
        });
        let mut d = Device::power_on(SettingsStore::empty());
        for _ in 0..12 {
            let r = d.run_cycle(&mut src).unwrap();
            assert!(r.flags.contains(RecordFlags::INVALID));
            assert!(r.sound_speed.is_nan());
        }
        d.check_invariants().unwrap();
    }

    #[test]
    fn threshold_steps_down_on_silence() {
        let mut src = FixedSource(Acquisition {
            waveform: Waveform::new(vec![0.0; 5000], 100e6, 0.0).unwrap(),
            temperature: 10.0,
            pressure: 100.0,
        });
        let mut d = Device::power_on(SettingsStore::empty());
        let start = d.active_comparator().threshold_mv();
        let r = d.run_cycle(&mut src).unwrap();
        assert!(r.flags.contains(RecordFlags::THRESHOLD_ADAPTED | RecordFlags::INVALID));
        assert_eq!(d.active_comparator().threshold_mv(), start - 1);
        for _ in 0..40 {
            d.run_cycle(&mut src).unwrap();
        }
        assert_eq!(d.active_comparator().threshold_mv(), 0);
        let r = d.run_cycle(&mut src).unwrap();
        assert!(!r.flags.contains(RecordFlags::THRESHOLD_ADAPTED));
        assert!(r.flags.contains(RecordFlags::INVALID));
    }

    #[test]
    fn telemetric_emits_frame_without_storing() {
        let mut d = Device::power_on(SettingsStore::empty());
        send(&mut d, Command::SetMode(DeviceMode::Telemetric));
        let mut src = clean_source(1500.0, 0.0);
        let r = d.run_cycle(&mut src).unwrap();
        assert!(d.memory().is_empty());
        let out = d.take_outbox();
        assert_eq!(out.len(), 1);
        assert_eq!(Response::from_frame(&out[0]), Some(Response::Telemetry(r)));
        assert!(d.take_outbox().is_empty());
    }

    #[test]
    fn cycles_refused_outside_measuring_modes() {
        let mut d = Device::power_on(SettingsStore::empty());
        let mut src = clean_source(1500.0, 0.0);
        for mode in [DeviceMode::Memory, DeviceMode::Settings] {
            send(&mut d, Command::SetMode(mode));
            assert!(matches!(d.run_cycle(&mut src), Err(Error::WrongMode(_))));
        }
    }

    #[test]
    fn set_mode_from_autonomous_to_memory() {
        let mut d = Device::power_on(SettingsStore::empty());
        let r = send(&mut d, Command::SetMode(DeviceMode::Memory));
        assert_eq!(r, vec![Response::Ack { opcode: protocol::opcode::SET_MODE }]);
        assert_eq!(d.mode(), DeviceMode::Memory);
    }

    #[test]
    fn write_settings_needs_settings_mode() {
        let mut d = Device::power_on(SettingsStore::empty());
        let block = DeviceSettings::default().encode();
        let r = send(&mut d, Command::WriteSettings(block));
        assert_eq!(
            r,
            vec![Response::Nak {
                opcode: protocol::opcode::WRITE_SETTINGS,
                code: NakCode::WrongMode
            }]
        );
    }

    #[test]
    fn settings_write_read_round_trip() {
        let mut d = Device::power_on(SettingsStore::empty());
        send(&mut d, Command::SetMode(DeviceMode::Settings));
        let mut s = DeviceSettings::default();
        s.comparator = ComparatorConfig::new(20).unwrap();
        s.geometry.reflector_material.name = "titanium grade 2".into();
        let block = s.encode();
        assert_eq!(
            send(&mut d, Command::WriteSettings(block.clone())),
            vec![Response::Ack { opcode: protocol::opcode::WRITE_SETTINGS }]
        );
        assert_eq!(send(&mut d, Command::ReadSettings), vec![Response::Settings(block.clone())]);
        assert_eq!(d.settings(), &s);
        // persisted across a power cycle
        let rebooted = Device::power_on(d.settings_store().clone());
        assert_eq!(rebooted.settings(), &s);
    }

    #[test]
    fn bad_settings_payload_is_nakked() {
        let mut d = Device::power_on(SettingsStore::empty());
        send(&mut d, Command::SetMode(DeviceMode::Settings));
        let r = send(&mut d, Command::WriteSettings(vec![1, 2, 3]));
        assert!(matches!(r[..], [Response::Nak { code: NakCode::BadPayload, .. }]));
        assert_eq!(d.settings(), &DeviceSettings::default());
    }

    #[test]
    fn memory_commands() {
        let mut d = Device::power_on(SettingsStore::empty());
        let mut src = clean_source(1500.0, 0.0);
        for _ in 0..5 {
            d.run_cycle(&mut src).unwrap();
        }
        // memory access is refused outside Memory mode
        assert!(matches!(
            send(&mut d, Command::ReadMem { start: 0, count: 10 })[..],
            [Response::Nak { code: NakCode::WrongMode, .. }]
        ));
        send(&mut d, Command::SetMode(DeviceMode::Memory));
        match &send(&mut d, Command::ReadMem { start: 0, count: 10 })[..] {
            [Response::MemData { start: 0, records }] => {
                assert_eq!(records.iter().map(|r| r.sequence).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
            }
            other => panic!("{other:?}"),
        }
        match &send(&mut d, Command::ReadMem { start: 50, count: 10 })[..] {
            [Response::MemData { records, .. }] => assert!(records.is_empty()),
            other => panic!("{other:?}"),
        }
        send(&mut d, Command::FormatMem);
        match &send(&mut d, Command::ReadMem { start: 0, count: 10 })[..] {
            [Response::MemData { records, .. }] => assert!(records.is_empty()),
            other => panic!("{other:?}"),
        }
        assert_eq!(d.next_sequence(), 0);
        assert!(matches!(
            send(&mut d, Command::ReadRecord)[..],
            [Response::Nak { code: NakCode::NoData, .. }]
        ));
    }

    #[test]
    fn sequence_survives_mode_changes() {
        let mut d = Device::power_on(SettingsStore::empty());
        let mut src = clean_source(1500.0, 0.0);
        let a = d.run_cycle(&mut src).unwrap();
        send(&mut d, Command::SetMode(DeviceMode::Memory));
        send(&mut d, Command::SetMode(DeviceMode::Settings));
        send(&mut d, Command::SetMode(DeviceMode::Telemetric));
        let b = d.run_cycle(&mut src).unwrap();
        send(&mut d, Command::SetMode(DeviceMode::Autonomous));
        let c = d.run_cycle(&mut src).unwrap();
        assert!(a.sequence < b.sequence && b.sequence < c.sequence);
    }

    #[test]
    fn cadence_is_one_cycle_period() {
        let mut d = Device::power_on(SettingsStore::empty());
        let mut src = clean_source(1500.0, 0.0);
        let stamps: Vec<f64> = (0..20).map(|_| d.run_cycle(&mut src).unwrap().timestamp).collect();
        for pair in stamps.windows(2) {
            assert!((pair[1] - pair[0] - 1.0 / 18.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_opcode_naks_and_bad_crc_is_counted() {
        let mut d = Device::power_on(SettingsStore::empty());
        let r = d.receive_bytes(&Frame::new(0x55, vec![]).encode().unwrap());
        assert_eq!(
            Response::from_frame(&r[0]),
            Some(Response::Nak {
                opcode: 0x55,
                code: NakCode::UnknownOpcode
            })
        );
        let mut bytes = Command::Status.to_frame().encode().unwrap();
        bytes[4] ^= 1;
        assert!(d.receive_bytes(&bytes).is_empty());
        assert_eq!(d.decoder_stats().bad_crc, 1);
    }
}
