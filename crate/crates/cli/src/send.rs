//! `protocol-send`: encode commands, feed them to a freshly powered device
//! and print both directions as hex.
//!
//! Command tokens:
//!
//! | token                  | frame                                  |
//! |------------------------|----------------------------------------|
//! | `set-mode=<mode>`      | SET_MODE; autonomous, telemetric, memory, settings |
//! | `read-record`          | READ_RECORD                            |
//! | `read-mem=<start>,<n>` | READ_MEM                               |
//! | `format-mem`           | FORMAT_MEM                             |
//! | `write-settings`       | WRITE_SETTINGS with default settings   |
//! | `read-settings`        | READ_SETTINGS                          |
//! | `status`               | STATUS                                 |
//! | `raw=<hex>`            | bytes sent as given                    |
//! | `cycle[=<n>]`          | no frame; run n work cycles (default 1) |

use std::io::Write;

use svp_core::device::protocol::{Command, Frame, Response};
use svp_core::{Device, DeviceMode, DeviceSettings, SettingsStore, SynthesisScenario, SynthesizedSource};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Send(Vec<u8>),
    Cycles(u32),
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn parse_mode(s: &str) -> CliResult<DeviceMode> {
    Ok(match s {
        "autonomous" => DeviceMode::Autonomous,
        "telemetric" => DeviceMode::Telemetric,
        "memory" => DeviceMode::Memory,
        "settings" => DeviceMode::Settings,
        _ => return Err(usage(format!("unknown mode {s:?}"))),
    })
}

pub fn parse_step(token: &str) -> CliResult<Step> {
    let (name, arg) = match token.split_once('=') {
        Some((n, a)) => (n, Some(a)),
        None => (token, None),
    };
    let frame = |cmd: Command| Ok(Step::Send(cmd.to_frame().encode().expect("command fits a frame")));
    match (name, arg) {
        ("set-mode", Some(m)) => frame(Command::SetMode(parse_mode(m)?)),
        ("read-record", None) => frame(Command::ReadRecord),
        ("read-mem", Some(a)) => {
            let (start, count) = a.split_once(',').ok_or_else(|| usage("read-mem=<start>,<count>"))?;
            let start = start.trim().parse().map_err(|_| usage(format!("bad start {start:?}")))?;
            let count = count.trim().parse().map_err(|_| usage(format!("bad count {count:?}")))?;
            frame(Command::ReadMem { start, count })
        }
        ("format-mem", None) => frame(Command::FormatMem),
        ("write-settings", None) => frame(Command::WriteSettings(DeviceSettings::default().encode())),
        ("read-settings", None) => frame(Command::ReadSettings),
        ("status", None) => frame(Command::Status),
        ("raw", Some(h)) => {
            let clean: String = h.chars().filter(|c| !c.is_whitespace() && *c != ':').collect();
            hex::decode(clean)
                .map(Step::Send)
                .map_err(|e| CliError::Data(format!("raw bytes: {e}")))
        }
        ("cycle", None) => Ok(Step::Cycles(1)),
        ("cycle", Some(n)) => n.parse().map(Step::Cycles).map_err(|_| usage(format!("bad cycle count {n:?}"))),
        _ => Err(usage(format!("unknown command token {token:?}"))),
    }
}

fn spaced_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02X}")).collect::<Vec<_>>().join(" ")
}

fn describe(frame: &Frame) -> String {
    match Response::from_frame(frame) {
        Some(Response::Settings(block)) => format!("Settings({} bytes)", block.len()),
        Some(Response::MemData { start, records }) => format!("MemData {{ start: {start}, records: {} }}", records.len()),
        Some(r) => format!("{r:?}"),
        None => format!("opcode 0x{:02X}", frame.opcode),
    }
}

pub fn run(steps: &[Step], scenario: &SynthesisScenario, mut out: impl Write) -> CliResult<()> {
    let mut device = Device::power_on(SettingsStore::empty());
    let mut source = SynthesizedSource::new(scenario.clone()).map_err(|e| usage(e.to_string()))?;
    for step in steps {
        match step {
            Step::Send(bytes) => {
                writeln!(out, "> {}", spaced_hex(bytes))?;
                let mut replies = device.receive_bytes(bytes);
                replies.extend(device.line_idle());
                if replies.is_empty() {
                    writeln!(out, "  (no reply; dropped frames so far: {})", device.decoder_stats().bad_crc)?;
                }
                for f in replies {
                    let bytes = f.encode().map_err(|e| CliError::Data(format!("{e:?}")))?;
                    writeln!(out, "< {}", spaced_hex(&bytes))?;
                    writeln!(out, "  {}", describe(&f))?;
                }
            }
            Step::Cycles(n) => {
                for _ in 0..*n {
                    match device.run_cycle(&mut source) {
                        Ok(r) => writeln!(out, "  cycle: seq {} c {:.4} m/s α {:.4} Np/m", r.sequence, r.sound_speed, r.attenuation)?,
                        Err(e) => writeln!(out, "  cycle refused: {e}")?,
                    }
                }
                for f in device.take_outbox() {
                    let bytes = f.encode().map_err(|e| CliError::Data(format!("{e:?}")))?;
                    writeln!(out, "< {}", spaced_hex(&bytes))?;
                    writeln!(out, "  {}", describe(&f))?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        assert_eq!(
            parse_step("set-mode=memory").unwrap(),
            Step::Send(vec![0xA5, 0x01, 0x01, 0x00, 0x02, 0x06, 0xE5])
        );
        assert_eq!(parse_step("raw=A5 07:00 00").unwrap(), Step::Send(vec![0xA5, 7, 0, 0]));
        assert_eq!(parse_step("cycle=3").unwrap(), Step::Cycles(3));
        assert!(matches!(parse_step("set-mode=sleep"), Err(CliError::Usage(_))));
        assert!(matches!(parse_step("read-mem=1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_step("raw=zz"), Err(CliError::Data(_))));
    }

    #[test]
    fn status_exchange() {
        let mut out = Vec::new();
        run(&[parse_step("status").unwrap()], &SynthesisScenario::default(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("> A5 07 00 00 0C 49\n< A5 85 17 00 00 00 08"), "{text}");
    }
}
