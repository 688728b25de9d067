//! Memory dump → record table. A dump is a plain concatenation of frames;
//! RECORD, TELEMETRY and MEM_DATA frames contribute records.

use std::io::Write;

use svp_core::device::protocol::{Frame, Response, CRC_LEN, HEADER_LEN, SYNC};
use svp_core::DeviceRecord;

use crate::table::RecordTable;

#[derive(Debug, PartialEq)]
pub enum DumpProblem {
    /// Dump ends inside a frame starting at this offset.
    Truncated { offset: usize },
    /// Damaged or foreign frame at this offset.
    Corrupt { offset: usize, reason: String },
}

impl std::fmt::Display for DumpProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DumpProblem::Truncated { offset } => write!(f, "dump truncated inside the frame at byte {offset}"),
            DumpProblem::Corrupt { offset, reason } => write!(f, "bad frame at byte {offset}: {reason}"),
        }
    }
}

/// Records up to the first problem, and the problem if any.
pub fn parse_dump(bytes: &[u8]) -> (Vec<DeviceRecord>, Option<DumpProblem>) {
    let mut records = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let rest = &bytes[pos..];
        if rest[0] != SYNC {
            let reason = format!("expected sync 0x{SYNC:02X}, found 0x{:02X}", rest[0]);
            return (records, Some(DumpProblem::Corrupt { offset: pos, reason }));
        }
        if rest.len() < HEADER_LEN {
            return (records, Some(DumpProblem::Truncated { offset: pos }));
        }
        let total = HEADER_LEN + u16::from_le_bytes([rest[2], rest[3]]) as usize + CRC_LEN;
        if rest.len() < total {
            return (records, Some(DumpProblem::Truncated { offset: pos }));
        }
        let corrupt = |reason: String| Some(DumpProblem::Corrupt { offset: pos, reason });
        let frame = match Frame::decode(&rest[..total]) {
            Ok(f) => f,
            Err(e) => return (records, corrupt(format!("{e:?}"))),
        };
        match Response::from_frame(&frame) {
            Some(Response::Record(r)) | Some(Response::Telemetry(r)) => records.push(r),
            Some(Response::MemData { records: block, .. }) => records.extend(block),
            _ => return (records, corrupt(format!("opcode 0x{:02X} carries no records", frame.opcode))),
        }
        pos += total;
    }
    (records, None)
}

/// Write the table for `bytes`; returns the problem that stopped parsing.
pub fn run(bytes: &[u8], out: impl Write) -> crate::error::CliResult<Option<DumpProblem>> {
    let (records, problem) = parse_dump(bytes);
    let mut table = RecordTable::new(out)?;
    for r in &records {
        table.push(r)?;
    }
    table.finish()?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use svp_core::RecordFlags;

    fn rec(sequence: u32) -> DeviceRecord {
        DeviceRecord {
            sequence,
            timestamp: sequence as f64 / 18.0,
            sound_speed: 1500.0,
            attenuation: 1.0,
            u_near: 90.0,
            u_far: 80.0,
            temperature: 10.0,
            pressure: 100.0,
            flags: RecordFlags::empty(),
        }
    }

    fn dump(n: u32) -> Vec<u8> {
        (0..n)
            .flat_map(|i| Response::Record(rec(i)).to_frame().encode().unwrap())
            .collect()
    }

    #[test]
    fn whole_dump() {
        let (records, problem) = parse_dump(&dump(4));
        assert_eq!(records.len(), 4);
        assert_eq!(problem, None);
    }

    #[test]
    fn truncated_mid_record() {
        let mut bytes = dump(4);
        bytes.truncate(bytes.len() - 10);
        let (records, problem) = parse_dump(&bytes);
        assert_eq!(records.len(), 3);
        assert!(matches!(problem, Some(DumpProblem::Truncated { .. })));
    }

    #[test]
    fn empty_dump() {
        assert_eq!(parse_dump(&[]), (vec![], None));
    }

    #[test]
    fn corrupt_crc_stops() {
        let mut bytes = dump(3);
        bytes[68 + 8] ^= 0xFF;
        let (records, problem) = parse_dump(&bytes);
        assert_eq!(records.len(), 1);
        assert!(matches!(problem, Some(DumpProblem::Corrupt { offset: 68, .. })));
    }

    #[test]
    fn mem_data_frames_count() {
        let frame = Response::MemData {
            start: 0,
            records: vec![rec(0), rec(1)],
        }
        .to_frame();
        let (records, problem) = parse_dump(&frame.encode().unwrap());
        assert_eq!(records.len(), 2);
        assert_eq!(problem, None);
    }
}
