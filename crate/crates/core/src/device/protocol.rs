//! Framed host/device wire protocol.
//!
//! ```text
//! +------+--------+-------------+-----------------+-------------+
//! | 0xA5 | opcode | length (LE) | payload         | CRC-16 (LE) |
//! | 1 B  | 1 B    | 2 B         | `length` bytes  | 2 B         |
//! +------+--------+-------------+-----------------+-------------+
//! ```
//!
//! The CRC is CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection,
//! no final xor) over opcode, length and payload. See `docs/protocol.md`.

use crc::{Crc, CRC_16_IBM_3740};

use super::DeviceMode;
use crate::record::DeviceRecord;

pub const SYNC: u8 = 0xA5;
pub const HEADER_LEN: usize = 4;
pub const CRC_LEN: usize = 2;
pub const MAX_PAYLOAD: usize = u16::MAX as usize;

/// Records that fit in one MEM_DATA payload after its 4-byte start index.
pub const MAX_RECORDS_PER_FRAME: usize = (MAX_PAYLOAD - 4) / DeviceRecord::ENCODED_LEN;

// CRC-16/IBM-3740 is the catalogue name of CRC-16/CCITT-FALSE.
const CRC16: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

pub fn crc16(data: &[u8]) -> u16 {
    CRC16.checksum(data)
}

pub mod opcode {
    pub const SET_MODE: u8 = 0x01;
    pub const READ_RECORD: u8 = 0x02;
    pub const READ_MEM: u8 = 0x03;
    pub const FORMAT_MEM: u8 = 0x04;
    pub const WRITE_SETTINGS: u8 = 0x05;
    pub const READ_SETTINGS: u8 = 0x06;
    pub const STATUS: u8 = 0x07;

    pub const ACK: u8 = 0x80;
    pub const NAK: u8 = 0x81;
    pub const RECORD: u8 = 0x82;
    pub const MEM_DATA: u8 = 0x83;
    pub const SETTINGS: u8 = 0x84;
    pub const STATUS_REPORT: u8 = 0x85;
    pub const TELEMETRY: u8 = 0x86;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub opcode: u8,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("frame shorter than header and CRC")]
    Short,
    #[error("missing 0xA5 sync byte")]
    Sync,
    #[error("length field disagrees with frame size")]
    Length,
    #[error("CRC mismatch: frame carries {carried:#06x}, computed {computed:#06x}")]
    Crc { carried: u16, computed: u16 },
    #[error("payload of {0} bytes exceeds the 65535-byte limit")]
    TooLong(usize),
}

impl Frame {
    pub fn new(opcode: u8, payload: Vec<u8>) -> Self {
        Frame { opcode, payload }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len() + CRC_LEN
    }

    pub fn encode(&self) -> Result<Vec<u8>, FrameError> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(FrameError::TooLong(self.payload.len()));
        }
        let mut out = Vec::with_capacity(self.encoded_len());
        out.push(SYNC);
        out.push(self.opcode);
        out.extend_from_slice(&(self.payload.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.payload);
        let crc = crc16(&out[1..]);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    /// Parse exactly one frame occupying all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < HEADER_LEN + CRC_LEN {
            return Err(FrameError::Short);
        }
        if bytes[0] != SYNC {
            return Err(FrameError::Sync);
        }
        let len = u16::from_le_bytes([bytes[2], bytes[3]]) as usize;
        if bytes.len() != HEADER_LEN + len + CRC_LEN {
            return Err(FrameError::Length);
        }
        let body_end = HEADER_LEN + len;
        let carried = u16::from_le_bytes([bytes[body_end], bytes[body_end + 1]]);
        let computed = crc16(&bytes[1..body_end]);
        if carried != computed {
            return Err(FrameError::Crc { carried, computed });
        }
        Ok(Frame {
            opcode: bytes[1],
            payload: bytes[HEADER_LEN..body_end].to_vec(),
        })
    }
}

/// Counters kept by [`FrameDecoder`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecoderStats {
    pub frames: u64,
    pub bad_crc: u64,
    pub oversize: u64,
    pub skipped_bytes: u64,
}

/// Incremental frame parser for a byte stream. Bytes before a sync byte are
/// skipped; a frame with a bad CRC or an oversize length is dropped one byte
/// at a time so the decoder resynchronizes on the next sync byte.
#[derive(Debug, Clone)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    max_payload: usize,
    stats: DecoderStats,
}

impl Default for FrameDecoder {
    fn default() -> Self {
        Self::new(MAX_PAYLOAD)
    }
}

impl FrameDecoder {
    pub fn new(max_payload: usize) -> Self {
        FrameDecoder {
            buf: Vec::new(),
            max_payload: max_payload.min(MAX_PAYLOAD),
            stats: DecoderStats::default(),
        }
    }

    pub fn stats(&self) -> DecoderStats {
        self.stats
    }

    /// Bytes held while waiting for the rest of a frame.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    pub fn push(&mut self, bytes: &[u8]) -> Vec<Frame> {
        self.buf.extend_from_slice(bytes);
        let mut frames = Vec::new();
        let mut pos = 0;
        loop {
            match self.buf[pos..].iter().position(|&b| b == SYNC) {
                Some(skip) => {
                    self.stats.skipped_bytes += skip as u64;
                    pos += skip;
                }
                None => {
                    self.stats.skipped_bytes += (self.buf.len() - pos) as u64;
                    pos = self.buf.len();
                    break;
                }
            }
            let rest = &self.buf[pos..];
            if rest.len() < HEADER_LEN {
                break;
            }
            let len = u16::from_le_bytes([rest[2], rest[3]]) as usize;
            if len > self.max_payload {
                self.stats.oversize += 1;
                pos += 1;
                continue;
            }
            let total = HEADER_LEN + len + CRC_LEN;
            if rest.len() < total {
                break;
            }
            match Frame::decode(&rest[..total]) {
                Ok(frame) => {
                    self.stats.frames += 1;
                    frames.push(frame);
                    pos += total;
                }
                Err(_) => {
                    self.stats.bad_crc += 1;
                    pos += 1;
                }
            }
        }
        self.buf.drain(..pos);
        frames
    }

    /// The line went idle: whatever is held cannot complete. Drop the held
    /// sync byte and rescan the rest, repeatedly, returning any whole frames
    /// that were hiding behind a false sync.
    pub fn idle(&mut self) -> Vec<Frame> {
        let mut frames = Vec::new();
        while !self.buf.is_empty() {
            self.buf.remove(0);
            self.stats.skipped_bytes += 1;
            frames.extend(self.push(&[]));
        }
        frames
    }
}

/// Negative acknowledgement reasons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum NakCode {
    UnknownOpcode = 0x01,
    WrongMode = 0x02,
    BadPayload = 0x03,
    NoData = 0x04,
}

impl NakCode {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0x01 => NakCode::UnknownOpcode,
            0x02 => NakCode::WrongMode,
            0x03 => NakCode::BadPayload,
            0x04 => NakCode::NoData,
            _ => return None,
        })
    }
}

/// Host-to-device commands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    SetMode(DeviceMode),
    ReadRecord,
    ReadMem { start: u32, count: u16 },
    FormatMem,
    WriteSettings(Vec<u8>),
    ReadSettings,
    Status,
}

impl Command {
    pub fn to_frame(&self) -> Frame {
        use opcode::*;
        match self {
            Command::SetMode(mode) => Frame::new(SET_MODE, vec![*mode as u8]),
            Command::ReadRecord => Frame::new(READ_RECORD, vec![]),
            Command::ReadMem { start, count } => {
                let mut p = start.to_le_bytes().to_vec();
                p.extend_from_slice(&count.to_le_bytes());
                Frame::new(READ_MEM, p)
            }
            Command::FormatMem => Frame::new(FORMAT_MEM, vec![]),
            Command::WriteSettings(bytes) => Frame::new(WRITE_SETTINGS, bytes.clone()),
            Command::ReadSettings => Frame::new(READ_SETTINGS, vec![]),
            Command::Status => Frame::new(STATUS, vec![]),
        }
    }

    pub fn from_frame(frame: &Frame) -> Result<Self, NakCode> {
        use opcode::*;
        let p = &frame.payload;
        let empty = |cmd: Command| if p.is_empty() { Ok(cmd) } else { Err(NakCode::BadPayload) };
        match frame.opcode {
            SET_MODE => match p.as_slice() {
                [m] => DeviceMode::from_u8(*m).map(Command::SetMode).ok_or(NakCode::BadPayload),
                _ => Err(NakCode::BadPayload),
            },
            READ_RECORD => empty(Command::ReadRecord),
            READ_MEM => match p.as_slice() {
                [a, b, c, d, e, f] => Ok(Command::ReadMem {
                    start: u32::from_le_bytes([*a, *b, *c, *d]),
                    count: u16::from_le_bytes([*e, *f]),
                }),
                _ => Err(NakCode::BadPayload),
            },
            FORMAT_MEM => empty(Command::FormatMem),
            WRITE_SETTINGS => Ok(Command::WriteSettings(p.clone())),
            READ_SETTINGS => empty(Command::ReadSettings),
            STATUS => empty(Command::Status),
            _ => Err(NakCode::UnknownOpcode),
        }
    }
}

/// Device status snapshot carried by STATUS_REPORT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatusReport {
    pub mode: DeviceMode,
    /// Bit 0: stored settings were corrupt and defaults were loaded.
    pub status_flags: u8,
    pub threshold_mv: u8,
    pub stored_records: u32,
    pub next_sequence: u32,
    pub bad_crc: u32,
    pub cycles: u64,
}

impl StatusReport {
    pub const ENCODED_LEN: usize = 3 + 4 + 4 + 4 + 8;
    pub const CORRUPT_SETTINGS: u8 = 0x01;

    pub fn encode(&self) -> Vec<u8> {
        let mut p = vec![self.mode as u8, self.status_flags, self.threshold_mv];
        p.extend_from_slice(&self.stored_records.to_le_bytes());
        p.extend_from_slice(&self.next_sequence.to_le_bytes());
        p.extend_from_slice(&self.bad_crc.to_le_bytes());
        p.extend_from_slice(&self.cycles.to_le_bytes());
        p
    }

    pub fn decode(p: &[u8]) -> Option<Self> {
        if p.len() != Self::ENCODED_LEN {
            return None;
        }
        let u32_at = |i: usize| u32::from_le_bytes(p[i..i + 4].try_into().unwrap());
        Some(StatusReport {
            mode: DeviceMode::from_u8(p[0])?,
            status_flags: p[1],
            threshold_mv: p[2],
            stored_records: u32_at(3),
            next_sequence: u32_at(7),
            bad_crc: u32_at(11),
            cycles: u64::from_le_bytes(p[15..23].try_into().unwrap()),
        })
    }
}

/// Device-to-host frames.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Ack { opcode: u8 },
    Nak { opcode: u8, code: NakCode },
    Record(DeviceRecord),
    MemData { start: u32, records: Vec<DeviceRecord> },
    Settings(Vec<u8>),
    Status(StatusReport),
    Telemetry(DeviceRecord),
}

impl Response {
    pub fn to_frame(&self) -> Frame {
        use opcode::*;
        match self {
            Response::Ack { opcode } => Frame::new(ACK, vec![*opcode]),
            Response::Nak { opcode, code } => Frame::new(NAK, vec![*opcode, *code as u8]),
            Response::Record(r) => Frame::new(RECORD, r.encode().to_vec()),
            Response::MemData { start, records } => {
                let mut p = Vec::with_capacity(4 + records.len() * DeviceRecord::ENCODED_LEN);
                p.extend_from_slice(&start.to_le_bytes());
                for r in records {
                    p.extend_from_slice(&r.encode());
                }
                Frame::new(MEM_DATA, p)
            }
            Response::Settings(bytes) => Frame::new(SETTINGS, bytes.clone()),
            Response::Status(s) => Frame::new(STATUS_REPORT, s.encode()),
            Response::Telemetry(r) => Frame::new(TELEMETRY, r.encode().to_vec()),
        }
    }

    pub fn from_frame(frame: &Frame) -> Option<Self> {
        use opcode::*;
        let p = &frame.payload;
        Some(match frame.opcode {
            ACK => match p.as_slice() {
                [op] => Response::Ack { opcode: *op },
                _ => return None,
            },
            NAK => match p.as_slice() {
                [op, code] => Response::Nak {
                    opcode: *op,
                    code: NakCode::from_u8(*code)?,
                },
                _ => return None,
            },
            RECORD => Response::Record(DeviceRecord::decode(p).ok()?),
            TELEMETRY => Response::Telemetry(DeviceRecord::decode(p).ok()?),
            MEM_DATA => {
                if p.len() < 4 || !(p.len() - 4).is_multiple_of(DeviceRecord::ENCODED_LEN) {
                    return None;
                }
                let start = u32::from_le_bytes(p[0..4].try_into().unwrap());
                let records = p[4..]
                    .chunks_exact(DeviceRecord::ENCODED_LEN)
                    .map(DeviceRecord::decode)
                    .collect::<Result<Vec<_>, _>>()
                    .ok()?;
                Response::MemData { start, records }
            }
            SETTINGS => Response::Settings(p.clone()),
            STATUS_REPORT => Response::Status(StatusReport::decode(p)?),
            _ => return None,
        })
    }
}
