//! Controller link framing.
//!
//! ```text
//! +------+-----+-----+-----------+-----+
//! | 0xA5 | len | cmd | payload.. | crc |
//! +------+-----+-----+-----------+-----+
//! ```
//!
//! `len` counts `cmd` plus payload bytes. Integers are little-endian: step
//! counts are `i16`, speeds `u16`. The CRC-8 (polynomial 0x07, initial value
//! 0, MSB first, no reflection) covers `len` through the last payload byte.

use thiserror::Error;

pub const SYNC: u8 = 0xA5;
/// Longest `len` any command uses.
pub const MAX_LEN: u8 = 6;
pub const MOTOR_COUNT: u8 = 3;

const CMD_MOVE_ABS: u8 = 0x01;
const CMD_MOVE_REL: u8 = 0x02;
const CMD_STOP: u8 = 0x03;
const CMD_SET_PROFILE: u8 = 0x04;
const CMD_LED_SET: u8 = 0x05;
const CMD_STATUS_REQ: u8 = 0x06;
const CMD_STATUS: u8 = 0x86;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlFrame {
    MoveAbs { motor: u8, steps: i16 },
    MoveRel { motor: u8, steps: i16 },
    Stop { motor: u8 },
    SetProfile { motor: u8, v_min: u16, v_max: u16 },
    /// Bit 0 power, 1 command window, 2 follow, 3 blackboard, 4 canvas.
    LedSet { mask: u8 },
    StatusReq { motor: u8 },
    Status { motor: u8, position: i16, state: u8 },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("motor {0} out of range")]
    BadMotor(u8),
    #[error("led mask {0:#04x} uses undefined bits")]
    BadMask(u8),
    #[error("profile speeds {v_min}..{v_max} invalid")]
    BadSpeeds { v_min: u16, v_max: u16 },
    #[error("motor state {0} undefined")]
    BadState(u8),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("crc mismatch: computed {computed:#04x}, received {received:#04x}")]
    Crc { computed: u8, received: u8 },
    #[error("unknown command {0:#04x}")]
    UnknownCommand(u8),
    #[error("command {cmd:#04x} with length {len}")]
    BadLength { cmd: u8, len: u8 },
    #[error(transparent)]
    Invalid(#[from] ProtocolError),
    #[error("incomplete frame")]
    Incomplete,
    #[error("{0} trailing bytes after frame")]
    Trailing(usize),
}

const CRC_TABLE: [u8; 256] = {
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u8;
        let mut b = 0;
        while b < 8 {
            c = if c & 0x80 != 0 { (c << 1) ^ 0x07 } else { c << 1 };
            b += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
};

pub fn crc8(data: &[u8]) -> u8 {
    data.iter().fold(0u8, |crc, &b| CRC_TABLE[(crc ^ b) as usize])
}

impl ControlFrame {
    pub fn command(&self) -> u8 {
        match self {
            ControlFrame::MoveAbs { .. } => CMD_MOVE_ABS,
            ControlFrame::MoveRel { .. } => CMD_MOVE_REL,
            ControlFrame::Stop { .. } => CMD_STOP,
            ControlFrame::SetProfile { .. } => CMD_SET_PROFILE,
            ControlFrame::LedSet { .. } => CMD_LED_SET,
            ControlFrame::StatusReq { .. } => CMD_STATUS_REQ,
            ControlFrame::Status { .. } => CMD_STATUS,
        }
    }

    pub fn motor(&self) -> Option<u8> {
        match *self {
            ControlFrame::MoveAbs { motor, .. }
            | ControlFrame::MoveRel { motor, .. }
            | ControlFrame::Stop { motor }
            | ControlFrame::SetProfile { motor, .. }
            | ControlFrame::StatusReq { motor }
            | ControlFrame::Status { motor, .. } => Some(motor),
            ControlFrame::LedSet { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if let Some(m) = self.motor() {
            if m >= MOTOR_COUNT {
                return Err(ProtocolError::BadMotor(m));
            }
        }
        match *self {
            ControlFrame::LedSet { mask } if mask & !0x1F != 0 => Err(ProtocolError::BadMask(mask)),
            ControlFrame::SetProfile { v_min, v_max, .. } if v_min == 0 || v_max < v_min => {
                Err(ProtocolError::BadSpeeds { v_min, v_max })
            }
            ControlFrame::Status { state, .. } if state > 3 => Err(ProtocolError::BadState(state)),
            _ => Ok(()),
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut p = Vec::with_capacity(5);
        match *self {
            ControlFrame::MoveAbs { motor, steps } | ControlFrame::MoveRel { motor, steps } => {
                p.push(motor);
                p.extend_from_slice(&steps.to_le_bytes());
            }
            ControlFrame::Stop { motor } | ControlFrame::StatusReq { motor } => p.push(motor),
            ControlFrame::SetProfile { motor, v_min, v_max } => {
                p.push(motor);
                p.extend_from_slice(&v_min.to_le_bytes());
                p.extend_from_slice(&v_max.to_le_bytes());
            }
            ControlFrame::LedSet { mask } => p.push(mask),
            ControlFrame::Status { motor, position, state } => {
                p.push(motor);
                p.extend_from_slice(&position.to_le_bytes());
                p.push(state);
            }
        }
        p
    }
}

fn payload_len(cmd: u8) -> Option<usize> {
    match cmd {
        CMD_MOVE_ABS | CMD_MOVE_REL => Some(3),
        CMD_STOP | CMD_LED_SET | CMD_STATUS_REQ => Some(1),
        CMD_SET_PROFILE => Some(5),
        CMD_STATUS => Some(4),
        _ => None,
    }
}

fn parse_body(cmd: u8, p: &[u8]) -> Result<ControlFrame, DecodeError> {
    let i16_at = |i: usize| i16::from_le_bytes([p[i], p[i + 1]]);
    let u16_at = |i: usize| u16::from_le_bytes([p[i], p[i + 1]]);
    let frame = match cmd {
        CMD_MOVE_ABS => ControlFrame::MoveAbs { motor: p[0], steps: i16_at(1) },
        CMD_MOVE_REL => ControlFrame::MoveRel { motor: p[0], steps: i16_at(1) },
        CMD_STOP => ControlFrame::Stop { motor: p[0] },
        CMD_SET_PROFILE => ControlFrame::SetProfile { motor: p[0], v_min: u16_at(1), v_max: u16_at(3) },
        CMD_LED_SET => ControlFrame::LedSet { mask: p[0] },
        CMD_STATUS_REQ => ControlFrame::StatusReq { motor: p[0] },
        CMD_STATUS => ControlFrame::Status { motor: p[0], position: i16_at(1), state: p[3] },
        other => return Err(DecodeError::UnknownCommand(other)),
    };
    frame.validate()?;
    Ok(frame)
}

/// Serializes a frame. Fails only for frames that violate the field ranges.
pub fn encode(frame: &ControlFrame) -> Result<Vec<u8>, ProtocolError> {
    frame.validate()?;
    let payload = frame.payload();
    let mut out = Vec::with_capacity(payload.len() + 4);
    out.push(SYNC);
    out.push(payload.len() as u8 + 1);
    out.push(frame.command());
    out.extend_from_slice(&payload);
    out.push(crc8(&out[1..]));
    Ok(out)
}

/// Decodes exactly one frame occupying the whole slice.
pub fn decode(bytes: &[u8]) -> Result<ControlFrame, DecodeError> {
    let mut dec = FrameDecoder::new();
    dec.push(bytes);
    let frame = dec.next_frame().ok_or(DecodeError::Incomplete)??;
    match dec.buffered() {
        0 => Ok(frame),
        n => Err(DecodeError::Trailing(n)),
    }
}

/// Streaming decoder. Bytes before a sync byte are skipped; a sync byte
/// that does not start a frame with a valid length and CRC is skipped on its
/// own so that a real frame starting inside the bad one is still found.
#[derive(Debug, Default, Clone)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    skipped: usize,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Bytes discarded while hunting for sync.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    fn discard(&mut self, n: usize) {
        self.buf.drain(..n);
    }

    /// Next frame or framing error, or `None` when more bytes are needed.
    pub fn next_frame(&mut self) -> Option<Result<ControlFrame, DecodeError>> {
        loop {
            match self.buf.iter().position(|&b| b == SYNC) {
                Some(0) => {}
                Some(n) => {
                    self.skipped += n;
                    self.discard(n);
                }
                None => {
                    self.skipped += self.buf.len();
                    self.buf.clear();
                    return None;
                }
            }
            let len = *self.buf.get(1)?;
            if len == 0 || len > MAX_LEN {
                self.skipped += 1;
                self.discard(1);
                continue;
            }
            let total = len as usize + 3;
            if self.buf.len() < total {
                return None;
            }
            let computed = crc8(&self.buf[1..total - 1]);
            let received = self.buf[total - 1];
            if computed != received {
                self.skipped += 1;
                self.discard(1);
                return Some(Err(DecodeError::Crc { computed, received }));
            }
            let cmd = self.buf[2];
            let result = match payload_len(cmd) {
                None => Err(DecodeError::UnknownCommand(cmd)),
                Some(n) if n + 1 != len as usize => Err(DecodeError::BadLength { cmd, len }),
                Some(_) => parse_body(cmd, &self.buf[3..total - 1]),
            };
            self.discard(total);
            return Some(result);
        }
    }

    /// Drains every complete frame currently buffered.
    pub fn drain(&mut self) -> Vec<Result<ControlFrame, DecodeError>> {
        std::iter::from_fn(|| self.next_frame()).collect()
    }
}
