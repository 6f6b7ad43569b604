//! Wire formats: the binary controller link and the line-delimited JSON
//! messages exchanged with the control UI.

pub mod ui;
pub mod wire;

pub use ui::{decode_ui, encode_ui, SegmentSummary, SimCommand, UiError, UiMessage};
pub use wire::{crc8, decode, encode, ControlFrame, DecodeError, FrameDecoder, ProtocolError, SYNC};
