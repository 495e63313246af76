//! E2-lite: a small little-endian binary stand-in for E2AP framing.
//!
//! Every frame is a fixed header followed by `payload_len` payload bytes:
//!
//! | offset | size | field          |
//! |--------|------|----------------|
//! | 0      | 4    | magic `E2LT`   |
//! | 4      | 1    | version (1)    |
//! | 5      | 1    | msg_type       |
//! | 6      | 4    | node_id        |
//! | 10     | 8    | timestamp_ms   |
//! | 18     | 4    | payload_len    |

mod codec;
mod endpoint;
mod stream;

pub use codec::{decode_frame, decode_message, encode_message, peek_header, Header};
pub use endpoint::{validate_bindings, wall_timestamp_ms, EndpointBinding, NodeClock};
pub use stream::FrameReader;

use crate::sim::KpmReport;

pub const MAGIC: [u8; 4] = *b"E2LT";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 22;

/// `RicControl` with this UE id closes a control batch for one window.
pub const BARRIER_UE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    SubscriptionRequest = 1,
    SubscriptionAck = 2,
    KpmIndication = 3,
    RicControl = 4,
    ControlAck = 5,
}

impl MsgType {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            1 => MsgType::SubscriptionRequest,
            2 => MsgType::SubscriptionAck,
            3 => MsgType::KpmIndication,
            4 => MsgType::RicControl,
            5 => MsgType::ControlAck,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    SubscriptionRequest { report_period_ms: u32, kpm_names: Vec<String> },
    SubscriptionAck,
    KpmIndication(KpmReport),
    RicControl { ue_id: u32, target_cell_id: u32 },
    ControlAck { ue_id: u32, target_cell_id: u32 },
}

impl Payload {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Payload::SubscriptionRequest { .. } => MsgType::SubscriptionRequest,
            Payload::SubscriptionAck => MsgType::SubscriptionAck,
            Payload::KpmIndication(_) => MsgType::KpmIndication,
            Payload::RicControl { .. } => MsgType::RicControl,
            Payload::ControlAck { .. } => MsgType::ControlAck,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2Message {
    pub node_id: u32,
    pub timestamp_ms: u64,
    pub payload: Payload,
}

impl E2Message {
    pub fn new(node_id: u32, timestamp_ms: u64, payload: Payload) -> Self {
        Self { node_id, timestamp_ms, payload }
    }

    pub fn is_barrier(&self) -> bool {
        matches!(self.payload, Payload::RicControl { ue_id: BARRIER_UE, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum E2Error {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("payload length mismatch: header says {declared}, parsed {parsed}")]
    LengthMismatch { declared: usize, parsed: usize },
    #[error("invalid utf-8 in string field")]
    InvalidUtf8,
    #[error("payload of {0} bytes exceeds the u32 length field")]
    PayloadTooLarge(usize),
    #[error("duplicate port {port} for nodes {first} and {second}")]
    DuplicatePort { port: u16, first: u32, second: u32 },
}
