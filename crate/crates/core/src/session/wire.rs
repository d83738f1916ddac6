//! Framing: `len: u32 BE ‖ kind: u8 ‖ payload`, where `len` counts the kind
//! byte and the payload. Multi-byte integers and binary64 floats inside
//! payloads are big-endian.

use std::fmt;

use thiserror::Error;

use crate::distill::cascade::BlockRef;
use crate::distill::{pack_bits, unpack_bits};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    BasisBatch = 0x01,
    SiftKeep = 0x02,
    AbsVals = 0x03,
    PsKeep = 0x04,
    CascadeParityReq = 0x05,
    CascadeParityResp = 0x06,
    PaSeed = 0x07,
    KeyHash = 0x08,
    Abort = 0x09,
}

impl MessageKind {
    pub const ALL: [MessageKind; 9] = [
        MessageKind::BasisBatch,
        MessageKind::SiftKeep,
        MessageKind::AbsVals,
        MessageKind::PsKeep,
        MessageKind::CascadeParityReq,
        MessageKind::CascadeParityResp,
        MessageKind::PaSeed,
        MessageKind::KeyHash,
        MessageKind::Abort,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::BasisBatch => "BASIS_BATCH",
            MessageKind::SiftKeep => "SIFT_KEEP",
            MessageKind::AbsVals => "ABS_VALS",
            MessageKind::PsKeep => "PS_KEEP",
            MessageKind::CascadeParityReq => "CASCADE_PARITY_REQ",
            MessageKind::CascadeParityResp => "CASCADE_PARITY_RESP",
            MessageKind::PaSeed => "PA_SEED",
            MessageKind::KeyHash => "KEY_HASH",
            MessageKind::Abort => "ABORT",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageKind,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn new(kind: MessageKind, payload: Vec<u8>) -> Self {
        Self { kind, payload }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("unknown message kind 0x{0:02x}")]
    UnknownKind(u8),
    #[error("declared length {declared} but {actual} bytes follow the header")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("declared length 0 leaves no room for the kind byte")]
    Empty,
    #[error("payload of {0} bytes does not fit a frame")]
    Oversize(usize),
}

pub const HEADER_LEN: usize = 4;

pub fn frame_encode(msg: &Message) -> std::result::Result<Vec<u8>, FrameError> {
    let len = u32::try_from(msg.payload.len() + 1).map_err(|_| FrameError::Oversize(msg.payload.len()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + len as usize);
    out.extend_from_slice(&len.to_be_bytes());
    out.push(msg.kind.code());
    out.extend_from_slice(&msg.payload);
    Ok(out)
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn frame_decode(bytes: &[u8]) -> std::result::Result<Message, FrameError> {
    if bytes.len() < HEADER_LEN {
        return Err(FrameError::Truncated {
            needed: HEADER_LEN,
            have: bytes.len(),
        });
    }
    let declared = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
    let body = &bytes[HEADER_LEN..];
    if declared == 0 {
        return Err(FrameError::Empty);
    }
    if body.len() != declared {
        return Err(FrameError::LengthMismatch {
            declared,
            actual: body.len(),
        });
    }
    let kind = MessageKind::from_code(body[0]).ok_or(FrameError::UnknownKind(body[0]))?;
    Ok(Message {
        kind,
        payload: body[1..].to_vec(),
    })
}

/// Splits a concatenation of frames.
pub fn split_frames(mut bytes: &[u8]) -> std::result::Result<Vec<Message>, FrameError> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        if bytes.len() < HEADER_LEN {
            return Err(FrameError::Truncated {
                needed: HEADER_LEN,
                have: bytes.len(),
            });
        }
        let len = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
        let total = HEADER_LEN + len;
        if bytes.len() < total {
            return Err(FrameError::Truncated {
                needed: total,
                have: bytes.len(),
            });
        }
        out.push(frame_decode(&bytes[..total])?);
        bytes = &bytes[total..];
    }
    Ok(out)
}

struct Reader<'a> {
    kind: MessageKind,
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(msg: &'a Message, expected: MessageKind) -> Result<Self> {
        if msg.kind != expected {
            return Err(Error::Payload {
                kind: expected,
                reason: format!("got a {} message", msg.kind),
            });
        }
        Ok(Self {
            kind: msg.kind,
            buf: &msg.payload,
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Payload {
                kind: self.kind,
                reason: format!("needed {n} more bytes, {} left", self.buf.len()),
            });
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn bits(&mut self) -> Result<Vec<bool>> {
        let n = self.u32()? as usize;
        let bytes = self.take(n.div_ceil(8))?;
        Ok(unpack_bits(bytes, n))
    }

    fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::Payload {
                kind: self.kind,
                reason: format!("{} trailing bytes", self.buf.len()),
            })
        }
    }
}

fn put_bits(out: &mut Vec<u8>, bits: &[bool]) {
    out.extend_from_slice(&(bits.len() as u32).to_be_bytes());
    out.extend_from_slice(&pack_bits(bits));
}

/// Alice's per-block basis choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisBatch {
    pub n_symbols: u64,
    pub block_len: u32,
    pub bases: Vec<u8>,
}

impl BasisBatch {
    pub fn encode(&self) -> Message {
        let mut p = Vec::with_capacity(16 + self.bases.len());
        p.extend_from_slice(&self.n_symbols.to_be_bytes());
        p.extend_from_slice(&self.block_len.to_be_bytes());
        p.extend_from_slice(&(self.bases.len() as u32).to_be_bytes());
        p.extend_from_slice(&self.bases);
        Message::new(MessageKind::BasisBatch, p)
    }

    pub fn decode(msg: &Message) -> Result<Self> {
        let mut r = Reader::new(msg, MessageKind::BasisBatch)?;
        let n_symbols = r.u64()?;
        let block_len = r.u32()?;
        let count = r.u32()? as usize;
        let bases = r.take(count)?.to_vec();
        r.finish()?;
        Ok(Self {
            n_symbols,
            block_len,
            bases,
        })
    }
}

/// A bit mask: SIFT_KEEP over blocks, PS_KEEP over sifted symbols.
pub fn encode_mask(kind: MessageKind, mask: &[bool]) -> Message {
    let mut p = Vec::new();
    put_bits(&mut p, mask);
    Message::new(kind, p)
}

pub fn decode_mask(msg: &Message, kind: MessageKind) -> Result<Vec<bool>> {
    let mut r = Reader::new(msg, kind)?;
    let bits = r.bits()?;
    r.finish()?;
    Ok(bits)
}

pub fn encode_abs_vals(values: &[f64]) -> Message {
    let mut p = Vec::with_capacity(4 + 8 * values.len());
    p.extend_from_slice(&(values.len() as u32).to_be_bytes());
    for v in values {
        p.extend_from_slice(&v.to_be_bytes());
    }
    Message::new(MessageKind::AbsVals, p)
}

pub fn decode_abs_vals(msg: &Message) -> Result<Vec<f64>> {
    let mut r = Reader::new(msg, MessageKind::AbsVals)?;
    let n = r.u32()? as usize;
    let vals = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(vals)
}

pub fn encode_parity_req(queries: &[BlockRef]) -> Message {
    let mut p = Vec::with_capacity(4 + 9 * queries.len());
    p.extend_from_slice(&(queries.len() as u32).to_be_bytes());
    for q in queries {
        p.push(q.pass);
        p.extend_from_slice(&q.start.to_be_bytes());
        p.extend_from_slice(&q.end.to_be_bytes());
    }
    Message::new(MessageKind::CascadeParityReq, p)
}

pub fn decode_parity_req(msg: &Message) -> Result<Vec<BlockRef>> {
    let mut r = Reader::new(msg, MessageKind::CascadeParityReq)?;
    let n = r.u32()? as usize;
    let qs = (0..n)
        .map(|_| {
            Ok(BlockRef {
                pass: r.u8()?,
                start: r.u32()?,
                end: r.u32()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(qs)
}

pub fn encode_parity_resp(parities: &[bool]) -> Message {
    encode_mask(MessageKind::CascadeParityResp, parities)
}

pub fn decode_parity_resp(msg: &Message) -> Result<Vec<bool>> {
    decode_mask(msg, MessageKind::CascadeParityResp)
}

/// Hash seed and final key length chosen by Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaSeed {
    pub seed: u64,
    pub key_len: u64,
}

impl PaSeed {
    pub fn encode(&self) -> Message {
        let mut p = Vec::with_capacity(16);
        p.extend_from_slice(&self.seed.to_be_bytes());
        p.extend_from_slice(&self.key_len.to_be_bytes());
        Message::new(MessageKind::PaSeed, p)
    }

    pub fn decode(msg: &Message) -> Result<Self> {
        let mut r = Reader::new(msg, MessageKind::PaSeed)?;
        let out = Self {
            seed: r.u64()?,
            key_len: r.u64()?,
        };
        r.finish()?;
        Ok(out)
    }
}

/// Key-confirmation tag and the seed that selected the hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyHash {
    pub seed: u64,
    pub tag: [u8; 16],
}

impl KeyHash {
    pub fn encode(&self) -> Message {
        let mut p = Vec::with_capacity(24);
        p.extend_from_slice(&self.seed.to_be_bytes());
        p.extend_from_slice(&self.tag);
        Message::new(MessageKind::KeyHash, p)
    }

    pub fn decode(msg: &Message) -> Result<Self> {
        let mut r = Reader::new(msg, MessageKind::KeyHash)?;
        let seed = r.u64()?;
        let tag = r.take(16)?.try_into().expect("16 bytes");
        r.finish()?;
        Ok(Self { seed, tag })
    }
}

pub fn encode_abort(reason: &str) -> Message {
    Message::new(MessageKind::Abort, reason.as_bytes().to_vec())
}

pub fn decode_abort(msg: &Message) -> Result<String> {
    let r = Reader::new(msg, MessageKind::Abort)?;
    Ok(String::from_utf8_lossy(r.buf).into_owned())
}
