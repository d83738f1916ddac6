//! Alice and Bob as two state machines talking over a framed public channel.
//!
//! ```text
//! Alice                          Bob
//!   BASIS_BATCH         ──▶
//!                       ◀──      SIFT_KEEP
//!   ABS_VALS            ──▶
//!                       ◀──      PS_KEEP
//!                       ◀──      CASCADE_PARITY_REQ   ┐ repeated
//!   CASCADE_PARITY_RESP ──▶                           ┘
//!                       ◀──      PA_SEED
//!   KEY_HASH            ──▶
//!                       ◀──      KEY_HASH | ABORT
//! ```

mod party;
pub mod transport;
pub mod wire;

pub use party::{run_session, Fault, PartyData, SessionConfig, SessionOutcome};
pub use transport::{MemoryTransport, StreamTransport, Transport};

use wire::{decode_parity_resp, frame_decode, MessageKind};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Measuring,
    Sifting,
    PostSelecting,
    Reconciling,
    Amplifying,
    Done,
    Aborted,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::Measuring,
        Phase::Sifting,
        Phase::PostSelecting,
        Phase::Reconciling,
        Phase::Amplifying,
        Phase::Done,
        Phase::Aborted,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Done | Phase::Aborted)
    }
}

/// Whether `role` may receive a `kind` message while in `phase`.
pub fn accepts(role: Role, phase: Phase, kind: MessageKind) -> bool {
    use MessageKind as K;
    use Phase as P;
    if phase.is_terminal() {
        return false;
    }
    if kind == K::Abort {
        return true;
    }
    match role {
        Role::Alice => matches!(
            (phase, kind),
            (P::Sifting, K::SiftKeep)
                | (P::PostSelecting, K::PsKeep)
                | (P::Reconciling, K::CascadeParityReq)
                | (P::Reconciling, K::PaSeed)
                | (P::Amplifying, K::KeyHash)
        ),
        Role::Bob => matches!(
            (phase, kind),
            (P::Sifting, K::BasisBatch)
                | (P::PostSelecting, K::AbsVals)
                | (P::Reconciling, K::CascadeParityResp)
                | (P::Amplifying, K::KeyHash)
        ),
    }
}

/// A party's protocol position and traffic counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionState {
    pub role: Role,
    pub phase: Phase,
    pub bytes_sent: u64,
    pub bytes_received: u64,
}

impl SessionState {
    pub fn new(role: Role) -> Self {
        Self {
            role,
            phase: Phase::Measuring,
            bytes_sent: 0,
            bytes_received: 0,
        }
    }

    /// Moves forward; phases never go back and terminal phases are final.
    pub fn advance(&mut self, next: Phase) {
        debug_assert!(!self.phase.is_terminal() && next > self.phase, "{:?} -> {next:?}", self.phase);
        self.phase = next;
    }

    pub fn check(&self, kind: MessageKind) -> Result<()> {
        if accepts(self.role, self.phase, kind) {
            Ok(())
        } else {
            Err(Error::OutOfPhase {
                role: self.role,
                phase: self.phase,
                kind,
            })
        }
    }

    pub fn transcript_bytes(&self) -> u64 {
        self.bytes_sent + self.bytes_received
    }
}

/// One frame on the public channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub from: Role,
    pub frame: Vec<u8>,
}

/// What the public channel revealed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LeakageReport {
    pub frames: usize,
    pub bytes: u64,
    /// Cascade parities answered by Alice; these feed privacy amplification.
    pub parity_bits: u64,
    /// `|Y_A|` values announced. They are public by design and already
    /// accounted for in Eve's per-symbol bound.
    pub public_magnitudes: u64,
    pub aborted: bool,
}

/// Audits a transcript for disclosed information.
pub fn transcript_leakage(transcript: &[TranscriptEntry]) -> Result<LeakageReport> {
    let mut r = LeakageReport::default();
    for e in transcript {
        r.frames += 1;
        r.bytes += e.frame.len() as u64;
        let msg = frame_decode(&e.frame)?;
        match msg.kind {
            MessageKind::CascadeParityResp => r.parity_bits += decode_parity_resp(&msg)?.len() as u64,
            MessageKind::AbsVals => r.public_magnitudes += wire::decode_abs_vals(&msg)?.len() as u64,
            MessageKind::Abort => r.aborted = true,
            _ => {}
        }
    }
    Ok(r)
}

/// Concatenated raw frames, the transcript dump format.
pub fn transcript_bytes(transcript: &[TranscriptEntry]) -> Vec<u8> {
    transcript.iter().flat_map(|e| e.frame.iter().copied()).collect()
}
