use thiserror::Error;

use crate::session::wire::FrameError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("numerical integration failed: {0}")]
    Integration(String),

    #[error("record sequences are misaligned: {0}")]
    Misaligned(String),

    #[error("encoder received a zero quadrature at sifted index {0}")]
    ZeroQuadrature(usize),

    #[error("cascade left {remaining} mismatched bits after disclosing {leakage_bits} parities")]
    ResidualMismatch { remaining: usize, leakage_bits: u64 },

    #[error(transparent)]
    Frame(#[from] FrameError),

    #[error("key confirmation hash mismatch")]
    KeyMismatch,

    #[error("peer aborted: {0}")]
    PeerAbort(String),

    #[error("transport failure: {0}")]
    Transport(String),

    #[error("{role:?} in phase {phase:?} cannot accept {kind}")]
    OutOfPhase {
        role: crate::session::Role,
        phase: crate::session::Phase,
        kind: crate::session::wire::MessageKind,
    },

    #[error("malformed {kind:?} payload: {reason}")]
    Payload {
        kind: crate::session::wire::MessageKind,
        reason: String,
    },

    #[error("config line {line}: {key}: {reason}")]
    Config {
        line: usize,
        key: String,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }
}
