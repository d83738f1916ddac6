//! Classical post-processing: sifting, post-selection, sign encoding,
//! Cascade reconciliation, privacy amplification and stage accounting.

pub mod accounting;
pub mod cascade;
pub mod encode;
pub mod pipeline;
pub mod postselect;
pub mod privacy;
pub mod sift;

pub use accounting::{stage_accounting, Stage, StageInputs, StageReport, StageRow};
pub use cascade::{cascade_reconcile, CascadeOutcome, CascadeParams};
pub use encode::{alice_bit, bob_bit, encode_bits};
pub use pipeline::{run_pipeline, PipelineOptions, PipelineResult};
pub use postselect::{postselect, PointClass, Selection};
pub use privacy::{final_key_length, privacy_amplify, ToeplitzHash};
pub use sift::{sift, SiftedPair};

/// How Eve's per-symbol knowledge is summarized for privacy amplification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EveBound {
    /// Mean over the post-selected symbols.
    #[default]
    Mean,
    /// Worst single post-selected symbol.
    Max,
}

impl std::str::FromStr for EveBound {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(EveBound::Mean),
            "max" => Ok(EveBound::Max),
            other => Err(format!("expected mean or max, got {other:?}")),
        }
    }
}

impl EveBound {
    pub fn label(self) -> &'static str {
        match self {
            EveBound::Mean => "mean",
            EveBound::Max => "max",
        }
    }

    pub fn summarize(self, values: impl IntoIterator<Item = f64>) -> f64 {
        let mut n = 0usize;
        let mut acc = 0.0f64;
        for v in values {
            n += 1;
            acc = match self {
                EveBound::Mean => acc + v,
                EveBound::Max => acc.max(v),
            };
        }
        match (self, n) {
            (_, 0) => 0.0,
            (EveBound::Mean, n) => acc / n as f64,
            (EveBound::Max, _) => acc,
        }
    }
}

/// Both parties' bit strings at one stage of distillation.
#[derive(Debug, Clone, PartialEq)]
pub struct BitFrame {
    pub stage: Stage,
    pub alice_bits: Vec<bool>,
    pub bob_bits: Vec<bool>,
    /// Parity bits disclosed on the public channel so far.
    pub leakage_bits: u64,
    pub eve_bits_per_symbol: f64,
}

impl BitFrame {
    pub fn len(&self) -> usize {
        self.alice_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice_bits.is_empty()
    }

    pub fn mismatches(&self) -> usize {
        self.alice_bits
            .iter()
            .zip(&self.bob_bits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Packs bits MSB-first into bytes.
pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
        })
        .collect()
}

pub fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1).collect()
}

pub fn to_hex(bits: &[bool]) -> String {
    pack_bits(bits).iter().map(|b| format!("{b:02x}")).collect()
}
