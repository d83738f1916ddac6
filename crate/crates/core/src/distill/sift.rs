use crate::source::{Basis, QuadratureRecord};
use crate::{Error, Result};

/// A symbol both parties measured in the same basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiftedPair {
    pub index: u64,
    pub basis: Basis,
    /// Alice's scaled estimate `α·y_a`.
    pub y_a: f64,
    /// Bob's outcome.
    pub y_b: f64,
}

/// Keeps the symbols where both bases agree, scaling Alice's outcome by
/// `alpha`. Symbols where either value is exactly zero carry no sign and are
/// dropped.
pub fn sift(alice: &[QuadratureRecord], bob: &[QuadratureRecord], alpha: f64) -> Result<Vec<SiftedPair>> {
    if alice.len() != bob.len() {
        return Err(Error::Misaligned(format!(
            "{} Alice records vs {} Bob records",
            alice.len(),
            bob.len()
        )));
    }
    let mut out = Vec::new();
    for (a, b) in alice.iter().zip(bob) {
        if a.index != b.index {
            return Err(Error::Misaligned(format!(
                "index {} paired with index {}",
                a.index, b.index
            )));
        }
        if a.basis != b.basis {
            continue;
        }
        let y_a = alpha * a.value;
        if y_a == 0.0 || b.value == 0.0 {
            continue;
        }
        out.push(SiftedPair {
            index: a.index,
            basis: a.basis,
            y_a,
            y_b: b.value,
        });
    }
    Ok(out)
}

/// Blocks in which both parties held the same basis.
pub fn matching_blocks(alice: &[Basis], bob: &[Basis]) -> Vec<bool> {
    alice.iter().zip(bob).map(|(a, b)| a == b).collect()
}
