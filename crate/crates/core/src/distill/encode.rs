//! Sign encoding. Phase quadratures are correlated, so both parties read a
//! positive value as 1. Amplitude quadratures are anticorrelated, so Bob
//! reads a negative value as 1.

use super::SiftedPair;
use crate::source::Basis;
use crate::{Error, Result};

pub fn alice_bit(_basis: Basis, value: f64) -> bool {
    value > 0.0
}

pub fn bob_bit(basis: Basis, value: f64) -> bool {
    match basis {
        Basis::Phase => value > 0.0,
        Basis::Amplitude => value < 0.0,
    }
}

pub fn encode_bits(pairs: &[SiftedPair]) -> Result<(Vec<bool>, Vec<bool>)> {
    let mut alice = Vec::with_capacity(pairs.len());
    let mut bob = Vec::with_capacity(pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        if p.y_a == 0.0 || p.y_b == 0.0 {
            return Err(Error::ZeroQuadrature(i));
        }
        alice.push(alice_bit(p.basis, p.y_a));
        bob.push(bob_bit(p.basis, p.y_b));
    }
    Ok((alice, bob))
}
