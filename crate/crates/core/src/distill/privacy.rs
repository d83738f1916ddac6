//! Privacy amplification by Toeplitz hashing over GF(2).

use rand::RngCore;

use crate::rng::{derive_seed, seeded};

/// Default failure probability of privacy amplification.
pub const DEFAULT_EPSILON: f64 = 5.421_010_862_427_522e-20; // 2^-64

/// `floor(n·(1 - eve) - leakage - 2·log₂(1/ε))`, clamped at zero.
pub fn final_key_length(n: usize, eve_bits_per_symbol: f64, leakage_bits: u64, epsilon: f64) -> usize {
    let m = n as f64 * (1.0 - eve_bits_per_symbol) - leakage_bits as f64 - 2.0 * (1.0 / epsilon).log2();
    if m.is_finite() && m > 0.0 {
        m.floor() as usize
    } else {
        0
    }
}

/// An `m × n` Toeplitz matrix `T[i][j] = d[i - j + n - 1]` with the
/// `m + n - 1` diagonal bits `d` drawn from a seeded generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzHash {
    n: usize,
    m: usize,
    /// Diagonal bits, LSB-first within each word, one spare word at the end.
    diag: Vec<u64>,
}

impl ToeplitzHash {
    pub fn from_seed(n: usize, m: usize, seed: u64) -> Self {
        let bits = (m + n).saturating_sub(1);
        let mut rng = seeded(derive_seed(seed, "toeplitz"));
        let diag = (0..bits.div_ceil(64) + 1).map(|_| rng.next_u64()).collect();
        Self { n, m, diag }
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn output_len(&self) -> usize {
        self.m
    }

    /// Matrix entry, for reference computations.
    pub fn entry(&self, i: usize, j: usize) -> bool {
        let k = i + self.n - 1 - j;
        self.diag[k / 64] >> (k % 64) & 1 == 1
    }

    /// `T·x` over GF(2).
    pub fn hash(&self, x: &[bool]) -> Vec<bool> {
        assert_eq!(x.len(), self.n, "Toeplitz input length");
        if self.m == 0 || self.n == 0 {
            return vec![false; self.m];
        }
        // Output bit i is the parity of d[i .. i + n] AND x reversed.
        let words = self.n.div_ceil(64);
        let mut xr = vec![0u64; words];
        for (k, _) in x.iter().rev().enumerate().filter(|(_, &b)| b) {
            xr[k / 64] |= 1 << (k % 64);
        }
        (0..self.m)
            .map(|i| {
                let (w0, s) = (i / 64, i % 64);
                let mut acc = 0u64;
                for (w, &xw) in xr.iter().enumerate() {
                    let lo = self.diag[w0 + w] >> s;
                    let hi = if s == 0 {
                        0
                    } else {
                        self.diag.get(w0 + w + 1).map_or(0, |&h| h << (64 - s))
                    };
                    acc ^= (lo | hi) & xw;
                }
                acc.count_ones() & 1 == 1
            })
            .collect()
    }
}

pub fn privacy_amplify(
    bits: &[bool],
    eve_bits_per_symbol: f64,
    leakage_bits: u64,
    epsilon: f64,
    seed: u64,
) -> Vec<bool> {
    let m = final_key_length(bits.len(), eve_bits_per_symbol, leakage_bits, epsilon);
    ToeplitzHash::from_seed(bits.len(), m, seed).hash(bits)
}

/// Bits in a key-confirmation tag.
pub const TAG_BITS: usize = 128;

/// 128-bit universal-hash tag of a key, with the key length mixed in.
pub fn key_tag(key: &[bool], seed: u64) -> [u8; 16] {
    let mut input = key.to_vec();
    input.extend((0..64).rev().map(|k| (key.len() as u64) >> k & 1 == 1));
    let bits = ToeplitzHash::from_seed(input.len(), TAG_BITS, derive_seed(seed, "key-tag")).hash(&input);
    let mut out = [0u8; 16];
    out.copy_from_slice(&super::pack_bits(&bits));
    out
}
