//! Cascade error correction.
//!
//! Bob drives the protocol and corrects his string toward Alice's. Every
//! question he asks is a [`BlockRef`]: a contiguous range of positions in one
//! pass's permuted order. Alice answers with the parity of her bits over that
//! range, and each answer counts as one leaked bit.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;

use crate::rng::{derive_seed, stream_rng};
use crate::security::binary_entropy;
use crate::session::wire::MessageKind;
use crate::{Error, Result};

pub const DEFAULT_PASSES: usize = 4;

/// A half-open range `[start, end)` of positions in the permuted order of
/// pass `pass`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockRef {
    pub pass: u8,
    pub start: u32,
    pub end: u32,
}

impl BlockRef {
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Source of Alice's parities.
pub trait ParityOracle {
    fn parities(&mut self, queries: &[BlockRef]) -> Result<Vec<bool>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeParams {
    pub passes: usize,
    pub k1: usize,
    /// Seed of the public inter-pass shuffles.
    pub seed: u64,
}

impl CascadeParams {
    /// `k₁ = ceil(0.73 / qber)`, doubling each pass.
    pub fn for_qber(qber: f64, passes: usize, seed: u64) -> Result<Self> {
        if !(qber > 0.0 && qber < 0.25) {
            return Err(Error::domain("qber_est", qber, "0 < qber_est < 0.25"));
        }
        if passes == 0 || passes > u8::MAX as usize {
            return Err(Error::domain("cascade_passes", passes as f64, "1..=255"));
        }
        Ok(Self {
            passes,
            k1: (0.73 / qber).ceil() as usize,
            seed,
        })
    }

    pub fn block_size(&self, pass: usize, n: usize) -> usize {
        self.k1
            .checked_shl(pass as u32)
            .unwrap_or(usize::MAX)
            .min(n)
            .max(1)
    }

    /// Number of top-level parities disclosed for an `n`-bit string.
    pub fn top_level_count(&self, n: usize) -> u64 {
        if n == 0 {
            return 0;
        }
        (0..self.passes)
            .map(|p| n.div_ceil(self.block_size(p, n)) as u64)
            .sum()
    }
}

/// Position-to-bit maps for every pass. Pass 0 is the identity.
pub fn permutations(n: usize, passes: usize, seed: u64) -> Vec<Vec<u32>> {
    let base = derive_seed(seed, "cascade-shuffle");
    (0..passes)
        .map(|p| {
            let mut perm: Vec<u32> = (0..n as u32).collect();
            if p > 0 {
                perm.shuffle(&mut stream_rng(base, p as u64));
            }
            perm
        })
        .collect()
}

/// Alice's side: answers parity queries over her fixed string.
#[derive(Debug, Clone)]
pub struct CascadeResponder {
    bits: Vec<bool>,
    perms: Vec<Vec<u32>>,
    disclosed: u64,
}

impl CascadeResponder {
    pub fn new(bits: Vec<bool>, params: &CascadeParams) -> Self {
        Self::with_shuffles(bits, params.passes, params.seed)
    }

    /// Alice does not need `k₁`; only the shuffles are shared.
    pub fn with_shuffles(bits: Vec<bool>, passes: usize, seed: u64) -> Self {
        let perms = permutations(bits.len(), passes, seed);
        Self {
            bits,
            perms,
            disclosed: 0,
        }
    }

    pub fn answer(&mut self, queries: &[BlockRef]) -> Result<Vec<bool>> {
        let n = self.bits.len();
        let out = queries
            .iter()
            .map(|q| {
                let perm = self.perms.get(q.pass as usize).ok_or_else(|| {
                    Error::Payload {
                        kind: MessageKind::CascadeParityReq,
                        reason: format!("pass {} out of range", q.pass),
                    }
                })?;
                if q.start >= q.end || q.end as usize > n {
                    return Err(Error::Payload {
                        kind: MessageKind::CascadeParityReq,
                        reason: format!("block {}..{} invalid for {n} bits", q.start, q.end),
                    });
                }
                Ok(parity(&self.bits, &perm[q.start as usize..q.end as usize]))
            })
            .collect::<Result<Vec<_>>>()?;
        self.disclosed += out.len() as u64;
        Ok(out)
    }

    /// Parities answered so far.
    pub fn disclosed(&self) -> u64 {
        self.disclosed
    }
}

impl ParityOracle for CascadeResponder {
    fn parities(&mut self, queries: &[BlockRef]) -> Result<Vec<bool>> {
        self.answer(queries)
    }
}

fn parity(bits: &[bool], positions: &[u32]) -> bool {
    positions.iter().fold(false, |acc, &i| acc ^ bits[i as usize])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOutcome {
    pub bits: Vec<bool>,
    pub leakage_bits: u64,
    pub top_level_parities: u64,
    pub corrections: usize,
}

struct Initiator<'a, O: ParityOracle> {
    bits: Vec<bool>,
    perms: Vec<Vec<u32>>,
    /// Inverse permutations: bit index to position.
    inv: Vec<Vec<u32>>,
    params: CascadeParams,
    oracle: &'a mut O,
    known: HashMap<BlockRef, bool>,
    leakage: u64,
    corrections: usize,
}

impl<O: ParityOracle> Initiator<'_, O> {
    fn local(&self, b: &BlockRef) -> bool {
        parity(
            &self.bits,
            &self.perms[b.pass as usize][b.start as usize..b.end as usize],
        )
    }

    fn ask(&mut self, blocks: &[BlockRef]) -> Result<()> {
        let mut seen = HashSet::new();
        let missing: Vec<BlockRef> = blocks
            .iter()
            .filter(|b| !self.known.contains_key(b) && seen.insert(**b))
            .copied()
            .collect();
        if missing.is_empty() {
            return Ok(());
        }
        let answers = self.oracle.parities(&missing)?;
        if answers.len() != missing.len() {
            return Err(Error::Payload {
                kind: MessageKind::CascadeParityResp,
                reason: format!("{} answers for {} queries", answers.len(), missing.len()),
            });
        }
        self.leakage += missing.len() as u64;
        self.known.extend(missing.into_iter().zip(answers));
        Ok(())
    }

    fn top_block(&self, pass: usize, bit: u32) -> BlockRef {
        let n = self.bits.len();
        let k = self.params.block_size(pass, n);
        let pos = self.inv[pass][bit as usize] as usize;
        let start = pos / k * k;
        BlockRef {
            pass: pass as u8,
            start: start as u32,
            end: (start + k).min(n) as u32,
        }
    }

    /// Runs binary searches on blocks known to hold an odd number of errors,
    /// one oracle round per halving, and flips the located bits.
    fn search(&mut self, mut active: Vec<BlockRef>) -> Result<Vec<u32>> {
        loop {
            let queries: Vec<BlockRef> = active
                .iter()
                .filter(|b| b.len() > 1)
                .map(|b| BlockRef {
                    end: b.start + (b.end - b.start) / 2,
                    ..*b
                })
                .collect();
            if queries.is_empty() {
                break;
            }
            self.ask(&queries)?;
            for b in active.iter_mut().filter(|b| b.len() > 1) {
                let left = BlockRef {
                    end: b.start + (b.end - b.start) / 2,
                    ..*b
                };
                if self.known[&left] != self.local(&left) {
                    *b = left;
                } else {
                    b.start = left.end;
                }
            }
        }
        let mut flipped = Vec::with_capacity(active.len());
        for b in active {
            let bit = self.perms[b.pass as usize][b.start as usize];
            self.bits[bit as usize] ^= true;
            self.corrections += 1;
            flipped.push(bit);
        }
        Ok(flipped)
    }

    /// After flipping `bits`, every earlier top-level block containing one of
    /// them changes parity and may now hide a further error.
    fn backtrack(&mut self, done_passes: usize, mut flipped: Vec<u32>, origin: usize) -> Result<()> {
        let mut origin_of: Vec<(u32, usize)> = flipped.drain(..).map(|b| (b, origin)).collect();
        while let Some((bit, from)) = origin_of.pop() {
            for pass in 0..done_passes {
                if pass == from {
                    continue;
                }
                let block = self.top_block(pass, bit);
                if self.known[&block] != self.local(&block) {
                    let found = self.search(vec![block])?;
                    origin_of.extend(found.into_iter().map(|b| (b, pass)));
                }
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<CascadeOutcome> {
        let n = self.bits.len();
        let mut top_level = 0u64;
        for pass in 0..self.params.passes {
            if n == 0 {
                break;
            }
            let k = self.params.block_size(pass, n);
            let blocks: Vec<BlockRef> = (0..n)
                .step_by(k)
                .map(|s| BlockRef {
                    pass: pass as u8,
                    start: s as u32,
                    end: (s + k).min(n) as u32,
                })
                .collect();
            top_level += blocks.len() as u64;
            self.ask(&blocks)?;
            let odd: Vec<BlockRef> = blocks
                .into_iter()
                .filter(|b| self.known[b] != self.local(b))
                .collect();
            let flipped = self.search(odd)?;
            self.backtrack(pass + 1, flipped, pass)?;
        }
        Ok(CascadeOutcome {
            bits: self.bits,
            leakage_bits: self.leakage,
            top_level_parities: top_level,
            corrections: self.corrections,
        })
    }
}

/// Bob's side: corrects `bob_bits` using parities obtained from `oracle`.
pub fn run_initiator<O: ParityOracle>(
    bob_bits: Vec<bool>,
    params: &CascadeParams,
    oracle: &mut O,
) -> Result<CascadeOutcome> {
    let perms = permutations(bob_bits.len(), params.passes, params.seed);
    let inv = perms
        .iter()
        .map(|p| {
            let mut inv = vec![0u32; p.len()];
            for (pos, &bit) in p.iter().enumerate() {
                inv[bit as usize] = pos as u32;
            }
            inv
        })
        .collect();
    Initiator {
        bits: bob_bits,
        perms,
        inv,
        params: *params,
        oracle,
        known: HashMap::new(),
        leakage: 0,
        corrections: 0,
    }
    .run()
}

/// Reconciles both strings locally and checks the result against Alice's.
pub fn cascade_reconcile(
    alice_bits: &[bool],
    bob_bits: &[bool],
    qber_est: f64,
    passes: usize,
    seed: u64,
) -> Result<CascadeOutcome> {
    if alice_bits.len() != bob_bits.len() {
        return Err(Error::Misaligned(format!(
            "{} Alice bits vs {} Bob bits",
            alice_bits.len(),
            bob_bits.len()
        )));
    }
    let params = CascadeParams::for_qber(qber_est, passes, seed)?;
    let mut responder = CascadeResponder::new(alice_bits.to_vec(), &params);
    let outcome = run_initiator(bob_bits.to_vec(), &params, &mut responder)?;
    debug_assert_eq!(outcome.leakage_bits, responder.disclosed());
    let remaining = outcome
        .bits
        .iter()
        .zip(alice_bits)
        .filter(|(a, b)| a != b)
        .count();
    if remaining > 0 {
        return Err(Error::ResidualMismatch {
            remaining,
            leakage_bits: outcome.leakage_bits,
        });
    }
    Ok(outcome)
}

/// `leakage / (n·h₂(qber))`; 1 is the Shannon limit.
pub fn efficiency(leakage_bits: u64, n: usize, qber: f64) -> f64 {
    leakage_bits as f64 / (n as f64 * binary_entropy(qber))
}
