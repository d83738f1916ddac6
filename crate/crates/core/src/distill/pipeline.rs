//! The full distillation chain run locally on both parties' data, without a
//! transport. The networked session reproduces the same numbers.

use super::accounting::{stage_accounting, StageInputs, StageReport};
use super::cascade::{cascade_reconcile, DEFAULT_PASSES};
use super::encode::encode_bits;
use super::postselect::{keep_all, postselect, Selection};
use super::privacy::{privacy_amplify, DEFAULT_EPSILON};
use super::sift::{sift, SiftedPair};
use super::EveBound;
use crate::rng::derive_seed;
use crate::security::{Attack, PointAssessment, SecurityContext};
use crate::source::{alice_estimate, Measurements};
use crate::{Error, Result};

/// Lower clamp on the error-rate estimate handed to Cascade.
pub const QBER_FLOOR: f64 = 1e-4;
const QBER_CEIL: f64 = 0.2499;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub attack: Attack,
    pub postselect: bool,
    pub cascade_passes: usize,
    pub epsilon: f64,
    pub eve_bound: EveBound,
    /// Seed for the public Cascade shuffles and the hash choice.
    pub seed: u64,
    pub symbol_rate_hz: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            attack: Attack::Collective,
            postselect: true,
            cascade_passes: DEFAULT_PASSES,
            epsilon: DEFAULT_EPSILON,
            eve_bound: EveBound::Mean,
            seed: 0,
            symbol_rate_hz: 2e6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub sifted: Vec<SiftedPair>,
    pub selection: Selection,
    pub qber_est: f64,
    /// Bit disagreements before reconciliation.
    pub bit_errors: usize,
    pub corrections: usize,
    pub leakage_bits: u64,
    /// False when Cascade left a residual mismatch and the frame was dropped.
    pub reconciled: bool,
    pub eve_bits_per_symbol: f64,
    pub alice_key: Vec<bool>,
    pub bob_key: Vec<bool>,
    pub report: StageReport,
    /// The kept data carries no positive net information.
    pub infeasible: bool,
}

impl PipelineResult {
    pub fn secret_fraction(&self) -> f64 {
        if self.sifted.is_empty() {
            0.0
        } else {
            self.alice_key.len() as f64 / self.sifted.len() as f64
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Error-rate estimate for Cascade: the mean per-point flip probability,
/// clamped into Cascade's accepted range.
pub fn qber_estimate<'a>(kept: impl Iterator<Item = &'a PointAssessment>) -> f64 {
    mean(kept.map(|a| a.p)).clamp(QBER_FLOOR, QBER_CEIL)
}

pub fn pa_seed(seed: u64) -> u64 {
    derive_seed(seed, "privacy-amplification")
}

pub fn cascade_seed(seed: u64) -> u64 {
    derive_seed(seed, "cascade")
}

pub fn run_pipeline(
    data: &Measurements,
    ctx: &SecurityContext,
    opts: &PipelineOptions,
) -> Result<PipelineResult> {
    let sifted = sift(&data.alice, &data.bob, alice_estimate(1.0, ctx.v))?;
    let attack = opts.attack;
    let selection = if opts.postselect {
        postselect(&sifted, ctx, attack)?
    } else {
        keep_all(&sifted, ctx, attack)?
    };
    let all = &selection.assessments;
    let kept: Vec<&PointAssessment> = selection.kept.iter().map(|&i| &all[i]).collect();
    let kept_pairs: Vec<SiftedPair> = selection.kept.iter().map(|&i| sifted[i]).collect();

    let raw_i_ab = mean(all.iter().map(|a| a.i_ab));
    let raw_eve = mean(all.iter().map(|a| a.eve(attack)));
    let kept_i_ab = mean(kept.iter().map(|a| a.i_ab));
    let kept_eve = mean(kept.iter().map(|a| a.eve(attack)));
    let infeasible = kept.is_empty() || kept_i_ab - kept_eve <= 0.0;

    let (alice_bits, bob_bits) = encode_bits(&kept_pairs)?;
    let bit_errors = alice_bits.iter().zip(&bob_bits).filter(|(a, b)| a != b).count();
    let qber_est = qber_estimate(kept.iter().copied());
    let eve_bits_per_symbol = opts.eve_bound.summarize(kept.iter().map(|a| a.eve(attack)));

    let (corrected, leakage_bits, corrections) = match cascade_reconcile(
        &alice_bits,
        &bob_bits,
        qber_est,
        opts.cascade_passes,
        cascade_seed(opts.seed),
    ) {
        Ok(out) => (Some(out.bits), out.leakage_bits, out.corrections),
        Err(Error::ResidualMismatch { leakage_bits, .. }) => (None, leakage_bits, 0),
        Err(e) => return Err(e),
    };
    let reconciled = corrected.is_some();

    let (alice_key, bob_key) = match corrected {
        Some(bob_corrected) => {
            let amplify = |bits: &[bool]| {
                privacy_amplify(bits, eve_bits_per_symbol, leakage_bits, opts.epsilon, pa_seed(opts.seed))
            };
            (amplify(&alice_bits), amplify(&bob_corrected))
        }
        None => (Vec::new(), Vec::new()),
    };

    let report = stage_accounting(
        &StageInputs {
            sifted: sifted.len(),
            raw_i_ab,
            raw_eve,
            kept: kept_pairs.len(),
            kept_i_ab,
            kept_eve,
            leakage_bits,
            final_len: alice_key.len(),
        },
        attack,
        opts.symbol_rate_hz,
    );

    Ok(PipelineResult {
        sifted,
        selection,
        qber_est,
        bit_errors,
        corrections,
        leakage_bits,
        reconciled,
        eve_bits_per_symbol,
        alice_key,
        bob_key,
        report,
        infeasible,
    })
}
