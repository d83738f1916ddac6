use std::thread;

use rand::RngCore;

use super::transport::Transport;
use super::wire::{
    decode_abort, decode_abs_vals, decode_mask, decode_parity_req, decode_parity_resp, encode_abort,
    encode_abs_vals, encode_mask, encode_parity_req, encode_parity_resp, frame_decode, frame_encode,
    BasisBatch, KeyHash, Message, MessageKind, PaSeed,
};
use super::{transcript_leakage, LeakageReport, Phase, Role, SessionState, TranscriptEntry};
use crate::distill::accounting::{stage_accounting, StageInputs, StageReport};
use crate::distill::cascade::{run_initiator, BlockRef, CascadeParams, CascadeResponder, ParityOracle};
use crate::distill::pipeline::{cascade_seed, qber_estimate, PipelineOptions};
use crate::distill::postselect::assess_all;
use crate::distill::privacy::{final_key_length, key_tag, ToeplitzHash};
use crate::distill::sift::matching_blocks;
use crate::distill::{alice_bit, bob_bit, EveBound};
use crate::rng::{derive_seed, seeded};
use crate::security::{eve_info, Attack, PointAssessment, SecurityContext};
use crate::source::{alice_estimate, Basis, Measurements, QuadratureRecord};
use crate::{Error, Result};

/// Public parameters both parties agree on before the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub ctx: SecurityContext,
    pub attack: Attack,
    pub postselect: bool,
    pub cascade_passes: usize,
    pub epsilon: f64,
    pub eve_bound: EveBound,
    /// Seeds the Cascade shuffles.
    pub public_seed: u64,
    pub symbol_rate_hz: f64,
}

impl SessionConfig {
    pub fn new(ctx: SecurityContext, opts: &PipelineOptions) -> Self {
        Self {
            ctx,
            attack: opts.attack,
            postselect: opts.postselect,
            cascade_passes: opts.cascade_passes,
            epsilon: opts.epsilon,
            eve_bound: opts.eve_bound,
            public_seed: opts.seed,
            symbol_rate_hz: opts.symbol_rate_hz,
        }
    }
}

/// One party's private measurement record.
#[derive(Debug, Clone)]
pub struct PartyData {
    pub records: Vec<QuadratureRecord>,
    pub blocks: Vec<Basis>,
    pub block_len: usize,
    /// Drives the party's private choices: Bob's hash seed, Alice's
    /// confirmation seed.
    pub private_seed: u64,
}

impl PartyData {
    pub fn split(m: Measurements, seed: u64) -> (PartyData, PartyData) {
        let alice = PartyData {
            records: m.alice,
            blocks: m.alice_blocks,
            block_len: m.block_len,
            private_seed: derive_seed(seed, "alice-session"),
        };
        let bob = PartyData {
            records: m.bob,
            blocks: m.bob_blocks,
            block_len: m.block_len,
            private_seed: derive_seed(seed, "bob-session"),
        };
        (alice, bob)
    }

    fn sifted(&self, keep: &[bool]) -> Vec<&QuadratureRecord> {
        self.records
            .iter()
            .filter(|r| keep[r.index as usize / self.block_len])
            .collect()
    }
}

/// Deliberate corruption for exercising key confirmation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip Bob's reconciled bit at this position (modulo the length).
    FlipBobBit(usize),
}

/// Bob's view of the run, which includes everything needed for the
/// stage table.
#[derive(Debug, Clone, PartialEq)]
pub struct BobStats {
    pub sifted: usize,
    pub kept: usize,
    pub qber_est: f64,
    pub leakage_bits: u64,
    pub top_level_parities: u64,
    pub corrections: usize,
    pub eve_bits_per_symbol: f64,
    pub key_len: usize,
    pub report: StageReport,
    pub infeasible: bool,
}

#[derive(Debug, Clone)]
pub struct PartyReport {
    pub state: SessionState,
    pub key: Vec<bool>,
    pub abort_reason: Option<String>,
    /// Every frame this party sent or received, in its processing order.
    pub transcript: Vec<TranscriptEntry>,
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub alice: PartyReport,
    pub bob: PartyReport,
    /// Parities Alice answered.
    pub alice_disclosed: u64,
    pub bob_stats: Option<BobStats>,
    pub leakage: LeakageReport,
}

impl SessionOutcome {
    pub fn aborted(&self) -> Option<&str> {
        self.alice
            .abort_reason
            .as_deref()
            .or(self.bob.abort_reason.as_deref())
    }

    pub fn alice_key(&self) -> &[bool] {
        &self.alice.key
    }

    pub fn bob_key(&self) -> &[bool] {
        &self.bob.key
    }

    /// Alice's transcript, which sees every frame in protocol order.
    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.alice.transcript
    }

    pub fn infeasible(&self) -> bool {
        self.bob_stats.as_ref().is_some_and(|s| s.infeasible)
    }

    pub fn report(&self) -> Option<&StageReport> {
        self.bob_stats.as_ref().map(|s| &s.report)
    }
}

struct Link<T> {
    transport: T,
    state: SessionState,
    log: Vec<TranscriptEntry>,
    peer_abort: Option<String>,
    abort_sent: bool,
}

impl<T: Transport> Link<T> {
    fn new(role: Role, transport: T) -> Self {
        Self {
            transport,
            state: SessionState::new(role),
            log: Vec::new(),
            peer_abort: None,
            abort_sent: false,
        }
    }

    fn peer(&self) -> Role {
        match self.state.role {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }

    fn send(&mut self, msg: &Message) -> Result<()> {
        let frame = frame_encode(msg)?;
        self.transport.send(&frame)?;
        self.state.bytes_sent += frame.len() as u64;
        self.log.push(TranscriptEntry {
            from: self.state.role,
            frame,
        });
        if msg.kind == MessageKind::Abort {
            self.abort_sent = true;
        }
        Ok(())
    }

    fn recv(&mut self) -> Result<Message> {
        let frame = self.transport.recv()?;
        self.state.bytes_received += frame.len() as u64;
        let msg = frame_decode(&frame)?;
        self.log.push(TranscriptEntry {
            from: self.peer(),
            frame,
        });
        self.state.check(msg.kind)?;
        if msg.kind == MessageKind::Abort {
            let reason = decode_abort(&msg)?;
            self.peer_abort = Some(reason.clone());
            return Err(Error::PeerAbort(reason));
        }
        Ok(msg)
    }

    fn finish(mut self, mut key: Vec<bool>, result: Result<()>) -> PartyReport {
        let abort_reason = match result {
            Ok(()) => None,
            Err(e) => {
                log::warn!("{:?} aborting in {:?}: {e}", self.state.role, self.state.phase);
                let reachable = !matches!(e, Error::Transport(_) | Error::Io(_));
                if self.peer_abort.is_none() && !self.abort_sent && reachable {
                    let _ = self.send(&encode_abort(&e.to_string()));
                }
                key.clear();
                self.state.phase = Phase::Aborted;
                Some(e.to_string())
            }
        };
        PartyReport {
            state: self.state,
            key,
            abort_reason,
            transcript: self.log,
        }
    }
}

fn payload_err(kind: MessageKind, reason: String) -> Error {
    Error::Payload { kind, reason }
}

fn alice_steps<T: Transport>(
    cfg: &SessionConfig,
    data: &PartyData,
    link: &mut Link<T>,
    key: &mut Vec<bool>,
    disclosed: &mut u64,
) -> Result<()> {
    link.state.advance(Phase::Sifting);
    link.send(
        &BasisBatch {
            n_symbols: data.records.len() as u64,
            block_len: data.block_len as u32,
            bases: data.blocks.iter().map(|b| b.code()).collect(),
        }
        .encode(),
    )?;

    let keep = decode_mask(&link.recv()?, MessageKind::SiftKeep)?;
    if keep.len() != data.blocks.len() {
        return Err(payload_err(
            MessageKind::SiftKeep,
            format!("{} flags for {} blocks", keep.len(), data.blocks.len()),
        ));
    }
    let sifted = data.sifted(&keep);
    link.state.advance(Phase::PostSelecting);
    let alpha = alice_estimate(1.0, cfg.ctx.v);
    let y_a: Vec<f64> = sifted.iter().map(|r| alpha * r.value).collect();
    link.send(&encode_abs_vals(&y_a.iter().map(|v| v.abs()).collect::<Vec<_>>()))?;

    let ps = decode_mask(&link.recv()?, MessageKind::PsKeep)?;
    if ps.len() != sifted.len() {
        return Err(payload_err(
            MessageKind::PsKeep,
            format!("{} flags for {} sifted symbols", ps.len(), sifted.len()),
        ));
    }
    let kept: Vec<usize> = (0..ps.len()).filter(|&i| ps[i]).collect();
    let bits: Vec<bool> = kept.iter().map(|&i| alice_bit(sifted[i].basis, y_a[i])).collect();
    let eve = kept
        .iter()
        .map(|&i| eve_info(y_a[i].abs(), &cfg.ctx, cfg.attack))
        .collect::<Result<Vec<_>>>()?;
    let eve_bits = cfg.eve_bound.summarize(eve);
    link.state.advance(Phase::Reconciling);

    let mut responder = CascadeResponder::with_shuffles(bits.clone(), cfg.cascade_passes, cascade_seed(cfg.public_seed));
    let pa = loop {
        let msg = link.recv()?;
        match msg.kind {
            MessageKind::CascadeParityReq => {
                let answers = responder.answer(&decode_parity_req(&msg)?)?;
                *disclosed = responder.disclosed();
                link.send(&encode_parity_resp(&answers))?;
            }
            _ => break PaSeed::decode(&msg)?,
        }
    };
    link.state.advance(Phase::Amplifying);
    let m = final_key_length(bits.len(), eve_bits, responder.disclosed(), cfg.epsilon);
    if pa.key_len != m as u64 {
        return Err(payload_err(
            MessageKind::PaSeed,
            format!("key length {} disagrees with the local bound {m}", pa.key_len),
        ));
    }
    *key = ToeplitzHash::from_seed(bits.len(), m, pa.seed).hash(&bits);

    let confirm = KeyHash {
        seed: seeded(derive_seed(data.private_seed, "key-confirmation")).next_u64(),
        tag: [0; 16],
    };
    let confirm = KeyHash {
        tag: key_tag(key, confirm.seed),
        ..confirm
    };
    link.send(&confirm.encode())?;
    let echo = KeyHash::decode(&link.recv()?)?;
    if echo != confirm {
        return Err(Error::KeyMismatch);
    }
    link.state.advance(Phase::Done);
    Ok(())
}

struct LinkOracle<'a, T> {
    link: &'a mut Link<T>,
}

impl<T: Transport> ParityOracle for LinkOracle<'_, T> {
    fn parities(&mut self, queries: &[BlockRef]) -> Result<Vec<bool>> {
        self.link.send(&encode_parity_req(queries))?;
        decode_parity_resp(&self.link.recv()?)
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

fn bob_steps<T: Transport>(
    cfg: &SessionConfig,
    data: &PartyData,
    fault: Option<Fault>,
    link: &mut Link<T>,
    key: &mut Vec<bool>,
    stats: &mut Option<BobStats>,
) -> Result<()> {
    let attack = cfg.attack;
    link.state.advance(Phase::Sifting);
    let batch = BasisBatch::decode(&link.recv()?)?;
    if batch.n_symbols != data.records.len() as u64
        || batch.block_len as usize != data.block_len
        || batch.bases.len() != data.blocks.len()
    {
        return Err(payload_err(
            MessageKind::BasisBatch,
            format!(
                "schedule {}×{} over {} symbols does not match ours",
                batch.bases.len(),
                batch.block_len,
                batch.n_symbols
            ),
        ));
    }
    let alice_blocks = batch
        .bases
        .iter()
        .map(|&c| Basis::from_code(c).ok_or_else(|| payload_err(MessageKind::BasisBatch, format!("basis code {c}"))))
        .collect::<Result<Vec<_>>>()?;
    let keep = matching_blocks(&alice_blocks, &data.blocks);
    link.send(&encode_mask(MessageKind::SiftKeep, &keep))?;
    let sifted = data.sifted(&keep);
    link.state.advance(Phase::PostSelecting);

    let y_a_abs = decode_abs_vals(&link.recv()?)?;
    if y_a_abs.len() != sifted.len() || y_a_abs.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(payload_err(
            MessageKind::AbsVals,
            format!("expected {} finite magnitudes", sifted.len()),
        ));
    }
    let mags: Vec<(f64, f64)> = y_a_abs.iter().zip(&sifted).map(|(&a, r)| (a, r.value.abs())).collect();
    let assessments = assess_all(&mags, &cfg.ctx)?;
    let keep_point = |a: &PointAssessment| {
        a.y_a_abs != 0.0 && a.y_b_abs != 0.0 && (!cfg.postselect || a.net(attack) > 0.0)
    };
    let ps: Vec<bool> = assessments.iter().map(keep_point).collect();
    link.send(&encode_mask(MessageKind::PsKeep, &ps))?;
    link.state.advance(Phase::Reconciling);

    let kept: Vec<usize> = (0..ps.len()).filter(|&i| ps[i]).collect();
    let kept_assess: Vec<&PointAssessment> = kept.iter().map(|&i| &assessments[i]).collect();
    let bits: Vec<bool> = kept.iter().map(|&i| bob_bit(sifted[i].basis, sifted[i].value)).collect();
    let qber_est = qber_estimate(kept_assess.iter().copied());
    let params = CascadeParams::for_qber(qber_est, cfg.cascade_passes, cascade_seed(cfg.public_seed))?;
    let outcome = run_initiator(bits, &params, &mut LinkOracle { link: &mut *link })?;
    let mut corrected = outcome.bits;
    if let (Some(Fault::FlipBobBit(i)), false) = (fault, corrected.is_empty()) {
        let n = corrected.len();
        corrected[i % n] ^= true;
    }

    let eve_bits = cfg.eve_bound.summarize(kept_assess.iter().map(|a| a.eve(attack)));
    let m = final_key_length(corrected.len(), eve_bits, outcome.leakage_bits, cfg.epsilon);
    let pa = PaSeed {
        seed: seeded(derive_seed(data.private_seed, "privacy-amplification")).next_u64(),
        key_len: m as u64,
    };
    link.send(&pa.encode())?;
    link.state.advance(Phase::Amplifying);
    *key = ToeplitzHash::from_seed(corrected.len(), m, pa.seed).hash(&corrected);

    let kept_i_ab = mean(kept_assess.iter().map(|a| a.i_ab));
    let kept_eve = mean(kept_assess.iter().map(|a| a.eve(attack)));
    let report = stage_accounting(
        &StageInputs {
            sifted: sifted.len(),
            raw_i_ab: mean(assessments.iter().map(|a| a.i_ab)),
            raw_eve: mean(assessments.iter().map(|a| a.eve(attack))),
            kept: kept.len(),
            kept_i_ab,
            kept_eve,
            leakage_bits: outcome.leakage_bits,
            final_len: m,
        },
        attack,
        cfg.symbol_rate_hz,
    );
    *stats = Some(BobStats {
        sifted: sifted.len(),
        kept: kept.len(),
        qber_est,
        leakage_bits: outcome.leakage_bits,
        top_level_parities: outcome.top_level_parities,
        corrections: outcome.corrections,
        eve_bits_per_symbol: eve_bits,
        key_len: m,
        report,
        infeasible: kept.is_empty() || kept_i_ab - kept_eve <= 0.0,
    });

    let theirs = KeyHash::decode(&link.recv()?)?;
    let mine = key_tag(key, theirs.seed);
    if mine != theirs.tag {
        link.send(&encode_abort("key confirmation hash mismatch"))?;
        return Err(Error::KeyMismatch);
    }
    link.send(&KeyHash { seed: theirs.seed, tag: mine }.encode())?;
    link.state.advance(Phase::Done);
    Ok(())
}

/// Runs both parties concurrently, each on its own end of a transport, and
/// collects their results.
pub fn run_session<TA, TB>(
    cfg: &SessionConfig,
    alice: &PartyData,
    bob: &PartyData,
    alice_transport: TA,
    bob_transport: TB,
    fault: Option<Fault>,
) -> Result<SessionOutcome>
where
    TA: Transport + Send,
    TB: Transport + Send,
{
    let (alice_report, alice_disclosed, bob_report, bob_stats) = thread::scope(|s| {
        let ha = s.spawn(move || {
            let mut link = Link::new(Role::Alice, alice_transport);
            let (mut key, mut disclosed) = (Vec::new(), 0);
            let r = alice_steps(cfg, alice, &mut link, &mut key, &mut disclosed);
            (link.finish(key, r), disclosed)
        });
        let hb = s.spawn(move || {
            let mut link = Link::new(Role::Bob, bob_transport);
            let (mut key, mut stats) = (Vec::new(), None);
            let r = bob_steps(cfg, bob, fault, &mut link, &mut key, &mut stats);
            (link.finish(key, r), stats)
        });
        let (a, d) = ha.join().expect("Alice thread panicked");
        let (b, st) = hb.join().expect("Bob thread panicked");
        (a, d, b, st)
    });
    let leakage = transcript_leakage(&alice_report.transcript)?;
    Ok(SessionOutcome {
        alice: alice_report,
        bob: bob_report,
        alice_disclosed,
        bob_stats,
        leakage,
    })
}
