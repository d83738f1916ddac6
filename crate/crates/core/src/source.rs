//! EPR source, lossy channel, homodyne timing and channel calibration.
//!
//! The source is a two-mode Gaussian state with anticorrelated amplitude
//! quadratures and correlated phase quadratures. Each mode has variance `V`
//! and the inter-mode covariance has magnitude `sqrt(V^2 - 1)`. Samples are
//! drawn from the (positive) Wigner distribution and each party reads the
//! component matching the basis it measured.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::rng::{derive_seed, stream_rng, BLOCK};
use crate::{Error, Result};

/// Accepted slack for a negative inferred excess noise caused by sampling
/// noise in measured variances.
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;

/// How the source variance was specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceMode {
    /// Pure two-mode squeezed vacuum, `V = cosh(2r)`.
    MinimumUncertainty,
    /// `V` given directly; `r` is kept for squeezing-level reporting only.
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    v: f64,
    r: f64,
    mode: SourceMode,
}

impl SourceModel {
    /// Source with a directly specified effective variance. The nominal `r`
    /// is the value a pure state of the same variance would have.
    pub fn effective(v: f64) -> Result<Self> {
        check_variance(v)?;
        Ok(Self {
            v,
            r: v.acosh() / 2.0,
            mode: SourceMode::Effective,
        })
    }

    /// Effective-variance source that also carries a separately measured `r`.
    pub fn effective_with_r(v: f64, r: f64) -> Result<Self> {
        check_variance(v)?;
        check_r(r)?;
        Ok(Self {
            v,
            r,
            mode: SourceMode::Effective,
        })
    }

    pub fn minimum_uncertainty(r: f64) -> Result<Self> {
        Ok(Self {
            v: variance_from_r(r)?,
            r,
            mode: SourceMode::MinimumUncertainty,
        })
    }

    pub fn variance(&self) -> f64 {
        self.v
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn mode(&self) -> SourceMode {
        self.mode
    }

    /// `sqrt(V^2 - 1)`, the magnitude of the inter-mode covariance.
    pub fn correlation(&self) -> f64 {
        (self.v * self.v - 1.0).max(0.0).sqrt()
    }

    /// Scale of Alice's optimal linear estimate of Bob's quadrature.
    pub fn alpha(&self) -> f64 {
        self.correlation() / self.v
    }

    /// Variance of Alice's scaled estimate, `V - 1/V`.
    pub fn estimate_variance(&self) -> f64 {
        self.v - 1.0 / self.v
    }

    pub fn conditional_variance(&self) -> f64 {
        1.0 / self.v
    }
}

fn check_variance(v: f64) -> Result<()> {
    if v.is_finite() && v >= 1.0 {
        Ok(())
    } else {
        Err(Error::domain("V", v, "V >= 1"))
    }
}

fn check_r(r: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain("r", r, "r >= 0"))
    }
}

/// Lossy Gaussian channel from the source to Bob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    eta: f64,
    delta: f64,
}

impl ChannelModel {
    pub fn new(eta: f64, delta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::domain("eta", eta, "0 < eta <= 1"));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::domain("delta", delta, "delta >= 0"));
        }
        Ok(Self { eta, delta })
    }

    pub fn lossless() -> Self {
        Self {
            eta: 1.0,
            delta: 0.0,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Excess noise must stay below twice the transmittivity for any key to
    /// be distillable.
    pub fn is_valid(&self) -> bool {
        2.0 * self.eta > self.delta
    }
}

/// Homodyne measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// Amplitude quadrature `X`; anticorrelated between the modes.
    Amplitude,
    /// Phase quadrature `Y`; correlated between the modes.
    Phase,
}

impl Basis {
    pub fn code(self) -> u8 {
        match self {
            Basis::Amplitude => 0,
            Basis::Phase => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Basis::Amplitude),
            1 => Some(Basis::Phase),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Basis::Amplitude => "X",
            Basis::Phase => "Y",
        }
    }
}

/// One phase-space draw of both modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub xa: f64,
    pub ya: f64,
    pub xb: f64,
    pub yb: f64,
}

impl PhasePoint {
    pub fn alice(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Amplitude => self.xa,
            Basis::Phase => self.ya,
        }
    }

    pub fn bob(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Amplitude => self.xb,
            Basis::Phase => self.yb,
        }
    }
}

/// A single party's measurement at one symbol slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRecord {
    pub index: u64,
    pub basis: Basis,
    /// Measured quadrature in shot-noise units.
    pub value: f64,
    /// Eve's tapped mode for the same quadrature; only set on Bob's side.
    pub eve_value: Option<f64>,
}

/// `V = cosh(2r)`.
pub fn variance_from_r(r: f64) -> Result<f64> {
    check_r(r)?;
    Ok((2.0 * r).cosh())
}

/// Squeezing of the correlation variance relative to shot noise, in dB
/// (negative below shot noise).
pub fn squeezing_db(r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(10.0 * (-2.0 * r).exp().log10())
}

/// Covariance over `(X_a, Y_a, X_b, Y_b)`.
pub fn covariance_4d(model: &SourceModel) -> [[f64; 4]; 4] {
    let v = model.variance();
    let c = model.correlation();
    [
        [v, 0.0, -c, 0.0],
        [0.0, v, 0.0, c],
        [-c, 0.0, v, 0.0],
        [0.0, c, 0.0, v],
    ]
}

fn draw_point<R: Rng>(rng: &mut R, v: f64, c: f64) -> PhasePoint {
    // 2x2 Cholesky per quadrature pair: b = ±(c/√V)·g₁ + (1/√V)·g₂.
    let sv = v.sqrt();
    let (g1, g2, g3, g4): (f64, f64, f64, f64) = (
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    PhasePoint {
        xa: sv * g1,
        xb: (-c * g1 + g2) / sv,
        ya: sv * g3,
        yb: (c * g3 + g4) / sv,
    }
}

/// I.i.d. draws from the zero-mean Gaussian with covariance
/// [`covariance_4d`]. Deterministic in `seed` regardless of thread count.
pub fn sample_pairs(model: &SourceModel, n: usize, seed: u64) -> Result<Vec<PhasePoint>> {
    if n == 0 {
        return Err(Error::domain("n", 0.0, "n >= 1"));
    }
    let (v, c) = (model.variance(), model.correlation());
    let blocks = n.div_ceil(BLOCK);
    let out = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let len = BLOCK.min(n - b * BLOCK);
            let mut rng = stream_rng(seed, b as u64);
            (0..len)
                .map(move |_| draw_point(&mut rng, v, c))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelOutput {
    pub bob: f64,
    pub eve: f64,
}

/// Passes one quadrature through the lossy channel.
///
/// The loss is a beam splitter whose other output goes to Eve; excess noise
/// is added on Bob's side only.
pub fn apply_channel<R: Rng + ?Sized>(bob_in: f64, ch: &ChannelModel, rng: &mut R) -> ChannelOutput {
    let g1: f64 = rng.sample(StandardNormal);
    let g2: f64 = rng.sample(StandardNormal);
    let (t, l) = (ch.eta.sqrt(), (1.0 - ch.eta).sqrt());
    ChannelOutput {
        bob: t * bob_in + l * g1 + ch.delta.sqrt() * g2,
        eve: l * bob_in - t * g1,
    }
}

/// Alice's scaled estimate `Y_A = α·y_a` of Bob's quadrature.
pub fn alice_estimate(y_a: f64, v: f64) -> f64 {
    let c = (v * v - 1.0).max(0.0).sqrt();
    c / v * y_a
}

/// Residual variance of Bob's quadrature given Alice's estimate, `1/V`.
pub fn conditional_variance(v: f64) -> f64 {
    1.0 / v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationReport {
    /// Source-side variance of Alice's estimate, `V - 1/V`.
    pub v_a: f64,
    pub v_a_meas: f64,
    pub v_b_meas: f64,
    pub v: f64,
    pub v_s: f64,
    pub delta: f64,
}

/// Infers the source variance and excess noise from the variances Alice
/// and Bob measure on a calibration subset, given the transmittivity.
///
/// Alice's measured variance is `η·V_A + 1 - η` and Bob's is
/// `η·V_A + η·V_s + 1 - η + δ`.
pub fn calibrate(v_a_meas: f64, v_b_meas: f64, eta: f64) -> Result<CalibrationReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain("eta", eta, "0 < eta <= 1"));
    }
    if !(v_a_meas > 1.0 - eta) {
        return Err(Error::Calibration(format!(
            "Alice's variance {v_a_meas} does not exceed the vacuum floor 1 - eta = {}",
            1.0 - eta
        )));
    }
    let v_a = (v_a_meas - (1.0 - eta)) / eta;
    // positive root of V - 1/V = V_A
    let v = (v_a + (v_a * v_a + 4.0).sqrt()) / 2.0;
    let v_s = 1.0 / v;
    let delta = v_b_meas - eta * v_a - eta * v_s - (1.0 - eta);
    if delta < -CALIBRATION_TOLERANCE {
        return Err(Error::Calibration(format!(
            "inferred excess noise {delta} is negative: Bob's variance {v_b_meas} is below the loss-only model"
        )));
    }
    Ok(CalibrationReport {
        v_a,
        v_a_meas,
        v_b_meas,
        v,
        v_s,
        delta: delta.max(0.0),
    })
}

/// Variances `(V_A', V_B)` that Alice and Bob would measure for a given
/// source and channel; the inverse of [`calibrate`].
pub fn forward_variances(v: f64, ch: &ChannelModel) -> (f64, f64) {
    let eta = ch.eta();
    let v_a = v - 1.0 / v;
    let v_a_meas = eta * v_a + 1.0 - eta;
    let v_b = eta * v_a + eta / v + 1.0 - eta + ch.delta();
    (v_a_meas, v_b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingConfig {
    /// Interval Δt over which a basis choice is held, in seconds.
    pub dt_switch: f64,
    /// Per-symbol measurement time ΔT, in seconds.
    pub dt_sample: f64,
    /// Symbol rate in Hz.
    pub symbol_rate: f64,
}

impl TimingConfig {
    pub fn new(dt_switch: f64, dt_sample: f64, symbol_rate: f64) -> Result<Self> {
        if !(dt_sample > 0.0 && dt_sample.is_finite()) {
            return Err(Error::domain("dT_sample_s", dt_sample, "dT > 0"));
        }
        if !(dt_switch >= dt_sample && dt_switch.is_finite()) {
            return Err(Error::domain("dt_switch_s", dt_switch, "dt >= dT"));
        }
        if !(symbol_rate > 0.0 && symbol_rate.is_finite()) {
            return Err(Error::domain("symbol_rate_hz", symbol_rate, "rate > 0"));
        }
        Ok(Self {
            dt_switch,
            dt_sample,
            symbol_rate,
        })
    }

    /// Symbols measured under one basis choice, `round(Δt/ΔT)`.
    pub fn block_len(&self) -> usize {
        ((self.dt_switch / self.dt_sample).round() as usize).max(1)
    }
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            dt_switch: 5e-3,
            dt_sample: 5e-7,
            symbol_rate: 2e6,
        }
    }
}

/// Per-block uniformly random basis choices, one per `Δt` block.
pub fn block_bases<R: Rng + ?Sized>(timing: &TimingConfig, n: usize, rng: &mut R) -> Vec<Basis> {
    let blocks = n.div_ceil(timing.block_len());
    (0..blocks)
        .map(|_| {
            if rng.gen::<bool>() {
                Basis::Phase
            } else {
                Basis::Amplitude
            }
        })
        .collect()
}

/// Expands block bases into a per-symbol schedule of length `n`.
pub fn expand_blocks(blocks: &[Basis], block_len: usize, n: usize) -> Vec<Basis> {
    (0..n).map(|i| blocks[i / block_len]).collect()
}

/// Per-symbol basis schedule for one party: constant within each block of
/// `round(Δt/ΔT)` symbols, i.i.d. uniform across blocks.
pub fn basis_schedule<R: Rng + ?Sized>(timing: &TimingConfig, n: usize, rng: &mut R) -> Vec<Basis> {
    let blocks = block_bases(timing, n, rng);
    expand_blocks(&blocks, timing.block_len(), n)
}

/// Raw measurement data for one run.
#[derive(Debug, Clone)]
pub struct Measurements {
    pub alice: Vec<QuadratureRecord>,
    pub bob: Vec<QuadratureRecord>,
    /// Block-level basis choices, as announced during sifting.
    pub alice_blocks: Vec<Basis>,
    pub bob_blocks: Vec<Basis>,
    pub block_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureSeeds {
    /// Drives the source and channel noise.
    pub source: u64,
    /// Alice's private basis choices.
    pub alice: u64,
    /// Bob's private basis choices.
    pub bob: u64,
}

impl MeasureSeeds {
    pub fn from_root(seed: u64) -> Self {
        Self {
            source: derive_seed(seed, "source"),
            alice: derive_seed(seed, "alice"),
            bob: derive_seed(seed, "bob"),
        }
    }
}

/// Simulates `n` symbol slots: the source emits, mode b crosses the
/// channel, and each party homodynes its mode in its own basis schedule.
pub fn measure(
    model: &SourceModel,
    channel: &ChannelModel,
    timing: &TimingConfig,
    n: usize,
    seeds: MeasureSeeds,
) -> Result<Measurements> {
    let points = sample_pairs(model, n, seeds.source)?;
    let block_len = timing.block_len();
    let alice_blocks = block_bases(timing, n, &mut crate::rng::seeded(seeds.alice));
    let bob_blocks = block_bases(timing, n, &mut crate::rng::seeded(seeds.bob));
    let channel_seed = derive_seed(seeds.source, "channel");

    let (alice, bob): (Vec<_>, Vec<_>) = points
        .par_chunks(BLOCK)
        .enumerate()
        .flat_map_iter(|(b, chunk)| {
            let mut rng = stream_rng(channel_seed, b as u64);
            let alice_blocks = &alice_blocks;
            let bob_blocks = &bob_blocks;
            chunk
                .iter()
                .enumerate()
                .map(move |(k, pt)| {
                    let index = b * BLOCK + k;
                    let ab = alice_blocks[index / block_len];
                    let bb = bob_blocks[index / block_len];
                    let out = apply_channel(pt.bob(bb), channel, &mut rng);
                    (
                        QuadratureRecord {
                            index: index as u64,
                            basis: ab,
                            value: pt.alice(ab),
                            eve_value: None,
                        },
                        QuadratureRecord {
                            index: index as u64,
                            basis: bb,
                            value: out.bob,
                            eve_value: Some(out.eve),
                        },
                    )
                })
                .collect::<Vec<_>>()
        })
        .unzip();

    Ok(Measurements {
        alice,
        bob,
        alice_blocks,
        bob_blocks,
        block_len,
    })
}
