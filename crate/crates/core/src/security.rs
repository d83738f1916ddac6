//! Per-point and ensemble security quantities for the binary sign code.
//!
//! Alice announces `|Y_A|`, Bob knows `|Y_B|`. From these two magnitudes
//! each symbol gets Bob's bit-error probability `p`, the overlap `f` of
//! Eve's two conditional states, and from those the Alice-Bob mutual
//! information, the Holevo bound (collective attack) and Eve's mutual
//! information under an individual attack.
//!
//! Net rates are evaluated as `(1 - eve) - h2(p)` with both terms computed
//! from `ln_1p`, so that points far from the origin, where `I_AB` and the
//! Holevo bound both round to 1 in `f64`, still get the right sign.

use std::f64::consts::LN_2;

use gauss_quad::GaussLegendre;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::rng::{stream_rng, BLOCK};
use crate::source::{CalibrationReport, ChannelModel};
use crate::{Error, Result};

/// Upper end of the post-selection boundary search, in shot-noise units.
pub const BOUNDARY_Y_MAX: f64 = 20.0;
/// Absolute tolerance of the boundary bisection.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attack {
    Collective,
    Individual,
}

impl Attack {
    pub fn label(self) -> &'static str {
        match self {
            Attack::Collective => "collective",
            Attack::Individual => "individual",
        }
    }
}

impl std::str::FromStr for Attack {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "collective" => Ok(Attack::Collective),
            "individual" => Ok(Attack::Individual),
            other => Err(format!("expected collective or individual, got {other:?}")),
        }
    }
}

/// Calibrated channel and source parameters seen by the security analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityContext {
    pub eta: f64,
    pub delta: f64,
    pub v: f64,
    pub v_s: f64,
    /// Bob's noise variance around `√η·Y_A`: `η·V_s + 1 - η + δ`.
    pub v_b_noise: f64,
    pub attack: Attack,
}

impl SecurityContext {
    pub fn new(channel: &ChannelModel, v: f64, attack: Attack) -> Result<Self> {
        if !(v.is_finite() && v >= 1.0) {
            return Err(Error::domain("V", v, "V >= 1"));
        }
        let (eta, delta) = (channel.eta(), channel.delta());
        let v_s = 1.0 / v;
        Ok(Self {
            eta,
            delta,
            v,
            v_s,
            v_b_noise: eta * v_s + 1.0 - eta + delta,
            attack,
        })
    }

    pub fn from_calibration(report: &CalibrationReport, eta: f64, attack: Attack) -> Result<Self> {
        Self::new(&ChannelModel::new(eta, report.delta)?, report.v, attack)
    }

    pub fn with_attack(mut self, attack: Attack) -> Self {
        self.attack = attack;
        self
    }

    /// Variance of Alice's announced estimate, `V - 1/V`.
    pub fn estimate_variance(&self) -> f64 {
        self.v - self.v_s
    }
}

/// Binary entropy in bits, with `0·log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let q = p.min(1.0 - p);
    ((-q * q.ln() - (1.0 - q) * (-q).ln_1p()) / LN_2).min(1.0)
}

/// Density of Bob's outcome `y_b` given Alice's estimate `y_a`.
pub fn bob_outcome_density(y_b: f64, y_a: f64, ctx: &SecurityContext) -> f64 {
    let d = y_b - ctx.eta.sqrt() * y_a;
    (-d * d / (2.0 * ctx.v_b_noise)).exp() / (2.0 * std::f64::consts::PI * ctx.v_b_noise).sqrt()
}

/// Bob's bit-error probability from the two announced magnitudes.
pub fn bob_error_rate(y_a_abs: f64, y_b_abs: f64, ctx: &SecurityContext) -> f64 {
    let x = 2.0 * ctx.eta.sqrt() * y_a_abs.abs() * y_b_abs.abs() / ctx.v_b_noise;
    // logistic(-x) without overflow
    let e = (-x).exp();
    e / (1.0 + e)
}

/// `I_AB = 1 - h2(p)` in bits per symbol.
pub fn mutual_info_ab(p: f64) -> f64 {
    1.0 - binary_entropy(p)
}

/// Overlap of Eve's two conditional states, `exp[-(1-η)·Y_A²/(2·V_s)]`.
pub fn overlap_f(y_a_abs: f64, ctx: &SecurityContext) -> f64 {
    (-(1.0 - ctx.eta) * y_a_abs * y_a_abs / (2.0 * ctx.v_s)).exp()
}

fn check_overlap(f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::domain("f", f, "0 <= f <= 1"))
    }
}

/// Holevo bound for two pure states with overlap `f`: the entropy of the
/// equal mixture, whose eigenvalues are `(1 ± f)/2`.
pub fn holevo(f: f64) -> Result<f64> {
    check_overlap(f)?;
    Ok(binary_entropy((1.0 - f) / 2.0))
}

/// `1 - χ(f)`, accurate when `f` is small.
fn holevo_deficit(f: f64) -> f64 {
    if f >= 1.0 {
        return 1.0;
    }
    ((1.0 + f) * f.ln_1p() + (1.0 - f) * (-f).ln_1p()) / (2.0 * LN_2)
}

/// Eve's information when she measures each ancilla separately:
/// `1 - h2((1 - √(1-f²))/2)`.
pub fn eve_info_individual(f: f64) -> Result<f64> {
    check_overlap(f)?;
    Ok(1.0 - individual_deficit(f))
}

/// `1 - I_AE(f)`.
fn individual_deficit(f: f64) -> f64 {
    let s = (1.0 - f * f).sqrt();
    // (1 - s)/2 without cancellation
    binary_entropy(f * f / (2.0 * (1.0 + s)))
}

fn eve_deficit(f: f64, attack: Attack) -> f64 {
    match attack {
        Attack::Collective => holevo_deficit(f),
        Attack::Individual => individual_deficit(f),
    }
}

/// Net rate (bits/symbol) of one announced pair under `attack`.
pub fn net_rate(y_a_abs: f64, y_b_abs: f64, ctx: &SecurityContext, attack: Attack) -> f64 {
    let f = overlap_f(y_a_abs, ctx);
    // Floor p so that a fully distinguishable Eve (deficit 0) never yields
    // a nonnegative rate through underflow.
    let p = bob_error_rate(y_a_abs, y_b_abs, ctx).max(f64::MIN_POSITIVE);
    eve_deficit(f, attack) - binary_entropy(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointAssessment {
    pub y_a_abs: f64,
    pub y_b_abs: f64,
    pub p: f64,
    pub f: f64,
    pub i_ab: f64,
    pub chi: f64,
    pub i_ae: f64,
    /// `I_AB - χ`.
    pub k_collective: f64,
    /// `I_AB - I_AE`.
    pub delta_i_individual: f64,
}

impl PointAssessment {
    pub fn net(&self, attack: Attack) -> f64 {
        match attack {
            Attack::Collective => self.k_collective,
            Attack::Individual => self.delta_i_individual,
        }
    }

    pub fn eve(&self, attack: Attack) -> f64 {
        match attack {
            Attack::Collective => self.chi,
            Attack::Individual => self.i_ae,
        }
    }
}

pub fn point_assess(y_a_abs: f64, y_b_abs: f64, ctx: &SecurityContext) -> Result<PointAssessment> {
    if !(y_a_abs >= 0.0 && y_b_abs >= 0.0) {
        return Err(Error::domain("|Y|", y_a_abs.min(y_b_abs), "|Y_A|, |Y_B| >= 0"));
    }
    let p = bob_error_rate(y_a_abs, y_b_abs, ctx);
    let f = overlap_f(y_a_abs, ctx);
    Ok(PointAssessment {
        y_a_abs,
        y_b_abs,
        p,
        f,
        i_ab: mutual_info_ab(p),
        chi: holevo(f)?,
        i_ae: eve_info_individual(f)?,
        k_collective: net_rate(y_a_abs, y_b_abs, ctx, Attack::Collective),
        delta_i_individual: net_rate(y_a_abs, y_b_abs, ctx, Attack::Individual),
    })
}

/// Eve's per-symbol information under `attack`, which depends on `|Y_A|`
/// alone.
pub fn eve_info(y_a_abs: f64, ctx: &SecurityContext, attack: Attack) -> Result<f64> {
    let f = overlap_f(y_a_abs, ctx);
    match attack {
        Attack::Collective => holevo(f),
        Attack::Individual => eve_info_individual(f),
    }
}

/// Smallest `|Y_B|` at which the net rate for `|Y_A|` becomes nonnegative,
/// or `None` if no `|Y_B| <= 20` reaches it.
///
/// The net rate is nondecreasing in `|Y_B|`, so bisection applies.
pub fn boundary(y_a_abs: f64, ctx: &SecurityContext, attack: Attack) -> Option<f64> {
    let net = |y_b: f64| net_rate(y_a_abs, y_b, ctx, attack);
    if net(0.0) >= 0.0 {
        return Some(0.0);
    }
    if net(BOUNDARY_Y_MAX) < 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, BOUNDARY_Y_MAX);
    while hi - lo > BOUNDARY_TOL {
        let mid = 0.5 * (lo + hi);
        if net(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub y_a: f64,
    pub collective: Option<f64>,
    pub individual: Option<f64>,
}

pub fn boundary_curve(ctx: &SecurityContext, y_a: &[f64]) -> Vec<BoundaryPoint> {
    y_a.par_iter()
        .map(|&a| BoundaryPoint {
            y_a: a,
            collective: boundary(a, ctx, Attack::Collective),
            individual: boundary(a, ctx, Attack::Individual),
        })
        .collect()
}

pub const BOUNDARY_CSV_HEADER: &str = "y_A,y_B_threshold_collective,y_B_threshold_individual";

/// Writes a boundary curve as CSV; a missing threshold is an empty field.
pub fn write_boundary_csv<W: std::io::Write>(mut w: W, curve: &[BoundaryPoint]) -> std::io::Result<()> {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    writeln!(w, "{BOUNDARY_CSV_HEADER}")?;
    for pt in curve {
        writeln!(w, "{},{},{}", pt.y_a, opt(pt.collective), opt(pt.individual))?;
    }
    Ok(())
}

/// Per-symbol averages over the raw (sifted, unselected) data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleRates {
    pub i_ab: f64,
    pub chi: f64,
    pub i_ae: f64,
}

impl EnsembleRates {
    pub fn eve(&self, attack: Attack) -> f64 {
        match attack {
            Attack::Collective => self.chi,
            Attack::Individual => self.i_ae,
        }
    }

    pub fn net(&self, attack: Attack) -> f64 {
        self.i_ab - self.eve(attack)
    }
}

/// Expectation of `I_AB`, `χ` and `I_AE` over `Y_A ~ N(0, V - 1/V)` and
/// `Y_B | Y_A ~ N(√η·Y_A, V_B^N)` by nested composite Gauss-Legendre
/// quadrature.
pub fn ensemble_rates(ctx: &SecurityContext) -> EnsembleRates {
    ensemble_rates_with_refine(ctx, 1)
}

/// Rule points per panel of the ensemble quadrature.
pub const ENSEMBLE_NODES: usize = 10;
/// Panels per standard deviation at `refine = 1`.
const ENSEMBLE_PANELS_PER_SD: f64 = 4.0;
/// Integration half-width in standard deviations.
const ENSEMBLE_SPAN_SD: f64 = 12.0;
/// Geometric grading levels toward `Y_A = 0`, where `χ` behaves like
/// `y²·log y`.
const ENSEMBLE_GRADING: i32 = 40;

fn panels_to_nodes(rule: &GaussLegendre, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(breaks.len() * ENSEMBLE_NODES);
    for w in breaks.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for &(x, wt) in rule.as_node_weight_pairs() {
            out.push((mid + half * x, wt * half));
        }
    }
    out
}

fn uniform_breaks(lo: f64, hi: f64, width: f64) -> Vec<f64> {
    let n = ((hi - lo) / width).ceil().max(1.0) as usize;
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// Same as [`ensemble_rates`] with `refine` times as many panels.
pub fn ensemble_rates_with_refine(ctx: &SecurityContext, refine: usize) -> EnsembleRates {
    let rule = GaussLegendre::new(std::num::NonZeroUsize::new(ENSEMBLE_NODES).expect("nonzero"));
    let refine = refine.max(1) as f64;
    let sa = ctx.estimate_variance().sqrt();
    let sb = ctx.v_b_noise.sqrt();
    let norm = |x: f64, s: f64| (-0.5 * x * x / (s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());

    // Outer integral over Y_A >= 0, doubled by symmetry.
    let width_a = sa / (ENSEMBLE_PANELS_PER_SD * refine);
    let mut breaks: Vec<f64> = (1..=ENSEMBLE_GRADING)
        .rev()
        .map(|k| width_a * 2f64.powi(-k))
        .collect();
    breaks.insert(0, 0.0);
    breaks.extend(uniform_breaks(width_a, ENSEMBLE_SPAN_SD * sa, width_a));
    let outer = panels_to_nodes(&rule, &breaks);

    let width_b = sb / (ENSEMBLE_PANELS_PER_SD * refine);
    let terms: Vec<[f64; 3]> = outer
        .par_iter()
        .map(|&(y_a, wa)| {
            let w = 2.0 * wa * norm(y_a, sa);
            let f = overlap_f(y_a, ctx);
            let mu = ctx.eta.sqrt() * y_a;
            let (lo, hi) = (mu - ENSEMBLE_SPAN_SD * sb, mu + ENSEMBLE_SPAN_SD * sb);
            // split at the |Y_B| kink
            let mut bb = if lo < 0.0 && hi > 0.0 {
                let mut left = uniform_breaks(lo, 0.0, width_b);
                left.pop();
                left.extend(uniform_breaks(0.0, hi, width_b));
                left
            } else {
                uniform_breaks(lo, hi, width_b)
            };
            bb.dedup();
            let inner: f64 = panels_to_nodes(&rule, &bb)
                .into_iter()
                .map(|(y_b, wb)| wb * norm(y_b - mu, sb) * mutual_info_ab(bob_error_rate(y_a, y_b.abs(), ctx)))
                .sum();
            [
                w * inner,
                w * binary_entropy((1.0 - f) / 2.0),
                w * (1.0 - individual_deficit(f)),
            ]
        })
        .collect();
    let mut tot = [0.0; 3];
    for t in &terms {
        for k in 0..3 {
            tot[k] += t[k];
        }
    }
    EnsembleRates {
        i_ab: tot[0],
        chi: tot[1],
        i_ae: tot[2],
    }
}

/// Monte-Carlo estimate with standard errors, used to cross-check the
/// quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: EnsembleRates,
    pub stderr: EnsembleRates,
}

pub fn ensemble_rates_mc(ctx: &SecurityContext, n: usize, seed: u64) -> McEstimate {
    let sa = ctx.estimate_variance().sqrt();
    let sb = ctx.v_b_noise.sqrt();
    let blocks = n.div_ceil(BLOCK);
    // per-block [sum, sum of squares] for (i_ab, chi, i_ae), reduced in order
    let partial: Vec<[f64; 6]> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let mut acc = [0.0; 6];
            for _ in 0..BLOCK.min(n - b * BLOCK) {
                let y_a = sa * rng.sample::<f64, _>(StandardNormal);
                let y_b = ctx.eta.sqrt() * y_a + sb * rng.sample::<f64, _>(StandardNormal);
                let f = overlap_f(y_a.abs(), ctx);
                let vals = [
                    mutual_info_ab(bob_error_rate(y_a.abs(), y_b.abs(), ctx)),
                    binary_entropy((1.0 - f) / 2.0),
                    1.0 - individual_deficit(f),
                ];
                for (k, v) in vals.into_iter().enumerate() {
                    acc[2 * k] += v;
                    acc[2 * k + 1] += v * v;
                }
            }
            acc
        })
        .collect();
    let mut tot = [0.0; 6];
    for acc in &partial {
        for (t, a) in tot.iter_mut().zip(acc) {
            *t += a;
        }
    }
    let nf = n as f64;
    let stat = |k: usize| {
        let mean = tot[2 * k] / nf;
        let var = (tot[2 * k + 1] / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
        (mean, (var / nf).sqrt())
    };
    let (a, b, c) = (stat(0), stat(1), stat(2));
    McEstimate {
        mean: EnsembleRates {
            i_ab: a.0,
            chi: b.0,
            i_ae: c.0,
        },
        stderr: EnsembleRates {
            i_ab: a.1,
            chi: b.1,
            i_ae: c.1,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// η = 0.8, δ = 0.14, V_s = 0.12 exactly.
    fn ctx80() -> SecurityContext {
        let ch = ChannelModel::new(0.8, 0.14).unwrap();
        SecurityContext::new(&ch, 1.0 / 0.12, Attack::Collective).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn outcome_density() {
        let ctx = ctx80();
        assert!(close(ctx.v_b_noise, 0.436, 1e-12));
        let peak = bob_outcome_density(0.8f64.sqrt() * 1.3, 1.3, &ctx);
        assert!(close(peak, 1.0 / (2.0 * std::f64::consts::PI * 0.436).sqrt(), 1e-12));
        // trapezoid over ±12σ
        let (lo, h) = (-12.0 * 0.436f64.sqrt(), 1e-4);
        let steps = (24.0 * 0.436f64.sqrt() / h) as usize;
        let total: f64 = (0..=steps)
            .map(|i| {
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                w * bob_outcome_density(lo + i as f64 * h, 0.0, &ctx)
            })
            .sum::<f64>()
            * h;
        assert!(close(total, 1.0, 1e-9), "{total}");
    }

    #[test]
    fn error_rate_examples() {
        let ctx = ctx80();
        assert_eq!(bob_error_rate(0.0, 3.0, &ctx), 0.5);
        assert!(close(bob_error_rate(1.0, 1.0, &ctx), 0.016_256_425_486_110_032, 1e-15));
        let mut last = 0.5;
        for t in 1..200 {
            let p = bob_error_rate(t as f64 * 0.05, 1.0, &ctx);
            assert!(p <= last);
            last = p;
        }
        assert!(bob_error_rate(1e3, 1e3, &ctx) < 1e-300);
    }

    #[test]
    fn mutual_info_examples() {
        assert_eq!(mutual_info_ab(0.5), 0.0);
        assert_eq!(mutual_info_ab(0.0), 1.0);
        assert!(close(mutual_info_ab(0.0163), 0.879_871_332_678_772_4, 1e-12));
    }

    #[test]
    fn overlap_examples() {
        let ctx = ctx80();
        assert_eq!(overlap_f(0.0, &ctx), 1.0);
        assert!(close(overlap_f(1.0, &ctx), 0.434_598_208_507_078_2, 1e-14));
        let perfect = SecurityContext::new(&ChannelModel::lossless(), 8.35, Attack::Collective).unwrap();
        assert_eq!(overlap_f(4.0, &perfect), 1.0);
    }

    #[test]
    fn holevo_examples() {
        assert_eq!(holevo(0.0).unwrap(), 1.0);
        assert_eq!(holevo(1.0).unwrap(), 0.0);
        assert!(close(holevo(0.5).unwrap(), 0.811_278_124_459_132_9, 1e-14));
        assert!(holevo(1.1).is_err());
        assert!(holevo(-0.1).is_err());
        for f in [0.0, 1e-9, 0.3, 0.99] {
            assert!(close(holevo_deficit(f), 1.0 - holevo(f).unwrap(), 1e-14));
        }
    }

    #[test]
    fn individual_examples() {
        assert!(close(eve_info_individual(0.0).unwrap(), 1.0, 1e-15));
        assert_eq!(eve_info_individual(1.0).unwrap(), 0.0);
        assert!(close(eve_info_individual(0.6).unwrap(), 0.531_004_406_410_718_8, 1e-14));
        assert!(eve_info_individual(2.0).is_err());
    }

    #[test]
    fn point_assessment_examples() {
        let ctx = ctx80();
        let pa = point_assess(1.0, 1.0, &ctx).unwrap();
        assert!(close(pa.i_ab, 0.880_129_173_385_985_8, 1e-12));
        assert!(close(pa.chi, 0.859_104_919_521_259_4, 1e-12));
        assert!(close(pa.i_ae, 0.714_930_832_125_056_1, 1e-12));
        assert!(close(pa.k_collective, 0.021_024_253_864_726_45, 1e-12));
        assert!(close(pa.k_collective, pa.i_ab - pa.chi, 1e-14));
        assert!(close(pa.delta_i_individual, pa.i_ab - pa.i_ae, 1e-14));

        let zero = point_assess(0.0, 2.0, &ctx).unwrap();
        assert_eq!(zero.k_collective, 0.0);
        assert_eq!(zero.delta_i_individual, 0.0);

        let perfect = SecurityContext::new(&ChannelModel::lossless(), 8.35, Attack::Collective).unwrap();
        let pa = point_assess(10.0, 10.0, &perfect).unwrap();
        assert!(close(pa.k_collective, 1.0, 1e-12));
        assert!(point_assess(-1.0, 1.0, &ctx).is_err());
    }

    #[test]
    fn net_rate_keeps_sign_where_terms_round_to_one() {
        let ctx = ctx80();
        // Y_A = 5: f ~ 1e-9, so I_AB and χ are both 1.0 in f64 at large Y_B
        let pa = point_assess(5.0, 19.0, &ctx).unwrap();
        assert_eq!(pa.i_ab, 1.0);
        assert!(pa.chi > 1.0 - 1e-15);
        assert!(pa.k_collective > 0.0);
        assert!(net_rate(5.0, 0.5, &ctx, Attack::Collective) < 0.0);
    }

    #[test]
    fn boundary_lossless_is_zero() {
        let ctx = SecurityContext::new(&ChannelModel::lossless(), 8.35, Attack::Collective).unwrap();
        for a in [0.1, 1.0, 4.0] {
            assert_eq!(boundary(a, &ctx, Attack::Collective), Some(0.0));
            assert_eq!(boundary(a, &ctx, Attack::Individual), Some(0.0));
        }
    }

    #[test]
    fn boundary_brackets_sign_change() {
        let ctx = ctx80();
        for i in 1..=50 {
            let a = 0.1 * i as f64;
            for attack in [Attack::Collective, Attack::Individual] {
                if let Some(t) = boundary(a, &ctx, attack) {
                    if t > 1e-6 {
                        assert!(net_rate(a, t - 1e-6, &ctx, attack) < 0.0);
                    }
                    assert!(net_rate(a, t + 1e-6, &ctx, attack) >= 0.0);
                }
            }
            let c = boundary(a, &ctx, Attack::Collective);
            let ind = boundary(a, &ctx, Attack::Individual);
            if let Some(c) = c {
                assert!(ind.unwrap() <= c + BOUNDARY_TOL, "y_A={a}");
            }
        }
    }

    #[test]
    fn boundary_csv_leaves_missing_thresholds_empty() {
        let curve = [
            BoundaryPoint {
                y_a: 0.5,
                collective: None,
                individual: Some(1.25),
            },
        ];
        let mut out = Vec::new();
        write_boundary_csv(&mut out, &curve).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            format!("{BOUNDARY_CSV_HEADER}\n0.5,,1.25\n")
        );
    }

    #[test]
    fn ensemble_lossless_has_no_eve_information() {
        let ctx = SecurityContext::new(&ChannelModel::lossless(), 8.35, Attack::Collective).unwrap();
        let r = ensemble_rates(&ctx);
        assert_eq!(r.chi, 0.0);
        assert_eq!(r.i_ae, 0.0);
        assert!(r.i_ab > 0.0 && r.i_ab < 1.0);
    }

    #[test]
    fn ensemble_quadrature_is_converged() {
        let ctx = ctx80();
        let a = ensemble_rates_with_refine(&ctx, 1);
        let b = ensemble_rates_with_refine(&ctx, 2);
        assert!(close(a.i_ab, b.i_ab, 1e-9), "{a:?} {b:?}");
        assert!(close(a.chi, b.chi, 1e-9), "{a:?} {b:?}");
        assert!(close(a.i_ae, b.i_ae, 1e-9), "{a:?} {b:?}");
    }

    #[test]
    fn mc_is_reproducible() {
        let ctx = ctx80();
        assert_eq!(ensemble_rates_mc(&ctx, 10_000, 3), ensemble_rates_mc(&ctx, 10_000, 3));
    }
}
