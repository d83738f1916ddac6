use cvqkd::distill::cascade::{cascade_reconcile, CascadeParams};
use cvqkd::distill::postselect::keep_all;
use cvqkd::distill::privacy::{final_key_length, key_tag, DEFAULT_EPSILON};
use cvqkd::distill::{
    encode_bits, postselect, privacy_amplify, run_pipeline, sift, PipelineOptions, SiftedPair, Stage, ToeplitzHash,
};
use cvqkd::rng::seeded;
use cvqkd::security::{net_rate, Attack, SecurityContext};
use cvqkd::source::{measure, Basis, ChannelModel, MeasureSeeds, Measurements, SourceModel, TimingConfig};
use proptest::prelude::*;
use rand::Rng;

fn ctx(eta: f64, delta: f64, v: f64) -> SecurityContext {
    SecurityContext::new(&ChannelModel::new(eta, delta).unwrap(), v, Attack::Collective).unwrap()
}

fn run(eta: f64, delta: f64, v: f64, timing: TimingConfig, n: usize, seed: u64) -> Measurements {
    measure(
        &SourceModel::effective(v).unwrap(),
        &ChannelModel::new(eta, delta).unwrap(),
        &timing,
        n,
        MeasureSeeds::from_root(seed),
    )
    .unwrap()
}

fn pair(basis: Basis, y_a: f64, y_b: f64) -> SiftedPair {
    SiftedPair {
        index: 0,
        basis,
        y_a,
        y_b,
    }
}

#[test]
fn per_symbol_sifting_keeps_half() {
    let n = 100_000;
    let timing = TimingConfig::new(5e-7, 5e-7, 2e6).unwrap();
    let m = run(0.8, 0.14, 8.35, timing, n, 31);
    let kept = sift(&m.alice, &m.bob, 1.0).unwrap().len() as f64;
    let sigma = (n as f64 * 0.25).sqrt();
    assert!((kept - n as f64 / 2.0).abs() < 3.0 * sigma, "{kept}");
}

#[test]
fn encoding_examples() {
    let (a, b) = encode_bits(&[
        pair(Basis::Phase, 2.0, 1.5),
        pair(Basis::Amplitude, 2.0, -1.8),
        pair(Basis::Phase, -0.3, 0.4),
    ])
    .unwrap();
    assert_eq!(a, vec![true, true, false]);
    assert_eq!(b, vec![true, true, true]);
}

#[test]
fn noiseless_amplitude_data_agrees_after_the_sign_flip() {
    let m = run(1.0, 0.0, 1e6, TimingConfig::new(1e-6, 5e-7, 2e6).unwrap(), 20_000, 5);
    let pairs = sift(&m.alice, &m.bob, 1.0).unwrap();
    let amplitude = pairs.iter().filter(|p| p.basis == Basis::Amplitude).count();
    assert!(amplitude > 1000);
    assert!(pairs
        .iter()
        .filter(|p| p.basis == Basis::Amplitude)
        .all(|p| p.y_a.signum() != p.y_b.signum()));
    let (a, b) = encode_bits(&pairs).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noiseless_channel_keeps_all_nonzero_pairs() {
    let m = run(1.0, 0.0, 8.35, TimingConfig::default(), 30_000, 8);
    let pairs = sift(&m.alice, &m.bob, 1.0).unwrap();
    let sel = postselect(&pairs, &ctx(1.0, 0.0, 8.35), Attack::Collective).unwrap();
    assert_eq!(sel.kept.len(), pairs.len());
}

#[test]
fn single_flip_costs_one_binary_search() {
    let mut rng = seeded(404);
    let alice: Vec<bool> = (0..1024).map(|_| rng.gen()).collect();
    let params = CascadeParams::for_qber(0.73 / 32.0, 4, 1).unwrap();
    assert_eq!(params.k1, 32);
    let clean = cascade_reconcile(&alice, &alice, 0.73 / 32.0, 4, 1).unwrap();
    assert_eq!(clean.leakage_bits, clean.top_level_parities);
    assert_eq!(clean.corrections, 0);
    for pos in [0, 17, 511, 1023] {
        let mut bob = alice.clone();
        bob[pos] = !bob[pos];
        let out = cascade_reconcile(&alice, &bob, 0.73 / 32.0, 4, 1).unwrap();
        assert_eq!(out.bits, alice);
        assert_eq!(out.corrections, 1);
        // Binary search within a 32-bit block discloses log2(32) parities.
        assert_eq!(out.leakage_bits, clean.leakage_bits + 5, "flip at {pos}");
    }
}

#[test]
fn zero_error_pa_length_is_n_minus_128() {
    for n in [200, 1000, 4096] {
        assert_eq!(final_key_length(n, 0.0, 0, DEFAULT_EPSILON), n - 128);
    }
    assert_eq!(final_key_length(100, 0.0, 0, DEFAULT_EPSILON), 0);
}

#[test]
fn key_tags_depend_on_length_and_content() {
    let k = vec![true, false, true];
    assert_eq!(key_tag(&k, 9), key_tag(&k, 9));
    assert_ne!(key_tag(&k, 9), key_tag(&k[..2], 9));
    assert_ne!(key_tag(&k, 9), key_tag(&[true, false, false], 9));
    assert_ne!(key_tag(&[], 9), key_tag(&[false], 9));
}

fn pipeline_at(eta: f64, delta: f64, seed: u64, postselect: bool) -> cvqkd::distill::PipelineResult {
    let m = run(eta, delta, 8.35, TimingConfig::default(), 100_000, seed);
    let opts = PipelineOptions {
        postselect,
        seed,
        ..PipelineOptions::default()
    };
    run_pipeline(&m, &ctx(eta, delta, 8.35), &opts).unwrap()
}

#[test]
fn pipeline_invariants_at_80_percent() {
    let r = pipeline_at(0.8, 0.14, 3, true);
    assert!(r.reconciled, "errors {} of {} kept, qber_est {}", r.bit_errors, r.selection.kept.len(), r.qber_est);
    assert_eq!(r.alice_key, r.bob_key);
    let c = ctx(0.8, 0.14, 8.35);
    let kept: std::collections::HashSet<usize> = r.selection.kept.iter().copied().collect();
    for (i, p) in r.sifted.iter().enumerate() {
        let net = net_rate(p.y_a.abs(), p.y_b.abs(), &c, Attack::Collective);
        assert_eq!(kept.contains(&i), net > 0.0, "pair {i}");
    }
    let n = r.selection.kept.len();
    let bound = n as f64 - r.leakage_bits as f64 - n as f64 * r.eve_bits_per_symbol;
    assert!(r.alice_key.len() as f64 <= bound.max(0.0), "{} > {bound}", r.alice_key.len());

    let rows = &r.report.rows;
    assert_eq!(rows.len(), 4);
    for w in rows.windows(2) {
        assert!(w[1].retained_fraction <= w[0].retained_fraction);
    }
    for row in rows.iter().filter(|row| row.stage != Stage::Raw) {
        let expect = 2000.0 * row.retained_fraction * row.net.max(0.0);
        assert!((row.rate_kbps - expect).abs() < 1e-9 * expect.max(1.0), "{:?}", row.stage);
    }
    assert_eq!(r.report.row(Stage::Raw).rate_kbps, 2000.0);
}

#[test]
fn raw_40_percent_data_is_infeasible_without_postselection() {
    let r = pipeline_at(0.4, 0.11, 4, false);
    assert!(r.infeasible);
    assert!(r.report.row(Stage::PostSelected).net < 0.0);
    assert!(r.alice_key.is_empty());
}

#[test]
fn pipeline_is_deterministic() {
    let a = pipeline_at(0.8, 0.14, 6, true);
    let b = pipeline_at(0.8, 0.14, 6, true);
    assert_eq!(a.alice_key, b.alice_key);
    assert_eq!(a.leakage_bits, b.leakage_bits);
    assert_eq!(a.report, b.report);
}

fn pairs_strategy() -> impl Strategy<Value = Vec<SiftedPair>> {
    proptest::collection::vec(
        (any::<bool>(), 0.01f64..6.0, 0.01f64..6.0, any::<bool>(), any::<bool>()),
        1..200,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (phase, a, b, sa, sb))| SiftedPair {
                index: i as u64,
                basis: if phase { Basis::Phase } else { Basis::Amplitude },
                y_a: if sa { a } else { -a },
                y_b: if sb { b } else { -b },
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn postselection_is_idempotent(pairs in pairs_strategy(), eta in 0.3f64..1.0, individual in any::<bool>()) {
        let attack = if individual { Attack::Individual } else { Attack::Collective };
        let c = ctx(eta, 0.1, 8.35);
        let first = postselect(&pairs, &c, attack).unwrap();
        let kept: Vec<SiftedPair> = first.kept.iter().map(|&i| pairs[i]).collect();
        let second = postselect(&kept, &c, attack).unwrap();
        prop_assert_eq!(second.kept.len(), kept.len());
        let all = keep_all(&pairs, &c, attack).unwrap();
        prop_assert_eq!(all.kept.len(), pairs.len());
    }

    #[test]
    fn toeplitz_hash_is_linear(n in 1usize..600, m_frac in 0.0f64..1.0, seed in any::<u64>(), xs in any::<u64>()) {
        let m = ((n as f64) * m_frac) as usize;
        let h = ToeplitzHash::from_seed(n, m, seed);
        let mut rng = seeded(xs);
        let x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let y: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let xy: Vec<bool> = x.iter().zip(&y).map(|(a, b)| a ^ b).collect();
        let lhs = h.hash(&xy);
        let rhs: Vec<bool> = h.hash(&x).iter().zip(h.hash(&y)).map(|(a, b)| a ^ b).collect();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn final_length_respects_the_bound(n in 0usize..100_000, eve in 0.0f64..1.0, leak in 0u64..50_000, log_eps in 1u32..200) {
        let eps = 2f64.powi(-(log_eps as i32));
        let m = final_key_length(n, eve, leak, eps);
        prop_assert!(m as f64 <= n as f64 - leak as f64 - n as f64 * eve + 1e-9 || m == 0);
        let bits = vec![false; n.min(2000)];
        let key = privacy_amplify(&bits, eve, leak.min(bits.len() as u64), eps, 1);
        prop_assert_eq!(key.len(), final_key_length(bits.len(), eve, leak.min(bits.len() as u64), eps));
    }

    #[test]
    fn cascade_success_means_equal_strings(n in 64usize..3000, flips in 0usize..40, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let alice: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let mut bob = alice.clone();
        for _ in 0..flips.min(n / 16) {
            let i = rng.gen_range(0..n);
            bob[i] = !bob[i];
        }
        let qber = ((flips.min(n / 16) as f64) / n as f64).clamp(0.005, 0.2);
        match cascade_reconcile(&alice, &bob, qber, 4, seed) {
            Ok(out) => {
                prop_assert_eq!(&out.bits, &alice);
                prop_assert!(out.leakage_bits >= out.top_level_parities);
            }
            Err(cvqkd::Error::ResidualMismatch { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
