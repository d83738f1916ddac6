use cvqkd::rng::seeded;
use cvqkd::source::{
    alice_estimate, apply_channel, basis_schedule, calibrate, covariance_4d, forward_variances, sample_pairs,
    squeezing_db, Basis, ChannelModel, SourceModel, TimingConfig,
};
use proptest::prelude::*;

const N: usize = 1_000_000;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample covariance and its standard error for zero-mean data.
fn cov_with_se(a: &[f64], b: &[f64]) -> (f64, f64) {
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let m = mean(&prods);
    let var = prods.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (prods.len() - 1) as f64;
    (m, (var / prods.len() as f64).sqrt())
}

#[test]
fn squeezing_zero_is_shot_noise() {
    assert_eq!(squeezing_db(0.0).unwrap(), 0.0);
    assert!(squeezing_db(-0.1).is_err());
}

#[test]
fn correlation_variance_identity() {
    for v in [1.0, 1.5, 8.35, 40.0] {
        let m = SourceModel::effective(v).unwrap();
        let c = covariance_4d(&m);
        let diff = c[1][1] + c[3][3] - 2.0 * c[1][3];
        assert!((diff - (2.0 * v - 2.0 * (v * v - 1.0).sqrt())).abs() < 1e-12);
        let r = 0.5 * v.acosh();
        assert!((diff - 2.0 * (-2.0 * r).exp()).abs() < 1e-9);
    }
}

#[test]
fn sampled_covariance_matches_model() {
    let model = SourceModel::effective(8.35).unwrap();
    let cov = covariance_4d(&model);
    let pts = sample_pairs(&model, N, 7).unwrap();
    let cols: [Vec<f64>; 4] = [
        pts.iter().map(|p| p.xa).collect(),
        pts.iter().map(|p| p.ya).collect(),
        pts.iter().map(|p| p.xb).collect(),
        pts.iter().map(|p| p.yb).collect(),
    ];
    for i in 0..4 {
        for j in i..4 {
            let (c, se) = cov_with_se(&cols[i], &cols[j]);
            assert!((c - cov[i][j]).abs() < 3.0 * se, "({i},{j}) {c} vs {} se {se}", cov[i][j]);
        }
    }
}

#[test]
fn vacuum_source_is_uncorrelated() {
    let pts = sample_pairs(&SourceModel::effective(1.0).unwrap(), 200_000, 3).unwrap();
    let xa: Vec<f64> = pts.iter().map(|p| p.xa).collect();
    let xb: Vec<f64> = pts.iter().map(|p| p.xb).collect();
    let ya: Vec<f64> = pts.iter().map(|p| p.ya).collect();
    let yb: Vec<f64> = pts.iter().map(|p| p.yb).collect();
    for (a, b) in [(&xa, &xb), (&ya, &yb), (&xa, &yb)] {
        let (c, se) = cov_with_se(a, b);
        assert!(c.abs() < 3.0 * se, "{c} se {se}");
    }
}

#[test]
fn sampling_rejects_empty_runs() {
    assert!(sample_pairs(&SourceModel::effective(2.0).unwrap(), 0, 1).is_err());
}

#[test]
fn conditional_variance_by_sampling() {
    let v = 8.35;
    let model = SourceModel::effective(v).unwrap();
    let alpha = model.alpha();
    let pts = sample_pairs(&model, N, 11).unwrap();
    let resid: Vec<f64> = pts.iter().map(|p| p.yb - alpha * p.ya).collect();
    let (var, se) = cov_with_se(&resid, &resid);
    assert!((var - 1.0 / v).abs() < 3.0 * se, "{var} vs {}", 1.0 / v);
}

fn channel_stats(v: f64, eta: f64, delta: f64, seed: u64) -> (f64, f64, f64, f64) {
    let ch = ChannelModel::new(eta, delta).unwrap();
    let pts = sample_pairs(&SourceModel::effective(v).unwrap(), N, seed).unwrap();
    let mut rng = seeded(seed ^ 0xC4A7);
    let (bob, eve): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .map(|p| {
            let o = apply_channel(p.yb, &ch, &mut rng);
            (o.bob, o.eve)
        })
        .unzip();
    let var_b = cov_with_se(&bob, &bob).0;
    let var_e = cov_with_se(&eve, &eve).0;
    let cov_be = cov_with_se(&bob, &eve).0;
    let kurt = bob.iter().map(|x| x.powi(4)).sum::<f64>() / N as f64 / (var_b * var_b) - 3.0;
    (var_b, var_e, cov_be, kurt)
}

#[test]
fn channel_reproduces_measured_bob_variance_at_80_percent() {
    let (var_b, ..) = channel_stats(8.35, 0.8, 0.14, 21);
    assert!((var_b - 7.02).abs() < 0.03, "{var_b}");
}

#[test]
fn channel_reproduces_measured_bob_variance_at_40_percent() {
    let (var_b, ..) = channel_stats(8.35, 0.4, 0.11, 22);
    assert!((var_b - 4.05).abs() < 0.03, "{var_b}");
}

#[test]
fn eve_tap_is_the_beam_splitter_complement() {
    let (v, eta, delta) = (8.35, 0.6, 0.1);
    let (var_b, var_e, cov_be, kurt) = channel_stats(v, eta, delta, 23);
    let var_b_expected = eta * v + 1.0 - eta + delta;
    let var_e_expected = (1.0 - eta) * v + eta;
    let cov_expected = (eta * (1.0 - eta)).sqrt() * (v - 1.0);
    // Standard errors of Gaussian second moments: sqrt(2/N)·σ².
    let se = |s2: f64| (2.0 / N as f64).sqrt() * s2;
    assert!((var_b - var_b_expected).abs() < 3.0 * se(var_b_expected));
    assert!((var_e - var_e_expected).abs() < 3.0 * se(var_e_expected));
    assert!((cov_be - cov_expected).abs() < 3.0 * (var_b_expected * var_e_expected / N as f64).sqrt() * 1.5);
    // Excess kurtosis of a Gaussian has standard error sqrt(24/N).
    assert!(kurt.abs() < 3.0 * (24.0 / N as f64).sqrt(), "{kurt}");
}

#[test]
fn alice_estimate_variance_example() {
    let v = 8.35;
    let pts = sample_pairs(&SourceModel::effective(v).unwrap(), 200_000, 5).unwrap();
    let est: Vec<f64> = pts.iter().map(|p| alice_estimate(p.ya, v)).collect();
    let (var, se) = cov_with_se(&est, &est);
    assert!((var - (v - 1.0 / v)).abs() < 3.0 * se);
    assert!((v - 1.0 / v - 8.23).abs() < 0.005);
}

#[test]
fn default_timing_gives_ten_thousand_symbol_blocks() {
    let t = TimingConfig::default();
    assert_eq!(t.block_len(), 10_000);
    let per_symbol = TimingConfig::new(5e-7, 5e-7, 2e6).unwrap();
    assert_eq!(per_symbol.block_len(), 1);
}

#[test]
fn x_basis_block_fraction_is_binomial() {
    let t = TimingConfig::new(1e-6, 1e-6, 1e6).unwrap();
    let n_blocks = 1000;
    let s = basis_schedule(&t, n_blocks, &mut seeded(99));
    let x = s.iter().filter(|b| **b == Basis::Amplitude).count() as f64;
    let sigma = (n_blocks as f64 * 0.25).sqrt();
    assert!((x - 500.0).abs() < 3.0 * sigma, "{x}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn calibrate_inverts_the_forward_model(v in 1.2f64..60.0, eta in 0.05f64..=1.0, delta in 0.0f64..1.0) {
        let ch = ChannelModel::new(eta, delta).unwrap();
        let (va, vb) = forward_variances(v, &ch);
        let r = calibrate(va, vb, eta).unwrap();
        prop_assert!((r.v - v).abs() < 1e-9 * v.max(1.0), "{} vs {v}", r.v);
        prop_assert!((r.delta - delta).abs() < 1e-9, "{} vs {delta}", r.delta);
    }

    #[test]
    fn covariance_is_symmetric_positive_definite(v in 1.0f64..1e4) {
        let c = covariance_4d(&SourceModel::effective(v).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                prop_assert_eq!(c[i][j], c[j][i]);
            }
        }
        // The matrix splits into two 2x2 blocks with eigenvalues V ± c.
        let off = (v * v - 1.0).sqrt();
        prop_assert!((c[0][2] + off).abs() < 1e-9 * v && (c[1][3] - off).abs() < 1e-9 * v);
        prop_assert!(c[0][1] == 0.0 && c[0][3] == 0.0 && c[1][2] == 0.0 && c[2][3] == 0.0);
        prop_assert!(v - off >= 0.0);
    }

    #[test]
    fn lossless_channel_is_exact(x in -50.0f64..50.0, seed in any::<u64>()) {
        let out = apply_channel(x, &ChannelModel::lossless(), &mut seeded(seed));
        prop_assert_eq!(out.bob, x);
    }
}
