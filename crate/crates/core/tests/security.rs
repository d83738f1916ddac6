use cvqkd::security::{
    boundary, boundary_curve, ensemble_rates, ensemble_rates_mc, eve_info_individual, holevo, mutual_info_ab,
    net_rate, overlap_f, point_assess, bob_error_rate, write_boundary_csv, Attack, SecurityContext,
    BOUNDARY_CSV_HEADER,
};
use cvqkd::source::ChannelModel;
use cvqkd::wigner::{overlap_numeric, WignerSpec};
use proptest::prelude::*;

fn ctx(eta: f64, delta: f64, v: f64) -> SecurityContext {
    SecurityContext::new(&ChannelModel::new(eta, delta).unwrap(), v, Attack::Collective).unwrap()
}

#[test]
fn eve_bounds_on_a_dense_grid() {
    let n = 10_000;
    for i in 0..=n {
        let f = i as f64 / n as f64;
        let (chi, iae) = (holevo(f).unwrap(), eve_info_individual(f).unwrap());
        if i == 0 || i == n {
            assert!((chi - iae).abs() < 1e-12, "f={f}");
        } else {
            assert!(iae < chi, "f={f}: {iae} vs {chi}");
        }
    }
}

#[test]
fn out_of_range_overlap_is_rejected() {
    for f in [-0.1, 1.1, f64::NAN] {
        assert!(holevo(f).is_err());
        assert!(eve_info_individual(f).is_err());
    }
}

#[test]
fn perfect_channel_rate_approaches_one() {
    let c = ctx(1.0, 0.0, 8.35);
    let pa = point_assess(5.0, 5.0, &c).unwrap();
    assert!(pa.k_collective > 0.999_999, "{}", pa.k_collective);
    assert_eq!(pa.chi, 0.0);
}

#[test]
fn individual_boundary_never_exceeds_collective() {
    let c = ctx(0.8, 0.14, 8.35);
    for i in 1..=100 {
        let y_a = 0.05 * i as f64;
        let col = boundary(y_a, &c, Attack::Collective);
        let ind = boundary(y_a, &c, Attack::Individual);
        match (col, ind) {
            (Some(a), Some(b)) => assert!(b <= a + 1e-9, "y_A={y_a}: {b} > {a}"),
            (Some(_), None) => panic!("y_A={y_a}: collective threshold exists but individual does not"),
            _ => {}
        }
    }
}

#[test]
fn boundary_matches_brute_force_scan() {
    let c = ctx(0.6, 0.1, 8.35);
    let step = 1e-4;
    for y_a in [0.05, 0.3, 1.0, 2.5] {
        for attack in [Attack::Collective, Attack::Individual] {
            let scan = (0..=200_000)
                .map(|k| k as f64 * step)
                .find(|&y_b| net_rate(y_a, y_b, &c, attack) >= 0.0);
            match (boundary(y_a, &c, attack), scan) {
                (Some(t), Some(s)) => assert!(t <= s + 1e-9 && s - t <= step + 1e-9, "{y_a} {attack:?}: {t} vs {s}"),
                (None, None) => {}
                other => panic!("{y_a} {attack:?}: {other:?}"),
            }
        }
    }
}

#[test]
fn boundary_csv_for_lossless_channel_is_zero() {
    let c = ctx(1.0, 0.0, 8.35);
    let curve = boundary_curve(&c, &[0.5, 1.0, 2.0]);
    let mut out = Vec::new();
    write_boundary_csv(&mut out, &curve).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(BOUNDARY_CSV_HEADER));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(f[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn ensemble_quadrature_agrees_with_monte_carlo() {
    for c in [ctx(0.8, 0.14, 8.35), ctx(0.4, 0.11, 8.35), ctx(0.95, 0.02, 3.0)] {
        let q = ensemble_rates(&c);
        let mc = ensemble_rates_mc(&c, 1_000_000, 2024);
        for (name, a, m, se) in [
            ("I_AB", q.i_ab, mc.mean.i_ab, mc.stderr.i_ab),
            ("chi", q.chi, mc.mean.chi, mc.stderr.chi),
            ("I_AE", q.i_ae, mc.mean.i_ae, mc.stderr.i_ae),
        ] {
            assert!((a - m).abs() < 3.0 * se, "{name} at eta={}: {a} vs {m} ± {se}", c.eta);
        }
    }
}

#[test]
fn ensemble_individual_information_is_below_holevo() {
    let r = ensemble_rates(&ctx(0.8, 0.14, 8.35));
    assert!(r.i_ae < r.chi);
    assert!(r.net(Attack::Individual) > r.net(Attack::Collective));
}

#[test]
fn wigner_overlap_matches_closed_form_on_a_grid() {
    for y_a in [0.0, 0.75, 1.5, 2.25, 3.0] {
        for eta in [0.2, 0.4, 0.6, 0.8, 1.0] {
            for v_s in [0.05, 0.2875, 0.525, 0.7625, 1.0] {
                let c = ctx(eta, 0.0, 1.0 / v_s);
                let f = overlap_f(y_a, &c);
                let (plus, minus) = WignerSpec::eve_pair((1.0 - eta).sqrt() * y_a, 1.0 / v_s).unwrap();
                let f2 = overlap_numeric(&plus, &minus).unwrap();
                assert!((f2 - f * f).abs() <= 1e-6 * (f * f).max(1e-300), "{y_a} {eta} {v_s}: {f2} vs {}", f * f);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn error_rate_is_nonincreasing_in_the_product(a in 0.0f64..6.0, b in 0.0f64..6.0, scale in 1.0f64..3.0) {
        let c = ctx(0.8, 0.14, 8.35);
        let p1 = bob_error_rate(a, b, &c);
        let p2 = bob_error_rate(a * scale, b, &c);
        prop_assert!(p2 <= p1);
        prop_assert!((0.0..=0.5).contains(&p1));
    }

    #[test]
    fn mutual_information_is_nonincreasing_in_p(p in 0.0f64..0.5, dp in 0.0f64..0.5) {
        let q = (p + dp).min(0.5);
        prop_assert!(mutual_info_ab(q) <= mutual_info_ab(p) + 1e-15);
    }

    #[test]
    fn eve_information_is_nonincreasing_in_f(f in 0.0f64..1.0, df in 0.0f64..1.0) {
        let g = (f + df).min(1.0);
        prop_assert!(holevo(g).unwrap() <= holevo(f).unwrap() + 1e-15);
        prop_assert!(eve_info_individual(g).unwrap() <= eve_info_individual(f).unwrap() + 1e-15);
        prop_assert!(eve_info_individual(f).unwrap() <= holevo(f).unwrap() + 1e-15);
    }

    #[test]
    fn overlap_monotone_in_amplitude_and_transmittivity(y in 0.0f64..5.0, dy in 0.0f64..2.0, eta in 0.05f64..1.0, deta in 0.0f64..0.5) {
        let c = ctx(eta, 0.1, 8.35);
        prop_assert!(overlap_f(y + dy, &c) <= overlap_f(y, &c));
        let c2 = ctx((eta + deta).min(1.0), 0.1, 8.35);
        prop_assert!(overlap_f(y, &c2) >= overlap_f(y, &c));
    }

    #[test]
    fn assessment_fields_stay_in_range(a in 0.0f64..8.0, b in 0.0f64..8.0, eta in 0.05f64..=1.0, delta in 0.0f64..0.5) {
        let pa = point_assess(a, b, &ctx(eta, delta, 8.35)).unwrap();
        prop_assert!((0.0..=0.5).contains(&pa.p));
        prop_assert!((0.0..=1.0).contains(&pa.f));
        prop_assert!((0.0..=1.0).contains(&pa.i_ab));
        prop_assert!((0.0..=1.0).contains(&pa.chi));
        prop_assert!(pa.i_ae >= 0.0 && pa.i_ae <= pa.chi + 1e-15);
    }

    #[test]
    fn boundary_brackets_the_sign_change(y_a in 0.01f64..4.0, eta in 0.1f64..1.0, delta in 0.0f64..0.3, v in 1.5f64..20.0) {
        let c = ctx(eta, delta, v);
        for attack in [Attack::Collective, Attack::Individual] {
            if let Some(t) = boundary(y_a, &c, attack) {
                prop_assert!(net_rate(y_a, t + 1e-6, &c, attack) >= 0.0);
                if t > 1e-6 {
                    prop_assert!(net_rate(y_a, t - 1e-6, &c, attack) < 0.0);
                }
            } else {
                prop_assert!(net_rate(y_a, 20.0, &c, attack) < 0.0);
            }
        }
    }
}
