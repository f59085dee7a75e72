use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, SQRT_2};

use measdep::analysis::{
    chsh, estimate_correlations, singlet_correlation, verify_bell_local, CorrelationTable,
    EstimateOptions,
};
use measdep::geom::{RandomSource, UnitVector};
use measdep::models::{
    brans_build, gg_round, input_broadcast_build, tb_round, CellProbs, CommunicationModel,
    FiniteSettings, InputDistribution, Outcome, Setting, TonerBacon,
};
use proptest::prelude::*;

const N: usize = 1_000_000;

fn at_angle(theta: f64) -> (UnitVector, UnitVector) {
    (UnitVector::in_xz_plane(0.0), UnitVector::in_xz_plane(theta))
}

#[test]
fn toner_bacon_matches_singlet_at_fixed_angles() {
    let tol = 4.0 / (N as f64).sqrt();
    for theta in [0.0, FRAC_PI_4, FRAC_PI_2, 2.0 * PI / 3.0] {
        let (x, y) = at_angle(theta);
        let mut r = RandomSource::new(7);
        let (mut ab, mut a_sum, mut b_sum) = (0i64, 0i64, 0i64);
        for _ in 0..N {
            let t = tb_round(x, y, &mut r);
            ab += i64::from(t.a.value() * t.b.value());
            a_sum += i64::from(t.a.value());
            b_sum += i64::from(t.b.value());
        }
        let n = N as f64;
        assert!((ab as f64 / n + theta.cos()).abs() < tol, "θ = {theta}");
        assert!((a_sum as f64 / n).abs() < tol);
        assert!((b_sum as f64 / n).abs() < tol);
    }
}

#[test]
fn toner_bacon_equal_settings_anticorrelate_every_round() {
    let mut r = RandomSource::new(1);
    let x = UnitVector::normalized([0.1, 0.5, -0.3]).unwrap();
    for _ in 0..100_000 {
        let t = tb_round(x, x, &mut r);
        assert_eq!(t.a.value() * t.b.value(), -1);
    }
}

#[test]
fn toner_bacon_message_is_causal() {
    // The message never depends on Bob's input, and Alice's answer never
    // depends on the message.
    let mut r = RandomSource::new(5);
    let tb = TonerBacon;
    for _ in 0..1000 {
        let mu = tb.sample_shared(&mut r);
        let x = Setting::continuous(UnitVector::in_xz_plane(0.3));
        let y1 = Setting::continuous(UnitVector::in_xz_plane(1.3));
        let y2 = Setting::continuous(UnitVector::in_xz_plane(-2.0));
        let m = tb.conversation(&x, &y1, &mu);
        assert_eq!(m, tb.conversation(&x, &y2, &mu));
        let x2 = Setting::continuous(UnitVector::in_xz_plane(2.2));
        let m2 = tb.conversation(&x2, &y1, &mu);
        assert_eq!(tb.alice_output(&x, &mu, &m), tb.alice_output(&x, &mu, &m2));
        assert_eq!(tb.alice_output(&x, &mu, &m), TonerBacon::alice_answer(x.direction, &mu));
    }
}

#[test]
fn gisin_gisin_post_selected_correlations() {
    for theta in [0.0, FRAC_PI_3, FRAC_PI_2] {
        let (x, y) = at_angle(theta);
        let mut r = RandomSource::new(11);
        let (mut kept, mut ab, mut alice, mut bob) = (0u64, 0i64, 0u64, 0u64);
        for _ in 0..N {
            let g = gg_round(x, y, &mut r);
            alice += u64::from(g.alice_click);
            bob += u64::from(g.bob_click);
            if g.alice_click && g.bob_click {
                kept += 1;
                ab += i64::from(g.a.value() * g.b.value());
            }
        }
        let n = N as f64;
        assert!((alice as f64 / n - 0.5).abs() < 4.0 * 0.5 / n.sqrt());
        assert_eq!(bob, N as u64);
        let e = ab as f64 / kept as f64;
        assert!((e + theta.cos()).abs() < 4.0 / (kept as f64).sqrt(), "θ = {theta}: {e}");
    }
}

#[test]
fn estimator_on_deterministic_table() {
    let s = FiniteSettings::chsh();
    let plus = CorrelationTable::exact(s.clone(), |_, _| CellProbs([1.0, 0.0, 0.0, 0.0])).unwrap();
    let brans = brans_build(&plus, &s).unwrap();
    let est = estimate_correlations(&brans.player(), &s, 10_000, &RandomSource::new(0), &EstimateOptions::default()).unwrap();
    for c in est.cells() {
        assert_eq!(c.correlator(), 1.0);
        assert_eq!(c.correlator_std_error(), 0.0);
    }
    assert_eq!(chsh(&est, 0, 1, 0, 1).unwrap().s, 2.0);
}

#[test]
fn singlet_correlation_examples() {
    let x = UnitVector::Z;
    assert_eq!(singlet_correlation(x, x), -1.0);
    assert_eq!(singlet_correlation(UnitVector::X, UnitVector::Z), 0.0);
    let y = UnitVector::in_xz_plane(2.0 * PI / 3.0);
    assert!((singlet_correlation(x, y) - 0.5).abs() < 1e-15);
}

#[test]
fn brans_chsh_is_local_and_violates() {
    let s = FiniteSettings::chsh();
    let singlet = measdep::analysis::singlet_table(&s).unwrap();
    assert!((chsh(&singlet, 0, 1, 0, 1).unwrap().s + 2.0 * SQRT_2).abs() < 1e-12);
    let m = brans_build(&singlet, &s).unwrap();
    let report = verify_bell_local(&m, 0.0).unwrap();
    assert!(report.passed);
    assert_eq!(report.max_deviation, 0.0);
    // Conditioning on λ fixes (x, y).
    for (labels, _) in m.table().labeled_entries() {
        let lambda = labels[4];
        let c = m.table().condition(&[("lambda", lambda)]).unwrap();
        let xy = c.marginalize(&["x", "y"]).unwrap();
        assert_eq!(xy.support_size(), 1);
    }
}

#[test]
fn input_broadcast_reproduces_textbook_pr_box() {
    // a ⊕ b = x·y.
    let s = FiniteSettings::chsh();
    let pr = CorrelationTable::exact(s.clone(), |x, y| {
        CellProbs::from_correlator(if x * y == 1 { -1.0 } else { 1.0 })
    })
    .unwrap();
    let ib = input_broadcast_build(&pr, &s).unwrap();
    let est = estimate_correlations(&ib, &s, 20_000, &RandomSource::new(2), &EstimateOptions::default()).unwrap();
    for c in est.cells() {
        let want = if c.x * c.y == 1 { -1.0 } else { 1.0 };
        assert_eq!(c.correlator(), want);
    }
}

#[test]
fn input_broadcast_constant_table_gives_constant_outputs() {
    let s = FiniteSettings::chsh();
    let plus = CorrelationTable::exact(s.clone(), |_, _| CellProbs([1.0, 0.0, 0.0, 0.0])).unwrap();
    let ib = input_broadcast_build(&plus, &s).unwrap();
    let mut r = RandomSource::new(3);
    for _ in 0..1000 {
        let (x, y) = (s.alice_setting(1), s.bob_setting(0));
        let round = ib.play(&x, &y, &mut r);
        assert_eq!((round.a, round.b), (Outcome::Plus, Outcome::Plus));
    }
}

/// Random table with y-independent Alice marginals: P(a|x) then P(b|a,x,y).
fn table_from(n_a: usize, n_b: usize, pa: &[f64], pb: &[f64]) -> CorrelationTable {
    let settings = FiniteSettings::uniform(
        (0..n_a).map(|i| UnitVector::in_xz_plane(0.4 * i as f64)).collect(),
        (0..n_b).map(|j| UnitVector::in_xz_plane(0.3 + 0.5 * j as f64)).collect(),
    )
    .unwrap();
    CorrelationTable::exact(settings, |x, y| {
        let a = pa[x];
        let bp = pb[2 * (x * n_b + y)];
        let bm = pb[2 * (x * n_b + y) + 1];
        CellProbs([a * bp, a * (1.0 - bp), (1.0 - a) * bm, (1.0 - a) * (1.0 - bm)])
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn brans_reproduces_any_table(
        n_a in 1usize..4,
        n_b in 1usize..4,
        pa in prop::collection::vec(0.0f64..=1.0, 3),
        pb in prop::collection::vec(0.0f64..=1.0, 18),
    ) {
        let t = table_from(n_a, n_b, &pa, &pb);
        let m = brans_build(&t, t.settings()).unwrap();
        let back = m.correlation_table(t.settings()).unwrap();
        prop_assert!(back.max_deviation(&t) <= 1e-12);
        prop_assert!(verify_bell_local(&m, 1e-12).unwrap().passed);
        let hidden = m.hidden_variables();
        let i = m.mutual_information(&["x", "y"], &hidden).unwrap().bits();
        let h = m.table().entropy(&["x", "y"]).unwrap().bits();
        prop_assert!((i - h).abs() <= 1e-10);
    }

    #[test]
    fn input_sampling_respects_support(seed in any::<u64>()) {
        let d = InputDistribution::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let mut r = RandomSource::new(seed);
        for _ in 0..100 {
            let (x, y) = d.sample(&mut r);
            prop_assert_eq!(x, y);
        }
    }
}
