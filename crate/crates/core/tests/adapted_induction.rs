use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use isoembed::adapted_induction::*;
use isoembed::corrugation::CorrugationTable;
use isoembed::nash_step::{BootstrapParams, NashError};
use isoembed::tensor_field::{GridChart, ImmersionField, MetricField, ScalarField};

fn table() -> &'static CorrugationTable {
    static T: OnceLock<CorrugationTable> = OnceLock::new();
    T.get_or_init(|| CorrugationTable::with_defaults().unwrap())
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// `b` from integer numerators and denominators, without going through
/// the library: `1 + 2 m alpha theta / (1 - (2 m + 1) theta)` with `m = 2`
/// for surfaces and `m = n(n+1)/2` otherwise.
fn oracle_b(tn: i64, td: i64, an: i64, ad: i64, n: i64) -> BigRational {
    let m = if n == 2 { 2 } else { n * (n + 1) / 2 };
    rat(1, 1) + rat(2 * m * an * tn, ad * (td - (2 * m + 1) * tn))
}

#[test]
fn growth_exponent_examples() {
    let b = growth_exponent(&rat(3, 20), &rat(1, 10), 2).unwrap();
    assert_eq!(b, rat(31, 25));
    let b3 = growth_exponent(&rat(1, 20), &rat(1, 10), 3).unwrap();
    assert_eq!(b3, rat(1, 1) + rat(6, 100) / rat(35, 100));
    // theta near 1/5 with vanishing alpha leaves b -> 1 and theta' -> theta
    let s = exponent_step(&parse_rational("0.19999").unwrap(), &parse_rational("1e-9").unwrap(), 2).unwrap();
    assert!(to_f64(&s.b) - 1.0 < 1e-3);
    assert!((to_f64(&s.theta_next) - 0.19999).abs() < 1e-3);
}

#[test]
fn exponents_outside_the_band_are_rejected() {
    assert!(matches!(
        growth_exponent(&rat(1, 5), &rat(1, 10), 2),
        Err(InductionError::Theta { .. })
    ));
    assert!(matches!(
        growth_exponent(&rat(1, 13), &rat(1, 10), 3),
        Err(InductionError::Theta { .. })
    ));
    assert!(matches!(growth_exponent(&rat(1, 10), &rat(1, 1), 2), Err(InductionError::Alpha(_))));
    assert!(matches!(growth_exponent(&rat(1, 10), &rat(1, 10), 1), Err(InductionError::Dimension(1))));
}

#[test]
fn schedule_ladders_are_ordered() {
    let theta = rat(3, 20);
    let alpha = rat(1, 10);
    let delta1 = 1.0 / 16.0;
    let ln_min = minimal_ln_amplitude(0.15, 1.24, delta1);
    let s = build_schedule(&Amplitude::from_ln(ln_min + 1e-9), &theta, &alpha, delta1, 2, 8).unwrap();
    for q in 1..s.levels() {
        assert!(s.delta(q + 1) <= s.delta(q) / 4.0 * (1.0 + 1e-9), "q = {q}");
        assert!(s.ln_lambda(q + 1) >= s.ln_lambda(q) + 2f64.ln() - 1e-9);
        // lambda_q = A delta_q^{-1/(2 theta)}
        let ln_l = s.amplitude.ln() - s.delta(q).ln() / 0.3;
        assert!((ln_l - s.ln_lambda(q)).abs() < 1e-9 * ln_l.abs().max(1.0));
    }
    assert_eq!(s.next_amplitude().exponent, rat(961, 625));
    let err = build_schedule(&Amplitude::from_ln(ln_min - 0.5), &theta, &alpha, delta1, 2, 4).unwrap_err();
    let InductionError::Ordering { ln_minimal_a, .. } = err else {
        panic!("expected an ordering error, got {err}");
    };
    assert!((ln_minimal_a - ln_min).abs() < 1e-12);
}

proptest! {
    #[test]
    fn exponent_algebra_matches_oracle(tn in 1i64..400, an in 1i64..999, big in any::<bool>()) {
        let n = if big { 3 } else { 2 };
        let td: i64 = if n == 2 { 2000 } else { 5200 };
        let theta = rat(tn, td);
        let alpha = rat(an, 1000);
        let s = exponent_step(&theta, &alpha, n as usize).unwrap();
        let b = oracle_b(tn, td, an, 1000, n);
        prop_assert_eq!(&s.b, &b);
        prop_assert_eq!(&s.theta_next * &b * &b, theta);
        prop_assert_eq!(&s.alpha_next * rat(2, 1) * &b * &b, alpha);
        prop_assert_eq!(&s.amplitude_power, &(&b * &b));
    }

    #[test]
    fn rho_update_is_monotone(rho2 in 0.0625f64..0.25, delta in 0.0001f64..0.0277, chi in 0.0f64..=1.0) {
        // band of the lemma: rho >= 3/2 delta^{1/2}
        prop_assume!(rho2.sqrt() >= 1.5 * delta.sqrt());
        let chart = GridChart::torus(1.0, 8).unwrap();
        let rho = ScalarField::constant(&chart, rho2.sqrt());
        let c = ScalarField::constant(&chart, chi);
        let next = update_rho(&rho, &c, delta);
        for (a, b) in next.values.iter().zip(&rho.values) {
            prop_assert!(a <= b);
            prop_assert!(*a >= delta.sqrt() * (1.0 - 1e-15));
        }
    }

    #[test]
    fn cutoffs_nest_on_random_scenarios(
        seed_pts in proptest::collection::vec((0.05f64..0.95, 0.05f64..0.95), 1..4),
        amp in 0.05f64..0.25,
        wave in 1u32..4,
        delta in 0.0005f64..0.01,
        radius in 0.05f64..0.3,
    ) {
        let chart = GridChart::torus(1.0, 48).unwrap();
        let sigma = SkeletonSet::Vertices { points: seed_pts.iter().map(|&(a, b)| [a, b]).collect() };
        let dist = sigma.distance_field(&chart);
        let rho = ScalarField::from_fn(&chart, |x| {
            amp * (0.6 + 0.4 * (TAU * wave as f64 * x[0]).sin() * (TAU * x[1]).cos())
        });
        let c = cutoffs(&rho, &dist, delta, radius, &Profiles::default());
        prop_assert!(c.nesting.holds(), "{:?}", c.nesting);
        for k in 0..chart.len() {
            if c.chi.values[k] > 0.0 {
                prop_assert_eq!(c.chi_tilde.values[k], 1.0);
            }
        }
    }
}

#[test]
fn cutoffs_saturate_and_vanish() {
    let chart = GridChart::torus(1.0, 64).unwrap();
    let sigma = SkeletonSet::Vertices { points: vec![[0.5, 0.5]] };
    let dist = sigma.distance_field(&chart);
    let delta = 1e-3;
    let radius = 0.2;
    let big = ScalarField::constant(&chart, 0.25);
    let c = cutoffs(&big, &dist, delta, radius, &Profiles::default());
    for k in 0..chart.len() {
        if dist.values[k] < 0.75 * radius {
            assert_eq!(c.chi.values[k], 1.0);
        }
        if dist.values[k] >= radius {
            assert_eq!(c.chi_tilde.values[k], 0.0);
        }
    }
    let small = ScalarField::constant(&chart, 1.49 * delta.sqrt());
    let c = cutoffs(&small, &dist, delta, radius, &Profiles::default());
    assert!(c.chi.values.iter().all(|&v| v == 0.0));
    assert!(c.chi_tilde.values.iter().all(|&v| v == 0.0));
}

#[test]
fn rho_update_extremes() {
    let chart = GridChart::torus(1.0, 8).unwrap();
    let rho = ScalarField::from_fn(&chart, |x| 0.2 + 0.01 * x[1]);
    assert_eq!(update_rho(&rho, &ScalarField::constant(&chart, 0.0), 0.004).values, rho.values);
    for v in update_rho(&rho, &ScalarField::constant(&chart, 1.0), 0.004).values {
        assert!((v - 0.004f64.sqrt()).abs() < 1e-16);
    }
}

#[test]
fn distance_fields_vanish_on_the_set() {
    let chart = GridChart::square(1.0, 33).unwrap();
    let t = Triangulation::triangle([0.25, 0.25], [0.75, 0.25], [0.25, 0.75]);
    for s in t.skeleta() {
        let d = s.distance_field(&chart);
        assert!(d.values.iter().all(|&v| v >= 0.0));
        if s.is_empty() {
            continue;
        }
        // every vertex is a node of this grid
        for p in &t.points {
            assert!(s.distance(&chart, *p) < 1e-15);
        }
    }
}

#[test]
fn calibration_finds_threshold() {
    let mut calls = 0;
    let found = calibrate_amplitude(0.0, 10.0, 1e-6, |ln_a| {
        calls += 1;
        Ok(ln_a >= 3.3)
    })
    .unwrap()
    .unwrap();
    assert!(found >= 3.3 && found - 3.3 < 1e-6);
    assert!(calls < 40);
    assert!(calibrate_amplitude(0.0, 1.0, 1e-3, |_| Ok(false)).unwrap().is_none());
}

#[test]
fn history_lines_parse_back() {
    let mut w = HistoryWriter::new(Vec::new());
    for q in 0..3 {
        w.write(&serde_json::json!({ "q": q, "delta": 0.25f64.powi(q) })).unwrap();
    }
    assert_eq!(w.lines(), 3);
    let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
    let back: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(back[2]["q"], 2);
}

fn scaled_torus(n: usize, delta_star: f64) -> (GridChart, MetricField, ImmersionField) {
    let chart = GridChart::torus(1.0, n).unwrap();
    let c2 = 1.44;
    let g = MetricField::constant(&chart, [c2, 0.0, c2]);
    let u = ImmersionField::flat(&chart, (c2 * (1.0 - delta_star)).sqrt());
    (chart, g, u)
}

fn strong_state(u: ImmersionField, delta: f64) -> AdaptedState {
    let chart = u.chart.clone();
    AdaptedState::from_strong(
        u,
        MetricField::constant(&chart, [0.0; 3]),
        delta,
        Amplitude::new(1.0),
        rat(3, 20),
        rat(1, 10),
    )
}

#[test]
fn strong_start_is_certified() {
    let (_, g, u) = scaled_torus(32, 1.0 / 16.0);
    let cert = strong_state(u, 1.0 / 16.0).certify(&g, 0.0);
    assert!(cert.valid, "{cert:?}");
    assert!(cert.factorization_residual < 1e-14);
}

#[test]
fn pass_without_support_returns_the_state() {
    let (chart, g, u) = scaled_torus(64, 1.0 / 16.0);
    let mut state = strong_state(u, 1.0 / 16.0);
    // rho vanishes like dist^(1/2) at S, so tiny tubes see only small rho
    let s = SkeletonSet::Vertices { points: vec![[0.5, 0.5]] };
    state.rho = s.distance_field(&chart).map(|d| 0.25 * (d / 0.7).sqrt().min(1.0));
    state.sigma = s.clone();
    let delta1 = 1.0 / 16.0;
    let amp = Amplitude::from_ln(minimal_ln_amplitude(0.15, 1.24, delta1) + 1e-9);
    let sched = build_schedule(&amp, &state.theta, &state.alpha, delta1, 2, 5).unwrap();
    let p = PassParams::new(3, DeskLadder::new(TAU, 1.0, 4.0, 1e-4));
    let out = inductive_pass(&state, &g, &s, &sched, &p, 0, table(), |_| {}).unwrap();
    assert_eq!(out.depth_reached, 3);
    for r in &out.records {
        assert_eq!(r.components, 0);
        assert_eq!(r.changed_nodes, 0);
    }
    assert_eq!(out.state.u.values, state.u.values);
    assert_eq!(out.state.rho.values, state.rho.values);
    assert_eq!(out.state.h.values, state.h.values);
    assert_eq!(out.state.theta, rat(3, 20) / rat(961, 625));
}

#[test]
fn first_torus_level_keeps_the_lemma_and_factorization() {
    let delta_star = 1.0 / 64.0;
    let (_, g, u) = scaled_torus(256, delta_star);
    let state = strong_state(u, delta_star);
    let amp = Amplitude::from_ln(minimal_ln_amplitude(0.15, 1.24, delta_star) + 1e-9);
    let sched = pass_schedule(&state, &amp, 1).unwrap();
    let mut ladder = DeskLadder::new(TAU, 1.0, 4.0, 1.0);
    ladder.frequencies = Some(vec![[TAU, 16.0 * TAU]]);
    let p = PassParams::new(1, ladder);
    let mut seen = 0;
    let out = inductive_pass(&state, &g, &SkeletonSet::Whole, &sched, &p, 0, table(), |_| seen += 1).unwrap();
    assert_eq!(seen, 1);
    let r = &out.records[0];
    assert!(r.rho_bands.holds(), "{:?}", r.rho_bands);
    assert!(r.nesting.holds());
    assert!(r.factorization_residual < 1e-9);
    assert!(r.min_defect_eigenvalue > 0.0);
    assert!(r.geometric.ok);
    // rho_1 sits at delta_2^{1/2} everywhere
    assert!((r.rho_max - sched.delta(2).sqrt()).abs() < 1e-15);
    assert!(r.relative_defect < delta_star);
}

#[test]
fn global_run_refuses_isometric_start() {
    let chart = GridChart::square(1.0, 32).unwrap();
    let g = MetricField::identity(&chart);
    let u = ImmersionField::flat(&chart, 1.0);
    let params = GlobalParams {
        theta: rat(3, 20),
        alpha: rat(1, 10),
        theta_target: None,
        bootstrap: BootstrapParams::new(1e6, 10.0, 4.0),
        passes: vec![PassParams::new(1, DeskLadder::new(6.0, 1.5, 3.0, 1.0))],
        amplitude: None,
        amplitude_factor: 1.0,
        probe_fraction: 0.9,
        snapshots: false,
    };
    let err = run_global(&u, &g, &SkeletonPlan::torus(), &params, table(), |_| {}).unwrap_err();
    assert!(matches!(err, InductionError::Nash(NashError::NotStrictlyShort { .. })), "{err}");

    let mut high = params.clone();
    high.theta_target = Some(rat(1, 10));
    let err = run_global(&u, &g, &SkeletonPlan::torus(), &high, table(), |_| {}).unwrap_err();
    let InductionError::TargetTheta { reachable, passes, .. } = err else {
        panic!("expected a target error, got {err}");
    };
    assert_eq!(passes, 1);
    assert!((reachable - 0.15 / (1.24f64 * 1.24)).abs() < 1e-12);
}
