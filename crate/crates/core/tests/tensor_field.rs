use std::f64::consts::TAU;

use isoembed::tensor_field::{
    holder_seminorm, kernel_profile, norm_report, pullback_metric, DerivOrder, GridChart,
    ImmersionField, Mollify, ScalarField,
};
use proptest::prelude::*;

/// Direct (non-FFT) periodic convolution at one node, as an oracle.
fn direct_convolution(chart: &GridChart, f: &[f64], node: usize, ell: f64) -> f64 {
    let h = chart.spacing();
    let (i0, j0) = chart.ij(node);
    let reach = (ell / h[0]).ceil() as isize + 1;
    let (mut acc, mut mass) = (0.0, 0.0);
    for dj in -reach..=reach {
        for di in -reach..=reach {
            let r = ((di as f64 * h[0]).powi(2) + (dj as f64 * h[1]).powi(2)).sqrt();
            let w = kernel_profile(r / ell);
            let i = (i0 as isize + di).rem_euclid(chart.nx() as isize) as usize;
            let j = (j0 as isize + dj).rem_euclid(chart.ny() as isize) as usize;
            acc += w * f[chart.index(i, j)];
            mass += w;
        }
    }
    acc / mass
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

#[test]
fn fft_mollification_matches_direct_sum() {
    let chart = GridChart::torus(1.0, 64).unwrap();
    let f = ScalarField::from_fn(&chart, |x| (TAU * 2.0 * x[0]).sin() + (TAU * x[1]).cos() * x[0]);
    let g = f.mollify(0.1).unwrap();
    for node in [0, 17, 1000, 4095] {
        let oracle = direct_convolution(&chart, &f.values, node, 0.1);
        assert!((g.values[node] - oracle).abs() < 1e-12);
    }
}

#[test]
fn smooth_mollification_error_is_second_order() {
    // A symmetric kernel cancels the first moment, so for a smooth function
    // the error shrinks by ~4 per halving; the first-order bound still holds.
    let chart = GridChart::torus(1.0, 256).unwrap();
    let k = TAU * 2.0;
    let f = ScalarField::from_fn(&chart, |x| (k * x[0]).sin());
    let ells = [0.2, 0.1, 0.05];
    let errs: Vec<f64> = ells
        .iter()
        .map(|&l| sup_diff(&f.values, &f.mollify(l).unwrap().values))
        .collect();
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((3.5..4.5).contains(&r), "ratio {r}");
    }
    for (e, l) in errs.iter().zip(ells) {
        assert!(*e <= k * l, "first-order bound");
    }
}

#[test]
fn kink_mollification_error_is_first_order() {
    let chart = GridChart::square(1.0, 513).unwrap();
    let f = ScalarField::from_fn(&chart, |x| (x[0] - 0.5).abs());
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&l| sup_diff(&f.values, &f.mollify(l).unwrap().values))
        .collect();
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((1.8..2.2).contains(&r), "ratio {r}");
    }
}

#[test]
fn commutator_decays_quadratically() {
    let chart = GridChart::torus(1.0, 512).unwrap();
    let k = TAU * 2.0;
    let f = ScalarField::from_fn(&chart, |x| (k * x[0]).sin());
    let ff = f.map(|v| v * v);
    let ells = [0.1, 0.05, 0.025, 0.0125];
    let errs: Vec<f64> = ells
        .iter()
        .map(|&l| {
            let a = ff.mollify(l).unwrap();
            let b = f.mollify(l).unwrap();
            let prod: Vec<f64> = b.values.iter().map(|v| v * v).collect();
            sup_diff(&a.values, &prod)
        })
        .collect();
    let s = slope(&ells, &errs);
    assert!((s - 2.0).abs() < 0.3, "slope {s}");
}

/// Brute-force all node pairs of a 1D sampling of `sqrt` on `[eps, 1]`.
fn sqrt_holder_oracle(eps: f64, n: usize) -> f64 {
    let xs: Vec<f64> = (0..n).map(|i| eps + (1.0 - eps) * i as f64 / (n - 1) as f64).collect();
    let mut best: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            best = best.max((xs[b].sqrt() - xs[a].sqrt()).abs() / (xs[b] - xs[a]).sqrt());
        }
    }
    best
}

#[test]
fn sqrt_holder_constant_approaches_one() {
    let mut prev = 0.0;
    for eps in [1e-1, 1e-2, 1e-4] {
        let oracle = sqrt_holder_oracle(eps, 256);
        assert!(oracle > prev);
        prev = oracle;
        let chart =
            GridChart::new([eps, 0.0], [1.0 - eps, 1.0], [256, 8], isoembed::tensor_field::BoundaryMode::Clamped).unwrap();
        let f = ScalarField::from_fn(&chart, |x| x[0].sqrt());
        let v = holder_seminorm(&f, 0.5, DerivOrder::Zero);
        // dyadic sampling at this resolution: a lower bound, close to the oracle
        assert!(v <= oracle + 1e-12 && v > 0.9 * oracle, "{v} vs {oracle}");
    }
    assert!(prev > 0.99);
}

#[test]
fn frozen_sqrt_oracle_values() {
    // Values of the brute-force oracle, frozen.
    assert!((sqrt_holder_oracle(1e-2, 256) - 0.904534).abs() < 1e-6);
    assert!((sqrt_holder_oracle(1e-4, 256) - 0.990050).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mollify_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, p in 0.0..1.0f64, ell in 0.06..0.3f64) {
        let chart = GridChart::square(1.0, 40).unwrap();
        let f = ScalarField::from_fn(&chart, |x| (7.0 * x[0] + p).sin() * x[1]);
        let g = ScalarField::from_fn(&chart, |x| (x[0] - p).abs() + x[1] * x[1]);
        let comb = ScalarField::from_fn(&chart, |x| {
            a * (7.0 * x[0] + p).sin() * x[1] + b * ((x[0] - p).abs() + x[1] * x[1])
        });
        let lhs = comb.mollify(ell).unwrap();
        let mf = f.mollify(ell).unwrap();
        let mg = g.mollify(ell).unwrap();
        for k in 0..chart.len() {
            prop_assert!((lhs.values[k] - (a * mf.values[k] + b * mg.values[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn mollify_contracts_sup(seed in 0u64..1000, ell in 0.06..0.3f64, periodic in any::<bool>()) {
        let chart = if periodic { GridChart::torus(1.0, 40) } else { GridChart::square(1.0, 40) }.unwrap();
        let f = ScalarField::from_fn(&chart, |x| {
            let s = seed as f64;
            (13.0 * x[0] + s).sin() * (5.0 * x[1] - s).cos() + 0.3 * (s * x[0] * x[1]).sin()
        });
        prop_assert!(f.mollify(ell).unwrap().sup() <= f.sup() + 1e-14);
    }

    #[test]
    fn holder_monotone_under_refinement(
        a in 0.5..4.0f64, b in -2.0..2.0f64, theta in 0.1..1.0f64, coarse in prop_oneof![Just(16usize), Just(24), Just(300)],
    ) {
        let chart = GridChart::torus(1.0, coarse).unwrap();
        let fine = chart.refined(2).unwrap();
        let f = |x: [f64; 2]| (TAU * x[0]).sin() * a + (TAU * 2.0 * x[1]).cos() * b;
        let vc = holder_seminorm(&ScalarField::from_fn(&chart, f), theta, DerivOrder::Zero);
        let vf = holder_seminorm(&ScalarField::from_fn(&fine, f), theta, DerivOrder::Zero);
        prop_assert!(vf >= vc - 1e-12, "{vf} < {vc}");
    }

    #[test]
    fn lipschitz_seminorm_below_c1(a in 0.5..4.0f64, m in 1usize..4) {
        let chart = GridChart::torus(1.0, 48).unwrap();
        let f = ScalarField::from_fn(&chart, |x| a * (TAU * m as f64 * x[0]).sin() + (TAU * x[1]).cos());
        let lip = holder_seminorm(&f, 1.0, DerivOrder::Zero);
        prop_assert!(lip <= norm_report(&f, &[]).c1_norm);
    }

    #[test]
    fn pullback_symmetric_and_psd(a in 0.1..1.0f64, b in 0.1..1.0f64, w in 1.0..4.0f64) {
        let chart = GridChart::square(1.0, 64).unwrap();
        let u = ImmersionField::from_fn(&chart, |x| {
            [x[0] + a * (w * x[1]).sin(), x[1], b * (w * x[0]).cos() * x[1]]
        });
        let g = pullback_metric(&u);
        for m in &g.values {
            // 10x a generous fourth-order truncation scale
            let tol = 10.0 * (w * w * w * w) * (1.0f64 / 63.0).powi(2);
            prop_assert!(m[0] >= -tol && m[2] >= -tol && m[0] * m[2] - m[1] * m[1] >= -tol);
        }
    }
}
