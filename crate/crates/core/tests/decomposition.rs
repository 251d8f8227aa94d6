use std::f64::consts::TAU;

use isoembed::decomposition::{
    beltrami_coefficient, solve_conformal, sym2_matrix, ConformalFactorization, ConformalOptions,
    DecompositionError, PrimitiveFrame,
};
use isoembed::linalg::{sym_det, sym_trace};
use isoembed::tensor_field::io::{read_container, write_container};
use isoembed::tensor_field::{stencil, GridChart, MetricField, StencilOrder};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coefficients of `G` in the equiangular frame by Cramer's rule on the
/// 3x3 system `sum c_i xi_i xi_i^T = G`.
fn cramer_coefficients(g: [f64; 3]) -> [f64; 3] {
    let h = 0.5 * 3f64.sqrt();
    let xi = [[1.0, 0.0], [0.5, h], [0.5, -h]];
    let col = |d: [f64; 2]| [d[0] * d[0], d[0] * d[1], d[1] * d[1]];
    let m = [col(xi[0]), col(xi[1]), col(xi[2])]; // columns
    let det3 = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[2][1] * a[1][2]) - a[1][0] * (a[0][1] * a[2][2] - a[2][1] * a[0][2])
            + a[2][0] * (a[0][1] * a[1][2] - a[1][1] * a[0][2])
    };
    let d = det3(m);
    let mut out = [0.0; 3];
    for i in 0..3 {
        let mut mi = m;
        mi[i] = g;
        out[i] = det3(mi) / d;
    }
    out
}

fn random_sym(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]
}

#[test]
fn equiangular_coefficients_at_identity() {
    let f = PrimitiveFrame::build2(&[1.0, 0.0, 1.0], 1.0).unwrap();
    for c in f.coefficients2(&[1.0, 0.0, 1.0]) {
        assert!((c - 2.0 / 3.0).abs() < 1e-14);
    }
    let oracle = cramer_coefficients([1.0, 0.0, 1.0]);
    for c in oracle {
        assert!((c - 2.0 / 3.0).abs() < 1e-14);
    }
}

#[test]
fn offdiagonal_perturbation_stays_positive() {
    let f = PrimitiveFrame::build2(&[1.0, 0.0, 1.0], 1.0).unwrap();
    let g = [1.0, 0.1, 1.0];
    let c = f.coefficients2(&g);
    let oracle = cramer_coefficients(g);
    for i in 0..3 {
        assert!((c[i] - oracle[i]).abs() < 1e-13);
        assert!(c[i] > 0.0);
    }
}

#[test]
fn reconstruction_is_exact_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = PrimitiveFrame::build2(&[1.3, 0.2, 0.8], 2.0).unwrap();
    for _ in 0..10_000 {
        let g = random_sym(&mut rng);
        let gm = sym2_matrix(&g);
        let back = f.reconstruct(&f.coefficients(&gm));
        assert!((back - gm).amax() < 1e-12);
    }
}

#[test]
fn positivity_on_validity_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for g0 in [[1.0, 0.0, 1.0], [2.0, 0.3, 0.7], [0.6, -0.1, 1.5]] {
        let f = PrimitiveFrame::build2(&g0, 3.0).unwrap();
        let r = f.validity_radius();
        assert!(r > 0.0);
        let g0m = sym2_matrix(&g0);
        for _ in 0..10_000 {
            let x = random_sym(&mut rng);
            let xm = sym2_matrix(&x);
            let norm = xm.clone().symmetric_eigenvalues().amax();
            let scale = r * rng.gen_range(0.0..=1.0) / norm;
            let g = &g0m + xm * scale;
            let lo = f.coefficients(&g).into_iter().fold(f64::INFINITY, f64::min);
            assert!(lo >= r - 1e-12, "{lo} < {r}");
        }
        assert!(f.shell_margin(1000, &mut rng) >= -1e-12);
    }
}

#[test]
fn higher_dimensional_frame_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g0 = DMatrix::from_row_slice(3, 3, &[1.2, 0.1, 0.0, 0.1, 0.9, 0.2, 0.0, 0.2, 1.1]);
    let f = PrimitiveFrame::build(3, &g0, 2.0).unwrap();
    assert_eq!(f.len(), 6);
    for _ in 0..100 {
        let mut g = DMatrix::zeros(3, 3);
        for a in 0..3 {
            for b in a..3 {
                let v: f64 = rng.gen_range(-1.0..1.0);
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        assert!((f.reconstruct(&f.coefficients(&g)) - &g).amax() < 1e-12);
    }
    assert!(f.shell_margin(500, &mut rng) >= -1e-12);
}

#[test]
fn frame_outside_band_is_rejected() {
    assert!(matches!(
        PrimitiveFrame::build2(&[5.0, 0.0, 1.0], 2.0),
        Err(DecompositionError::OutsideBand { .. })
    ));
}

#[test]
fn identity_metric_gives_identity_map() {
    let c = GridChart::torus(1.0, 256).unwrap();
    let f = solve_conformal(&MetricField::identity(&c), &ConformalOptions::default()).unwrap();
    assert!(f.stats.residual_sup < 1e-12);
    for k in 0..c.len() {
        let x = c.node_coords(k);
        assert!((f.phi[0].values[k] - x[0]).abs() < 1e-12);
        assert!((f.phi[1].values[k] - x[1]).abs() < 1e-12);
        assert!((f.theta.values[k] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn constant_anisotropic_metric_matches_affine_solution() {
    // Phi = ((1 + mu) x1, (1 - mu) x2) with mu = 1/3 solves the Beltrami
    // equation, and theta^2 (a^2, b^2) = (4, 1) gives theta^2 = 9/4.
    let mu: f64 = 1.0 / 3.0;
    let (a, b) = (1.0 + mu, 1.0 - mu);
    let th2 = 4.0 / (a * a);
    assert!((th2 * b * b - 1.0).abs() < 1e-15);
    assert!((th2 - 2.25).abs() < 1e-15);

    let c = GridChart::torus(1.0, 256).unwrap();
    let h = MetricField::constant(&c, [4.0, 0.0, 1.0]);
    let bel = beltrami_coefficient(&h).unwrap();
    assert!((bel.values[0].re - mu).abs() < 1e-15);
    let f = solve_conformal(&h, &ConformalOptions::default()).unwrap();
    assert!(f.stats.residual_sup < 1e-8);
    for k in 0..c.len() {
        let x = c.node_coords(k);
        assert!((f.phi[0].values[k] - a * x[0]).abs() < 1e-8);
        assert!((f.phi[1].values[k] - b * x[1]).abs() < 1e-8);
        assert!((f.theta.values[k].powi(2) - th2).abs() < 1e-8);
        let g = f.phi_grad[k];
        assert!((g[0][0] / g[1][1] - 2.0).abs() < 1e-8);
    }
}

fn smooth_random_metric(c: &GridChart, seed: u64, amp: f64) -> MetricField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = c.extent();
    let modes: Vec<([f64; 3], [i32; 2], f64)> = (0..6)
        .map(|_| {
            (
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                [rng.gen_range(-3..=3), rng.gen_range(-3..=3)],
                rng.gen_range(0.0..TAU),
            )
        })
        .collect();
    MetricField::from_fn(c, |x| {
        let mut m = [1.0, 0.0, 1.0];
        for (coef, k, ph) in &modes {
            let s = (TAU * (k[0] as f64 * x[0] / l[0] + k[1] as f64 * x[1] / l[1]) + ph).sin();
            for i in 0..3 {
                m[i] += amp / 6.0 * coef[i] * s;
            }
        }
        m
    })
}

#[test]
fn random_smooth_metric_on_torus() {
    let c = GridChart::torus(1.0, 256).unwrap();
    let h = smooth_random_metric(&c, 5, 0.2);
    assert!(h.values.iter().all(|m| isoembed::linalg::sym_norm(&[m[0] - 1.0, m[1], m[2] - 1.0]) <= 0.2));
    let f = solve_conformal(&h, &ConformalOptions::default()).unwrap();
    assert!(f.stats.residual_sup < 1e-6, "{}", f.stats.residual_sup);
    assert!(f.stats.min_det > 0.0 && f.stats.min_theta > 0.0);
    // the reported gradients are the gradients of the reported map
    for comp in 0..2 {
        let drift = f.phi_drift[comp];
        let periodic: Vec<f64> = (0..c.len())
            .map(|k| {
                let x = c.node_coords(k);
                f.phi[comp].values[k] - drift[0] * x[0] - drift[1] * x[1]
            })
            .collect();
        for axis in 0..2 {
            let d = stencil::derivative(&c, &periodic, axis, StencilOrder::Fourth);
            for k in 0..c.len() {
                assert!((d[k] + drift[axis] - f.phi_grad[k][comp][axis]).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn random_smooth_metric_on_clamped_square() {
    let c = GridChart::square(1.0, 128).unwrap();
    let h = smooth_random_metric(&c, 9, 0.2);
    let f = solve_conformal(&h, &ConformalOptions::default()).unwrap();
    assert!(f.stats.residual_sup < 1e-6, "{}", f.stats.residual_sup);
    assert!(f.stats.min_det > 0.0);
}

#[test]
fn near_degenerate_coefficient_stalls() {
    let c = GridChart::torus(1.0, 64).unwrap();
    let h = MetricField::from_fn(&c, |x| {
        let a = 1e6 * (1.5 + (TAU * x[0]).sin());
        let t = TAU * x[1];
        // rotate diag(a, 1) by angle t
        let (s, co) = t.sin_cos();
        [a * co * co + s * s, (a - 1.0) * co * s, a * s * s + co * co]
    });
    let opts = ConformalOptions {
        max_iterations: 50,
        ..Default::default()
    };
    match solve_conformal(&h, &opts) {
        Err(DecompositionError::Stalled { contraction, .. }) => assert!(contraction > 0.5),
        other => panic!("expected a stall, got {:?}", other.map(|f| f.stats)),
    }
}

#[test]
fn factorization_round_trips_through_container() {
    let c = GridChart::torus(1.0, 32).unwrap();
    let f = solve_conformal(&smooth_random_metric(&c, 2, 0.1), &ConformalOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_container(&f, &mut buf).unwrap();
    let back: ConformalFactorization = read_container(buf.as_slice()).unwrap();
    assert_eq!(back.theta.values, f.theta.values);
    assert_eq!(back.phi_grad, f.phi_grad);
    assert_eq!(back.mu, f.mu);
}

proptest! {
    #[test]
    fn beltrami_bound_identity(a in 0.05..20.0f64, b in 0.05..20.0f64, t in 0.0..TAU) {
        let (s, co) = t.sin_cos();
        let m = [a * co * co + b * s * s, (a - b) * co * s, a * s * s + b * co * co];
        let c = GridChart::torus(1.0, 8).unwrap();
        let bel = beltrami_coefficient(&MetricField::constant(&c, m)).unwrap();
        let mu2 = bel.values[0].norm_sqr();
        let (det, tr) = (sym_det(&m), sym_trace(&m));
        // exact form of |mu|^2 and its bound
        let exact = (tr * tr - 4.0 * det) / (tr * tr + 4.0 * det + 4.0 * det.sqrt() * tr);
        prop_assert!((mu2 - exact).abs() < 1e-12);
        prop_assert!(mu2 <= 1.0 - 4.0 * det / (tr * tr) + 1e-12);
        prop_assert!(bel.bound_excess <= 1e-12);
    }

    #[test]
    fn conformal_metrics_have_zero_coefficient(a in 0.01..100.0f64) {
        let c = GridChart::torus(1.0, 8).unwrap();
        let bel = beltrami_coefficient(&MetricField::constant(&c, [a, 0.0, a])).unwrap();
        prop_assert!(bel.sup == 0.0);
    }
}
