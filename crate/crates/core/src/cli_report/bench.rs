//! Benchmarks behind the `step-bench`, `stage-bench` and `conformal-check`
//! subcommands. Each returns plain records for slope fitting elsewhere.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::corrugation::CorrugationTable;
use crate::decomposition::{solve_conformal, ConformalOptions, ConformalStats};
use crate::nash_step::{stage, step, Phase, StageParams, StageTerm, StepParams};
use crate::tensor_field::{norm_report, GridChart, ImmersionField, MetricField, ScalarField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub lambda: f64,
    pub sup_defect: f64,
    pub c1_defect: f64,
    pub c2_norm: f64,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_factor: Option<f64>,
}

/// Smooth bump of radius `r` around `c`.
fn bump(x: [f64; 2], c: [f64; 2], r: f64) -> f64 {
    let q = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (r * r);
    if q >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - q)).exp()
    }
}

/// One step on the flat unit square with a bump amplitude of height 0.1
/// and a straight phase, at each frequency in `lambdas`.
pub fn step_bench(resolution: usize, lambdas: &[f64], table: &CorrugationTable) -> Result<Vec<BenchRecord>, ReportError> {
    let chart = GridChart::square(1.0, resolution)?;
    let u = ImmersionField::flat(&chart, 1.0);
    let rho = ScalarField::from_fn(&chart, |x| 0.1 * bump(x, [0.5, 0.5], 0.3));
    let phase = Phase::linear(&chart, [1.0, 0.0]);
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let t = Instant::now();
        let p = StepParams {
            epsilon: 0.01,
            delta: 0.01,
            ..StepParams::new(lambda)
        };
        let s = step(&u, &rho, &phase, &p, table)?;
        out.push(BenchRecord {
            lambda,
            sup_defect: s.sup_defect,
            c1_defect: norm_report(&s.defect, &[]).c1_norm,
            c2_norm: s.norms.c2_norm,
            wall_time: t.elapsed().as_secs_f64(),
            k_factor: None,
        });
    }
    Ok(out)
}

/// Two-term stage on the unit torus, adding `0.1 (dx1^2 + dx2^2)` to the
/// flat map of scale 0.9, once per growth factor.
pub fn stage_bench(resolution: usize, k_factors: &[f64], table: &CorrugationTable) -> Result<Vec<BenchRecord>, ReportError> {
    let chart = GridChart::torus(1.0, resolution)?;
    let u = ImmersionField::flat(&chart, 0.9);
    let amp = ScalarField::constant(&chart, 0.1f64.sqrt());
    let terms = [
        StageTerm {
            amplitude: amp.clone(),
            phase: Phase::linear(&chart, [1.0, 0.0]),
        },
        StageTerm {
            amplitude: amp,
            phase: Phase::linear(&chart, [0.0, 1.0]),
        },
    ];
    let g = MetricField::identity(&chart);
    let mut out = Vec::with_capacity(k_factors.len());
    for &k in k_factors {
        let t = Instant::now();
        let s = stage(&u, &terms, &StepParams::new(TAU * 2.0), &StageParams::new(k), Some(&g), table)?;
        out.push(BenchRecord {
            lambda: s.frequencies.last().copied().unwrap_or(0.0),
            sup_defect: s.sup_error,
            c1_defect: s.error_norms.c1_norm,
            c2_norm: s.steps.last().map_or(0.0, |st| st.c2_norm),
            wall_time: t.elapsed().as_secs_f64(),
            k_factor: Some(k),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConformalCheck {
    pub seed: u64,
    pub resolution: usize,
    pub stats: ConformalStats,
    /// Largest `|mu|^2 - (1 - 4 det H / (tr H)^2)` over the nodes.
    pub mu_bound_excess: f64,
    pub wall_time: f64,
}

/// Random smooth SPD field on the unit torus: `exp(f) R diag(e^a, e^-a) R^T`
/// with `f`, `a` and the rotation angle drawn as low-mode trigonometric
/// sums of size `strength`.
pub fn random_spd_field(chart: &GridChart, seed: u64, strength: f64) -> MetricField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |modes: usize| -> Vec<[f64; 4]> {
        (0..modes)
            .map(|_| {
                [
                    rng.gen_range(-2..=2) as f64,
                    rng.gen_range(-2..=2) as f64,
                    rng.gen_range(-1.0..1.0) * strength,
                    rng.gen_range(0.0..TAU),
                ]
            })
            .collect()
    };
    let (fs, aniso, angle) = (draw(4), draw(4), draw(4));
    let eval = |m: &[[f64; 4]], x: [f64; 2]| -> f64 {
        m.iter().map(|t| t[2] * (TAU * (t[0] * x[0] + t[1] * x[1]) + t[3]).cos()).sum()
    };
    let l = chart.extent();
    MetricField::from_fn(chart, |x| {
        let y = [x[0] / l[0], x[1] / l[1]];
        let scale = eval(&fs, y).exp();
        let a = eval(&aniso, y);
        let th = eval(&angle, y);
        let (c, s) = (th.cos(), th.sin());
        let (p, q) = (a.exp(), (-a).exp());
        [
            scale * (p * c * c + q * s * s),
            scale * (p - q) * c * s,
            scale * (p * s * s + q * c * c),
        ]
    })
}

pub fn conformal_check(resolution: usize, seed: u64, strength: f64) -> Result<ConformalCheck, ReportError> {
    let t = Instant::now();
    let chart = GridChart::torus(1.0, resolution)?;
    let h = random_spd_field(&chart, seed, strength);
    let fac = solve_conformal(&h, &ConformalOptions::default())?;
    let mu_bound_excess = h
        .values
        .iter()
        .zip(&fac.mu)
        .map(|(m, mu)| {
            let tr = m[0] + m[2];
            let det = m[0] * m[2] - m[1] * m[1];
            mu.norm_sqr() - (1.0 - 4.0 * det / (tr * tr))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ConformalCheck {
        seed,
        resolution,
        stats: fac.stats,
        mu_bound_excess,
        wall_time: t.elapsed().as_secs_f64(),
    })
}
