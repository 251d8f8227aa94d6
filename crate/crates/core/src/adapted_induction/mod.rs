//! Adapted short immersions and the induction over skeleta: exponent
//! schedules, distance cut-offs, the error-size recursion, one inductive
//! pass with node-wise certificates, and the global driver.
//!
//! The true frequency ladder `lambda_q = A delta_q^{-1/(2 theta)}` outruns
//! any grid after one level, so the metric additions run on a separate
//! desk ladder (`DeskLadder`) while every estimate is still checked against
//! the exact schedule in log space. Passes stop early, with the reason
//! recorded, once the desk ladder stops being resolvable.

mod cutoffs;
mod global;
mod history;
mod pass;
mod rho;
mod schedule;
mod skeleton;
mod state;

pub use cutoffs::{components, cutoffs, smoothstep5, Cutoffs, NestingReport, Profiles};
pub use global::{calibrate_amplitude, run_global, GlobalOutcome, GlobalParams, PassReport, SkeletonPlan, Snapshot};
pub use history::HistoryWriter;
pub use pass::{
    inductive_pass, pass_schedule, DeskLadder, GeometricAudit, PassOutcome, PassParams, QRecord,
};
pub use rho::{check_rho_lemma, update_rho, LemmaInputs, LemmaViolation, RhoLemmaReport};
pub use schedule::{
    build_schedule, exponent_chain, exponent_step, growth_exponent, minimal_ln_amplitude, n_star,
    parse_rational, rational_from_f64, theta_bound, to_f64, Amplitude, ExponentStep, Schedule,
    ScheduleSummary,
};
pub use skeleton::{SkeletonSet, Triangulation};
pub use state::{
    check_power, derivative_sizes, factorization_residual, min_defect_eigenvalue, AdaptedState,
    Certificate, DerivativeSizes, EstimateCheck, PowerBound,
};

use crate::decomposition::DecompositionError;
use crate::nash_step::NashError;
use crate::tensor_field::FieldError;

#[derive(Debug, thiserror::Error)]
pub enum InductionError {
    #[error("dimension {0} is not supported (need n >= 2)")]
    Dimension(usize),
    #[error("theta = {theta} must lie in (0, {bound})")]
    Theta { theta: f64, bound: f64 },
    #[error("alpha = {0} must lie in (0, 1)")]
    Alpha(f64),
    #[error("delta_1 = {0} must be positive and finite")]
    Delta(f64),
    #[error(
        "ladder ordering fails at q = {q}; the smallest adequate amplitude is \
         A = {minimal_a:e} (ln A = {ln_minimal_a:.6})"
    )]
    Ordering {
        q: usize,
        minimal_a: f64,
        ln_minimal_a: f64,
    },
    #[error("geometric condition violated at q = {q}: {reason}")]
    Geometric { q: usize, reason: String },
    #[error("assertion {estimate} failed at q = {q}, node {node:?}: {value:e} against {bound:e}")]
    Assertion {
        q: usize,
        node: Option<usize>,
        estimate: String,
        value: f64,
        bound: f64,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(
        "target theta = {target} is out of reach after {passes} passes; \
         the exponent chain ends at theta = {reachable}"
    )]
    TargetTheta {
        target: f64,
        reachable: f64,
        passes: usize,
    },
    #[error(transparent)]
    Nash(#[from] NashError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
