//! Corrugation steps and stages adding primitive metrics
//! `rho^2 dPhi (x) dPhi` to the pullback of an immersion, the 2D metric
//! addition through conformal coordinates, and the strong-short start.

mod bootstrap;
mod metric2d;
mod phase;
mod stage;
mod step;
mod support;

pub use bootstrap::{bootstrap_strong, BootstrapParams, StrongStart};
pub use metric2d::{add_metric_2d, Metric2dOutcome, Metric2dParams, Precondition};
pub use phase::Phase;
pub use stage::{stage, StageOutcome, StageParams, StageTerm, StepSummary};
pub use step::{
    step, StepOutcome, StepParams, MAX_CONDITION, MIN_NODES_PER_WAVELENGTH, SUPPORT_TOLERANCE,
};
pub use support::distance_to_support;

use crate::corrugation::CorrugationError;
use crate::decomposition::DecompositionError;
use crate::tensor_field::FieldError;

#[derive(Debug, thiserror::Error)]
pub enum NashError {
    #[error("invalid parameters: {}", .0.join("; "))]
    Params(Vec<String>),
    #[error("mollified Jacobian is near-singular at node {node} (condition number {condition:e})")]
    Singular { node: usize, condition: f64 },
    #[error(
        "amplitude {value} at node {node} exceeds the corrugation table range {s_max}; \
         build a larger table or lower the amplitude"
    )]
    AmplitudeOutOfTable { node: usize, value: f64, s_max: f64 },
    #[error("negative amplitude {value} at node {node}")]
    NegativeAmplitude { node: usize, value: f64 },
    #[error(
        "frequency {lambda} leaves {nodes_per_wavelength:.2} nodes per wavelength, \
         at least {required} are required"
    )]
    UnderResolved {
        lambda: f64,
        nodes_per_wavelength: f64,
        required: f64,
    },
    #[error("phase drift {drift:?} is not commensurate with the torus at frequency {lambda}")]
    Incommensurate { lambda: f64, drift: [f64; 2] },
    #[error("pullback eigenvalues [{lo}, {hi}] at node {node} leave the band for gamma = {gamma}")]
    Ellipticity {
        node: usize,
        lo: f64,
        hi: f64,
        gamma: f64,
    },
    #[error("phase gradient {value} at node {node} outside [1/M, M] for M = {m_bound}")]
    PhaseGradient { node: usize, value: f64, m_bound: f64 },
    #[error("shortness lost after term {term} at node {node} (eigenvalue {eigenvalue:e})")]
    ShortnessLost {
        term: usize,
        node: usize,
        eigenvalue: f64,
    },
    #[error("immersion is not strictly short (eigenvalue {eigenvalue:e} at node {node})")]
    NotStrictlyShort { node: usize, eigenvalue: f64 },
    #[error("preconditions violated: {}", .0.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("; "))]
    Preconditions(Vec<Precondition>),
    #[error(transparent)]
    Corrugation(#[from] CorrugationError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Field(#[from] FieldError),
}
