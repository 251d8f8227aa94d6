//! Primitive-metric decompositions: a finite frame with linear coefficient
//! maps, and conformal coordinates for 2D metrics via the Beltrami equation.

mod beltrami;
mod frame;

pub use beltrami::{
    beltrami_at, beltrami_coefficient, solve_conformal, BeltramiField, ConformalFactorization,
    ConformalOptions, ConformalStats,
};
pub use frame::{equiangular_directions, frame_size, sym2_matrix, PrimitiveFrame};

use crate::tensor_field::{FieldError, MetricField};

#[derive(Debug, thiserror::Error)]
pub enum DecompositionError {
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error("frame directions do not span the symmetric matrices")]
    SingularFrame,
    #[error("base point is not positive definite")]
    NotPositive,
    #[error("base point eigenvalues [{lo}, {hi}] leave the band for gamma = {gamma}")]
    OutsideBand { gamma: f64, lo: f64, hi: f64 },
    #[error("frame coefficients at the base point are not positive (radius {0})")]
    NoPositivity(f64),
    #[error("metric is not positive definite at node {node}")]
    NotSpd { node: usize },
    #[error("Beltrami iteration stalled after {iterations} iterations (contraction {contraction:.4})")]
    Stalled { iterations: usize, contraction: f64 },
    #[error("conformal map degenerates at node {node} (det {det})")]
    Degenerate { node: usize, det: f64 },
    #[error("isothermal residual {sup:e} above tolerance")]
    Residual { sup: f64, residual: Box<MetricField> },
    #[error(transparent)]
    Field(#[from] FieldError),
}
