//! Sampled scalar, metric and immersion fields on uniform grids, with
//! stencil derivatives, pullback metrics, norms, shortness checks and
//! mollification.

mod fft;
mod field;
mod grid;
mod holder;
pub mod io;
mod mollify;
mod short;
pub mod stencil;

pub use fft::{good_size, wavenumber, Fft2};
pub use field::{pullback_metric, GridField, ImmersionField, MetricField, ScalarField};
pub use grid::{BoundaryMode, GridChart};
pub use holder::{holder_seminorm, norm_report, DerivOrder, NormReport, ALL_PAIRS_MAX};
pub use mollify::{kernel_profile, Mollifier, Mollify, MIN_RADIUS_CELLS};
pub use short::{
    check_short, check_strong_short, classify, shortness_of_defect, Shortness, ShortnessReport,
    StrongShortReport, SHORT_TOLERANCE,
};
pub use stencil::StencilOrder;

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("resolution {0:?} below the minimum of 8 nodes per axis")]
    Resolution([usize; 2]),
    #[error("extent {0:?} must be positive and finite")]
    Extent([f64; 2]),
    #[error("expected {expected} samples, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite sample at node {0}")]
    NonFinite(usize),
    #[error("fields live on different charts")]
    ChartMismatch,
    #[error("equivariant maps need a periodic chart")]
    NotPeriodic,
    #[error("metric at node {node} leaves the ellipticity band for gamma = {gamma}")]
    NotElliptic { node: usize, gamma: f64 },
    #[error("mollifier radius {ell} is below the resolvable minimum {min}")]
    UnderResolvedKernel { ell: f64, min: f64 },
    #[error("mollifier radius {ell} exceeds half the torus period")]
    KernelTooWide { ell: f64 },
    #[error("container format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
