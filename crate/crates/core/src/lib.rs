//! Numerical convex integration for isometric immersions of surface metrics.
//!
//! The pipeline builds corrugated immersions by successive high-frequency
//! steps, decomposes metric increments into primitive metrics through
//! conformal coordinates, and drives an induction over the skeleta of a
//! triangulation while certifying shortness and error decay on the grid.

pub mod linalg;
pub mod tensor_field;
pub mod corrugation;
pub mod decomposition;
pub mod nash_step;
pub mod adapted_induction;
pub mod cli_report;
