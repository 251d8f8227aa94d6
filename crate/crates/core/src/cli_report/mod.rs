//! Scenario files, run orchestration, OBJ export and machine-readable
//! reports (JSON lines for histories, JSON for summaries).

mod bench;
mod mesh;
mod run;
mod scenario;

pub use bench::{conformal_check, random_spd_field, stage_bench, step_bench, BenchRecord, ConformalCheck};
pub use mesh::{export_mesh, mesh_shape, mesh_vertices, read_obj, write_obj, write_vertex_grid, ObjMesh};
pub use run::{
    dry_run, plan, run, AssertionSummary, FinalNorms, LevelPlan, MeshEntry, RunPlan, RunReport, RunStatus,
    EXIT_ASSERTION, EXIT_CONFIG, EXIT_OK,
};
pub use scenario::{
    parse_scenario, parse_scenario_str, Boundary, BootstrapSpec, ChartSpec, InitialSpec, MetricSpec, OutputSpec,
    PassSpec, RationalSpec, Scenario, ScheduleSpec, Setup, SkeletonSpec,
};

use crate::adapted_induction::InductionError;
use crate::corrugation::CorrugationError;
use crate::decomposition::DecompositionError;
use crate::nash_step::NashError;
use crate::tensor_field::FieldError;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("mesh line {line}: {reason}")]
    Mesh { line: usize, reason: String },
    #[error(transparent)]
    Induction(#[from] InductionError),
    #[error(transparent)]
    Nash(#[from] NashError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Corrugation(#[from] CorrugationError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ReportError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Config(_) => EXIT_CONFIG,
            _ => EXIT_ASSERTION,
        }
    }
}
