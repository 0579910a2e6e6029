//! Library side of the `infodesign` command: instance loading, the pipeline
//! report and frontier export.

pub mod error;
pub mod input;
pub mod report;

pub use error::{CliError, Stage};
pub use input::{load_instance, parse_instance, InstanceFile, Loaded};
pub use report::{
    frontier_points, run_pipeline, write_frontier_csv, Depth, FrontierPoint, GridOverrides,
    PlanReport,
};

/// Reads `INFODESIGN_THREADS`: `None` when unset, empty or 0 (automatic).
pub fn thread_override(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => match s.parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(CliError::Usage(format!(
                "INFODESIGN_THREADS must be a nonnegative integer, got '{s}'"
            ))),
        },
    }
}
