use std::fmt;

use thiserror::Error;

/// Pipeline stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Plan,
    Design,
    Verify,
    Frontier,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Plan => "plan",
            Stage::Design => "design",
            Stage::Verify => "verify",
            Stage::Frontier => "frontier",
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or invalid input.
    #[error("{0}")]
    Usage(String),
    #[error("{stage} stage failed: {source}")]
    Numeric {
        stage: Stage,
        #[source]
        source: infodesign::Error,
    },
    #[error("verification failed: induced action {induced_action} (target {target_action}), error {max_abs_err:e} > {tolerance:e}")]
    VerificationFailed {
        target_action: usize,
        induced_action: usize,
        max_abs_err: f64,
        tolerance: f64,
    },
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::VerificationFailed { .. } => 2,
            CliError::Numeric { .. } => 3,
        }
    }

    /// Classifies a core error raised at `stage`. Grid settings come from the
    /// command line, so an invalid grid is a usage error.
    pub fn at(stage: Stage) -> impl Fn(infodesign::Error) -> CliError {
        move |source| match source {
            infodesign::Error::InvalidGrid(msg) => CliError::Usage(format!("grid: {msg}")),
            infodesign::Error::GridTooLarge { evaluations, cap } => CliError::Usage(format!(
                "grid: {evaluations} evaluations exceed the cap of {cap}; raise --grid-step"
            )),
            source => CliError::Numeric { stage, source },
        }
    }
}
