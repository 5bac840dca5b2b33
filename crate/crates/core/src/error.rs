use thiserror::Error;

/// Errors raised anywhere in the simulation, training, or experiment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("Newton iteration did not converge at step {step} (t = {time:.4} s): residual norm {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        step: usize,
        time: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("singular Jacobian at step {step} (t = {time:.4} s)")]
    SingularJacobian { step: usize, time: f64 },

    #[error("pitch angle {theta:.6} rad is within the kinematic singularity guard of +/- pi/2")]
    KinematicSingularity { theta: f64 },

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Training { epoch: usize },

    #[error("model version mismatch: expected {expected}, found {found}")]
    Version { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse error category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Solver,
    Training,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Solver => 4,
            ErrorCategory::Training => 5,
            ErrorCategory::Io => 6,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::Contract(_) | Error::Version { .. } => {
                ErrorCategory::Config
            }
            Error::Data(_) | Error::Json(_) | Error::Csv(_) => ErrorCategory::Data,
            Error::NonConvergence { .. }
            | Error::SingularJacobian { .. }
            | Error::KinematicSingularity { .. } => ErrorCategory::Solver,
            Error::Training { .. } => ErrorCategory::Training,
            Error::Io(_) => ErrorCategory::Io,
        }
    }

    /// Attach a step index and time to solver errors that were raised without one.
    pub(crate) fn at_step(self, step: usize, time: f64) -> Self {
        match self {
            Error::NonConvergence {
                residual,
                iterations,
                ..
            } => Error::NonConvergence {
                step,
                time,
                residual,
                iterations,
            },
            Error::SingularJacobian { .. } => Error::SingularJacobian { step, time },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
