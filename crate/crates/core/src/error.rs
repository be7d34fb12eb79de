use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    SolverFailure {
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("numeric breakdown in linear solver: {0}")]
    NumericBreakdown(String),

    #[error(
        "right-hand side incompatible with the constant null space (|sum| = {projection:.3e}, |rhs| = {norm:.3e})"
    )]
    Incompatible { projection: f64, norm: f64 },

    #[error("pressure outside the range of the {phase} equation of state: {pressure}")]
    EosDomain { phase: &'static str, pressure: f64 },

    #[error("closure failed for alpha_g = {alpha_g}, alpha_l = {alpha_l}: {reason}")]
    Closure { alpha_g: f64, alpha_l: f64, reason: String },

    #[error("closure failed at node {node}: {source}")]
    ClosureAtNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step} ({phase}) failed: {source}")]
    Step {
        step: &'static str,
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{what} Picard iteration did not converge in {iterations} iterations (last change {change:.3e})")]
    Picard {
        what: &'static str,
        iterations: usize,
        change: f64,
    },

    #[error("partial density below floor at node {node}: {value:e}")]
    SubFloorDensity { node: usize, value: f64 },

    #[error("state invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn in_step(self, step: &'static str, phase: &'static str) -> Self {
        Error::Step {
            step,
            phase,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
