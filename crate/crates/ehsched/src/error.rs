use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested quantity has no finite solution under the given resources.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Neither waiting condition becomes satisfiable within the horizon.
    #[error("waiting never ends: {0}")]
    WaitingNeverEnds(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Iterative solver hit its iteration cap; carries the best feasible
    /// objective reached and the remaining constraint violation.
    #[error("solver did not converge: best {best} bits, violation {violation}")]
    NoConvergence { best: f64, violation: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
