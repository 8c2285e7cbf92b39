use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A planning problem cannot be laid out inside the prediction window
    /// (a deadline index falls outside `1..=frames_per_window`).
    #[error("deadline index {index} of user {user} lies outside the window 1..={window}")]
    DeadlineOutOfWindow { user: usize, index: i64, window: usize },

    /// The planning problem has no feasible plan even at the largest
    /// admissible maximal waiting time.
    #[error("infeasible: {binding} (violation {violation:.3e})")]
    Infeasible { binding: String, violation: f64 },

    /// The linear program is unbounded.
    #[error("linear program is unbounded")]
    Unbounded,

    /// The simplex method did not converge within its iteration budget.
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
