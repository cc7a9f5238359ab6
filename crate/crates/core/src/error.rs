//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong outside of a solver verdict.
///
/// Mathematical outcomes (an infeasible patch, an unsatisfiable translation)
/// are *not* errors; they are carried in result statuses. `Error` covers
/// malformed files, dimension mismatches, bad indices and non-finite numbers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file or text input could not be parsed. Carries a 1-based line
    /// number where that makes sense (0 when it does not).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Structural validation failed (widths, matrix shapes, activations).
    #[error("shape error: {0}")]
    Shape(String),

    /// A vector or matrix dimension did not match the network.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A layer, neuron or edge-layer index is out of range.
    #[error("index out of range: {0}")]
    Index(String),

    /// A value that must be finite was NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A property string could not be parsed.
    #[error("property error: {0}")]
    Property(String),

    /// A metric was asked of an empty record set.
    #[error("empty record set: {0}")]
    EmptyRecords(String),

    /// The solver gave up (iteration or node limit). Distinct from
    /// infeasibility: this is resource exhaustion, not a mathematical verdict.
    #[error("solver limit reached: {0}")]
    SolverLimit(String),

    /// An internal consistency check failed; indicates a bug, not bad input.
    #[error("internal check failed: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
