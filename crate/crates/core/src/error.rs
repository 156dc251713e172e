//! Error type shared across the crate.

/// Errors produced by geometry, affinity and embedding operations.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two points (or a point and a dataset) live on different manifolds.
    #[error("manifold mismatch: {0}")]
    ManifoldMismatch(String),

    /// Coordinates do not satisfy the manifold invariants.
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    /// The logarithm map is undefined for an antipodal sphere pair.
    #[error("antipodal sphere points{}: log map is undefined; perturb the data", fmt_index(.index))]
    Antipodal {
        /// Dataset index of the offending point, when known.
        index: Option<usize>,
    },

    /// A numerical routine failed (eigen solve, degenerate row, blow-up).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

fn fmt_index(index: &Option<usize>) -> String {
    match index {
        Some(i) => format!(" (index {i})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
