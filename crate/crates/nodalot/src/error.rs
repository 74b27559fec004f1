//! Error type shared by every module.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building domains, functions, or
/// running a solver.
#[derive(Debug, Error)]
pub enum Error {
    /// A point does not lie on the domain, or two arguments were built for
    /// different domains.
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    /// Invalid raw input: malformed pieces, nonpositive lengths, overlaps.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// `∫f` is too far from zero for transport between `f₊` and `f₋` to be
    /// defined.
    #[error("unbalanced function: ∫f = {integral:.3e} exceeds {limit:.3e}")]
    Unbalanced { integral: f64, limit: f64 },

    /// The function is identically zero (no mass to transport) or has no
    /// nodal points where some were required.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A class specification is empty (e.g. `c₁ > c∞·|domain|`) or
    /// otherwise unsatisfiable.
    #[error("infeasible class: {0}")]
    Infeasible(String),

    /// The circle minimizer needs an even number of nodal points.
    #[error("parity: a circle function has an even number of sign interfaces, requested {0}")]
    Parity(usize),

    /// The requested closed form does not cover these inputs.
    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    /// A documented precondition of the called operation is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
}
