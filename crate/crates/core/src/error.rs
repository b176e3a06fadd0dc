//! Error type shared by all modules.

use thiserror::Error;

/// Errors raised by the varwave numerical kernels.
#[derive(Debug, Error)]
pub enum VarwaveError {
    /// Invalid input that violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A coefficient profile violating the positivity hypothesis u(x) > 0.
    #[error("coefficient profile rejected: {0}")]
    ProfileRejected(String),

    /// Eigenvalue solve failed (non-finite assembly, lost symmetry, degenerate pairs).
    #[error("eigen solve failed for profile `{profile}`: {reason}")]
    EigenSolveFailed { profile: String, reason: String },

    /// The odd-subspace machinery needs an even p in T = 2πp/q.
    #[error("p must be even for the odd-subspace reduction (T = 2πp/q); got p = {p}")]
    PeriodParity { p: u32 },

    /// A spectrum value violates the odd-subspace nonresonance |mu| > kernel_tol.
    #[error("near-resonant odd mode (m, n) = ({m}, {n}): |mu| = {mu_abs:.3e} <= kernel_tol = {kernel_tol:.3e}")]
    NearResonance {
        m: u32,
        n: u32,
        mu_abs: f64,
        kernel_tol: f64,
    },

    /// The truncation window cannot certify a spectral bracket or kernel.
    #[error("truncation window too small: {0}")]
    WindowTooSmall(String),

    /// A requested level coincides with a spectrum value.
    #[error("level {level} coincides with spectrum value {mu} at (m, n) = ({m}, {n})")]
    LevelOnSpectrum { level: f64, mu: f64, m: u32, n: u32 },

    /// Resolvent diagonal hit within kernel_tol of zero.
    #[error("resonant truncation in resolvent at (m, n) = ({m}, {n}): |mu - gamma| = {gap:.3e}")]
    ResonantMode { m: u32, n: u32, gap: f64 },

    /// Grid shapes do not match between operands.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Grid resolution below the Nyquist requirement for the truncation.
    #[error("under-resolved grid: {0}")]
    UnderResolved(String),

    /// An iterative method did not converge.
    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),

    /// Newton divergence during continuation, with the path walked so far.
    #[error("newton diverged at s = {s}: {reason}")]
    NewtonDiverged { s: f64, reason: String },

    /// The nonlinearity broke the declared odd-subspace symmetry mid-solve.
    #[error("symmetry violation: even-projection norm {norm:.3e} exceeds tolerance at s = {s}")]
    SymmetryViolation { s: f64, norm: f64 },

    /// Non-finite values encountered in field data.
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, VarwaveError>;
