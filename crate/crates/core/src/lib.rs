//! Spectral Galerkin toolkit for time-periodic solutions of the variable
//! coefficient wave equation u(x)y_tt − (u(x)y_x)_x = f(t, x, y) on
//! Ω = (0, T) × (0, π), T = 2πp/q, with periodic-Dirichlet conditions.
//!
//! The pipeline: a Sturm–Liouville eigenbasis of (uφ')' = −λ²uφ via the
//! Liouville normal form, the wave-operator spectrum μ_mn = λ_n² − (qm/p)²
//! with its odd/even invariant-subspace split, numerical verification of
//! the nonresonance hypotheses, and homotopy continuation for periodic
//! solutions on the T/2-antiperiodic subspace.

pub mod coefficient;
pub mod error;
pub mod function_space;
pub(crate) mod krylov;
pub mod quad;
pub mod solver;
pub mod sturm_liouville;
pub mod verification;
pub mod wave_spectrum;

pub use coefficient::{CoefficientKind, CoefficientProfile};
pub use error::{Result, VarwaveError};
pub use function_space::{
    FieldSpace, GridField, Multiplier, NonlinearitySpec, Parity, SpectralField, TrigKind,
};
pub use solver::{SolveConfig, SolveReport};
pub use sturm_liouville::EigenBasis;
pub use wave_spectrum::{OperatorSpectrum, RationalPeriod};
