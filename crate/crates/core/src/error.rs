//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock space dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("units mismatch: {left:?} vs {right:?}")]
    UnitsMismatch {
        left: crate::hilbert::Units,
        right: crate::hilbert::Units,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("state norm {norm} deviates from 1 by more than {tol:.0e}")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("matrix is not Hermitian: max |M - M^dag| element is {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("trace {trace} deviates from 1 by more than {tol:.0e}")]
    TraceNotOne { trace: f64, tol: f64 },

    #[error("matrix has eigenvalue {min_eigenvalue:.3e} below the -{tol:.0e} positivity floor")]
    NotPositive { min_eigenvalue: f64, tol: f64 },

    #[error("coherent amplitude underflows double precision for |alpha|^2 = {0}")]
    CoherentUnderflow(f64),

    #[error("the qubit-{which} detuning vanishes")]
    ZeroDetuning { which: &'static str },

    #[error("cavity frequencies coincide; the switch-off frequency is undefined")]
    EqualCavityFrequencies,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "integration aborted at step {step}: {quantity} = {value:.6e} exceeds bound {bound:.0e}"
    )]
    InvariantViolation {
        step: usize,
        quantity: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("eigensolver missed its accuracy target: {quantity} deviation {deviation:.3e}")]
    SolverFailure {
        quantity: &'static str,
        deviation: f64,
    },

    #[error("transmission minimum sits on the probe-grid boundary; widen the window")]
    DipOnBoundary,

    #[error("only {bound} bound states below the potential maximum, {requested} requested")]
    TooFewBoundStates { bound: usize, requested: usize },

    #[error("grid size {got} below the supported minimum {min}")]
    GridTooSmall { got: usize, min: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
