//! Dense density-matrix toolkit for quantum error mitigation.
//!
//! The crate simulates mitigation protocols that repeatedly measure noisy
//! copies of a circuit output and post-process the outcomes into an estimate
//! of an ideal expectation value. It provides:
//!
//! - [`state`] / [`channel`]: density matrices, observables, Kraus channels,
//!   layered noisy circuits and effective noise channels;
//! - [`distance`]: trace distance, fidelity, sub-fidelity and relative
//!   entropy;
//! - [`bounds`]: lower bounds on the estimator spread (and hence on the
//!   Hoeffding sampling cost) of any protocol with a given shape, evaluated
//!   from the distinguishability loss caused by the noise;
//! - [`protocol`], [`pec`], [`extrapolation`], [`vd`]: concrete protocols
//!   (probabilistic error cancellation, Richardson extrapolation, virtual
//!   distillation) expressed as measurement + estimator tables, plus a
//!   seeded Monte Carlo executor;
//! - [`subfid`]: shot-based overlap estimators (destructive SWAP / CYCLE
//!   measurements) feeding the sub-fidelity spread bound.
//!
//! Everything is dense linear algebra; the intended scale is a handful of
//! qubits, capped at joint dimension [`DENSE_DIM_CAP`].

pub mod bounds;
pub mod channel;
pub mod distance;
mod error;
pub mod extrapolation;
pub mod linalg;
pub mod pauli;
pub mod pec;
pub mod protocol;
pub mod random;
pub mod state;
pub mod subfid;
pub mod vd;
pub mod verify;

pub use error::Error;

/// Tolerance for structural checks: hermiticity, unit trace, CPTP closure,
/// POVM completeness, unitarity.
pub const TOL_STRUCTURAL: f64 = 1e-9;

/// Kraus operators with Frobenius norm below this are dropped when channels
/// are composed.
pub const TOL_PRUNE: f64 = 1e-12;

/// Largest joint Hilbert-space dimension the dense code paths will
/// materialize. Operations that would exceed it return
/// [`Error::ProductTooLarge`].
pub const DENSE_DIM_CAP: usize = 1 << 14;

pub type Result<T> = std::result::Result<T, Error>;
