//! Simulation toolkit for a microwave quantum battery with a flux-tunable
//! coupler circuit.
//!
//! The storage cavity is modeled in a truncated Fock space ([`hilbert`]);
//! an always-on qubit mediates an effective cavity-cavity exchange whose
//! strength follows from second-order perturbation theory ([`dispersive`]);
//! charging and decay are integrated under a single-decay-channel Lindblad
//! equation with closed-form cross-checks ([`dynamics`]); extractable work
//! is quantified by ergotropy in two conventions ([`ergotropy`]); the stored
//! photon number is read off a transmission-line dip ([`readout`]); and the
//! coupler's qubit frequency and couplings come from a one-dimensional
//! finite-difference band solver ([`squid`]).
//!
//! All frequencies and rates are angular (rad/s) throughout the crate.

pub mod constants;
pub mod dispersive;
pub mod dynamics;
pub mod ergotropy;
pub mod error;
pub mod hilbert;
pub mod readout;
pub mod squid;

pub use error::{Error, Result};

/// Crate version, embedded in run manifests so outputs name the build
/// that produced them.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
