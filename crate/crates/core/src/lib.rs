//! Simulation toolkit for the three-wave resonance `ω_e ≈ ω + Ω` between a
//! two-level electron, a cavity photon mode and a phonon mode.
//!
//! The open system is evolved three independent ways:
//!
//! * [`analytic`]: closed-form amplitudes, occupations and correlators at
//!   exact resonance,
//! * [`lindblad`]: a Runge-Kutta integrator of the T=0 master equation on a
//!   truncated Fock space (the reference everything else is checked against),
//! * [`stochastic`]: Monte-Carlo trajectories of the stochastic state-vector
//!   equation restricted to the five-state subspace.
//!
//! [`spectra`] turns correlators into emission spectra, finds peaks and
//! inverts peak-height ratios into relaxation-rate ratios. [`cli`] ties it
//! together behind the `triwave` binary.
//!
//! Units: `ħ = 1`, every frequency and rate in one common angular unit.

pub mod analytic;
pub mod cli;
pub mod correlator;
pub mod error;
pub mod lindblad;
pub mod model;
pub mod output;
pub mod spectra;
pub mod stochastic;
pub mod universality;

pub use error::{Error, Result};
pub use num_complex::Complex64;
