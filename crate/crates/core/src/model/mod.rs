//! System parameters, the truncated Fock space, ladder operators and the
//! three Hamiltonians (universal parametric, molecular, optomechanical).

mod basis;
mod hamiltonian;
mod operators;
mod params;
mod rwa;

pub use basis::{BasisState, FockBasis};
pub use hamiltonian::{build_hamiltonian, dressed_phonon_frequency, map_to_parametric, HamiltonianKind};
pub use operators::{build_operators, LadderOperators, OperatorMatrix};
pub use params::{complex_value, CouplingSpec, Mechanism, SystemParams};
pub use rwa::{validate_rwa, validate_rwa_with, ValidityReport, DEFAULT_RWA_THRESHOLD};

/// Convenience wrapper: `build_basis(n_phonon_max, n_photon_max)`.
pub fn build_basis(n_phonon_max: usize, n_photon_max: usize) -> crate::Result<FockBasis> {
    FockBasis::new(n_phonon_max, n_photon_max)
}
