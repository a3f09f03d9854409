use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest dimension accepted for dense matrices (16 bytes per entry, so a
/// 4096² operator is already 256 MiB).
const MAX_DENSE_DIM: usize = 4096;

/// Product state `|α⟩|n⟩|i⟩`: phonon number, photon number, fermion level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisState {
    pub phonon: usize,
    pub photon: usize,
    pub fermion: usize,
}

impl BasisState {
    pub const fn new(phonon: usize, photon: usize, fermion: usize) -> Self {
        BasisState { phonon, photon, fermion }
    }

    /// Ket label in the `αni` order, e.g. `"110"`.
    pub fn label(&self) -> String {
        format!("{}{}{}", self.phonon, self.photon, self.fermion)
    }
}

/// Truncated `|phonon⟩|photon⟩|fermion⟩` product basis.
///
/// Flat index: `(α·(n_photon_max+1) + n)·2 + i`, so the fermion index runs
/// fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockBasis {
    n_phonon_max: usize,
    n_photon_max: usize,
    dim: usize,
}

impl FockBasis {
    pub fn new(n_phonon_max: usize, n_photon_max: usize) -> Result<Self> {
        if n_phonon_max == 0 || n_photon_max == 0 {
            return Err(Error::InvalidBasis(format!(
                "cutoffs must be >= 1, got n_phonon_max={n_phonon_max}, n_photon_max={n_photon_max}"
            )));
        }
        let dim = n_photon_max
            .checked_add(1)
            .and_then(|a| n_phonon_max.checked_add(1).and_then(|b| a.checked_mul(b)))
            .and_then(|d| d.checked_mul(2))
            .ok_or_else(|| Error::InvalidBasis("dimension overflows usize".into()))?;
        if dim > MAX_DENSE_DIM {
            return Err(Error::InvalidBasis(format!(
                "dimension {dim} exceeds the dense-matrix limit {MAX_DENSE_DIM}"
            )));
        }
        Ok(FockBasis { n_phonon_max, n_photon_max, dim })
    }

    pub fn n_phonon_max(&self) -> usize {
        self.n_phonon_max
    }

    pub fn n_photon_max(&self) -> usize {
        self.n_photon_max
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Flat index of `|α n i⟩`, `None` outside the truncation.
    pub fn index(&self, phonon: usize, photon: usize, fermion: usize) -> Option<usize> {
        (phonon <= self.n_phonon_max && photon <= self.n_photon_max && fermion <= 1)
            .then(|| (phonon * (self.n_photon_max + 1) + photon) * 2 + fermion)
    }

    pub fn index_of(&self, s: BasisState) -> Option<usize> {
        self.index(s.phonon, s.photon, s.fermion)
    }

    /// Inverse of [`FockBasis::index`].
    pub fn state(&self, flat: usize) -> Option<BasisState> {
        (flat < self.dim).then(|| {
            let fermion = flat % 2;
            let rest = flat / 2;
            BasisState { phonon: rest / (self.n_photon_max + 1), photon: rest % (self.n_photon_max + 1), fermion }
        })
    }

    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim).map(|k| self.state(k).expect("index below dim"))
    }
}
