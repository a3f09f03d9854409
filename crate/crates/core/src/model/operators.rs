use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::FockBasis;
use crate::{Error, Result};

/// Dense square complex matrix acting on a [`FockBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix(DMatrix<Complex64>);

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        OperatorMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        Ok(OperatorMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    /// `⟨row|O|col⟩`.
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix(self.0.adjoint())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        OperatorMatrix(&self.0 * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max |O − O†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_error() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        OperatorMatrix(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// `O|ψ⟩`.
    pub fn apply(&self, ket: &nalgebra::DVector<Complex64>) -> nalgebra::DVector<Complex64> {
        &self.0 * ket
    }
}

impl std::ops::Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl std::ops::Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

/// Lowering operators of the fermion (`σ`), photon (`c`) and phonon (`b`).
#[derive(Debug, Clone)]
pub struct LadderOperators {
    pub sigma: OperatorMatrix,
    pub c: OperatorMatrix,
    pub b: OperatorMatrix,
}

impl LadderOperators {
    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }
}

/// Truncated lowering operators on `basis`: `⟨n−1|c|n⟩ = √n`, `σ = |0⟩⟨1|`.
pub fn build_operators(basis: &FockBasis) -> LadderOperators {
    let dim = basis.dim();
    let mut sigma = DMatrix::zeros(dim, dim);
    let mut c = DMatrix::zeros(dim, dim);
    let mut b = DMatrix::zeros(dim, dim);
    for s in basis.states() {
        let col = basis.index_of(s).expect("state in basis");
        if s.fermion == 1 {
            let row = basis.index(s.phonon, s.photon, 0).expect("lower fermion level");
            sigma[(row, col)] = Complex64::new(1.0, 0.0);
        }
        if s.photon > 0 {
            let row = basis.index(s.phonon, s.photon - 1, s.fermion).expect("photon below cutoff");
            c[(row, col)] = Complex64::new((s.photon as f64).sqrt(), 0.0);
        }
        if s.phonon > 0 {
            let row = basis.index(s.phonon - 1, s.photon, s.fermion).expect("phonon below cutoff");
            b[(row, col)] = Complex64::new((s.phonon as f64).sqrt(), 0.0);
        }
    }
    LadderOperators { sigma: OperatorMatrix(sigma), c: OperatorMatrix(c), b: OperatorMatrix(b) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(z: Complex64) -> f64 {
        assert_eq!(z.im, 0.0);
        z.re
    }

    #[test]
    fn sigma_lowers_fermion() {
        let basis = FockBasis::new(1, 1).unwrap();
        let ops = build_operators(&basis);
        let g = basis.index(0, 0, 0).unwrap();
        let e = basis.index(0, 0, 1).unwrap();
        assert_eq!(re(ops.sigma.element(g, e)), 1.0);
    }

    #[test]
    fn photon_number_on_one_photon() {
        let basis = FockBasis::new(1, 1).unwrap();
        let ops = build_operators(&basis);
        let n = &ops.c.adjoint() * &ops.c;
        let k = basis.index(0, 1, 0).unwrap();
        assert_eq!(re(n.element(k, k)), 1.0);
    }

    #[test]
    fn sqrt_four_matrix_element() {
        let basis = FockBasis::new(1, 4).unwrap();
        let ops = build_operators(&basis);
        let from = basis.index(0, 4, 0).unwrap();
        let to = basis.index(0, 3, 0).unwrap();
        assert!((re(ops.c.element(to, from)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let basis = FockBasis::new(3, 2).unwrap();
        let ops = build_operators(&basis);
        let comm = ops.b.commutator(&ops.b.adjoint());
        for s in basis.states() {
            let k = basis.index_of(s).unwrap();
            let expected = if s.phonon < basis.n_phonon_max() { 1.0 } else { -(basis.n_phonon_max() as f64) };
            assert!((comm.element(k, k).re - expected).abs() < 1e-12);
        }
        let comm = ops.c.commutator(&ops.c.adjoint());
        for s in basis.states().filter(|s| s.photon < basis.n_photon_max()) {
            let k = basis.index_of(s).unwrap();
            assert!((comm.element(k, k).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn modes_commute() {
        let basis = FockBasis::new(2, 2).unwrap();
        let ops = build_operators(&basis);
        assert_eq!(ops.b.commutator(&ops.c).max_abs(), 0.0);
        assert_eq!(ops.sigma.commutator(&ops.c.adjoint()).max_abs(), 0.0);
    }
}
