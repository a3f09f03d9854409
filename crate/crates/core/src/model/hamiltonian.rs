use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::FockBasis;
use super::operators::{build_operators, OperatorMatrix};
use super::params::{CouplingSpec, Mechanism, SystemParams};
use crate::{Error, Result};

/// Which Hamiltonian to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianKind {
    /// `ωc†c + ω_e σ†σ + Ωb†b + (Ω_R3 σ†cb + h.c.)`
    Parametric,
    /// Two-wave coupling plus `√S Ω σ†σ(b + b†)`.
    Molecular,
    /// Two-wave coupling minus `g c†c(b + b†)`.
    Optomechanical,
}

impl std::fmt::Display for HamiltonianKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HamiltonianKind::Parametric => "parametric",
            HamiltonianKind::Molecular => "molecular",
            HamiltonianKind::Optomechanical => "optomechanical",
        })
    }
}

fn coupling_field<T>(spec: Option<&CouplingSpec>, kind: HamiltonianKind, get: impl Fn(&CouplingSpec) -> Option<T>, name: &str) -> Result<T> {
    spec.and_then(get)
        .ok_or_else(|| Error::MissingCoupling(format!("{kind} Hamiltonian needs coupling.{name}")))
}

/// Builds the requested Hamiltonian on `basis`. The Hermitian conjugate
/// terms are written out explicitly, the result is then checked.
pub fn build_hamiltonian(
    kind: HamiltonianKind,
    params: &SystemParams,
    spec: Option<&CouplingSpec>,
    basis: &FockBasis,
) -> Result<OperatorMatrix> {
    let ops = build_operators(basis);
    let (sd, cd, bd) = (ops.sigma.adjoint(), ops.c.adjoint(), ops.b.adjoint());
    let real = |x: f64| Complex64::new(x, 0.0);

    let n_e = &sd * &ops.sigma;
    let n_c = &cd * &ops.c;
    let n_b = &bd * &ops.b;
    let mut h = &(&n_c.scale(real(params.omega)) + &n_e.scale(real(params.omega_e))) + &n_b.scale(real(params.omega_v));

    match kind {
        HamiltonianKind::Parametric => {
            let g3 = params.require_rabi3()?;
            let t = (&(&sd * &ops.c) * &ops.b).scale(g3);
            h = &(&h + &t) + &t.adjoint();
        }
        HamiltonianKind::Molecular | HamiltonianKind::Optomechanical => {
            let g2 = params.require_rabi2()?;
            let t = (&sd * &ops.c).scale(g2);
            h = &(&h + &t) + &t.adjoint();
            let x = &ops.b + &bd;
            if kind == HamiltonianKind::Molecular {
                let s = coupling_field(spec, kind, |c| c.huang_rhys, "huang_rhys")?;
                if s < 0.0 {
                    return Err(Error::param("huang_rhys", "must be >= 0"));
                }
                h = &h + &(&n_e * &x).scale(real(s.sqrt() * params.omega_v));
            } else {
                let g = coupling_field(spec, kind, |c| c.g_factor, "g_factor")?;
                h = &h - &(&n_c * &x).scale(real(g));
            }
        }
    }

    let err = h.hermiticity_error();
    if err > 1e-12 * h.max_abs() {
        return Err(Error::Invariant(format!("{kind} Hamiltonian not Hermitian: max|H − H†| = {err:e}")));
    }
    Ok(h)
}

/// Effective three-wave coupling of a microscopic mechanism:
/// `−√S Ω_R2` (molecular), `−(g/Ω) Ω_R2` (optomechanical), or the
/// supplied overlap unchanged (gradient).
pub fn map_to_parametric(spec: &CouplingSpec, params: &SystemParams) -> Result<Complex64> {
    match spec.mechanism {
        Mechanism::Gradient => spec
            .gradient_overlap
            .ok_or_else(|| Error::MissingCoupling("coupling.gradient_overlap".into())),
        Mechanism::Molecular => {
            let s = spec.huang_rhys.ok_or_else(|| Error::MissingCoupling("coupling.huang_rhys".into()))?;
            if s < 0.0 {
                return Err(Error::param("huang_rhys", "must be >= 0"));
            }
            Ok(-params.require_rabi2()? * s.sqrt())
        }
        Mechanism::Optomechanical => {
            let g = spec.g_factor.ok_or_else(|| Error::MissingCoupling("coupling.g_factor".into()))?;
            if params.omega_v == 0.0 {
                return Err(Error::param("omega_v", "optomechanical mapping divides by Ω, which is zero"));
            }
            Ok(-params.require_rabi2()? * (g / params.omega_v))
        }
    }
}

/// Phonon frequency that puts `|110⟩` and `|001⟩` on resonance once the
/// second-order level shifts of the microscopic Hamiltonian are included.
///
/// Both levels are pushed by the two-wave coupling (`∓|Ω_R2|²/Δ`,
/// `Δ = ω_e − ω`); the molecular model also shifts `|001⟩` down by the
/// polaron energy `SΩ`, the optomechanical model shifts `|110⟩` by `−g²/Ω`.
/// The bare condition `ω_e = ω + Ω` is off by these shifts, which are of the
/// same order as the three-wave coupling itself.
pub fn dressed_phonon_frequency(kind: HamiltonianKind, params: &SystemParams, spec: &CouplingSpec) -> Result<f64> {
    let delta = params.omega_e - params.omega;
    if delta == 0.0 {
        return Err(Error::param("omega_e", "ω_e = ω leaves the two-wave detuning undefined"));
    }
    let r2 = params.require_rabi2()?.norm_sqr();
    let target = delta + 2.0 * r2 / delta;
    match kind {
        HamiltonianKind::Parametric => Ok(delta),
        HamiltonianKind::Molecular => {
            let s = spec.huang_rhys.ok_or_else(|| Error::MissingCoupling("coupling.huang_rhys".into()))?;
            Ok(target / (1.0 + s))
        }
        HamiltonianKind::Optomechanical => {
            let g = spec.g_factor.ok_or_else(|| Error::MissingCoupling("coupling.g_factor".into()))?;
            Ok(0.5 * (target + (target * target + 4.0 * g * g).sqrt()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn parametric_params() -> SystemParams {
        SystemParams::resonant(20.0, 1.0, c(1.0))
    }

    #[test]
    fn parametric_elements() {
        let basis = FockBasis::new(1, 1).unwrap();
        let p = SystemParams { rabi3: Some(Complex64::new(0.6, 0.8)), ..parametric_params() };
        let h = build_hamiltonian(HamiltonianKind::Parametric, &p, None, &basis).unwrap();
        let s001 = basis.index(0, 0, 1).unwrap();
        let s110 = basis.index(1, 1, 0).unwrap();
        assert_eq!(h.element(s001, s110), Complex64::new(0.6, 0.8));
        assert_eq!(h.element(s110, s001), Complex64::new(0.6, -0.8));
        assert_eq!(h.element(s110, s110), c(21.0));
        assert_eq!(h.element(s001, s001), c(21.0));
    }

    #[test]
    fn unit_coupling_matrix_element() {
        let basis = FockBasis::new(1, 1).unwrap();
        let h = build_hamiltonian(HamiltonianKind::Parametric, &parametric_params(), None, &basis).unwrap();
        assert_eq!(h.element(basis.index(0, 0, 1).unwrap(), basis.index(1, 1, 0).unwrap()), c(1.0));
    }

    #[test]
    fn molecular_polaron_element() {
        let basis = FockBasis::new(2, 1).unwrap();
        let p = SystemParams { omega_v: 1.0, rabi2: Some(c(0.5)), ..parametric_params() };
        let spec = CouplingSpec::molecular(0.04);
        let h = build_hamiltonian(HamiltonianKind::Molecular, &p, Some(&spec), &basis).unwrap();
        for n in 0..=1 {
            let v = h.element(basis.index(1, n, 1).unwrap(), basis.index(0, n, 1).unwrap());
            assert!((v - c(0.2)).norm() < 1e-15);
            let v = h.element(basis.index(1, n, 0).unwrap(), basis.index(0, n, 0).unwrap());
            assert_eq!(v, c(0.0));
        }
    }

    #[test]
    fn missing_couplings_rejected() {
        let basis = FockBasis::new(1, 1).unwrap();
        let p = SystemParams { rabi3: None, ..parametric_params() };
        assert!(matches!(
            build_hamiltonian(HamiltonianKind::Parametric, &p, None, &basis),
            Err(Error::MissingCoupling(_))
        ));
        let p = SystemParams { rabi2: Some(c(0.1)), ..parametric_params() };
        assert!(matches!(
            build_hamiltonian(HamiltonianKind::Molecular, &p, None, &basis),
            Err(Error::MissingCoupling(_))
        ));
        assert!(matches!(
            build_hamiltonian(HamiltonianKind::Optomechanical, &p, Some(&CouplingSpec::molecular(0.1)), &basis),
            Err(Error::MissingCoupling(_))
        ));
    }

    #[test]
    fn mapping_values() {
        let p = SystemParams { omega_v: 1.0, rabi2: Some(c(0.5)), ..parametric_params() };
        let m = map_to_parametric(&CouplingSpec::molecular(0.04), &p).unwrap();
        assert!((m - c(-0.1)).norm() < 1e-15);
        let o = map_to_parametric(&CouplingSpec::optomechanical(0.02), &p).unwrap();
        assert!((o - c(-0.01)).norm() < 1e-15);
        assert_eq!(map_to_parametric(&CouplingSpec::molecular(0.0), &p).unwrap().norm(), 0.0);
        let z = Complex64::new(0.3, -0.1);
        assert_eq!(map_to_parametric(&CouplingSpec::gradient(z), &p).unwrap(), z);
        let p0 = SystemParams { omega_v: 0.0, ..p };
        assert!(map_to_parametric(&CouplingSpec::optomechanical(0.02), &p0).is_err());
    }

    #[test]
    fn dressed_frequency_solves_shift_balance() {
        let p = SystemParams { omega_e: 3.0, omega: 2.0, omega_v: 1.0, rabi2: Some(c(0.05)), ..parametric_params() };
        let spec = CouplingSpec::optomechanical(0.1);
        let w = dressed_phonon_frequency(HamiltonianKind::Optomechanical, &p, &spec).unwrap();
        let lhs = w - 0.01 / w;
        assert!((lhs - (1.0 + 2.0 * 0.0025)).abs() < 1e-14);
        let w = dressed_phonon_frequency(HamiltonianKind::Molecular, &p, &CouplingSpec::molecular(0.01)).unwrap();
        assert!((w * 1.01 - 1.005).abs() < 1e-14);
    }
}
