//! Property tests of structural invariants across random parameters.

mod common;

use common::*;
use proptest::prelude::*;
use triwave::analytic::{
    entangled_amplitudes, eigenfrequencies, occupations_closed_form, correlator_analytic, DerivedRates,
};
use triwave::correlator::{linspace, CorrelatorSource, Field};
use triwave::lindblad::{evolve_density, DensityMatrix, Liouvillian, Observable, QrtCorrelator, Rk4Config};
use triwave::model::{
    build_basis, build_hamiltonian, build_operators, BasisState, CouplingSpec, HamiltonianKind, OperatorMatrix,
    SystemParams,
};
use triwave::spectra::{
    extract_rates, peak_analysis, phonon_spectrum_analytic, photon_spectrum_analytic, predicted_ratios,
    spectrum_analytic_with, FrequencyGrid, Spectrum, SpectrumOptions,
};
use triwave::universality::{compare_universal, CompareOptions};
use triwave::Complex64;

fn rate() -> impl Strategy<Value = f64> {
    0.01f64..0.3
}

fn kind() -> impl Strategy<Value = HamiltonianKind> {
    prop_oneof![
        Just(HamiltonianKind::Parametric),
        Just(HamiltonianKind::Molecular),
        Just(HamiltonianKind::Optomechanical)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonians_are_hermitian(
        kind in kind(),
        omega in 1.0f64..30.0, omega_v in 0.2f64..5.0, detune in -0.5f64..0.5,
        re in -1.0f64..1.0, im in -1.0f64..1.0,
        s in 0.0f64..0.2, g in -0.5f64..0.5,
        nb in 1usize..4, nc in 1usize..4,
    ) {
        let z = Complex64::new(re, im);
        let p = SystemParams { omega_e: omega + omega_v + detune, rabi2: Some(z), rabi3: Some(z), ..SystemParams::resonant(omega, omega_v, z) };
        let spec = match kind {
            HamiltonianKind::Optomechanical => CouplingSpec::optomechanical(g),
            _ => CouplingSpec::molecular(s),
        };
        let basis = build_basis(nb, nc).unwrap();
        let h = build_hamiltonian(kind, &p, Some(&spec), &basis).unwrap();
        prop_assert!(h.hermiticity_error() <= 1e-12 * h.max_abs());
    }

    #[test]
    fn parametric_hamiltonian_keeps_the_excitation_sector(
        omega in 1.0f64..30.0, omega_v in 0.2f64..5.0,
        re in -1.0f64..1.0, im in -1.0f64..1.0,
        nb in 1usize..4, nc in 1usize..4,
    ) {
        let p = SystemParams::resonant(omega, omega_v, Complex64::new(re, im));
        let basis = build_basis(nb, nc).unwrap();
        let h = build_hamiltonian(HamiltonianKind::Parametric, &p, None, &basis).unwrap();
        let five: Vec<usize> = triwave::lindblad::FIVE_STATES.iter().map(|s| basis.index_of(*s).unwrap()).collect();
        let i001 = basis.index_of(BasisState::new(0, 0, 1)).unwrap();
        let i110 = basis.index_of(BasisState::new(1, 1, 0)).unwrap();
        for row in 0..basis.dim() {
            // H|001⟩ stays in span{|001⟩, |110⟩}.
            if row != i001 && row != i110 {
                prop_assert_eq!(h.element(row, i001), Complex64::new(0.0, 0.0));
            }
            // Nothing couples the five-state set to the rest.
            if !five.contains(&row) {
                for &col in &five {
                    prop_assert_eq!(h.element(row, col), Complex64::new(0.0, 0.0));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn master_equation_keeps_trace_hermiticity_and_positivity(
        a in 0.0f64..0.5, b in 0.0f64..0.5, c in 0.0f64..0.5,
        re in -1.0f64..1.0, im in -1.0f64..1.0,
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 18),
    ) {
        let p = SystemParams::resonant(3.0, 1.0, Complex64::new(re, im)).with_rates(a, b, c);
        let basis = build_basis(2, 2).unwrap();
        let h = build_hamiltonian(HamiltonianKind::Parametric, &p, None, &basis).unwrap();
        let l = Liouvillian::new(&h, &p, &build_operators(&basis)).unwrap();
        let mut psi = nalgebra::DVector::from_iterator(18, amps.iter().map(|(x, y)| Complex64::new(*x, *y)));
        let n = psi.norm();
        prop_assume!(n > 1e-3);
        psi /= Complex64::new(n, 0.0);
        let rho0 = DensityMatrix::from_ket(&psi);
        let dt = 0.002;
        let times = linspace(0.0, 1000.0 * dt, 11);
        let cfg = Rk4Config { dt: Some(dt), ..Default::default() };
        let ev = evolve_density(&rho0, &l, &times, &cfg, &[]).unwrap();
        for rho in &ev.states {
            prop_assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-9);
            prop_assert!(rho.hermiticity_error() < 1e-10);
            prop_assert!(rho.min_eigenvalue() > -1e-8);
        }
    }

    #[test]
    fn norm_dissipation_identity(a in rate(), b in rate(), c in rate(), t in 0.0f64..30.0) {
        let p = unit_params(a, b, c);
        let r = DerivedRates::new(&p);
        let norm = |t: f64| {
            let (x, y) = entangled_amplitudes(t, &p).unwrap();
            (x.norm_sqr() + y.norm_sqr(), x.norm_sqr(), y.norm_sqr())
        };
        let h = 1e-3;
        let t = t + 2.0 * h;
        let d = (-norm(t + 2.0 * h).0 + 8.0 * norm(t + h).0 - 8.0 * norm(t - h).0 + norm(t - 2.0 * h).0) / (12.0 * h);
        let (_, a2, b2) = norm(t);
        let rhs = -2.0 * r.gamma_001 * a2 - 2.0 * r.gamma_110 * b2;
        prop_assert!((d - rhs).abs() < 1e-9, "{} vs {}", d, rhs);
    }

    #[test]
    fn occupations_continuous_across_degenerate_surface(
        mu_omega in rate(), gamma in rate(), t in 0.0f64..40.0, sign in prop_oneof![Just(1.0f64), Just(-1.0f64)],
    ) {
        let at = |eps: f64| {
            // μ_Ω − μ_ω − γ = eps (or the mirrored surface for sign < 0).
            let p = if sign > 0.0 {
                unit_params(mu_omega, mu_omega + gamma + eps, gamma)
            } else {
                unit_params(mu_omega + gamma + eps, mu_omega, gamma)
            };
            let o = occupations_closed_form(t, &p);
            [o.c100, o.c010, o.c000]
        };
        let centre = at(0.0);
        let scale = mu_omega + gamma;
        for eps in [1e-4, 1e-6, 2e-7, 1e-9, 1e-12] {
            for e in [eps * scale, -eps * scale] {
                let v = at(e);
                for k in 0..3 {
                    // Lipschitz in eps; the kernel switch must not add a jump.
                    prop_assert!((v[k] - centre[k]).abs() <= 10.0 * e.abs() * (1.0 + t) + 1e-13,
                        "eps {} component {}: {} vs {}", e, k, v[k], centre[k]);
                }
            }
        }
    }

    #[test]
    fn eigen_branches_mirror_with_equal_damping(g in 0.1f64..2.0, m in rate(), delta in -5.0f64..5.0) {
        // γ_110 = γ_001 ⇔ μ_ω + μ_Ω = γ.
        let p = SystemParams::resonant(10.0, 4.0, Complex64::new(g, 0.0)).with_rates(m, m, 2.0 * m);
        let e = eigenfrequencies(&[delta], &p).unwrap()[0];
        let centre = 0.5 * (p.omega_e + p.omega_e + delta);
        prop_assert!(((e.plus.re + e.minus.re) / 2.0 - centre).abs() < 1e-12 * centre);
    }

    #[test]
    fn photon_phonon_swap_is_bit_identical(a in rate(), b in rate(), c in rate()) {
        let photon = unit_params(b, a, c);
        let phonon = unit_params(a, b, c);
        let offsets = FrequencyGrid::default_for(&photon, Field::Photon).unwrap().offsets;
        let gp = FrequencyGrid { center: photon.omega, offsets: offsets.clone() };
        let gv = FrequencyGrid { center: phonon.omega_v, offsets };
        let sp = photon_spectrum_analytic(&gp, &photon).unwrap();
        let sv = phonon_spectrum_analytic(&gv, &phonon).unwrap();
        prop_assert_eq!(sp.s, sv.s);
    }

    #[test]
    fn s3_correction_is_bounded(a in rate(), b in rate(), c in rate()) {
        // Largest c observed over 300 random triples: 2.04.
        const C: f64 = 3.0;
        let p = unit_params(a, b, c);
        let r = DerivedRates::new(&p);
        for field in [Field::Photon, Field::Phonon] {
            let g = FrequencyGrid::default_for(&p, field).unwrap();
            let with = spectrum_analytic_with(&g, &p, field, SpectrumOptions { include_s3: true }).unwrap();
            let without = spectrum_analytic_with(&g, &p, field, SpectrumOptions { include_s3: false }).unwrap();
            let d = sup_diff(&with.s, &without.s) / with.max();
            let bound = match field {
                Field::Photon => (b * (r.big_gamma + r.gamma_ac)).max(r.big_gamma_d * a),
                Field::Phonon => (a * (r.big_gamma + r.gamma_ac_tilde)).max(r.big_gamma_d_tilde * b),
            };
            prop_assert!(d <= C * bound, "{:?}: {} > {}", field, d, C * bound);
        }
    }

    #[test]
    fn side_peak_width_in_lorentzian_regime(a in 0.01f64..0.1, b in 0.01f64..0.1, c in 0.01f64..0.1) {
        let p = unit_params(a, b, c);
        let r = DerivedRates::new(&p);
        prop_assume!(r.gamma_ac <= 0.1);
        let g = FrequencyGrid::symmetric(p.omega, 3.0, 12001);
        let s = photon_spectrum_analytic(&g, &p).unwrap();
        let s1 = Spectrum { s: s.components.as_ref().unwrap().s1.clone(), components: None, ..s };
        let rep = peak_analysis(&s1);
        prop_assert_eq!(rep.peaks.len(), 2);
        for pk in &rep.peaks {
            let w = pk.fwhm.unwrap();
            prop_assert!((w / (2.0 * r.gamma_ac) - 1.0).abs() < 0.1, "{} vs {}", w, 2.0 * r.gamma_ac);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ratio_round_trip(a in rate(), b in rate(), c in rate()) {
        let p = unit_params(a, b, c);
        let (xo, xv) = predicted_ratios(&p);
        let ex = extract_rates(xo, xv).unwrap();
        let hit = ex.candidates.iter().any(|r| (r.x - b / a).abs() < 1e-10 * (b / a) && (r.y - c / a).abs() < 1e-10 * (c / a).max(1.0));
        prop_assert!(hit, "({}, {}) not among {:?}", b / a, c / a, ex.candidates);
        prop_assert!((ex.best.x - b / a).abs() < 1e-10 * (b / a));
        prop_assert!((ex.best.y - c / a).abs() < 1e-10 * (c / a).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Three maxima, at `ω` and `ω ± Ω̃_R` to within one grid step.
    #[test]
    fn three_peak_geometry(a in rate(), b in rate(), c in rate()) {
        let p = unit_params(a, b, c);
        let g = FrequencyGrid::default_for(&p, Field::Photon).unwrap();
        let rep = peak_analysis(&photon_spectrum_analytic(&g, &p).unwrap());
        prop_assert_eq!(rep.peaks.len(), 3);
        let step = g.step();
        for (pk, want) in rep.peaks.iter().zip([p.omega - 1.0, p.omega, p.omega + 1.0]) {
            prop_assert!((pk.position - want).abs() <= step, "peak at {} expected {} (grid step {})", pk.position, want, step);
        }
    }
}

#[test]
fn photon_number_decays_exactly_without_hamiltonian() {
    let p = SystemParams::resonant(3.0, 1.0, Complex64::new(0.0, 0.0)).with_rates(0.37, 0.0, 0.0);
    let basis = build_basis(1, 2).unwrap();
    let ops = build_operators(&basis);
    let h = OperatorMatrix::zeros(basis.dim());
    let l = Liouvillian::new(&h, &p, &ops).unwrap();
    let rho0 = DensityMatrix::basis_state(&basis, BasisState::new(0, 2, 0)).unwrap();
    let n = Observable::new("n", &ops.c.adjoint() * &ops.c);
    let times = linspace(0.0, 10.0, 21);
    let ev = evolve_density(&rho0, &l, &times, &Rk4Config::default(), &[n]).unwrap();
    for (t, v) in times.iter().zip(&ev.observables[0].values) {
        let want = 2.0 * (-0.37 * t).exp();
        assert!((v.re - want).abs() < 1e-6 * want, "t={t}: {} vs {want}", v.re);
    }
}

#[test]
fn regression_correlator_within_five_percent_of_closed_form() {
    let p = reference();
    let span = 8.0 / DerivedRates::new(&p).big_gamma;
    let t = linspace(0.0, span, 9);
    let tau = linspace(0.0, span, 9);
    for field in [Field::Photon, Field::Phonon] {
        let q = QrtCorrelator::new(&p, field).unwrap().table(&t, &tau).unwrap();
        let worst = (0..t.len())
            .flat_map(|i| (0..tau.len()).map(move |j| (i, j)))
            .map(|(i, j)| (q.get(i, j) - correlator_analytic(t[i], tau[j], &p, field).unwrap()).norm())
            .fold(0.0, f64::max);
        assert!(worst / q.max_abs() < 0.05, "{field:?}: {}", worst / q.max_abs());
    }
}

#[test]
fn weak_damping_closed_forms_match_master_equation() {
    let p = SystemParams::resonant(10.0, 4.0, Complex64::new(1.0, 0.0)).with_rates(0.02, 0.03, 0.01);
    let times = grid(5.0 / DerivedRates::new(&p).gamma_mix, 201);
    let me = master_populations(&p, &times);
    let mut worst: f64 = 0.0;
    for (t, m) in times.iter().zip(&me) {
        let o = occupations_closed_form(*t, &p);
        let (a, b) = entangled_amplitudes(*t, &p).unwrap();
        for (x, y) in [o.c000, o.c010, o.c100, b.norm_sqr(), a.norm_sqr()].iter().zip(m) {
            worst = worst.max((x - y).abs());
        }
    }
    assert!(worst < 0.03, "{worst}");
}

#[test]
fn molecular_envelope_within_coupling_ratio() {
    let p = SystemParams { rabi2: Some(Complex64::new(0.05, 0.0)), rabi3: None, ..SystemParams::resonant(20.0, 1.0, Complex64::new(0.0, 0.0)) };
    let r = compare_universal(HamiltonianKind::Molecular, &p, &CouplingSpec::molecular(0.01), &build_basis(3, 2).unwrap(), CompareOptions::default()).unwrap();
    // |Ω_R2/Δ| = 0.05.
    assert!(r.envelope_error <= 0.05, "{}", r.envelope_error);
}
