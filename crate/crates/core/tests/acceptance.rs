//! Acceptance criteria, one line each. Runs without the libtest harness and
//! exits nonzero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triwave::analytic::{eigenfrequencies, entangled_amplitudes, occupations_closed_form, occupations_ode, DerivedRates};
use triwave::correlator::{linspace, Field};
use triwave::lindblad::QrtCorrelator;
use triwave::model::{build_basis, CouplingSpec, HamiltonianKind, SystemParams};
use triwave::spectra::{
    extract_rates, peak_analysis, phonon_spectrum_analytic, photon_spectrum_analytic, predicted_ratios,
    spectrum_from_correlator, FrequencyGrid, QuadratureConfig, Spectrum,
};
use triwave::stochastic::{empirical_noise_correlators, run_ensemble, EnsembleObservable, EnsembleOptions, NoiseConfig};
use triwave::universality::{compare_universal, CompareOptions};
use triwave::Complex64;

type Check = (bool, String);

/// Smallest multiple-of-`dt` grid with `n` points reaching about `t_max`.
fn lattice(t_max: f64, n: usize, dt: f64) -> Vec<f64> {
    let steps = (t_max / dt / (n - 1) as f64).round().max(1.0);
    (0..n).map(|i| i as f64 * steps * dt).collect()
}

fn all(parts: Vec<Check>) -> Check {
    let ok = parts.iter().all(|(ok, _)| *ok);
    let text = parts
        .into_iter()
        .map(|(ok, s)| if ok { s } else { format!("[FAIL] {s}") })
        .collect::<Vec<_>>()
        .join("; ");
    (ok, text)
}

fn ac1() -> Check {
    let g = 1.0;
    let p = SystemParams::resonant(10.0, 4.0, Complex64::new(g, 0.0));
    let rabi = |t: f64| (g * t).sin().powi(2);
    let times = linspace(0.0, 3.0 * std::f64::consts::PI, 61);
    let analytic = times
        .iter()
        .map(|&t| (entangled_amplitudes(t, &p).unwrap().1.norm_sqr() - rabi(t)).abs())
        .fold(0.0, f64::max);
    let me = master_populations(&p, &times);
    let oracle = times.iter().zip(&me).map(|(t, m)| (m[3] - rabi(*t)).abs()).fold(0.0, f64::max);

    let cfg = NoiseConfig { seed: 11, dt: 0.005, n_trajectories: 10_000 };
    let ck = lattice(3.0 * std::f64::consts::PI, 61, cfg.dt);
    let ens = run_ensemble(&p, &cfg, &ck, &EnsembleObservable::standard(), EnsembleOptions::default()).unwrap();
    let (m, se) = ens.series("P110").unwrap();
    // Noise-free ensemble: SE is 0, the floor absorbs the integrator error.
    let mc_ok = ck.iter().enumerate().all(|(i, t)| (m[i] - rabi(*t)).abs() <= (3.0 * se[i]).max(1e-6));
    let mc = ck.iter().enumerate().map(|(i, t)| (m[i] - rabi(*t)).abs()).fold(0.0, f64::max);
    all(vec![
        (analytic < 1e-6, format!("analytic sup {analytic:.1e} < 1e-6")),
        (oracle < 1e-6, format!("oracle sup {oracle:.1e} < 1e-6")),
        (mc_ok, format!("MC sup {mc:.1e} within max(3SE, 1e-6), max SE {:.1e}", se.iter().cloned().fold(0.0, f64::max))),
    ])
}

fn ac2() -> Check {
    let p = reference();
    let t_end = 5.0 / DerivedRates::new(&p).gamma_mix;
    let cfg = NoiseConfig { seed: 2024, dt: t_end / 20.0 / 400.0, n_trajectories: 10_000 };
    let ck = lattice(t_end, 20, cfg.dt);
    let mut obs = EnsembleObservable::standard();
    obs.push(EnsembleObservable::Norm);
    let ens = run_ensemble(&p, &cfg, &ck, &obs, EnsembleOptions::default()).unwrap();
    let me = master_populations(&p, &ck);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (k, name) in ["P000", "P010", "P100", "P110", "P001"].iter().enumerate() {
        let (m, se) = ens.series(name).unwrap();
        for i in 0..ck.len() {
            let d = (m[i] - me[i][k]).abs();
            // Noise-free components (SE = 0) are held to the oracle's accuracy.
            ok &= d <= (3.0 * se[i]).max(1e-9);
            if se[i] > 0.0 {
                worst = worst.max(d / se[i]);
            }
        }
    }
    let (m, se) = ens.series("norm").unwrap();
    let last = ck.len() - 1;
    let z_norm = (m[last] - 1.0).abs() / se[last];
    all(vec![
        (ok, format!("populations max z {worst:.2} ≤ 3 over 5×20 checkpoints")),
        (z_norm <= 3.0, format!("norm z {z_norm:.2} ≤ 3")),
    ])
}

fn ac3() -> Check {
    let p = unit_params(0.05, 0.05, 0.05);
    let times = grid(5.0 / DerivedRates::new(&p).gamma_mix, 401);
    let ode = occupations_ode(&times, &p).unwrap();
    let me = master_populations(&p, &times);
    let (mut vs_ode, mut vs_me): (f64, f64) = (0.0, 0.0);
    for (i, t) in times.iter().enumerate() {
        let o = occupations_closed_form(*t, &p);
        for (x, (y, z)) in [o.c000, o.c010, o.c100].iter().zip([(ode[i].p000, me[i][0]), (ode[i].p010, me[i][1]), (ode[i].p100, me[i][2])]) {
            vs_ode = vs_ode.max((x - y).abs());
            vs_me = vs_me.max((x - z).abs());
        }
    }
    let late = occupations_closed_form(4000.0, &p);
    let limit = late.c100.abs().max(late.c010.abs()).max((late.c000 - 1.0).abs());
    // μ_Ω − μ_ω − γ = 0 and μ_ω − μ_Ω − γ = 0.
    let mut degen: f64 = 0.0;
    for (a, b, c) in [(0.1, 0.3, 0.2), (0.3, 0.1, 0.2)] {
        let q = unit_params(a, b, c);
        for t in [0.5, 3.0, 12.0, 40.0] {
            let o = occupations_closed_form(t, &q);
            let want = if b > a { (o.c100, a * 0.5 * t * (-b * t).exp()) } else { (o.c010, b * 0.5 * t * (-a * t).exp()) };
            degen = degen.max((want.0 - want.1).abs());
        }
    }
    all(vec![
        (vs_ode < 0.03, format!("vs ODE sup {vs_ode:.2e} < 3%")),
        (vs_me < 0.03, format!("vs master equation sup {vs_me:.2e} < 3%")),
        (limit < 1e-6, format!("t→∞ limit error {limit:.1e} < 1e-6")),
        (degen < 1e-8, format!("degenerate forms error {degen:.1e} < 1e-8")),
    ])
}

fn ac4() -> Check {
    let g = 1.0;
    let eq = SystemParams::resonant(10.0, 4.0, Complex64::new(g, 0.0)).with_rates(0.2, 0.2, 0.4);
    let e = eigenfrequencies(&[0.0], &eq).unwrap()[0];
    let s0 = (e.plus.re - e.minus.re).abs();
    let e0 = (s0 / (2.0 * g) - 1.0).abs();
    let strong = SystemParams::resonant(10.0, 4.0, Complex64::new(g, 0.0)).with_rates(0.3, 0.3, 0.2);
    let r = DerivedRates::new(&strong);
    let e = eigenfrequencies(&[0.0], &strong).unwrap()[0];
    let want = 2.0 * (g * g - 0.25 * (r.gamma_110 - r.gamma_001).powi(2)).sqrt();
    let e1 = ((e.plus.re - e.minus.re).abs() / want - 1.0).abs();
    all(vec![
        (e0 < 1e-12, format!("equal damping splitting rel err {e0:.1e}")),
        (e1 < 1e-12, format!("rates (0.3, 0.3, 0.2) splitting rel err {e1:.1e} < 1e-12")),
    ])
}

fn ac5() -> Check {
    let p = reference();
    let r = DerivedRates::new(&p);
    let grid = FrequencyGrid::default_for(&p, Field::Photon).unwrap();
    let analytic = photon_spectrum_analytic(&grid, &p).unwrap();
    let qrt = QrtCorrelator::new(&p, Field::Photon).unwrap();
    let numeric = spectrum_from_correlator(&qrt, &grid, &QuadratureConfig::default()).unwrap();
    let sup = sup_diff(&analytic.s, &numeric.s) / analytic.max();

    let step = grid.step();
    let want = [p.omega - 1.0, p.omega, p.omega + 1.0];
    let positions = |s: &Spectrum| -> (bool, f64) {
        let rep = peak_analysis(s);
        if rep.peaks.len() != 3 {
            return (false, f64::INFINITY);
        }
        let off = rep.peaks.iter().zip(want).map(|(pk, w)| (pk.position - w).abs()).fold(0.0, f64::max);
        (off <= step, off)
    };
    let (pa, oa) = positions(&analytic);
    let (pn, on) = positions(&numeric);
    let widths: Vec<f64> = [&analytic, &numeric]
        .iter()
        .flat_map(|s| {
            let rep = peak_analysis(s);
            [rep.peaks.first().and_then(|p| p.fwhm), rep.peaks.last().and_then(|p| p.fwhm)]
        })
        .map(|w| w.map_or(f64::INFINITY, |w| (w / (2.0 * r.gamma_ac) - 1.0).abs()))
        .collect();
    let wmax = widths.iter().cloned().fold(0.0, f64::max);
    all(vec![
        (sup < 0.05, format!("QRT vs analytic sup {:.2}% < 5%", 100.0 * sup)),
        (pa && pn, format!("peak offset analytic {oa:.4}, numeric {on:.4} vs grid cell {step:.4}")),
        (wmax < 0.1, format!("side FWHM vs 2γ_ac worst {:.1}% < 10%", 100.0 * wmax)),
    ])
}

fn ac6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_o, mut worst_v): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let [a, b, c]: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.01..0.1));
        let p = unit_params(a, b, c);
        let (xo, xv) = predicted_ratios(&p);
        let go = FrequencyGrid::default_for(&p, Field::Photon).unwrap();
        let gv = FrequencyGrid::default_for(&p, Field::Phonon).unwrap();
        let mo = peak_analysis(&photon_spectrum_analytic(&go, &p).unwrap()).ratio.unwrap_or(f64::NAN);
        let mv = peak_analysis(&phonon_spectrum_analytic(&gv, &p).unwrap()).ratio.unwrap_or(f64::NAN);
        worst_o = worst_o.max((mo / xo - 1.0).abs());
        worst_v = worst_v.max((mv / xv - 1.0).abs());
    }
    all(vec![
        (worst_o < 0.1, format!("ξ_ω worst {:.2}% < 10%", 100.0 * worst_o)),
        (worst_v < 0.1, format!("ξ_Ω worst {:.2}% < 10%", 100.0 * worst_v)),
    ])
}

fn ac7() -> Check {
    let p = reference();
    let (xo, xv) = predicted_ratios(&p);
    let exact = extract_rates(xo, xv).unwrap().best;
    let go = FrequencyGrid::default_for(&p, Field::Photon).unwrap();
    let gv = FrequencyGrid::default_for(&p, Field::Phonon).unwrap();
    let mo = peak_analysis(&photon_spectrum_analytic(&go, &p).unwrap()).ratio.unwrap();
    let mv = peak_analysis(&phonon_spectrum_analytic(&gv, &p).unwrap()).ratio.unwrap();
    let e2e = extract_rates(mo, mv).unwrap().best;
    let (ex, ey) = ((e2e.x / 1.5 - 1.0).abs(), (e2e.y / 0.5 - 1.0).abs());
    all(vec![
        ((xo - 9.0).abs() < 1e-10 && (xv - 20.0 / 9.0).abs() < 1e-10, format!("ratios ({xo:.10}, {xv:.10})")),
        (
            (exact.x - 1.5).abs() < 1e-10 && (exact.y - 0.5).abs() < 1e-10,
            format!("exact inversion ({:.12}, {:.12})", exact.x, exact.y),
        ),
        (
            ex < 0.1 && ey < 0.1,
            format!("end-to-end from measured ({mo:.4}, {mv:.4}): x {:.4} ({:.1}%), y {:.4} ({:.1}%)", e2e.x, 100.0 * ex, e2e.y, 100.0 * ey),
        ),
    ])
}

fn ac8() -> Check {
    let base = SystemParams { rabi2: Some(Complex64::new(0.05, 0.0)), rabi3: None, ..SystemParams::resonant(20.0, 1.0, Complex64::new(0.0, 0.0)) };
    let basis = build_basis(3, 2).unwrap();
    let run = |kind, spec: CouplingSpec| compare_universal(kind, &base, &spec, &basis, CompareOptions::default()).unwrap().envelope_error;
    let m = run(HamiltonianKind::Molecular, CouplingSpec::molecular(0.01));
    let o = run(HamiltonianKind::Optomechanical, CouplingSpec::optomechanical(0.1));
    all(vec![
        (m < 0.1, format!("molecular envelope error {:.2}% < 10%", 100.0 * m)),
        (o < 0.1, format!("optomechanical envelope error {:.2}% < 10%", 100.0 * o)),
    ])
}

fn ac9() -> Check {
    let photon = unit_params(0.3, 0.2, 0.1);
    let phonon = reference();
    let offsets = FrequencyGrid::default_for(&photon, Field::Photon).unwrap().offsets;
    let sp = photon_spectrum_analytic(&FrequencyGrid { center: photon.omega, offsets: offsets.clone() }, &photon).unwrap();
    let sv = phonon_spectrum_analytic(&FrequencyGrid { center: phonon.omega_v, offsets }, &phonon).unwrap();
    let same = sp.s.iter().zip(&sv.s).filter(|(a, b)| a.to_bits() == b.to_bits()).count();
    (same == sp.s.len(), format!("{same}/{} samples bit-identical", sp.s.len()))
}

fn ac10() -> Check {
    let p = reference();
    let cfg = NoiseConfig { seed: 10, dt: 0.01, n_trajectories: 10_000 };
    let ck = lattice(20.0, 2, cfg.dt);
    let ens = run_ensemble(&p, &cfg, &ck, &EnsembleObservable::standard(), EnsembleOptions { noise_statistics: true }).unwrap();
    let est = empirical_noise_correlators(&ens).unwrap();
    let mut parts = Vec::new();
    let zmax = est.iter().map(|e| e.z_score()).fold(0.0, f64::max);
    parts.push((zmax <= 3.0, format!("all 8 entries within {zmax:.2} SE of prediction")));
    for e in &est {
        if let Some((slope, se, want)) = e.slope {
            let z = (slope - want).abs() / se;
            parts.push((z <= 3.0, format!("{} slope {slope:.5} vs {want} (z {z:.2})", e.name)));
        }
        if ["D_110,110", "D_001,001", "D_100,010"].contains(&e.name.as_str()) {
            let z = if e.stderr > 0.0 { e.estimate.norm() / e.stderr } else if e.estimate.norm() == 0.0 { 0.0 } else { f64::INFINITY };
            parts.push((z <= 3.0, format!("{} = {:.1e} (z {z:.2})", e.name, e.estimate.norm())));
        }
    }
    all(parts)
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, fn() -> Check); 10] = [
        ("AC1", "closed-system limit", ac1),
        ("AC2", "trajectory ensemble vs master equation", ac2),
        ("AC3", "occupation closed forms", ac3),
        ("AC4", "anticrossing splitting", ac4),
        ("AC5", "spectra pipeline", ac5),
        ("AC6", "peak-ratio law", ac6),
        ("AC7", "rate extraction round trip", ac7),
        ("AC8", "parametric universality", ac8),
        ("AC9", "photon/phonon swap symmetry", ac9),
        ("AC10", "noise-correlator fidelity", ac10),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!("{id} {} {name}: {detail} ({:.1}s)", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
