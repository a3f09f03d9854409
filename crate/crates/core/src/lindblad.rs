//! Reference solver: fixed-step RK4 for the zero-temperature master
//! equation on a truncated Fock space, plus two-time correlators by quantum
//! regression. The analytic and Monte-Carlo back ends are tested against it.
//!
//! Generator, with `(A, r) ∈ {(σ, γ), (c, μ_ω), (b, μ_Ω)}`:
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ r (AρA† − ½{A†A, ρ})
//! ```

use std::io::Write;

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::correlator::{check_time_grid, CorrelatorSource, CorrelatorTable, Field};
use crate::model::{build_basis, build_hamiltonian, build_operators, BasisState, FockBasis, HamiltonianKind, LadderOperators, OperatorMatrix, SystemParams};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Density matrix `ρ` on a truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<Complex64>);

impl DensityMatrix {
    /// `|k⟩⟨k|`.
    pub fn pure_state(dim: usize, k: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    /// Projector onto a basis state.
    pub fn basis_state(basis: &FockBasis, s: BasisState) -> Result<Self> {
        let k = basis
            .index_of(s)
            .ok_or_else(|| Error::InvalidBasis(format!("state |{}⟩ is outside the truncation", s.label())))?;
        Ok(Self::pure_state(basis.dim(), k))
    }

    /// `|ψ⟩⟨ψ|` for a normalised ket.
    pub fn from_ket(psi: &DVector<Complex64>) -> Self {
        DensityMatrix(psi * psi.adjoint())
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        Ok(DensityMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }

    /// `Tr(ρ O)`.
    pub fn expectation(&self, op: &OperatorMatrix) -> Complex64 {
        trace_product(op.matrix(), &self.0)
    }

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

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn symmetrize(&mut self) {
        symmetrize(&mut self.0);
    }

    /// Trace, Hermiticity and (optionally) positivity checks.
    pub fn check(&self, t: f64, positivity: bool) -> Result<()> {
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Invariant(format!("trace(ρ) = {tr} at t = {t}")));
        }
        let h = self.hermiticity_error();
        if h > HERMITIAN_TOL {
            return Err(Error::Invariant(format!("max|ρ − ρ†| = {h:e} at t = {t}")));
        }
        if positivity {
            let e = self.min_eigenvalue();
            if e < -POSITIVITY_TOL {
                return Err(Error::Invariant(format!("ρ has eigenvalue {e:e} at t = {t}")));
            }
        }
        Ok(())
    }
}

fn symmetrize(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        for l in 0..n {
            acc += a[(k, l)] * b[(l, k)];
        }
    }
    acc
}

/// One dissipation channel `r·D[A]`, with `A` stored by its nonzero entries
/// (ladder operators have at most one per row and column).
#[derive(Debug, Clone)]
struct Jump {
    rate: f64,
    entries: Vec<(usize, usize, Complex64)>,
}

/// The master-equation generator, with `H_eff = H − (i/2) Σ r A†A`
/// precomputed.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    h: OperatorMatrix,
    h_eff: DMatrix<Complex64>,
    h_eff_adj: DMatrix<Complex64>,
    jumps: Vec<Jump>,
    spread: f64,
    max_rate: f64,
}

impl Liouvillian {
    pub fn new(h: &OperatorMatrix, params: &SystemParams, ops: &LadderOperators) -> Result<Self> {
        let dim = h.dim();
        for op in [&ops.sigma, &ops.c, &ops.b] {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: op.dim() });
            }
        }
        let mut h_eff = h.matrix().clone();
        let mut jumps = Vec::new();
        for (rate, a) in [(params.gamma_e, &ops.sigma), (params.mu_omega, &ops.c), (params.mu_v, &ops.b)] {
            if rate < 0.0 || !rate.is_finite() {
                return Err(Error::param("rate", format!("relaxation rates must be finite and >= 0, got {rate}")));
            }
            if rate == 0.0 {
                continue;
            }
            let ada = a.adjoint().matrix() * a.matrix();
            h_eff -= ada * Complex64::new(0.0, 0.5 * rate);
            let m = a.matrix();
            let entries = (0..dim)
                .flat_map(|i| (0..dim).map(move |j| (i, j)))
                .filter(|&(i, j)| m[(i, j)] != Complex64::new(0.0, 0.0))
                .map(|(i, j)| (i, j, m[(i, j)]))
                .collect();
            jumps.push(Jump { rate, entries });
        }
        let eig = SymmetricEigen::new(h.matrix().clone()).eigenvalues;
        let spread = eig.max() - eig.min();
        Ok(Liouvillian {
            h: h.clone(),
            h_eff_adj: h_eff.adjoint(),
            h_eff,
            jumps,
            spread,
            max_rate: params.max_rate(),
        })
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.h
    }

    /// Largest Hamiltonian eigenvalue difference.
    pub fn spread(&self) -> f64 {
        self.spread
    }

    /// `L(x)` for any square matrix `x`, Hermitian or not.
    pub fn apply(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let hx = &self.h_eff * x;
        let xh = x * &self.h_eff_adj;
        let mut out = (xh - hx) * I;
        for jump in &self.jumps {
            for &(i, k, a) in &jump.entries {
                let ra = a * jump.rate;
                for &(j, l, b) in &jump.entries {
                    out[(i, j)] += ra * x[(k, l)] * b.conj();
                }
            }
        }
        out
    }

    /// Step size bound `safety / max(spread, max rate)`, infinite for a
    /// trivial generator.
    pub fn max_stable_dt(&self, safety: f64) -> f64 {
        let scale = self.spread.max(self.max_rate);
        if scale == 0.0 {
            f64::INFINITY
        } else {
            safety / scale
        }
    }

    fn rk4_step(&self, x: &mut DMatrix<Complex64>, h: f64) {
        let half = Complex64::new(0.5 * h, 0.0);
        let full = Complex64::new(h, 0.0);
        let k1 = self.apply(x);
        let k2 = self.apply(&(&*x + &k1 * half));
        let k3 = self.apply(&(&*x + &k2 * half));
        let k4 = self.apply(&(&*x + &k3 * full));
        *x += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
    }

    /// Marches `x` (the value at `grid[0]`) through `grid`, calling `visit` at
    /// every grid point. Each interval is split into equal steps no longer
    /// than `dt`.
    fn march(
        &self,
        x: &mut DMatrix<Complex64>,
        grid: &[f64],
        dt: f64,
        hermitian: bool,
        resym_every: usize,
        mut visit: impl FnMut(usize, &DMatrix<Complex64>) -> Result<()>,
    ) -> Result<()> {
        visit(0, x)?;
        let mut steps = 0usize;
        for k in 1..grid.len() {
            let span = grid[k] - grid[k - 1];
            let n = if dt.is_finite() { ((span / dt) - 1e-9).ceil().max(1.0) as usize } else { 1 };
            let h = span / n as f64;
            for _ in 0..n {
                self.rk4_step(x, h);
                steps += 1;
                if hermitian && resym_every > 0 && steps % resym_every == 0 {
                    symmetrize(x);
                }
            }
            visit(k, x)?;
        }
        Ok(())
    }
}

/// `dρ/dt` for the given Hamiltonian, rates and ladder operators.
pub fn apply_lindbladian(
    rho: &DensityMatrix,
    h: &OperatorMatrix,
    params: &SystemParams,
    ops: &LadderOperators,
) -> Result<OperatorMatrix> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: rho.dim() });
    }
    let l = Liouvillian::new(h, params, ops)?;
    OperatorMatrix::from_matrix(l.apply(rho.matrix()))
}

/// RK4 settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4Config {
    /// Requested step; `None` picks the largest allowed one.
    pub dt: Option<f64>,
    /// `dt ≤ safety / max(spread, rates)`.
    pub safety: f64,
    /// Re-symmetrize `ρ` every this many steps (0 disables).
    pub resymmetrize_every: usize,
    pub check_invariants: bool,
    /// Eigenvalue check at every snapshot (costs one diagonalisation).
    pub check_positivity: bool,
    pub store_states: bool,
}

impl Default for Rk4Config {
    fn default() -> Self {
        Rk4Config {
            dt: None,
            safety: 0.05,
            resymmetrize_every: 100,
            check_invariants: true,
            check_positivity: true,
            store_states: true,
        }
    }
}

impl Rk4Config {
    /// The step actually used. A request above the bound is reduced, with a
    /// warning.
    pub fn resolve_dt(&self, l: &Liouvillian) -> f64 {
        let limit = l.max_stable_dt(self.safety);
        match self.dt {
            Some(dt) if dt > limit => {
                warn!("requested dt = {dt} exceeds {} / max(spread, rate) = {limit}; using {limit}", self.safety);
                limit
            }
            Some(dt) => dt,
            None => limit,
        }
    }
}

/// Named operator whose expectation value is recorded.
#[derive(Debug, Clone)]
pub struct Observable {
    pub name: String,
    pub op: OperatorMatrix,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: OperatorMatrix) -> Self {
        Observable { name: name.into(), op }
    }

    /// `|s⟩⟨s|`, named `P<label>`.
    pub fn population(basis: &FockBasis, s: BasisState) -> Result<Self> {
        let rho = DensityMatrix::basis_state(basis, s)?;
        Ok(Observable::new(format!("P{}", s.label()), OperatorMatrix::from_matrix(rho.0)?))
    }

    /// Populations of the five states reachable from `|001⟩`, in the order
    /// 000, 010, 100, 110, 001.
    pub fn five_populations(basis: &FockBasis) -> Result<Vec<Self>> {
        FIVE_STATES.iter().map(|&s| Observable::population(basis, s)).collect()
    }
}

/// `|000⟩, |010⟩, |100⟩, |110⟩, |001⟩` (labels `αni`).
pub const FIVE_STATES: [BasisState; 5] = [
    BasisState::new(0, 0, 0),
    BasisState::new(0, 1, 0),
    BasisState::new(1, 0, 0),
    BasisState::new(1, 1, 0),
    BasisState::new(0, 0, 1),
];

#[derive(Debug, Clone)]
pub struct ObservableSeries {
    pub name: String,
    pub values: Vec<Complex64>,
}

/// Snapshots and expectation values on the output grid.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// Empty unless [`Rk4Config::store_states`] is set.
    pub states: Vec<DensityMatrix>,
    pub observables: Vec<ObservableSeries>,
    /// Step size used.
    pub dt: f64,
}

impl EvolutionResult {
    pub fn series(&self, name: &str) -> Option<&[Complex64]> {
        self.observables.iter().find(|s| s.name == name).map(|s| s.values.as_slice())
    }

    /// Real parts of a series, handy for populations.
    pub fn real_series(&self, name: &str) -> Option<Vec<f64>> {
        self.series(name).map(|v| v.iter().map(|z| z.re).collect())
    }

    /// CSV `t,re,im` for one observable.
    pub fn write_csv<W: Write>(&self, name: &str, mut w: W) -> Result<()> {
        let values = self
            .series(name)
            .ok_or_else(|| Error::param("observable", format!("no series named {name}")))?;
        writeln!(w, "t,re,im")?;
        for (t, z) in self.times.iter().zip(values) {
            writeln!(w, "{},{},{}", crate::output::num(*t), crate::output::num(z.re), crate::output::num(z.im))?;
        }
        Ok(())
    }
}

/// Integrates the master equation from `rho0` at `t_grid[0]` and records
/// every grid point.
pub fn evolve_density(
    rho0: &DensityMatrix,
    l: &Liouvillian,
    t_grid: &[f64],
    cfg: &Rk4Config,
    observables: &[Observable],
) -> Result<EvolutionResult> {
    check_time_grid("t", t_grid)?;
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: rho0.dim() });
    }
    for o in observables {
        if o.op.dim() != l.dim() {
            return Err(Error::DimensionMismatch { expected: l.dim(), found: o.op.dim() });
        }
    }
    let dt = cfg.resolve_dt(l);
    let mut states = Vec::new();
    let mut series: Vec<ObservableSeries> = observables
        .iter()
        .map(|o| ObservableSeries { name: o.name.clone(), values: Vec::with_capacity(t_grid.len()) })
        .collect();
    let mut x = rho0.0.clone();
    l.march(&mut x, t_grid, dt, true, cfg.resymmetrize_every, |k, x| {
        let rho = DensityMatrix(x.clone());
        if cfg.check_invariants {
            rho.check(t_grid[k], cfg.check_positivity)?;
        }
        for (o, s) in observables.iter().zip(series.iter_mut()) {
            s.values.push(rho.expectation(&o.op));
        }
        if cfg.store_states {
            states.push(rho);
        }
        Ok(())
    })?;
    Ok(EvolutionResult { times: t_grid.to_vec(), states, observables: series, dt })
}

/// Exact unitary evolution `e^{−iH(t − t₀)}|ψ₀⟩` by diagonalising `H`. This
/// is the all-rates-zero solution of the master equation for a pure state,
/// and it stays cheap over thousands of oscillation periods.
pub fn evolve_closed(psi0: &DVector<Complex64>, h: &OperatorMatrix, t_grid: &[f64]) -> Result<Vec<DVector<Complex64>>> {
    if psi0.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi0.len() });
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("t grid must be non-empty and strictly increasing".into()));
    }
    let err = h.hermiticity_error();
    if err > 1e-12 * h.max_abs() {
        return Err(Error::Invariant(format!("closed evolution needs a Hermitian H, max|H − H†| = {err:e}")));
    }
    let eig = SymmetricEigen::new(h.matrix().clone());
    let v = &eig.eigenvectors;
    let coeff = v.adjoint() * psi0;
    let t0 = t_grid[0];
    Ok(t_grid
        .iter()
        .map(|&t| {
            let phased = DVector::from_iterator(
                coeff.len(),
                coeff.iter().zip(eig.eigenvalues.iter()).map(|(c, &e)| c * Complex64::from_polar(1.0, -e * (t - t0))),
            );
            v * phased
        })
        .collect())
}

fn with_origin(grid: &[f64]) -> (Vec<f64>, usize) {
    if grid[0] > 0.0 {
        let mut g = Vec::with_capacity(grid.len() + 1);
        g.push(0.0);
        g.extend_from_slice(grid);
        (g, 1)
    } else {
        (grid.to_vec(), 0)
    }
}

/// States `ρ(t_i)` on `t_grid`, starting from `rho0` at `t = 0`.
fn states_on(rho0: &DensityMatrix, l: &Liouvillian, t_grid: &[f64], cfg: &Rk4Config) -> Result<Vec<DensityMatrix>> {
    let (grid, skip) = with_origin(t_grid);
    let cfg = Rk4Config { store_states: true, ..*cfg };
    let res = evolve_density(rho0, l, &grid, &cfg, &[])?;
    Ok(res.states.into_iter().skip(skip).collect())
}

/// `Tr(a x(τ_j))` with `x(0) = x0` propagated by the generator.
fn regress(l: &Liouvillian, a: &DMatrix<Complex64>, x0: DMatrix<Complex64>, tau_grid: &[f64], dt: f64) -> Result<Vec<Complex64>> {
    let (grid, skip) = with_origin(tau_grid);
    let mut x = x0;
    let mut out = Vec::with_capacity(grid.len());
    l.march(&mut x, &grid, dt, false, 0, |_, x| {
        out.push(trace_product(a, x));
        Ok(())
    })?;
    Ok(out.split_off(skip))
}

/// Quantum-regression correlator `K(t, τ) = ⟨a†(t) a(t+τ)⟩`
/// `= Tr[a e^{Lτ}(ρ(t) a†)]`, so that a mode of frequency `ω` contributes
/// `e^{−iωτ}`. `rho0` is the state at `t = 0`. The `τ` sweeps for
/// different `t` run in parallel.
pub fn correlator_qrt(
    rho0: &DensityMatrix,
    l: &Liouvillian,
    a: &OperatorMatrix,
    t_grid: &[f64],
    tau_grid: &[f64],
    cfg: &Rk4Config,
) -> Result<CorrelatorTable> {
    check_time_grid("t", t_grid)?;
    check_time_grid("tau", tau_grid)?;
    if a.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: a.dim() });
    }
    let states = states_on(rho0, l, t_grid, cfg)?;
    let dt = cfg.resolve_dt(l);
    let a_adj = a.adjoint();
    let rows: Vec<Vec<Complex64>> = states
        .par_iter()
        .map(|rho| regress(l, a.matrix(), rho.matrix() * a_adj.matrix(), tau_grid, dt))
        .collect::<Result<_>>()?;
    Ok(CorrelatorTable {
        t: t_grid.to_vec(),
        tau: tau_grid.to_vec(),
        values: rows.into_iter().flatten().collect(),
        stderr: None,
    })
}

/// Master-equation correlator source for the parametric Hamiltonian,
/// starting from `|001⟩`.
#[derive(Debug, Clone)]
pub struct QrtCorrelator {
    params: SystemParams,
    field: Field,
    liouvillian: Liouvillian,
    a: OperatorMatrix,
    rho0: DensityMatrix,
    pub cfg: Rk4Config,
}

impl QrtCorrelator {
    /// Uses the smallest basis holding the five reachable states.
    pub fn new(params: &SystemParams, field: Field) -> Result<Self> {
        Self::with_basis(params, field, &build_basis(1, 1)?)
    }

    pub fn with_basis(params: &SystemParams, field: Field, basis: &FockBasis) -> Result<Self> {
        let ops = build_operators(basis);
        let h = build_hamiltonian(HamiltonianKind::Parametric, params, None, basis)?;
        let liouvillian = Liouvillian::new(&h, params, &ops)?;
        let a = match field {
            Field::Photon => ops.c.clone(),
            Field::Phonon => ops.b.clone(),
        };
        let rho0 = DensityMatrix::basis_state(basis, BasisState::new(0, 0, 1))?;
        let cfg = Rk4Config { check_positivity: false, ..Rk4Config::default() };
        Ok(QrtCorrelator { params: *params, field, liouvillian, a, rho0, cfg })
    }
}

impl CorrelatorSource for QrtCorrelator {
    fn field(&self) -> Field {
        self.field
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn table(&self, t: &[f64], tau: &[f64]) -> Result<CorrelatorTable> {
        correlator_qrt(&self.rho0, &self.liouvillian, &self.a, t, tau, &self.cfg)
    }

    /// By linearity `Σ_i w_i Tr[a e^{Lτ}(ρ(t_i) a†)] = Tr[a e^{Lτ}((Σ_i w_i ρ(t_i)) a†)]`,
    /// so a single `τ` propagation suffices.
    fn t_integrated(&self, t: &[f64], weights: &[f64], tau: &[f64]) -> Result<Vec<Complex64>> {
        check_time_grid("t", t)?;
        check_time_grid("tau", tau)?;
        if weights.len() != t.len() {
            return Err(Error::DimensionMismatch { expected: t.len(), found: weights.len() });
        }
        let l = &self.liouvillian;
        let dt = self.cfg.resolve_dt(l);
        let (grid, skip) = with_origin(t);
        let mut acc = DMatrix::zeros(l.dim(), l.dim());
        let mut x = self.rho0.matrix().clone();
        let check = self.cfg.check_invariants;
        l.march(&mut x, &grid, dt, true, self.cfg.resymmetrize_every, |k, x| {
            if check {
                DensityMatrix(x.clone()).check(grid[k], false)?;
            }
            if k >= skip {
                acc += x * Complex64::new(weights[k - skip], 0.0);
            }
            Ok(())
        })?;
        let x0 = acc * self.a.adjoint().matrix();
        regress(l, self.a.matrix(), x0, tau, dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn setup(params: &SystemParams) -> (FockBasis, LadderOperators, OperatorMatrix) {
        let basis = build_basis(1, 1).unwrap();
        let ops = build_operators(&basis);
        let h = build_hamiltonian(HamiltonianKind::Parametric, params, None, &basis).unwrap();
        (basis, ops, h)
    }

    #[test]
    fn ground_state_is_stationary() {
        let p = SystemParams::resonant(2.0, 1.0, c(0.3)).with_rates(0.2, 0.3, 0.1);
        let (basis, ops, h) = setup(&p);
        let rho = DensityMatrix::basis_state(&basis, BasisState::new(0, 0, 0)).unwrap();
        let d = apply_lindbladian(&rho, &h, &p, &ops).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn one_photon_decays_at_mu_omega() {
        let p = SystemParams::resonant(2.0, 1.0, c(0.3)).with_rates(0.7, 0.0, 0.0);
        let (basis, ops, h) = setup(&p);
        let k = basis.index(0, 1, 0).unwrap();
        let rho = DensityMatrix::pure_state(basis.dim(), k);
        let d = apply_lindbladian(&rho, &h, &p, &ops).unwrap();
        assert!((d.element(k, k) - c(-0.7)).norm() < 1e-15);
        let g = basis.index(0, 0, 0).unwrap();
        assert!((d.element(g, g) - c(0.7)).norm() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = SystemParams::resonant(2.0, 1.0, c(0.3));
        let (_, ops, h) = setup(&p);
        let rho = DensityMatrix::pure_state(4, 0);
        assert!(matches!(apply_lindbladian(&rho, &h, &p, &ops), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn oversized_step_is_reduced() {
        let p = SystemParams::resonant(2.0, 1.0, c(0.3));
        let (basis, ops, h) = setup(&p);
        let l = Liouvillian::new(&h, &p, &ops).unwrap();
        let cfg = Rk4Config { dt: Some(1.0), ..Rk4Config::default() };
        let dt = cfg.resolve_dt(&l);
        assert!(dt < 1.0);
        assert!((dt - 0.05 / l.spread()).abs() < 1e-15);
        let rho0 = DensityMatrix::basis_state(&basis, BasisState::new(0, 0, 1)).unwrap();
        let r = evolve_density(&rho0, &l, &[0.0, 1.0], &cfg, &[]).unwrap();
        assert_eq!(r.dt, dt);
    }

    #[test]
    fn closed_evolution_matches_rk4() {
        let p = SystemParams::resonant(2.0, 1.0, c(0.4));
        let (basis, ops, h) = setup(&p);
        let l = Liouvillian::new(&h, &p, &ops).unwrap();
        let k = basis.index(0, 0, 1).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
        let mut psi0 = DVector::zeros(basis.dim());
        psi0[k] = c(1.0);
        let kets = evolve_closed(&psi0, &h, &grid).unwrap();
        let obs = Observable::population(&basis, BasisState::new(1, 1, 0)).unwrap();
        let r = evolve_density(&DensityMatrix::pure_state(basis.dim(), k), &l, &grid, &Rk4Config::default(), &[obs]).unwrap();
        let k110 = basis.index(1, 1, 0).unwrap();
        for (psi, z) in kets.iter().zip(r.series("P110").unwrap()) {
            assert!((psi[k110].norm_sqr() - z.re).abs() < 1e-9);
        }
    }
}
