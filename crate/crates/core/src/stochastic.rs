//! Monte-Carlo integration of the stochastic state-vector equation on the
//! five states reachable from `|001⟩` (amplitude order 000, 010, 100, 110,
//! 001).
//!
//! Each channel `(A, r)` feeds a noise term into the state one quantum
//! lower:
//!
//! ```text
//! R_000 = √γ C_001 f_e + √μ_ω C_010 f_em + √μ_Ω C_100 f_p
//! R_010 = √μ_Ω C_110 f_p
//! R_100 = √μ_ω C_110 f_em
//! R_110 = R_001 = 0
//! ```
//!
//! The `f` are circular complex Gaussians, real and imaginary parts each of
//! variance `1/(2dt)`, independent between steps and channels. A step is
//! `C ← e^{A dt} C − i R(C) dt`, where `A` is the damped deterministic
//! generator and `e^{A dt}` is exact (diagonal plus the `{110, 001}` block).
//! The noise is Itô (evaluated at the start of the step), as in plain
//! Euler-Maruyama; only the drift is integrated exactly, which keeps the
//! scheme stable for `ω dt` of order one and exact when all rates vanish.
//!
//! Randomness: one ChaCha8 stream per trajectory, seeded with the ensemble
//! seed and selected with the trajectory index (`ChaCha8Rng::seed_from_u64`
//! then `set_stream`), normals from `rand_distr::StandardNormal`. Ensemble
//! reductions run over fixed chunks in index order, so results are bitwise
//! reproducible for any thread count.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{DerivedRates, Populations};
use crate::correlator::{check_time_grid, CorrelatorSource, CorrelatorTable, Field};
use crate::model::SystemParams;
use crate::{Error, Result};

pub const I000: usize = 0;
pub const I010: usize = 1;
pub const I100: usize = 2;
pub const I110: usize = 3;
pub const I001: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const CHUNK: usize = 32;
/// A trajectory whose squared norm exceeds this is treated as diverged.
const BLOWUP: f64 = 1e8;

/// The five amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub [Complex64; 5]);

impl StateVector {
    /// `|001⟩`.
    pub fn excited() -> Self {
        let mut c = [ZERO; 5];
        c[I001] = Complex64::new(1.0, 0.0);
        StateVector(c)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Populations {
        let p = |k: usize| self.0[k].norm_sqr();
        Populations { p000: p(I000), p010: p(I010), p100: p(I100), p110: p(I110), p001: p(I001) }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `c|ψ⟩` or `b|ψ⟩` within the subspace.
    pub fn lowered(&self, field: Field) -> Self {
        let c = &self.0;
        let mut out = [ZERO; 5];
        match field {
            Field::Photon => {
                out[I000] = c[I010];
                out[I100] = c[I110];
            }
            Field::Phonon => {
                out[I000] = c[I100];
                out[I010] = c[I110];
            }
        }
        StateVector(out)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Noise values `f_e, f_em, f_p` for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDraw {
    pub e: Complex64,
    pub em: Complex64,
    pub p: Complex64,
}

impl NoiseDraw {
    pub const ZERO: NoiseDraw = NoiseDraw { e: ZERO, em: ZERO, p: ZERO };
}

/// Per-trajectory Gaussian noise generator.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    sigma: f64,
}

impl NoiseSource {
    pub fn new(seed: u64, trajectory: u64, dt: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory);
        NoiseSource { rng, sigma: (0.5 / dt).sqrt() }
    }

    fn complex(&mut self) -> Complex64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        Complex64::new(re * self.sigma, im * self.sigma)
    }

    pub fn draw(&mut self) -> NoiseDraw {
        NoiseDraw { e: self.complex(), em: self.complex(), p: self.complex() }
    }
}

/// Ensemble settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub seed: u64,
    pub dt: f64,
    pub n_trajectories: usize,
}

impl NoiseConfig {
    pub fn violations(&self, p: Option<&SystemParams>) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("noise.dt must be positive, got {}", self.dt));
        }
        if self.n_trajectories < 100 {
            out.push(format!("noise.n_trajectories must be >= 100, got {}", self.n_trajectories));
        }
        if let Some(p) = p {
            let r = p.max_rate();
            if self.dt * r >= 0.01 {
                out.push(format!("noise.dt·max(rate) = {} must stay below 0.01", self.dt * r));
            }
        }
        out
    }

    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        let v = self.violations(Some(p));
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Precomputed one-step propagator.
#[derive(Debug, Clone)]
pub struct SseStepper {
    dt: f64,
    diag: [Complex64; 3],
    block: Matrix2<Complex64>,
    sqrt_gamma: f64,
    sqrt_mu_omega: f64,
    sqrt_mu_v: f64,
}

impl SseStepper {
    pub fn new(p: &SystemParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let g3 = p.require_rabi3()?;
        let r = DerivedRates::new(p);
        let decay = |w: f64, g: f64| Complex64::new(-g * dt, -w * dt).exp();
        let i = Complex64::new(0.0, 1.0);
        // Rows/columns: (110, 001).
        let gen = Matrix2::new(
            -i * Complex64::new(p.omega + p.omega_v, -r.gamma_110),
            -i * g3.conj(),
            -i * g3,
            -i * Complex64::new(p.omega_e, -r.gamma_001),
        );
        Ok(SseStepper {
            dt,
            diag: [Complex64::new(1.0, 0.0), decay(p.omega, r.gamma_010), decay(p.omega_v, r.gamma_100)],
            block: (gen * Complex64::new(dt, 0.0)).exp(),
            sqrt_gamma: p.gamma_e.sqrt(),
            sqrt_mu_omega: p.mu_omega.sqrt(),
            sqrt_mu_v: p.mu_v.sqrt(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Noise vector `R(C)`.
    pub fn noise_terms(&self, c: &StateVector, f: &NoiseDraw) -> [Complex64; 5] {
        let c = &c.0;
        let mut r = [ZERO; 5];
        r[I000] = c[I001] * f.e * self.sqrt_gamma + c[I010] * f.em * self.sqrt_mu_omega + c[I100] * f.p * self.sqrt_mu_v;
        r[I010] = c[I110] * f.p * self.sqrt_mu_v;
        r[I100] = c[I110] * f.em * self.sqrt_mu_omega;
        r
    }

    pub fn step(&self, state: &StateVector, f: &NoiseDraw) -> StateVector {
        let r = self.noise_terms(state, f);
        self.step_with(state, &r)
    }

    fn step_with(&self, state: &StateVector, r: &[Complex64; 5]) -> StateVector {
        let c = &state.0;
        let mi_dt = Complex64::new(0.0, -self.dt);
        let b = &self.block;
        let mut out = [ZERO; 5];
        out[I000] = self.diag[0] * c[I000] + mi_dt * r[I000];
        out[I010] = self.diag[1] * c[I010] + mi_dt * r[I010];
        out[I100] = self.diag[2] * c[I100] + mi_dt * r[I100];
        out[I110] = b[(0, 0)] * c[I110] + b[(0, 1)] * c[I001];
        out[I001] = b[(1, 0)] * c[I110] + b[(1, 1)] * c[I001];
        StateVector(out)
    }
}

/// One step from `state` with explicit noise values. Fails on a non-finite
/// result.
pub fn step_sse(state: &StateVector, p: &SystemParams, f: &NoiseDraw, dt: f64) -> Result<StateVector> {
    let next = SseStepper::new(p, dt)?.step(state, f);
    if !next.is_finite() {
        return Err(Error::Invariant("stochastic step produced a non-finite amplitude".into()));
    }
    Ok(next)
}

/// Step indices of `times` on the `dt` lattice.
fn lattice(name: &str, times: &[f64], dt: f64) -> Result<Vec<usize>> {
    check_time_grid(name, times)?;
    times
        .iter()
        .map(|&t| {
            let k = (t / dt).round();
            if (k * dt - t).abs() > 1e-6 * dt {
                Err(Error::InvalidGrid(format!("{name} = {t} is not a multiple of dt = {dt}")))
            } else {
                Ok(k as usize)
            }
        })
        .collect()
}

/// One realisation sampled on a grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

/// Trajectory number `index` of the ensemble defined by `cfg`, recorded at
/// `times` (multiples of `cfg.dt`).
pub fn simulate_trajectory(p: &SystemParams, cfg: &NoiseConfig, index: u64, times: &[f64]) -> Result<Trajectory> {
    let stepper = SseStepper::new(p, cfg.dt)?;
    let marks = lattice("t", times, cfg.dt)?;
    let mut noise = NoiseSource::new(cfg.seed, index, cfg.dt);
    let mut state = StateVector::excited();
    let mut states = Vec::with_capacity(times.len());
    let mut next = 0;
    for k in 0..=*marks.last().expect("non-empty grid") {
        while next < marks.len() && marks[next] == k {
            states.push(state);
            next += 1;
        }
        state = stepper.step(&state, &noise.draw());
        if !state.is_finite() {
            return Err(Error::Invariant(format!("trajectory {index} diverged at step {k}")));
        }
    }
    Ok(Trajectory { times: times.to_vec(), states })
}

/// Quantity averaged over the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleObservable {
    /// `|C_k|²` with `k` one of the `I*` indices.
    Population(usize),
    /// `Σ|C_k|²`.
    Norm,
}

impl EnsembleObservable {
    /// All five populations and the norm.
    pub fn standard() -> Vec<Self> {
        let mut v: Vec<_> = (0..5).map(EnsembleObservable::Population).collect();
        v.push(EnsembleObservable::Norm);
        v
    }

    pub fn name(&self) -> String {
        match self {
            EnsembleObservable::Population(k) => format!("P{}", ["000", "010", "100", "110", "001"][*k]),
            EnsembleObservable::Norm => "norm".into(),
        }
    }

    fn eval(&self, s: &StateVector) -> f64 {
        match self {
            EnsembleObservable::Population(k) => s.0[*k].norm_sqr(),
            EnsembleObservable::Norm => s.norm_sqr(),
        }
    }
}

/// Names of the noise correlators `D_a,b` that are tracked.
pub const NOISE_ENTRIES: [&str; 8] = [
    "D_100,100", "D_010,010", "D_000,000", "D_000,100", "D_000,010", "D_110,110", "D_001,001", "D_100,010",
];

/// Sample of `dt·R_a* R_b` and of its predicted value from the amplitudes
/// at the same step.
fn noise_samples(st: &SseStepper, p: &SystemParams, c: &StateVector, r: &[Complex64; 5]) -> [(Complex64, Complex64); 8] {
    let dt = st.dt;
    let a = &c.0;
    let est = |i: usize, j: usize| r[i].conj() * r[j] * dt;
    let re = |x: f64| Complex64::new(x, 0.0);
    [
        (est(I100, I100), re(p.mu_omega * a[I110].norm_sqr())),
        (est(I010, I010), re(p.mu_v * a[I110].norm_sqr())),
        (
            est(I000, I000),
            re(p.gamma_e * a[I001].norm_sqr() + p.mu_omega * a[I010].norm_sqr() + p.mu_v * a[I100].norm_sqr()),
        ),
        (est(I000, I100), a[I010].conj() * a[I110] * p.mu_omega),
        (est(I000, I010), a[I100].conj() * a[I110] * p.mu_v),
        (est(I110, I110), ZERO),
        (est(I001, I001), ZERO),
        (est(I100, I010), ZERO),
    ]
}

#[derive(Debug, Clone, Default)]
struct Moments {
    n: usize,
    est: Complex64,
    pred: Complex64,
    diff_re2: f64,
    diff_im2: f64,
    diff: Complex64,
    /// `Σ|C_110|²`, for the slope of the two diagonal entries.
    weight: f64,
}

impl Moments {
    fn add(&mut self, e: Complex64, p: Complex64, w: f64) {
        let d = e - p;
        self.n += 1;
        self.est += e;
        self.pred += p;
        self.diff += d;
        self.diff_re2 += d.re * d.re;
        self.diff_im2 += d.im * d.im;
        self.weight += w;
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.est += o.est;
        self.pred += o.pred;
        self.diff += o.diff;
        self.diff_re2 += o.diff_re2;
        self.diff_im2 += o.diff_im2;
        self.weight += o.weight;
    }
}

#[derive(Debug, Clone)]
struct Accumulator {
    used: usize,
    aborted: usize,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    noise: Vec<Moments>,
}

impl Accumulator {
    fn new(n_values: usize, with_noise: bool) -> Self {
        Accumulator {
            used: 0,
            aborted: 0,
            sum: vec![0.0; n_values],
            sumsq: vec![0.0; n_values],
            noise: if with_noise { vec![Moments::default(); NOISE_ENTRIES.len()] } else { Vec::new() },
        }
    }

    /// Adds one trajectory's values (Welford update; `sum` holds means,
    /// `sumsq` the centred second moments).
    fn push(&mut self, values: &[f64]) {
        self.used += 1;
        let n = self.used as f64;
        for ((m, m2), &v) in self.sum.iter_mut().zip(self.sumsq.iter_mut()).zip(values) {
            let d = v - *m;
            *m += d / n;
            *m2 += d * (v - *m);
        }
    }

    fn merge(&mut self, o: &Accumulator) {
        self.aborted += o.aborted;
        if o.used > 0 {
            let (na, nb) = (self.used as f64, o.used as f64);
            let n = na + nb;
            for i in 0..self.sum.len() {
                let d = o.sum[i] - self.sum[i];
                self.sum[i] += d * nb / n;
                self.sumsq[i] += o.sumsq[i] + d * d * na * nb / n;
            }
        }
        self.used += o.used;
        for (a, b) in self.noise.iter_mut().zip(&o.noise) {
            a.merge(b);
        }
    }
}

/// Pooled noise-correlator statistics (all steps of all trajectories).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCorrelatorEstimate {
    pub name: String,
    /// `mean(dt·R_a* R_b)`.
    pub estimate: Complex64,
    /// Ensemble mean of the predicted amplitude expression.
    pub predicted: Complex64,
    /// Standard error of `estimate − predicted`.
    pub stderr: f64,
    pub samples: usize,
    /// For `D_100,100` and `D_010,010`: `estimate / mean|C_110|²`, its
    /// standard error and the expected rate (`μ_ω`, `μ_Ω`).
    pub slope: Option<(f64, f64, f64)>,
}

impl NoiseCorrelatorEstimate {
    /// `|estimate − predicted|` in units of the standard error.
    pub fn z_score(&self) -> f64 {
        let d = (self.estimate - self.predicted).norm();
        if self.stderr == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.stderr
        }
    }
}

/// Ensemble means and standard errors at the checkpoints.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// `mean[observable][checkpoint]`.
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub n_used: usize,
    pub n_aborted: usize,
    params: SystemParams,
    noise: Option<Vec<Moments>>,
}

impl EnsembleResult {
    pub fn series(&self, name: &str) -> Option<(&[f64], &[f64])> {
        let k = self.names.iter().position(|n| n == name)?;
        Some((&self.mean[k], &self.stderr[k]))
    }

    /// CSV `t,observable,mean,stderr`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        use crate::output::num;
        writeln!(w, "t,observable,mean,stderr")?;
        for (i, t) in self.times.iter().enumerate() {
            for (k, name) in self.names.iter().enumerate() {
                writeln!(w, "{},{},{},{}", num(*t), name, num(self.mean[k][i]), num(self.stderr[k][i]))?;
            }
        }
        Ok(())
    }
}

/// Options for [`run_ensemble`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnsembleOptions {
    /// Accumulate noise-correlator statistics at every step.
    pub noise_statistics: bool,
}

fn run_one(
    st: &SseStepper,
    p: &SystemParams,
    cfg: &NoiseConfig,
    index: usize,
    marks: &[usize],
    observables: &[EnsembleObservable],
    acc: &mut Accumulator,
    scratch: &mut Accumulator,
) {
    scratch.sum.iter_mut().for_each(|v| *v = 0.0);
    scratch.noise.iter_mut().for_each(|m| *m = Moments::default());
    let mut noise = NoiseSource::new(cfg.seed, index as u64, cfg.dt);
    let mut state = StateVector::excited();
    let n_obs = observables.len();
    let mut next = 0;
    let last = *marks.last().expect("non-empty checkpoints");
    for k in 0..=last {
        while next < marks.len() && marks[next] == k {
            for (o, obs) in observables.iter().enumerate() {
                scratch.sum[o * marks.len() + next] = obs.eval(&state);
            }
            next += 1;
        }
        if k == last {
            break;
        }
        let f = noise.draw();
        let r = st.noise_terms(&state, &f);
        if !scratch.noise.is_empty() {
            let w = state.0[I110].norm_sqr();
            for (m, (e, pr)) in scratch.noise.iter_mut().zip(noise_samples(st, p, &state, &r)) {
                m.add(e, pr, w);
            }
        }
        state = st.step_with(&state, &r);
        if !state.is_finite() || state.norm_sqr() > BLOWUP {
            acc.aborted += 1;
            return;
        }
    }
    acc.push(&scratch.sum[..n_obs * marks.len()]);
    for (a, b) in acc.noise.iter_mut().zip(&scratch.noise) {
        a.merge(b);
    }
}

/// Runs `cfg.n_trajectories` trajectories from `|001⟩` and averages the
/// observables at `checkpoints` (multiples of `dt`, the last one sets the
/// run length).
pub fn run_ensemble(
    p: &SystemParams,
    cfg: &NoiseConfig,
    checkpoints: &[f64],
    observables: &[EnsembleObservable],
    opts: EnsembleOptions,
) -> Result<EnsembleResult> {
    cfg.validate(p)?;
    for o in observables {
        if let EnsembleObservable::Population(k) = o {
            if *k >= 5 {
                return Err(Error::param("observable", format!("population index {k} out of range")));
            }
        }
    }
    let st = SseStepper::new(p, cfg.dt)?;
    let marks = lattice("checkpoint", checkpoints, cfg.dt)?;
    let n_values = observables.len() * marks.len();
    let n_chunks = cfg.n_trajectories.div_ceil(CHUNK);
    let partial: Vec<Accumulator> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(n_values, opts.noise_statistics);
            let mut scratch = Accumulator::new(n_values, opts.noise_statistics);
            for i in (c * CHUNK)..((c + 1) * CHUNK).min(cfg.n_trajectories) {
                run_one(&st, p, cfg, i, &marks, observables, &mut acc, &mut scratch);
            }
            acc
        })
        .collect();
    let mut total = Accumulator::new(n_values, opts.noise_statistics);
    for a in &partial {
        total.merge(a);
    }
    if total.aborted * 100 > cfg.n_trajectories {
        return Err(Error::TooManyAborted { aborted: total.aborted, total: cfg.n_trajectories });
    }
    let n = total.used as f64;
    let mut mean = Vec::with_capacity(observables.len());
    let mut stderr = Vec::with_capacity(observables.len());
    for o in 0..observables.len() {
        let (mut m, mut s) = (Vec::with_capacity(marks.len()), Vec::with_capacity(marks.len()));
        for i in 0..marks.len() {
            let k = o * marks.len() + i;
            let var = total.sumsq[k] / (n - 1.0);
            m.push(total.sum[k]);
            s.push((var / n).sqrt());
        }
        mean.push(m);
        stderr.push(s);
    }
    Ok(EnsembleResult {
        times: checkpoints.to_vec(),
        names: observables.iter().map(|o| o.name()).collect(),
        mean,
        stderr,
        n_used: total.used,
        n_aborted: total.aborted,
        params: *p,
        noise: opts.noise_statistics.then_some(total.noise),
    })
}

/// Pooled estimates of the noise correlators against their predicted
/// amplitude expressions. Needs an ensemble run with noise statistics and at
/// least 1000 trajectories.
pub fn empirical_noise_correlators(ens: &EnsembleResult) -> Result<Vec<NoiseCorrelatorEstimate>> {
    let moments = ens
        .noise
        .as_ref()
        .ok_or_else(|| Error::param("ensemble", "run without noise statistics"))?;
    if ens.n_used < 1000 {
        return Err(Error::param("ensemble", format!("needs >= 1000 trajectories, has {}", ens.n_used)));
    }
    Ok(NOISE_ENTRIES
        .iter()
        .zip(moments)
        .enumerate()
        .map(|(k, (name, m))| {
            let n = m.n as f64;
            let d = m.diff / n;
            let var = ((m.diff_re2 / n - d.re * d.re) + (m.diff_im2 / n - d.im * d.im)).max(0.0) * n / (n - 1.0);
            let stderr = (var / n).sqrt();
            let estimate = m.est / n;
            let slope = match k {
                0 | 1 if m.weight > 0.0 => {
                    let w = m.weight / n;
                    let rate = if k == 0 { ens.params.mu_omega } else { ens.params.mu_v };
                    Some((estimate.re / w, stderr / w, rate))
                }
                _ => None,
            };
            NoiseCorrelatorEstimate { name: name.to_string(), estimate, predicted: m.pred / n, stderr, samples: m.n, slope }
        })
        .collect())
}

#[derive(Debug, Clone)]
struct CorrSums {
    re: Vec<f64>,
    im: Vec<f64>,
    re2: Vec<f64>,
    im2: Vec<f64>,
    used: usize,
    aborted: usize,
}

impl CorrSums {
    fn new(n: usize) -> Self {
        CorrSums { re: vec![0.0; n], im: vec![0.0; n], re2: vec![0.0; n], im2: vec![0.0; n], used: 0, aborted: 0 }
    }
}

/// Monte-Carlo `K(t, τ) = mean ⟨Φ(t, τ)|a Ψ(t+τ)⟩`: along each trajectory
/// `Φ` starts as `aΨ(t)` and is propagated with the very same noise as `Ψ`.
/// Times must be multiples of `cfg.dt`. Standard errors are complex:
/// `√(var Re + var Im)/√N`.
pub fn correlator_mc(p: &SystemParams, cfg: &NoiseConfig, t_grid: &[f64], tau_grid: &[f64], field: Field) -> Result<CorrelatorTable> {
    cfg.validate(p)?;
    let st = SseStepper::new(p, cfg.dt)?;
    let t_marks = lattice("t", t_grid, cfg.dt)?;
    let tau_marks = lattice("tau", tau_grid, cfg.dt)?;
    let (nt, ntau) = (t_marks.len(), tau_marks.len());
    let last = t_marks[nt - 1] + tau_marks[ntau - 1];
    let n_chunks = cfg.n_trajectories.div_ceil(CHUNK);
    let partial: Vec<CorrSums> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut sums = CorrSums::new(nt * ntau);
            let mut row = vec![ZERO; nt * ntau];
            'traj: for index in (c * CHUNK)..((c + 1) * CHUNK).min(cfg.n_trajectories) {
                let mut noise = NoiseSource::new(cfg.seed, index as u64, cfg.dt);
                let mut psi = StateVector::excited();
                let mut branches: Vec<StateVector> = Vec::with_capacity(nt);
                for k in 0..=last {
                    while branches.len() < nt && t_marks[branches.len()] == k {
                        branches.push(psi.lowered(field));
                    }
                    let a_psi = psi.lowered(field);
                    for (i, phi) in branches.iter().enumerate() {
                        let lag = k - t_marks[i];
                        if let Ok(j) = tau_marks.binary_search(&lag) {
                            row[i * ntau + j] = phi.inner(&a_psi);
                        }
                    }
                    if k == last {
                        break;
                    }
                    let f = noise.draw();
                    psi = st.step(&psi, &f);
                    for phi in branches.iter_mut() {
                        *phi = st.step(phi, &f);
                    }
                    if !psi.is_finite() || psi.norm_sqr() > BLOWUP || branches.iter().any(|b| !b.is_finite()) {
                        sums.aborted += 1;
                        continue 'traj;
                    }
                }
                sums.used += 1;
                for (k, z) in row.iter().enumerate() {
                    sums.re[k] += z.re;
                    sums.im[k] += z.im;
                    sums.re2[k] += z.re * z.re;
                    sums.im2[k] += z.im * z.im;
                }
            }
            sums
        })
        .collect();
    let mut total = CorrSums::new(nt * ntau);
    for s in &partial {
        total.used += s.used;
        total.aborted += s.aborted;
        for k in 0..nt * ntau {
            total.re[k] += s.re[k];
            total.im[k] += s.im[k];
            total.re2[k] += s.re2[k];
            total.im2[k] += s.im2[k];
        }
    }
    if total.aborted * 100 > cfg.n_trajectories {
        return Err(Error::TooManyAborted { aborted: total.aborted, total: cfg.n_trajectories });
    }
    let n = total.used as f64;
    let mut values = Vec::with_capacity(nt * ntau);
    let mut stderr = Vec::with_capacity(nt * ntau);
    for k in 0..nt * ntau {
        let (mr, mi) = (total.re[k] / n, total.im[k] / n);
        let var = ((total.re2[k] / n - mr * mr) + (total.im2[k] / n - mi * mi)).max(0.0) * n / (n - 1.0);
        values.push(Complex64::new(mr, mi));
        stderr.push((var / n).sqrt());
    }
    Ok(CorrelatorTable { t: t_grid.to_vec(), tau: tau_grid.to_vec(), values, stderr: Some(stderr) })
}

/// Monte-Carlo correlator as a spectrum source. Grids are snapped to the
/// `dt` lattice by the caller's choice of step.
#[derive(Debug, Clone)]
pub struct McCorrelator {
    pub params: SystemParams,
    pub cfg: NoiseConfig,
    pub field: Field,
}

impl CorrelatorSource for McCorrelator {
    fn field(&self) -> Field {
        self.field
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn table(&self, t: &[f64], tau: &[f64]) -> Result<CorrelatorTable> {
        correlator_mc(&self.params, &self.cfg, t, tau, self.field)
    }
}
