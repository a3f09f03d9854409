//! Configuration loading, subcommand dispatch and file output behind the
//! `triwave` binary.
//!
//! A run is one JSON config plus a subcommand. Every file written starts
//! with the resolved configuration (`# config: {...}` in CSV and data files,
//! an XML comment in SVG, a `config` member in JSON) and carries the
//! `frequency_unit` label. No timestamps, so identical inputs give
//! byte-identical outputs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical invariant
//! violated, 4 RWA validity check failed. Errors go to stderr as one JSON
//! object.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analytic::{eigenfrequencies, occupations_closed_form, occupations_ode, DerivedRates};
use crate::correlator::{linspace, Field};
use crate::lindblad::{evolve_density, DensityMatrix, Liouvillian, Observable, QrtCorrelator, Rk4Config};
use crate::model::{
    build_hamiltonian, build_operators, map_to_parametric, validate_rwa_with, BasisState, CouplingSpec, FockBasis,
    HamiltonianKind, Mechanism, SystemParams,
};
use crate::output::{header_line, line_chart_svg, num, Series};
use crate::spectra::{
    extract_rates, peak_analysis, predicted_ratios, spectrum_analytic_with, spectrum_from_correlator, FrequencyGrid,
    PeakReport, QuadratureConfig, Spectrum, SpectrumOptions,
};
use crate::stochastic::{run_ensemble, EnsembleObservable, EnsembleOptions, McCorrelator, NoiseConfig};
use crate::universality::{compare_universal, CompareOptions};
use crate::analytic::AnalyticCorrelator;
use crate::{Error, Result};

/// Dense-matrix size limit of the Fock basis.
const MAX_DIM: usize = 4096;

#[derive(Debug, Parser)]
#[command(name = "triwave", version, about = "Three-wave electron-photon-phonon resonance: dynamics and emission spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `noise.seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Skip Monte-Carlo trajectories.
    #[arg(long, global = true)]
    pub no_mc: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// RWA validity report.
    Validate,
    /// Hamiltonian matrix dump.
    Hamiltonian,
    /// Populations: closed form, master equation and (optionally) trajectories.
    Dynamics,
    /// Photon and/or phonon emission spectra, analytic and numerical.
    Spectrum,
    /// Complex eigenfrequencies across the parametric resonance.
    Anticrossing,
    /// Rate ratios from a pair of peak reports or spectrum CSVs.
    ExtractRates,
    /// Microscopic Hamiltonian against its parametric reduction.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisConfig {
    pub n_phonon_max: usize,
    pub n_photon_max: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig { n_phonon_max: 1, n_photon_max: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    /// Defaults to `5/γ_MIX`, or three Rabi periods without damping.
    pub t_max: Option<f64>,
    pub n_points: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig { t_max: None, n_points: 201 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericSource {
    None,
    Analytic,
    Qrt,
    Mc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub fields: Vec<Field>,
    pub n_points: usize,
    /// Defaults to `3Ω̃_R`.
    pub half_width: Option<f64>,
    pub numeric: NumericSource,
    pub include_s3: bool,
    /// Quadrature overrides for the numerical spectrum.
    pub quadrature: QuadratureConfig,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            fields: vec![Field::Photon, Field::Phonon],
            n_points: 4001,
            half_width: None,
            numeric: NumericSource::Qrt,
            include_s3: true,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnticrossingConfig {
    /// Half range of `δ`; defaults to `4|Ω_R3|`.
    pub span: Option<f64>,
    pub n_points: usize,
}

impl Default for AnticrossingConfig {
    fn default() -> Self {
        AnticrossingConfig { span: None, n_points: 401 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    /// Photon peak report (`.json`) or spectrum CSV.
    pub photon: Option<PathBuf>,
    /// Phonon peak report (`.json`) or spectrum CSV.
    pub phonon: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub periods: f64,
    pub samples_per_beat: usize,
    pub dressed_tuning: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        let d = CompareOptions::default();
        CompareConfig { periods: d.periods, samples_per_beat: d.samples_per_beat, dressed_tuning: d.dressed_tuning }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub frequency_unit: String,
    pub hamiltonian: HamiltonianKind,
    pub params: SystemParams,
    pub coupling: Option<CouplingSpec>,
    pub basis: BasisConfig,
    pub noise: Option<NoiseConfig>,
    pub dynamics: DynamicsConfig,
    pub spectrum: SpectrumConfig,
    pub anticrossing: AnticrossingConfig,
    pub extract: ExtractConfig,
    pub compare: CompareConfig,
    pub rwa_threshold: f64,
    pub output_dir: PathBuf,
}

const TOP_KEYS: &[&str] = &[
    "frequency_unit", "hamiltonian", "params", "coupling", "basis", "noise", "dynamics", "spectrum",
    "anticrossing", "extract", "compare", "rwa_threshold", "output_dir",
];

fn section_keys(section: &str) -> &'static [&'static str] {
    match section {
        "params" => &["omega_e", "omega", "omega_v", "gamma_e", "mu_omega", "mu_v", "rabi2", "rabi3"],
        "coupling" => &["mechanism", "huang_rhys", "g_factor", "gradient_overlap"],
        "basis" => &["n_phonon_max", "n_photon_max"],
        "noise" => &["seed", "dt", "n_trajectories"],
        "dynamics" => &["t_max", "n_points"],
        "spectrum" => &["fields", "n_points", "half_width", "numeric", "include_s3", "quadrature"],
        "anticrossing" => &["span", "n_points"],
        "extract" => &["photon", "phonon"],
        "compare" => &["periods", "samples_per_beat", "dressed_tuning"],
        _ => &[],
    }
}

const TEMPERATURE_KEYS: &[&str] = &["temperature", "t", "temp", "kt", "beta", "n_thermal", "thermal_occupation"];

fn find_temperature_keys(v: &Value, path: &str, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                if TEMPERATURE_KEYS.contains(&k.to_ascii_lowercase().as_str()) {
                    out.push(format!("{here}: T=0 only; reservoirs are at zero temperature and no thermal input is accepted"));
                }
                find_temperature_keys(child, &here, out);
            }
        }
        Value::Array(a) => a.iter().for_each(|c| find_temperature_keys(c, path, out)),
        _ => {}
    }
}

/// Removes keys the section does not know (reporting each), then
/// deserializes what is left.
fn section<T: serde::de::DeserializeOwned>(root: &Map<String, Value>, name: &str, errors: &mut Vec<String>) -> Option<T> {
    let v = root.get(name)?;
    let Value::Object(m) = v else {
        errors.push(format!("{name} must be a JSON object"));
        return None;
    };
    let known = section_keys(name);
    let mut kept = Map::new();
    for (k, child) in m {
        if known.contains(&k.as_str()) {
            kept.insert(k.clone(), child.clone());
        } else if !TEMPERATURE_KEYS.contains(&k.to_ascii_lowercase().as_str()) {
            errors.push(format!("{name}.{k}: unknown key (expected one of {})", known.join(", ")));
        }
    }
    match serde_json::from_value(Value::Object(kept)) {
        Ok(t) => Some(t),
        Err(e) => {
            errors.push(format!("{name}: {e}"));
            None
        }
    }
}

/// Like [`section`] for sections with defaults: missing keys keep the
/// default.
fn section_or_default<T>(root: &Map<String, Value>, name: &str, errors: &mut Vec<String>) -> T
where
    T: serde::de::DeserializeOwned + Serialize + Default,
{
    let Some(Value::Object(given)) = root.get(name) else {
        if root.contains_key(name) {
            errors.push(format!("{name} must be a JSON object"));
        }
        return T::default();
    };
    let Value::Object(mut merged) = serde_json::to_value(T::default()).expect("defaults serialize") else {
        unreachable!("config sections serialize to objects")
    };
    for (k, v) in given {
        merged.insert(k.clone(), v.clone());
    }
    let mut patched = root.clone();
    patched.insert(name.to_string(), Value::Object(merged));
    section(&patched, name, errors).unwrap_or_default()
}

fn scalar<T: serde::de::DeserializeOwned>(root: &Map<String, Value>, name: &str, default: T, errors: &mut Vec<String>) -> T {
    match root.get(name) {
        None => default,
        Some(v) => serde_json::from_value(v.clone()).unwrap_or_else(|e| {
            errors.push(format!("{name}: {e}"));
            default
        }),
    }
}

/// Parses and validates a configuration document. Every problem found is
/// reported in one [`Error::Config`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("not valid JSON: {e}")]))?;
    let Value::Object(root) = &value else {
        return Err(Error::Config(vec!["configuration must be a JSON object".into()]));
    };
    let mut errors = Vec::new();
    find_temperature_keys(&value, "", &mut errors);
    for k in root.keys() {
        if !TOP_KEYS.contains(&k.as_str()) && !TEMPERATURE_KEYS.contains(&k.to_ascii_lowercase().as_str()) {
            errors.push(format!("{k}: unknown key"));
        }
    }

    let frequency_unit = scalar(root, "frequency_unit", "arb. angular units".to_string(), &mut errors);
    let hamiltonian = scalar(root, "hamiltonian", HamiltonianKind::Parametric, &mut errors);
    let params: Option<SystemParams> = section(root, "params", &mut errors);
    if !root.contains_key("params") {
        errors.push("params: required section missing".into());
    }
    let coupling: Option<CouplingSpec> = section(root, "coupling", &mut errors);
    let basis: BasisConfig = section_or_default(root, "basis", &mut errors);
    let noise: Option<NoiseConfig> = section(root, "noise", &mut errors);
    let dynamics: DynamicsConfig = section_or_default(root, "dynamics", &mut errors);
    let spectrum: SpectrumConfig = section_or_default(root, "spectrum", &mut errors);
    let anticrossing: AnticrossingConfig = section_or_default(root, "anticrossing", &mut errors);
    let extract: ExtractConfig = section_or_default(root, "extract", &mut errors);
    let compare: CompareConfig = section_or_default(root, "compare", &mut errors);
    let rwa_threshold = scalar(root, "rwa_threshold", crate::model::DEFAULT_RWA_THRESHOLD, &mut errors);
    let output_dir = scalar(root, "output_dir", PathBuf::from("out"), &mut errors);

    if let Some(p) = &params {
        errors.extend(p.violations());
        if hamiltonian == HamiltonianKind::Parametric && p.rabi3.is_none() {
            errors.push("params.rabi3 is required for the parametric Hamiltonian".into());
        }
        if hamiltonian != HamiltonianKind::Parametric && p.rabi2.is_none() {
            errors.push(format!("params.rabi2 is required for the {hamiltonian} Hamiltonian"));
        }
        if let Some(n) = &noise {
            errors.extend(n.violations(Some(p)));
        }
    }
    if let Some(c) = &coupling {
        errors.extend(c.violations());
    }
    match (hamiltonian, coupling.map(|c| c.mechanism)) {
        (HamiltonianKind::Molecular, m) if m != Some(Mechanism::Molecular) => {
            errors.push("coupling: the molecular Hamiltonian needs mechanism \"molecular\" with huang_rhys".into())
        }
        (HamiltonianKind::Optomechanical, m) if m != Some(Mechanism::Optomechanical) => errors
            .push("coupling: the optomechanical Hamiltonian needs mechanism \"optomechanical\" with g_factor".into()),
        _ => {}
    }
    match FockBasis::new(basis.n_phonon_max, basis.n_photon_max) {
        Ok(b) if b.dim() > MAX_DIM => errors.push(format!("basis: dimension {} exceeds the dense limit {MAX_DIM}", b.dim())),
        Ok(_) => {}
        Err(e) => errors.push(format!("basis: {e}")),
    }
    if dynamics.n_points < 2 {
        errors.push("dynamics.n_points must be >= 2".into());
    }
    if let Some(t) = dynamics.t_max {
        if !(t > 0.0 && t.is_finite()) {
            errors.push(format!("dynamics.t_max must be positive, got {t}"));
        }
    }
    if spectrum.n_points < 3 {
        errors.push("spectrum.n_points must be >= 3".into());
    }
    if spectrum.fields.is_empty() {
        errors.push("spectrum.fields must name at least one field".into());
    }
    if let Some(w) = spectrum.half_width {
        if !(w > 0.0 && w.is_finite()) {
            errors.push(format!("spectrum.half_width must be positive, got {w}"));
        }
    }
    if anticrossing.n_points < 2 {
        errors.push("anticrossing.n_points must be >= 2".into());
    }
    if let Some(s) = anticrossing.span {
        if !(s > 0.0 && s.is_finite()) {
            errors.push(format!("anticrossing.span must be positive, got {s}"));
        }
    }
    if !(compare.periods > 0.0) || compare.samples_per_beat < 4 {
        errors.push("compare: periods must be positive and samples_per_beat >= 4".into());
    }
    if !(rwa_threshold > 0.0) {
        errors.push(format!("rwa_threshold must be positive, got {rwa_threshold}"));
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok(RunConfig {
        frequency_unit,
        hamiltonian,
        params: params.expect("checked above"),
        coupling,
        basis,
        noise,
        dynamics,
        spectrum,
        anticrossing,
        extract,
        compare,
        rwa_threshold,
        output_dir,
    })
}

/// Reads and validates a configuration file. Relative `extract` paths are
/// resolved against the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![format!("cannot read config {}: {e}", path.display())]))?;
    let mut cfg = parse_config(&text)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    for p in [&mut cfg.extract.photon, &mut cfg.extract.phonon].into_iter().flatten() {
        if p.is_relative() {
            *p = dir.join(&*p);
        }
    }
    Ok(cfg)
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Rwa(_) => 4,
        Error::Invariant(_)
        | Error::TooManyAborted { .. }
        | Error::NonDecaying(_)
        | Error::InconsistentRatios(_)
        | Error::DimensionMismatch { .. } => 3,
        _ => 2,
    }
}

/// Machine-readable error report.
pub fn error_json(e: &Error) -> Value {
    let details = match e {
        Error::Config(v) => v.clone(),
        _ => Vec::new(),
    };
    json!({ "error": e.kind(), "exit_code": exit_code(e), "message": e.to_string(), "details": details })
}

/// Run-time options that are not part of the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub format: Format,
    pub no_mc: bool,
}

enum Cell {
    Num(f64),
    Text(String),
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

struct Writer<'a> {
    cfg: &'a RunConfig,
    header: Value,
    format: Format,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(cfg: &'a RunConfig, format: Format) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir).map_err(|e| {
            Error::Config(vec![format!("output_dir {} is not writable: {e}", cfg.output_dir.display())])
        })?;
        Ok(Writer { cfg, header: serde_json::to_value(cfg)?, format, written: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn save(&mut self, name: &str, body: String) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    fn comment_header(&self) -> String {
        header_line("config", &self.header) + &header_line("frequency_unit", &Value::String(self.cfg.frequency_unit.clone()))
    }

    /// `stem.csv` or `stem.json` depending on the output format.
    fn table(&mut self, stem: &str, t: &Table) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut s = self.comment_header();
                s += &t.columns.join(",");
                s.push('\n');
                for row in &t.rows {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|c| match c {
                            Cell::Num(x) => num(*x),
                            Cell::Text(x) => x.clone(),
                        })
                        .collect();
                    s += &cells.join(",");
                    s.push('\n');
                }
                self.save(&format!("{stem}.csv"), s)
            }
            Format::Json => {
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|row| {
                        Value::Array(
                            row.iter()
                                .map(|c| match c {
                                    Cell::Num(x) => json!(x),
                                    Cell::Text(x) => json!(x),
                                })
                                .collect(),
                        )
                    })
                    .collect();
                let doc = json!({ "config": self.header, "frequency_unit": self.cfg.frequency_unit, "columns": t.columns, "rows": rows });
                self.save(&format!("{stem}.json"), serde_json::to_string_pretty(&doc)? + "\n")
            }
        }
    }

    fn document(&mut self, name: &str, body: Value) -> Result<()> {
        let doc = json!({ "config": self.header, "frequency_unit": self.cfg.frequency_unit, "result": body });
        self.save(name, serde_json::to_string_pretty(&doc)? + "\n")
    }

    fn svg(&mut self, name: &str, title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> Result<()> {
        let comment = format!("config: {} frequency_unit: {}", self.header, self.cfg.frequency_unit);
        let body = line_chart_svg(title, x_label, y_label, series, &comment);
        self.save(name, body)
    }

    /// Two-column `x y` file with `#` header lines.
    fn dat(&mut self, name: &str, x: &[f64], y: &[f64]) -> Result<()> {
        let mut s = self.comment_header();
        for (a, b) in x.iter().zip(y) {
            s += &format!("{} {}\n", num(*a), num(*b));
        }
        self.save(name, s)
    }
}

/// Parametric parameters to run the reduced model with: the config's
/// parameters as they are, or with `Ω_R3` mapped from the microscopic
/// coupling.
fn parametric_params(cfg: &RunConfig) -> Result<SystemParams> {
    match cfg.hamiltonian {
        HamiltonianKind::Parametric => Ok(cfg.params),
        _ => {
            let spec = cfg.coupling.as_ref().ok_or_else(|| Error::MissingCoupling("coupling".into()))?;
            let g3 = map_to_parametric(spec, &cfg.params)?;
            log::info!("{} Hamiltonian reduced to parametric form with Ω_R3 = {g3}", cfg.hamiltonian);
            Ok(SystemParams { rabi3: Some(g3), ..cfg.params })
        }
    }
}

fn warn_rwa(cfg: &RunConfig, p: &SystemParams) {
    let r = validate_rwa_with(p, cfg.rwa_threshold);
    if !r.passes() {
        log::warn!("RWA margins not met: {}", r.summary());
    }
}

fn run_validate(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let report = validate_rwa_with(&cfg.params, cfg.rwa_threshold);
    let mapped = match (cfg.hamiltonian, &cfg.coupling) {
        (HamiltonianKind::Parametric, _) | (_, None) => None,
        (_, Some(spec)) => Some(map_to_parametric(spec, &cfg.params)?),
    };
    let rates = DerivedRates::new(&cfg.params);
    let omega_r = crate::analytic::effective_rabi(&cfg.params).ok().map(|e| e.omega_r);
    w.document(
        "validate.json",
        json!({
            "rwa": report,
            "passes": report.passes(),
            "mapped_rabi3": mapped.map(|z| [z.re, z.im]),
            "gamma_110": rates.gamma_110,
            "gamma_001": rates.gamma_001,
            "gamma_mix": rates.gamma_mix,
            "effective_rabi": omega_r,
        }),
    )?;
    println!("{}", report.summary());
    if report.passes() {
        Ok(())
    } else {
        Err(Error::Rwa(report.summary()))
    }
}

fn run_hamiltonian(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let basis = FockBasis::new(cfg.basis.n_phonon_max, cfg.basis.n_photon_max)?;
    let h = build_hamiltonian(cfg.hamiltonian, &cfg.params, cfg.coupling.as_ref(), &basis)?;
    let mut rows = Vec::new();
    for i in 0..basis.dim() {
        for j in 0..basis.dim() {
            let z = h.element(i, j);
            if z.norm() != 0.0 {
                rows.push(vec![
                    Cell::Num(i as f64),
                    Cell::Num(j as f64),
                    Cell::Text(basis.state(i).expect("in range").label()),
                    Cell::Text(basis.state(j).expect("in range").label()),
                    Cell::Num(z.re),
                    Cell::Num(z.im),
                ]);
            }
        }
    }
    w.table("hamiltonian", &Table { columns: vec!["row", "col", "row_state", "col_state", "re", "im"], rows })?;
    println!("{} Hamiltonian, dimension {}, {} nonzero elements", cfg.hamiltonian, basis.dim(), h.matrix().iter().filter(|z| z.norm() != 0.0).count());
    Ok(())
}

const POP_COLUMNS: [&str; 5] = ["P000", "P010", "P100", "P110", "P001"];

fn population_rows(times: &[f64], pops: &[[f64; 5]]) -> Vec<Vec<Cell>> {
    times
        .iter()
        .zip(pops)
        .map(|(t, p)| std::iter::once(Cell::Num(*t)).chain(p.iter().map(|v| Cell::Num(*v))).collect())
        .collect()
}

fn default_t_max(p: &SystemParams) -> Result<f64> {
    let gamma_mix = DerivedRates::new(p).gamma_mix;
    if gamma_mix > 0.0 {
        Ok(5.0 / gamma_mix)
    } else {
        Ok(3.0 * std::f64::consts::PI / p.require_rabi3()?.norm())
    }
}

fn run_dynamics(cfg: &RunConfig, opts: RunOptions, w: &mut Writer) -> Result<()> {
    let p = parametric_params(cfg)?;
    warn_rwa(cfg, &p);
    let t_max = match cfg.dynamics.t_max {
        Some(t) => t,
        None => default_t_max(&p)?,
    };
    let times = linspace(0.0, t_max, cfg.dynamics.n_points);

    // Exact amplitudes with rate-equation occupations; the strong-coupling
    // closed forms ride along as extra columns.
    let analytic: Option<Vec<[f64; 5]>> = match occupations_ode(&times, &p) {
        Ok(pops) => Some(pops.iter().map(|q| q.as_array()).collect()),
        Err(e) => {
            log::warn!("closed forms skipped: {e}");
            None
        }
    };
    if let Some(a) = &analytic {
        let rows = population_rows(&times, a)
            .into_iter()
            .zip(&times)
            .map(|(mut row, &t)| {
                let o = occupations_closed_form(t, &p);
                row.extend([Cell::Num(o.c000), Cell::Num(o.c010), Cell::Num(o.c100)]);
                row
            })
            .collect();
        let columns = std::iter::once("t").chain(POP_COLUMNS).chain(["P000_strong", "P010_strong", "P100_strong"]).collect();
        w.table("dynamics_analytic", &Table { columns, rows })?;
    }

    let basis = FockBasis::new(cfg.basis.n_phonon_max, cfg.basis.n_photon_max)?;
    let h = build_hamiltonian(HamiltonianKind::Parametric, &p, None, &basis)?;
    let l = Liouvillian::new(&h, &p, &build_operators(&basis))?;
    let rho0 = DensityMatrix::basis_state(&basis, BasisState::new(0, 0, 1))?;
    let obs = Observable::five_populations(&basis)?;
    let rk = Rk4Config { store_states: false, ..Rk4Config::default() };
    let ev = evolve_density(&rho0, &l, &times, &rk, &obs)?;
    let oracle: Vec<[f64; 5]> = (0..times.len())
        .map(|i| std::array::from_fn(|k| ev.observables[k].values[i].re))
        .collect();
    w.table("dynamics_oracle", &Table {
        columns: std::iter::once("t").chain(POP_COLUMNS).collect(),
        rows: population_rows(&times, &oracle),
    })?;

    let mut series_store: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    for (k, name) in POP_COLUMNS.iter().enumerate() {
        series_store.push((format!("{name} master eq."), times.clone(), oracle.iter().map(|r| r[k]).collect()));
    }

    if let (Some(n), false) = (cfg.noise, opts.no_mc) {
        let ck: Vec<f64> = times.iter().map(|t| (t / n.dt).round() * n.dt).collect();
        let mut ck_unique = ck.clone();
        ck_unique.dedup();
        let ens = run_ensemble(&p, &n, &ck_unique, &EnsembleObservable::standard(), EnsembleOptions::default())?;
        let mut columns = vec!["t"];
        for name in ["P000", "P000_se", "P010", "P010_se", "P100", "P100_se", "P110", "P110_se", "P001", "P001_se", "norm", "norm_se"] {
            columns.push(name);
        }
        let rows = ck_unique
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut r = vec![Cell::Num(*t)];
                for k in 0..ens.names.len() {
                    r.push(Cell::Num(ens.mean[k][i]));
                    r.push(Cell::Num(ens.stderr[k][i]));
                }
                r
            })
            .collect();
        w.table("dynamics_mc", &Table { columns, rows })?;
        series_store.push(("P110 trajectories".into(), ck_unique.clone(), ens.mean[3].clone()));
        println!("trajectories: {} used, {} aborted", ens.n_used, ens.n_aborted);
    }

    let series: Vec<Series> = series_store.iter().map(|(l, x, y)| Series { label: l, x, y }).collect();
    w.svg("dynamics.svg", "Populations from |001>", &format!("t [1/({})]", cfg.frequency_unit), "population", &series)?;

    if let Some(a) = &analytic {
        let dev = a
            .iter()
            .zip(&oracle)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
            .fold(0.0, f64::max);
        println!("analytic vs master equation: max deviation {dev:.3e}");
        if dev > 1e-4 {
            return Err(Error::Invariant(format!("analytic and master-equation populations differ by {dev:.3e}")));
        }
    }
    Ok(())
}

fn spectrum_grid(cfg: &RunConfig, p: &SystemParams, field: Field) -> Result<FrequencyGrid> {
    let omega_r = crate::analytic::effective_rabi(p)?.omega_r;
    let half = cfg.spectrum.half_width.unwrap_or(3.0 * omega_r);
    Ok(FrequencyGrid::symmetric(field.frequency(p), half, cfg.spectrum.n_points))
}

fn spectrum_rows(s: &Spectrum) -> Table {
    let nu = s.grid.frequencies();
    let rows = match &s.components {
        Some(c) => (0..nu.len())
            .map(|i| vec![Cell::Num(nu[i]), Cell::Num(s.s[i]), Cell::Num(c.s1[i]), Cell::Num(c.s2[i]), Cell::Num(c.s3[i])])
            .collect(),
        None => (0..nu.len()).map(|i| vec![Cell::Num(nu[i]), Cell::Num(s.s[i])]).collect(),
    };
    let columns = if s.components.is_some() { vec!["nu", "S", "S1", "S2", "S3"] } else { vec!["nu", "S"] };
    Table { columns, rows }
}

fn run_spectrum(cfg: &RunConfig, opts: RunOptions, w: &mut Writer) -> Result<()> {
    let p = parametric_params(cfg)?;
    warn_rwa(cfg, &p);
    let (xi_omega, xi_v) = predicted_ratios(&p);
    for &field in &cfg.spectrum.fields {
        let name = field.name();
        let grid = spectrum_grid(cfg, &p, field)?;
        let analytic = spectrum_analytic_with(&grid, &p, field, SpectrumOptions { include_s3: cfg.spectrum.include_s3 })?;
        let report = peak_analysis(&analytic);
        w.table(&format!("spectrum_{name}"), &spectrum_rows(&analytic))?;
        w.dat(&format!("spectrum_{name}.dat"), &grid.frequencies(), &analytic.s)?;

        let mut quad = cfg.spectrum.quadrature;
        let numeric: Option<Spectrum> = match cfg.spectrum.numeric {
            NumericSource::None => None,
            NumericSource::Analytic => Some(spectrum_from_correlator(&AnalyticCorrelator::new(&p, field)?, &grid, &quad)?),
            NumericSource::Qrt => Some(spectrum_from_correlator(&QrtCorrelator::new(&p, field)?, &grid, &quad)?),
            NumericSource::Mc if opts.no_mc => None,
            NumericSource::Mc => {
                let noise = cfg.noise.ok_or_else(|| Error::Config(vec!["spectrum.numeric = \"mc\" needs a noise section".into()]))?;
                // Both quadrature grids must sit on the trajectory time lattice.
                let step = quad.step.unwrap_or(10.0 * noise.dt);
                let step = (step / noise.dt).round().max(1.0) * noise.dt;
                let horizon = QuadratureConfig::auto_horizon(&p, field)?;
                let snap = |t: Option<f64>| Some((t.unwrap_or(horizon) / step).ceil() * step);
                quad = QuadratureConfig { step: Some(step), t_max: snap(quad.t_max), tau_max: snap(quad.tau_max) };
                log::warn!("Monte-Carlo spectrum: {} trajectories over a {}-point time grid; this is slow", noise.n_trajectories, (horizon / step) as usize);
                let src = McCorrelator { params: p, cfg: noise, field };
                Some(spectrum_from_correlator(&src, &grid, &quad)?)
            }
        };

        let mut summary = json!({
            "analytic": report,
            "predicted_ratio": if field == Field::Photon { xi_omega } else { xi_v },
        });
        let nu = grid.frequencies();
        let mut series = vec![Series { label: "closed form", x: &nu, y: &analytic.s }];
        if let Some(n) = &numeric {
            let sup = analytic.s.iter().zip(&n.s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / analytic.max();
            summary["numeric"] = json!({
                "source": cfg.spectrum.numeric,
                "peaks": peak_analysis(n),
                "sup_error_relative": sup,
                "truncation_error": n.truncation_error,
            });
            w.table(&format!("spectrum_{name}_numeric"), &spectrum_rows(n))?;
            println!("{name}: numeric vs closed form sup error {:.3}% of the peak", 100.0 * sup);
        }
        if let Some(n) = &numeric {
            series.push(Series { label: "numerical", x: &nu, y: &n.s });
        }
        w.svg(&format!("spectrum_{name}.svg"), &format!("{name} emission spectrum"), &format!("nu [{}]", cfg.frequency_unit), "S(nu)", &series)?;
        w.document(&format!("peaks_{name}.json"), summary)?;
        println!(
            "{name}: {} peaks at {:?}, ratio {:?}",
            report.peaks.len(),
            report.positions(),
            report.ratio
        );
    }
    Ok(())
}

fn run_anticrossing(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let p = parametric_params(cfg)?;
    let g3 = p.require_rabi3()?.norm();
    let span = cfg.anticrossing.span.unwrap_or(4.0 * g3);
    let grid = linspace(-span, span, cfg.anticrossing.n_points);
    let pairs = eigenfrequencies(&grid, &p)?;
    let rows = pairs
        .iter()
        .map(|e| {
            vec![
                Cell::Num(e.detuning),
                Cell::Num(e.plus.re - p.omega_e),
                Cell::Num(e.plus.im),
                Cell::Num(e.minus.re - p.omega_e),
                Cell::Num(e.minus.im),
            ]
        })
        .collect();
    w.table("anticrossing", &Table { columns: vec!["detuning", "re_plus_minus_omega_e", "im_plus", "re_minus_minus_omega_e", "im_minus"], rows })?;
    let x: Vec<f64> = pairs.iter().map(|e| e.detuning / g3).collect();
    let ys: Vec<Vec<f64>> = vec![
        pairs.iter().map(|e| (e.plus.re - p.omega_e) / g3).collect(),
        pairs.iter().map(|e| (e.minus.re - p.omega_e) / g3).collect(),
        pairs.iter().map(|e| e.plus.im / g3).collect(),
        pairs.iter().map(|e| e.minus.im / g3).collect(),
    ];
    let labels = ["Re plus", "Re minus", "Im plus", "Im minus"];
    let series: Vec<Series> = labels.iter().zip(&ys).map(|(l, y)| Series { label: l, x: &x, y }).collect();
    w.svg("anticrossing.svg", "Eigenfrequencies across the resonance", "detuning / |Omega_R3|", "(eigenfrequency - omega_e) / |Omega_R3|", &series)?;
    let mid = &pairs[pairs.len() / 2];
    println!("splitting at the grid centre (δ = {:.3e}): {:.6e}", mid.detuning, (mid.plus.re - mid.minus.re).abs());
    Ok(())
}

fn measured_ratio(path: &Path, field: Field) -> Result<(f64, PeakReport)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    let report: PeakReport = if path.extension().is_some_and(|e| e == "json") {
        let v: Value = serde_json::from_str(&text)?;
        // Either a bare PeakReport or the `peaks_*.json` document written
        // by `spectrum`.
        let inner = v.pointer("/result/analytic").cloned().unwrap_or(v);
        serde_json::from_value(inner)?
    } else {
        peak_analysis(&Spectrum::read_csv(&text, field)?)
    };
    let ratio = report.ratio.ok_or_else(|| {
        Error::InconsistentRatios(format!(
            "{}: {} peak(s) found, the central-to-side ratio needs three",
            path.display(),
            report.peaks.len()
        ))
    })?;
    Ok((ratio, report))
}

fn run_extract(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let missing = |f: &str| Error::Config(vec![format!("extract.{f} must point to a peak report or spectrum CSV")]);
    let photon = cfg.extract.photon.as_ref().ok_or_else(|| missing("photon"))?;
    let phonon = cfg.extract.phonon.as_ref().ok_or_else(|| missing("phonon"))?;
    let (xi_omega, rp) = measured_ratio(photon, Field::Photon)?;
    let (xi_v, rv) = measured_ratio(phonon, Field::Phonon)?;
    let ex = extract_rates(xi_omega, xi_v)?;
    w.document(
        "rates.json",
        json!({
            "xi_omega": xi_omega,
            "xi_v": xi_v,
            "photon_peaks": rp,
            "phonon_peaks": rv,
            "extraction": ex,
        }),
    )?;
    println!("xi_omega = {xi_omega:.6}, xi_v = {xi_v:.6} -> x = mu_v/mu_omega = {:.6}, y = gamma/mu_omega = {:.6}", ex.best.x, ex.best.y);
    if ex.ambiguous {
        println!("{} admissible roots, see rates.json", ex.candidates.len());
    }
    Ok(())
}

fn run_compare(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let spec = cfg.coupling.as_ref().ok_or_else(|| Error::Config(vec!["compare needs a coupling section".into()]))?;
    let basis = FockBasis::new(cfg.basis.n_phonon_max, cfg.basis.n_photon_max)?;
    let opts = CompareOptions {
        periods: cfg.compare.periods,
        samples_per_beat: cfg.compare.samples_per_beat,
        dressed_tuning: cfg.compare.dressed_tuning,
    };
    let r = compare_universal(cfg.hamiltonian, &cfg.params, spec, &basis, opts)?;
    let rows = (0..r.times.len())
        .map(|i| {
            vec![
                Cell::Num(r.times[i]),
                Cell::Num(r.microscopic[i]),
                Cell::Num(r.parametric[i]),
                Cell::Num(r.envelope_microscopic[i]),
                Cell::Num(r.envelope_parametric[i]),
            ]
        })
        .collect();
    w.table("compare", &Table { columns: vec!["t", "P110_microscopic", "P110_parametric", "envelope_microscopic", "envelope_parametric"], rows })?;
    let series = [
        Series { label: "microscopic", x: &r.times, y: &r.envelope_microscopic },
        Series { label: "parametric", x: &r.times, y: &r.envelope_parametric },
    ];
    w.svg("compare.svg", &format!("{} vs parametric", r.kind), &format!("t [1/({})]", cfg.frequency_unit), "P110 (smoothed)", &series)?;
    let tuned = SystemParams { omega_v: r.omega_v, ..cfg.params };
    let rwa = validate_rwa_with(&tuned, cfg.rwa_threshold);
    w.document(
        "compare.json",
        json!({
            "kind": r.kind,
            "rabi3": r.rabi3,
            "omega_v": r.omega_v,
            "envelope_error": r.envelope_error,
            "rwa": rwa,
        }),
    )?;
    println!("{}: Ω_R3 = {:?}, Ω = {:.6}, envelope error {:.3}%", r.kind, r.rabi3, r.omega_v, 100.0 * r.envelope_error);
    if !rwa.passes() {
        return Err(Error::Rwa(rwa.summary()));
    }
    if r.envelope_error > 0.1 {
        return Err(Error::Invariant(format!("envelope error {:.3} exceeds 0.1", r.envelope_error)));
    }
    Ok(())
}

/// Runs one subcommand, returning the files written.
pub fn run(command: Command, cfg: &RunConfig, opts: RunOptions) -> Result<Vec<PathBuf>> {
    let mut w = Writer::new(cfg, opts.format)?;
    let outcome = match command {
        Command::Validate => run_validate(cfg, &mut w),
        Command::Hamiltonian => run_hamiltonian(cfg, &mut w),
        Command::Dynamics => run_dynamics(cfg, opts, &mut w),
        Command::Spectrum => run_spectrum(cfg, opts, &mut w),
        Command::Anticrossing => run_anticrossing(cfg, &mut w),
        Command::ExtractRates => run_extract(cfg, &mut w),
        Command::Compare => run_compare(cfg, &mut w),
    };
    for p in &w.written {
        println!("wrote {}", p.display());
    }
    outcome.map(|_| w.written)
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = (|| {
        let path = cli.config.as_ref().ok_or_else(|| Error::Config(vec!["--config PATH is required".into()]))?;
        let mut cfg = load_config(path)?;
        if let Some(seed) = cli.seed {
            match cfg.noise.as_mut() {
                Some(n) => n.seed = seed,
                None => log::warn!("--seed given but the config has no noise section"),
            }
        }
        if let Some(out) = &cli.out {
            cfg.output_dir = out.clone();
        }
        run(cli.command, &cfg, RunOptions { format: cli.format, no_mc: cli.no_mc })
    })();
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}
