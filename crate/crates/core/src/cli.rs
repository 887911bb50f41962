//! Generate, retrieve and evaluate workflows behind the command-line tool.
//!
//! Every command is a pure function of its run configuration and seeds, and
//! writes its artifacts into one output directory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::crosswords::{
    conjugate_bit_of, resolve_conjugate, run_with, AssemblyBasis, ConjugateBit, OrderRule, PartialSolution,
    RetrievalResult, RunOptions, SolverConfig, SolverError, StepReport,
};
use crate::field_model::{
    read_prg1, write_prg1, Complex, PowerGrid, Prg1Grid, SpectralPoint, SpectrumGrid, VISIBLE_RADIUS,
};
use crate::ring_system::{build_honeycomb, RingSystem};
use crate::scenario_lab::{
    add_noise, align_global_phase, aligned_vector_nse, aperture_from_spectrum, deformation_from_phase,
    excitations_from_spectrum, noise_sigma_from_power, nse_rf, write_excitations_csv, Scenario, ScenarioError,
    ScenarioModel, ScenarioSpec,
};

/// Support radius, in wavelengths, from which a run is tagged long-running.
pub const LONG_RUNNING_RADIUS: f64 = 20.0;

/// Order fit tolerance and ceiling of `--H fit`.
pub const FIT_TOLERANCE: f64 = 1e-3;
pub const FIT_MAX_ORDER: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("evaluation: {0}")]
    Mismatch(String),
}

impl CliError {
    /// Process exit code: 2 configuration, 3 solver failure, 4 evaluation
    /// mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } | Self::Scenario(_) => 2,
            Self::Solver(_) => 3,
            Self::Mismatch(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Ring radius rule.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum KbarRule {
    #[default]
    HalfNyquist,
    Explicit(f64),
}

impl std::str::FromStr for KbarRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "half-nyquist" {
            return Ok(Self::HalfNyquist);
        }
        let x: f64 = s.parse().map_err(|_| format!("expected a number or `half-nyquist`, got `{s}`"))?;
        if x > 0.0 && x.is_finite() {
            Ok(Self::Explicit(x))
        } else {
            Err(format!("ring radius must be positive, got {x}"))
        }
    }
}

impl std::fmt::Display for KbarRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::HalfNyquist => f.write_str("half-nyquist"),
            Self::Explicit(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for KbarRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::HalfNyquist => s.serialize_str("half-nyquist"),
            Self::Explicit(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for KbarRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => x.to_string().parse(),
            Raw::Text(s) => s.parse(),
        }
        .map_err(|e| serde::de::Error::custom(format!("kbar: {e}")))
    }
}

/// Ring order rule as written on the command line: `4` or `fit`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderArg(pub OrderRule);

impl std::str::FromStr for OrderArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "fit" {
            return Ok(Self(OrderRule::Fit { tol: FIT_TOLERANCE, max: FIT_MAX_ORDER }));
        }
        match s.parse::<usize>() {
            Ok(h) if h > 0 => Ok(Self(OrderRule::Fixed(h))),
            _ => Err(format!("expected a positive order or `fit`, got `{s}`")),
        }
    }
}

/// Scenario given by path (relative to the run configuration) or inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Path(PathBuf),
    Inline(ScenarioSpec),
}

fn default_noise_seed() -> u64 {
    7
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Run configuration document (JSON).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioRef,
    #[serde(default)]
    pub kbar: KbarRule,
    /// Data SNR in dB; noiseless when absent.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_noise_seed")]
    pub noise_seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Directory for relative paths; the configuration file's directory.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn new(scenario: ScenarioSpec) -> Self {
        Self {
            scenario: ScenarioRef::Inline(scenario),
            kbar: KbarRule::default(),
            snr_db: None,
            noise_seed: default_noise_seed(),
            solver: SolverConfig::default(),
            out: default_out(),
            base_dir: PathBuf::from("."),
        }
    }

    /// Reads a run configuration. A bare scenario document is accepted too
    /// and wrapped with default settings.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config = if value.get("kind").is_some() {
            let spec: ScenarioSpec = serde_json::from_value(value)
                .map_err(|e| CliError::Config(format!("{}: scenario: {e}", path.display())))?;
            Self::new(spec)
        } else {
            // untagged errors are uninformative, so the inline scenario is checked on its own first
            if let Some(inline) = value.get("scenario").filter(|s| s.is_object()) {
                serde_json::from_value::<ScenarioSpec>(inline.clone())
                    .map_err(|e| CliError::Config(format!("{}: scenario: {e}", path.display())))?;
            }
            serde_json::from_str::<Self>(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        config.base_dir = base_dir;
        Ok(config)
    }

    /// The scenario document and the directory its relative paths use.
    pub fn scenario_spec(&self) -> Result<(ScenarioSpec, PathBuf)> {
        match &self.scenario {
            ScenarioRef::Inline(spec) => Ok((spec.clone(), self.base_dir.clone())),
            ScenarioRef::Path(p) => {
                let path = if p.is_absolute() { p.clone() } else { self.base_dir.join(p) };
                let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                let spec = ScenarioSpec::from_json(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                Ok((spec, path.parent().map(Path::to_path_buf).unwrap_or_default()))
            }
        }
    }

    pub fn kbar_for(&self, support_radius: f64) -> f64 {
        match self.kbar {
            KbarRule::HalfNyquist => 0.5 * std::f64::consts::PI / support_radius,
            KbarRule::Explicit(x) => x,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let KbarRule::Explicit(x) = self.kbar {
            if !(x > 0.0) {
                return Err(CliError::Config(format!("ring radius must be positive, got {x}")));
            }
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(CliError::Config(format!("SNR must be finite, got {snr}")));
            }
        }
        self.solver.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    /// Realized scenario and ring radius.
    pub fn build(&self) -> Result<(ScenarioSpec, Scenario, f64)> {
        self.validate()?;
        let (spec, dir) = self.scenario_spec()?;
        let kbar = self.kbar_for(spec.support_radius());
        let scenario = spec.build(Some(kbar), &dir)?;
        Ok((spec, scenario, kbar))
    }
}

/// Field of the scenario's source at one spectral point.
pub fn source_field(scenario: &Scenario, p: SpectralPoint) -> Complex {
    match &scenario.model {
        ScenarioModel::Array(a) => a.field_at(p),
        ScenarioModel::Reflector { aperture, .. } => (0..aperture.nodes().len())
            .map(|k| {
                let (x, y) = aperture.position(k);
                aperture.values()[k] * Complex::from_polar(aperture.weight(), p.u * x + p.v * y)
            })
            .sum(),
    }
}

/// The honeycomb covering the visible disk.
pub fn ring_system_for(kbar: f64) -> Result<RingSystem> {
    build_honeycomb(kbar, VISIBLE_RADIUS, false).map_err(|e| CliError::Solver(e.into()))
}

/// Conjugate bit of the true source at the first intersection point where
/// the sign is well defined.
pub fn true_conjugate_bit(scenario: &Scenario, system: &RingSystem) -> Option<ConjugateBit> {
    let p0 = system.point(system.trigger().p0).location;
    let f0 = source_field(scenario, p0);
    system.intersections().iter().map(|p| p.location).find_map(|p| {
        let f = source_field(scenario, p);
        let a = f * f0.conj();
        if a.im.abs() > 0.1 * a.norm() {
            conjugate_bit_of(|q| source_field(scenario, q), p, p0)
        } else {
            None
        }
    })
}

fn write_grid(path: &Path, grid: Prg1Grid) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    write_prg1(&grid, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_grid(path: &Path) -> Result<Prg1Grid> {
    let file = File::open(path).map_err(io_err(path))?;
    read_prg1(BufReader::new(file)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

/// Everything needed to reproduce a generated scenario.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub scenario: ScenarioSpec,
    pub support_radius: f64,
    pub kbar: f64,
    pub kbar_rule: KbarRule,
    pub grid_n: usize,
    pub grid_half_extent: f64,
    pub snr_db: Option<f64>,
    pub noise_seed: u64,
    /// Field-domain noise standard deviation, when noisy.
    pub noise_sigma: Option<f64>,
    /// `u,v,sign` of the true source, for `--conjugate-bit`.
    pub conjugate_bit: Option<String>,
    pub rings: usize,
    pub tags: Vec<String>,
    pub files: Vec<String>,
}

/// Writes the source file, nominal spectrum, power grid and metadata.
pub fn cmd_generate(config: &RunConfig) -> Result<Metadata> {
    let (spec, scenario, kbar) = config.build()?;
    let out = &config.out;
    create_dir(out)?;
    let mut files = Vec::new();

    match &scenario.model {
        ScenarioModel::Reflector { aperture, .. } => {
            let mut text = String::from("i,j,x,y,re,im\n");
            for (k, &(i, j)) in aperture.nodes().iter().enumerate() {
                let (x, y) = aperture.position(k);
                let v = aperture.values()[k];
                text.push_str(&format!("{i},{j},{x:.17e},{y:.17e},{:.17e},{:.17e}\n", v.re, v.im));
            }
            write_text(&out.join("aperture.csv"), &text)?;
            files.push("aperture.csv".into());
        }
        ScenarioModel::Array(a) => {
            let path = out.join("excitations.csv");
            let file = File::create(&path).map_err(io_err(&path))?;
            write_excitations_csv(a, BufWriter::new(file)).map_err(io_err(&path))?;
            files.push("excitations.csv".into());
        }
    }

    write_grid(&out.join("nominal.prg1"), scenario.nominal.clone().into())?;
    files.push("nominal.prg1".into());

    let (power, noise_sigma) = match config.snr_db {
        Some(snr) => {
            let p = add_noise(&scenario.nominal, snr, config.noise_seed)?;
            let sigma = noise_sigma_from_power(&scenario.nominal.power(), snr);
            (p, Some(sigma))
        }
        None => (scenario.nominal.power(), None),
    };
    write_grid(&out.join("power.prg1"), power.into())?;
    files.push("power.prg1".into());

    let system = ring_system_for(kbar)?;
    let bit = true_conjugate_bit(&scenario, &system)
        .map(|b| format!("{:.17e},{:.17e},{}", b.point.u, b.point.v, if b.sign > 0 { "+" } else { "-" }));
    let mut tags = Vec::new();
    if spec.support_radius() >= LONG_RUNNING_RADIUS {
        tags.push("long-running".to_string());
    }
    let g = scenario.nominal.geometry();
    files.push("metadata.json".into());
    let meta = Metadata {
        scenario: spec,
        support_radius: scenario.support.radius(),
        kbar,
        kbar_rule: config.kbar,
        grid_n: g.n(),
        grid_half_extent: g.half_extent(),
        snr_db: config.snr_db,
        noise_seed: config.noise_seed,
        noise_sigma,
        conjugate_bit: bit,
        rings: system.rings().len(),
        tags,
        files,
    };
    write_json(&out.join("metadata.json"), &meta)?;
    Ok(meta)
}

/// Summary written next to the solution grids.
#[derive(Clone, Debug, Serialize)]
pub struct RetrievalSummary {
    pub rings: usize,
    pub kbar: f64,
    pub solutions: Vec<SolutionSummary>,
    pub resolved: Option<usize>,
    pub ambiguous: bool,
    pub pair_defect: Option<f64>,
    pub frontier_trace: Vec<usize>,
    pub skipped_nulls: Vec<(usize, usize)>,
    pub dropped_cells: Vec<(i64, i64)>,
    pub seconds: f64,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionSummary {
    pub file: String,
    pub score: f64,
    pub condition: f64,
    pub ridge: f64,
}

/// Runs the solver on a power grid and writes the solutions, diagnostics,
/// ring system and summary. On solver failure the diagnostics of the steps
/// completed so far are still written.
pub fn cmd_retrieve(config: &RunConfig, power_path: &Path) -> Result<(RetrievalResult, RetrievalSummary)> {
    let (_, scenario, kbar) = config.build()?;
    let power = match read_grid(power_path)? {
        Prg1Grid::Real(p) => p,
        Prg1Grid::Complex(_) => {
            return Err(CliError::Config(format!("{}: expected a real power grid", power_path.display())))
        }
    };
    let out = &config.out;
    create_dir(out)?;
    let system = ring_system_for(kbar)?;
    write_text(&out.join("ring_system.txt"), &system.to_text())?;

    let mut solver = config.solver.clone();
    if let (Some(snr), None) = (config.snr_db, solver.noise_sigma) {
        solver.noise_sigma = Some(noise_sigma_from_power(&power, snr));
    }
    let basis = match &scenario.model {
        ScenarioModel::Array(a) => Some(AssemblyBasis::from_array(a)),
        ScenarioModel::Reflector { .. } => None,
    };

    let mut diagnostics = format!("{}\n", StepReport::TSV_HEADER);
    let started = Instant::now();
    let result = {
        let mut observer = |r: &StepReport, _: &[PartialSolution]| {
            log::info!("{}", r.to_tsv());
            diagnostics.push_str(&r.to_tsv());
            diagnostics.push('\n');
        };
        run_with(&system, &power, &scenario.support, &solver, RunOptions { basis, observer: Some(&mut observer) })
    };
    let seconds = started.elapsed().as_secs_f64();
    write_text(&out.join("diagnostics.tsv"), &diagnostics)?;
    let result = result?;

    let mut files = vec!["ring_system.txt".to_string(), "diagnostics.tsv".to_string()];
    let resolved = match &solver.conjugate_bit {
        Some(bit) => Some(resolve_conjugate(&result, bit)?),
        None => None,
    };
    let mut solutions = Vec::new();
    for (k, s) in result.solutions.iter().enumerate() {
        if resolved.is_some_and(|r| r != k) {
            continue;
        }
        let file = if resolved.is_some() { "solution.prg1".to_string() } else { format!("solution_{k}.prg1") };
        write_grid(&out.join(&file), s.grid.clone().into())?;
        files.push(file.clone());
        solutions.push(SolutionSummary { file, score: s.branch.score, condition: s.model.condition, ridge: s.model.ridge });
    }
    files.push("retrieval.json".into());
    let d = &result.diagnostics;
    let summary = RetrievalSummary {
        rings: result.system.rings().len(),
        kbar,
        solutions,
        resolved,
        ambiguous: d.ambiguous,
        pair_defect: d.pair_defect,
        frontier_trace: d.frontier_trace(),
        skipped_nulls: d.skipped_nulls(),
        dropped_cells: d.dropped_cells.clone(),
        seconds,
        files,
    };
    write_json(&out.join("retrieval.json"), &summary)?;
    Ok((result, summary))
}

/// Evaluation report.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    /// Without any alignment.
    pub nse_rf: f64,
    /// After the best constant phase.
    pub nse_aligned: f64,
    pub global_phase: f64,
    /// Reflector: `max |δ_rec − δ_true|`, wavelengths.
    pub max_deformation_error: Option<f64>,
    /// Array: excitation NSE after constant-phase alignment.
    pub excitation_nse: Option<f64>,
    pub nse_limit: f64,
    pub error_flags: Vec<String>,
}

/// Compares a recovered spectrum with the nominal one; writes the report,
/// the aligned spectrum and the `v = 0` and `u = 0` cuts.
pub fn cmd_evaluate(
    nominal_path: &Path,
    recovered_path: &Path,
    config: Option<&RunConfig>,
    nse_limit: f64,
    out: &Path,
) -> Result<Report> {
    let complex = |path: &Path| -> Result<SpectrumGrid> {
        match read_grid(path)? {
            Prg1Grid::Complex(g) => Ok(g),
            Prg1Grid::Real(_) => Err(CliError::Config(format!("{}: expected a complex grid", path.display()))),
        }
    };
    let nominal = complex(nominal_path)?;
    let recovered = complex(recovered_path)?;
    if nominal.geometry() != recovered.geometry() {
        return Err(CliError::Mismatch(format!(
            "grids differ: {} has n = {}, half extent {}; {} has n = {}, half extent {}",
            nominal_path.display(),
            nominal.geometry().n(),
            nominal.geometry().half_extent(),
            recovered_path.display(),
            recovered.geometry().n(),
            recovered.geometry().half_extent()
        )));
    }
    let mismatch = |e: ScenarioError| CliError::Mismatch(e.to_string());
    let raw = nse_rf(&nominal, &recovered).map_err(mismatch)?;
    let (aligned, theta) = align_global_phase(&nominal, &recovered).map_err(mismatch)?;
    let nse = nse_rf(&nominal, &aligned).map_err(mismatch)?;

    let mut flags = Vec::new();
    if nse > nse_limit {
        flags.push(format!("nse_aligned {nse:.3e} exceeds {nse_limit:.3e}"));
    }
    let (mut deformation, mut excitation) = (None, None);
    if let Some(config) = config {
        let (_, scenario, _) = config.build()?;
        if scenario.nominal.geometry() != nominal.geometry() {
            return Err(CliError::Mismatch("scenario grid differs from the nominal grid".into()));
        }
        match &scenario.model {
            ScenarioModel::Reflector { params, aperture } => {
                let ap = aperture_from_spectrum(&aligned, &scenario.support, aperture.step(), aperture.weight())?;
                match deformation_from_phase(&ap, params) {
                    Ok(map) => deformation = Some(map.max_error(&params.deformation)),
                    Err(e) => flags.push(format!("deformation: {e}")),
                }
            }
            ScenarioModel::Array(a) => {
                let est = excitations_from_spectrum(&recovered, a)?;
                excitation = Some(aligned_vector_nse(&a.excitations, &est));
            }
        }
    }

    create_dir(out)?;
    write_grid(&out.join("recovered_aligned.prg1"), aligned.clone().into())?;
    write_text(&out.join("cut_v0.csv"), &cut_csv(&nominal, &aligned, Axis::U))?;
    write_text(&out.join("cut_u0.csv"), &cut_csv(&nominal, &aligned, Axis::V))?;
    let report = Report {
        nse_rf: raw,
        nse_aligned: nse,
        global_phase: theta,
        max_deformation_error: deformation,
        excitation_nse: excitation,
        nse_limit,
        error_flags: flags,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Clone, Copy)]
enum Axis {
    /// Along `u` at `v = 0`.
    U,
    /// Along `v` at `u = 0`.
    V,
}

/// Cut through the grid node nearest the axis. Phases are in degrees.
fn cut_csv(nominal: &SpectrumGrid, recovered: &SpectrumGrid, axis: Axis) -> String {
    let g = nominal.geometry();
    let n = g.n();
    let zero = (0..n).min_by(|&a, &b| g.coord(a).abs().total_cmp(&g.coord(b).abs())).unwrap_or(0);
    let (name, other) = match axis {
        Axis::U => ("u", "v"),
        Axis::V => ("v", "u"),
    };
    let mut out = format!(
        "{name},{other},amp_nominal_db,phase_nominal_deg,amp_recovered_db,phase_recovered_deg\n"
    );
    let peak = nominal.samples().iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let db = |z: Complex| 20.0 * (z.norm() / peak).max(1e-15).log10();
    for k in 0..n {
        let (i, j) = match axis {
            Axis::U => (k, zero),
            Axis::V => (zero, k),
        };
        let (a, b) = (nominal.at(i, j), recovered.at(i, j));
        out.push_str(&format!(
            "{:.10e},{:.10e},{:.6},{:.6},{:.6},{:.6}\n",
            g.coord(k),
            g.coord(zero),
            db(a),
            a.arg().to_degrees(),
            db(b),
            b.arg().to_degrees()
        ));
    }
    out
}

/// Power grid of a scenario as generated, for callers that skip the file.
pub fn generated_power(config: &RunConfig, scenario: &Scenario) -> Result<PowerGrid> {
    Ok(match config.snr_db {
        Some(snr) => add_noise(&scenario.nominal, snr, config.noise_seed)?,
        None => scenario.nominal.power(),
    })
}
