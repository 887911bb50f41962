//! Scenario description documents (JSON) and their realization.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::aperture::{random_smooth_deformation, reflector_aperture, ApertureField, ReflectorParams};
use super::array::{array_far_field, read_excitations_csv, ArrayScenario, ElementPattern};
use super::farfield::{far_field, periodic_grid};
use super::{Result, ScenarioError};
use crate::field_model::{read_prg1, Complex, Prg1Grid, SourceSupport, SpectralPoint, SpectrumGrid, VISIBLE_RADIUS};

/// Spectrum margin beyond the visible radius, in ring radii: rings whose
/// hexagon meets the visible disk reach `2k̄` past it.
pub const RING_MARGIN: f64 = 2.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSpec {
    Reflector(ReflectorSpec),
    Array(ArraySpec),
}

fn default_fl() -> f64 {
    4.0
}
fn default_c_tilde() -> f64 {
    0.5
}
fn default_taper() -> f64 {
    20.0
}
fn default_bound() -> f64 {
    1.0 / 30.0
}
fn default_samples_per_radius() -> usize {
    8
}
fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectorSpec {
    pub radius_a: f64,
    #[serde(default = "default_fl")]
    pub focal_fl: f64,
    #[serde(default = "default_c_tilde")]
    pub c_tilde: f64,
    #[serde(default = "default_taper")]
    pub taper_edge_db: f64,
    /// Peak surface displacement, wavelengths.
    #[serde(default = "default_bound")]
    pub deformation_bound: f64,
    /// Defaults to a third of the radius.
    #[serde(default)]
    pub correlation_length: Option<f64>,
    /// Aperture lattice nodes per radius.
    #[serde(default = "default_samples_per_radius")]
    pub samples_per_radius: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ExcitationSpec {
    /// Real and imaginary parts uniform in `[-1, 1]`.
    Random { seed: u64 },
    /// CSV matrix, relative paths resolved against the scenario file.
    Csv { path: PathBuf },
    /// Row-major `[re, im]` pairs.
    Inline { values: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ElementPatternSpec {
    #[default]
    Isotropic,
    CosineTaper { q: f64 },
    /// Complex PRG1 grid.
    Imported { path: PathBuf },
}

/// Excitation of element `element` adjusted so the field vanishes at `point`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullSpec {
    pub element: [usize; 2],
    pub point: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub excitations: ExcitationSpec,
    #[serde(default)]
    pub element_pattern: ElementPatternSpec,
    #[serde(default)]
    pub null_at: Option<NullSpec>,
}

/// Source model behind a realized scenario.
#[derive(Clone, Debug)]
pub enum ScenarioModel {
    Reflector { params: ReflectorParams, aperture: ApertureField },
    Array(ArrayScenario),
}

/// A realized scenario: the source and its nominal spectrum.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub support: SourceSupport,
    pub nominal: SpectrumGrid,
    pub model: ScenarioModel,
}

impl Scenario {
    /// Lattice step and node weight of the source model.
    pub fn lattice(&self) -> (f64, f64) {
        match &self.model {
            ScenarioModel::Reflector { aperture, .. } => (aperture.step(), aperture.weight()),
            ScenarioModel::Array(a) => (0.5 * a.spacing, 1.0),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn support_radius(&self) -> f64 {
        match self {
            Self::Reflector(r) => r.radius_a,
            Self::Array(a) => {
                let h = 0.5 * a.spacing;
                (h * (a.nx as f64 - 1.0)).hypot(h * (a.ny as f64 - 1.0))
            }
        }
    }

    /// Builds the source and its spectrum on a grid covering every ring of
    /// radius `kbar` (half the Nyquist interval when `None`). Relative paths
    /// are resolved against `base_dir`.
    pub fn build(&self, kbar: Option<f64>, base_dir: &Path) -> Result<Scenario> {
        let support = SourceSupport::new(self.support_radius())?;
        let kbar = kbar.unwrap_or_else(|| support.half_nyquist_radius());
        if !(kbar > 0.0) {
            return Err(ScenarioError::InvalidParameter(format!("ring radius {kbar}")));
        }
        let min_half = VISIBLE_RADIUS + RING_MARGIN * kbar;
        match self {
            Self::Reflector(r) => {
                if r.samples_per_radius == 0 {
                    return Err(ScenarioError::InvalidParameter("samples_per_radius must be positive".into()));
                }
                let corr = r.correlation_length.unwrap_or(r.radius_a / 3.0);
                let deformation = random_smooth_deformation(r.deformation_bound, corr, r.radius_a, r.seed)?;
                let params = ReflectorParams {
                    radius_a: r.radius_a,
                    focal_fl: r.focal_fl,
                    c_tilde: r.c_tilde,
                    beta: 2.0 * std::f64::consts::PI,
                    taper_edge_db: r.taper_edge_db,
                    deformation,
                };
                let step = r.radius_a / r.samples_per_radius as f64;
                let aperture = reflector_aperture(&params, step)?;
                let grid = periodic_grid(step, aperture.max_index(), min_half)?;
                let nominal = far_field(&aperture, grid);
                Ok(Scenario { support, nominal, model: ScenarioModel::Reflector { params, aperture } })
            }
            Self::Array(a) => {
                let excitations = match &a.excitations {
                    ExcitationSpec::Random { seed } => ArrayScenario::random_excitations(a.nx, a.ny, *seed),
                    ExcitationSpec::Inline { values } => {
                        values.iter().map(|[re, im]| Complex::new(*re, *im)).collect()
                    }
                    ExcitationSpec::Csv { path } => {
                        let file = File::open(resolve(base_dir, path))?;
                        let (nx, ny, values) = read_excitations_csv(BufReader::new(file))?;
                        if (nx, ny) != (a.nx, a.ny) {
                            return Err(ScenarioError::InvalidParameter(format!(
                                "excitation file is {nx}x{ny}, scenario declares {}x{}",
                                a.nx, a.ny
                            )));
                        }
                        values
                    }
                };
                let pattern = match &a.element_pattern {
                    ElementPatternSpec::Isotropic => ElementPattern::Isotropic,
                    ElementPatternSpec::CosineTaper { q } => ElementPattern::CosineTaper { q: *q },
                    ElementPatternSpec::Imported { path } => {
                        let file = File::open(resolve(base_dir, path))?;
                        match read_prg1(BufReader::new(file))? {
                            Prg1Grid::Complex(g) => ElementPattern::imported(&g),
                            Prg1Grid::Real(_) => {
                                return Err(ScenarioError::InvalidParameter(
                                    "element pattern grid must be complex".into(),
                                ))
                            }
                        }
                    }
                };
                let mut array = ArrayScenario::new(a.nx, a.ny, a.spacing, excitations, pattern)?;
                if let Some(null) = &a.null_at {
                    let [m, n] = null.element;
                    if m >= a.nx || n >= a.ny {
                        return Err(ScenarioError::InvalidParameter(format!("no element ({m}, {n})")));
                    }
                    array = array.with_null_at(m, n, SpectralPoint::new(null.point[0], null.point[1]))?;
                }
                let ap = array.as_aperture();
                let grid = periodic_grid(ap.step(), ap.max_index(), min_half)?;
                let nominal = array_far_field(&array, grid);
                Ok(Scenario { support, nominal, model: ScenarioModel::Array(array) })
            }
        }
    }
}
