//! Synthetic sources (deformed reflector, planar arrays), forward models,
//! noise and evaluation metrics.
//!
//! Sources live on square lattices, and spectrum grids span whole periods of
//! the lattice spectrum, so gridded spectra and square amplitudes are exactly
//! band-limited trigonometric polynomials of the grid.

mod aperture;
mod array;
mod config;
mod farfield;
mod noise;

pub use aperture::{
    aperture_from_spectrum, deformation_from_phase, disk_nodes, random_smooth_deformation,
    reflector_aperture, ApertureField, Deformation, DeformationMap, DeformationTerm, ReflectorParams,
};
pub use array::{
    array_far_field, excitations_from_spectrum, read_excitations_csv, write_excitations_csv,
    ArrayScenario, ElementPattern,
};
pub use config::{
    ArraySpec, ElementPatternSpec, ExcitationSpec, NullSpec, ReflectorSpec, Scenario, ScenarioModel,
    ScenarioSpec, RING_MARGIN,
};
pub use farfield::{far_field, periodic_grid};
pub use noise::{
    add_noise, add_noise_to_power, empirical_snr_db, noise_sigma, noise_sigma_from_power, noisy_field,
};

use crate::field_model::{Complex, FieldModelError, SpectrumGrid};
use crate::linalg::LeastSquaresError;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario parameter: {0}")]
    InvalidParameter(String),
    #[error("grids differ in geometry")]
    GridMismatch,
    #[error("phase unwrapping found {residues} residue(s) on the support")]
    PhaseUnwrapFailure { residues: usize },
    #[error("excitation CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Field(#[from] FieldModelError),
    #[error(transparent)]
    LeastSquares(#[from] LeastSquaresError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

fn check_geometry(a: &SpectrumGrid, b: &SpectrumGrid) -> Result<()> {
    if a.geometry() == b.geometry() {
        Ok(())
    } else {
        Err(ScenarioError::GridMismatch)
    }
}

/// `‖F_nom − F_rec‖² / ‖F_nom‖²` over the visible nodes.
pub fn nse_rf(nominal: &SpectrumGrid, recovered: &SpectrumGrid) -> Result<f64> {
    check_geometry(nominal, recovered)?;
    let idx = nominal.geometry().visible_indices();
    let (mut num, mut den) = (0.0, 0.0);
    for &i in &idx {
        let a = nominal.samples()[i];
        num += (a - recovered.samples()[i]).norm_sqr();
        den += a.norm_sqr();
    }
    Ok(if den > 0.0 { num / den } else { num })
}

/// Constant phase `θ` minimizing `‖F_nom − e^{jθ} F_rec‖` over the visible
/// nodes, and the rotated grid.
pub fn align_global_phase(nominal: &SpectrumGrid, recovered: &SpectrumGrid) -> Result<(SpectrumGrid, f64)> {
    check_geometry(nominal, recovered)?;
    let inner: Complex = nominal
        .geometry()
        .visible_indices()
        .into_iter()
        .map(|i| nominal.samples()[i] * recovered.samples()[i].conj())
        .sum();
    let theta = if inner.norm() > 0.0 { inner.arg() } else { 0.0 };
    let rot = Complex::from_polar(1.0, theta);
    Ok((recovered.map(|v| v * rot), theta))
}

/// NSE after constant-phase alignment.
pub fn nse_aligned(nominal: &SpectrumGrid, recovered: &SpectrumGrid) -> Result<f64> {
    let (aligned, _) = align_global_phase(nominal, recovered)?;
    nse_rf(nominal, &aligned)
}

/// Relative error `‖a − e^{jθ} b‖² / ‖a‖²` of two vectors after the best
/// constant-phase alignment.
pub fn aligned_vector_nse(reference: &[Complex], estimate: &[Complex]) -> f64 {
    let inner: Complex = reference.iter().zip(estimate).map(|(a, b)| a * b.conj()).sum();
    let rot = if inner.norm() > 0.0 { inner / inner.norm() } else { Complex::new(1.0, 0.0) };
    let num: f64 = reference.iter().zip(estimate).map(|(a, b)| (a - rot * b).norm_sqr()).sum();
    let den: f64 = reference.iter().map(|a| a.norm_sqr()).sum();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
