//! Spectral-domain data types, ring representations and extraction of ring
//! data from gridded square-amplitude measurements.
//!
//! Units: lengths in the source domain are in wavelengths, spectral
//! coordinates `(u, v)` in rad/wavelength, so the visible region is the disk
//! `u² + v² ≤ (2π)²`.

mod extract;
mod grid;
mod interp;
mod ring;

use std::f64::consts::PI;

pub use extract::{extract_ring_power, fit_ring_order, ExtractionConfig, RingExtraction};
pub use grid::{read_prg1, write_prg1, GridGeometry, PowerGrid, Prg1Grid, SpectrumGrid};
pub use interp::{InterpConfig, RefinedGrid};
pub use ring::{RingPowerData, RingSignal};

pub type Complex = num_complex::Complex64;

/// Radius of the visible disk in the spectral plane (λ = 1).
pub const VISIBLE_RADIUS: f64 = 2.0 * PI;

#[derive(Debug, thiserror::Error)]
pub enum FieldModelError {
    #[error("source support radius must be positive, got {0}")]
    InvalidSupport(f64),
    #[error("ring radius must be positive, got {0}")]
    InvalidRingRadius(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("ring centred at ({u:.6}, {v:.6}) with radius {radius:.6} leaves the grid")]
    RingOutsideGrid { u: f64, v: f64, radius: f64 },
    #[error("point ({u:.6}, {v:.6}) is outside the grid")]
    PointOutsideGrid { u: f64, v: f64 },
    #[error("relative fit residual {residual:.3e} exceeds {threshold:.3e} at order {order}")]
    FitResidualTooLarge { residual: f64, threshold: f64, order: usize },
    #[error("no ring order up to {max_order} fits within relative tolerance {tol:.3e}")]
    NoOrderFits { max_order: usize, tol: f64 },
    #[error("square amplitude vanishes along the ring (degenerate data)")]
    DegeneratePower,
    #[error("PRG1 parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FieldModelError>;

/// A point `(u, v)` of the spectral plane.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectralPoint {
    pub u: f64,
    pub v: f64,
}

impl SpectralPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn norm(&self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn distance(&self, other: &SpectralPoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Radius of the smallest origin-centred disk enclosing the source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceSupport {
    radius: f64,
}

impl SourceSupport {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(FieldModelError::InvalidSupport(radius));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Spectral sampling interval `π/a` of a spectrum radiated by this source.
    pub fn nyquist_spacing(&self) -> f64 {
        PI / self.radius
    }

    /// Default ring radius: half the Nyquist distance.
    pub fn half_nyquist_radius(&self) -> f64 {
        0.5 * self.nyquist_spacing()
    }

    /// Angular bandwidth `k̄·a` of the field along a ring of radius `kbar`.
    pub fn ring_bandwidth(&self, kbar: f64) -> f64 {
        kbar * self.radius
    }
}

/// A circle of the spectral plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingGeometry {
    pub center: SpectralPoint,
    pub radius: f64,
}

impl RingGeometry {
    pub fn new(center: SpectralPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(FieldModelError::InvalidRingRadius(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn point_at(&self, phi: f64) -> SpectralPoint {
        SpectralPoint::new(
            self.center.u + self.radius * phi.cos(),
            self.center.v + self.radius * phi.sin(),
        )
    }

    /// Polar angle of `(u, v)` about the ring centre.
    pub fn angle_of(&self, u: f64, v: f64) -> f64 {
        (v - self.center.v).atan2(u - self.center.u)
    }

    /// Distance of `p` from the circle itself.
    pub fn distance_to(&self, p: &SpectralPoint) -> f64 {
        (self.center.distance(p) - self.radius).abs()
    }
}

/// Band-limited value of a spectrum grid at an arbitrary point.
///
/// Builds the refined grid on every call; keep a [`RefinedGrid`] around when
/// many points are needed.
pub fn interpolate_spectrum_value(
    grid: &SpectrumGrid,
    point: SpectralPoint,
    config: &InterpConfig,
) -> Result<Complex> {
    if !grid.geometry().contains(&point) {
        return Err(FieldModelError::PointOutsideGrid { u: point.u, v: point.v });
    }
    RefinedGrid::from_spectrum(grid, config).evaluate(point)
}
