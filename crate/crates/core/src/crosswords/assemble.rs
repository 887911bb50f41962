//! Band-limited interpolation of scattered spectrum samples.
//!
//! The spectrum is modelled as radiation from point sources inside the
//! support, `F(k) = P(k) Σ g_p e^{j k·x_p}`, with `P` an optional element
//! pattern. Coefficients come from a least-squares fit to the samples.

use nalgebra::DMatrix;

use crate::field_model::{Complex, GridGeometry, SpectralPoint, SpectrumGrid};
use crate::linalg::{LeastSquares, LeastSquaresError, NormalEquations};
use crate::scenario_lab::{disk_nodes, ApertureField, ArrayScenario, ElementPattern};

/// Source positions of the band-limited model.
#[derive(Clone, Debug)]
pub struct AssemblyBasis {
    pub points: Vec<(f64, f64)>,
    pub pattern: Option<ElementPattern>,
}

impl AssemblyBasis {
    /// Square lattice of spacing `step` over the disk of radius `radius`.
    pub fn lattice(step: f64, radius: f64) -> Self {
        let points = disk_nodes(step, radius)
            .into_iter()
            .map(|(i, j)| (i as f64 * step, j as f64 * step))
            .collect();
        Self { points, pattern: None }
    }

    /// Default lattice for samples reaching `sample_radius`: the model
    /// spectrum's period is 2.5 times the sampled radius, and the lattice
    /// extends one step past the support.
    pub fn for_samples(support_radius: f64, sample_radius: f64) -> Self {
        let step = 2.0 * std::f64::consts::PI / (2.5 * sample_radius);
        Self::lattice(step, support_radius + step)
    }

    /// The nodes of a known source lattice.
    pub fn from_aperture(aperture: &ApertureField) -> Self {
        let points = (0..aperture.nodes().len()).map(|k| aperture.position(k)).collect();
        Self { points, pattern: None }
    }

    /// Element positions and pattern of an array.
    pub fn from_array(array: &ArrayScenario) -> Self {
        let mut points = Vec::with_capacity(array.nx * array.ny);
        for m in 0..array.nx {
            for n in 0..array.ny {
                points.push(array.position(m, n));
            }
        }
        let pattern = match array.element_pattern {
            ElementPattern::Isotropic => None,
            ref p => Some(p.clone()),
        };
        Self { points, pattern }
    }

    fn row(&self, k: SpectralPoint, out: &mut [Complex]) {
        let p = self.pattern.as_ref().map_or(Complex::new(1.0, 0.0), |p| p.evaluate(k));
        for (o, &(x, y)) in out.iter_mut().zip(&self.points) {
            *o = p * Complex::from_polar(1.0, k.u * x + k.v * y);
        }
    }
}

/// Fitted band-limited model.
#[derive(Clone, Debug)]
pub struct BandLimitedModel {
    basis: AssemblyBasis,
    coefficients: Vec<Complex>,
    pub condition: f64,
    pub ridge: f64,
}

impl BandLimitedModel {
    pub fn basis(&self) -> &AssemblyBasis {
        &self.basis
    }

    /// Source amplitudes `g_p`.
    pub fn coefficients(&self) -> &[Complex] {
        &self.coefficients
    }

    pub fn evaluate(&self, k: SpectralPoint) -> Complex {
        let mut row = vec![Complex::new(0.0, 0.0); self.coefficients.len()];
        self.basis.row(k, &mut row);
        row.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }

    /// Model values on every node of `geometry`.
    pub fn to_grid(&self, geometry: GridGeometry) -> SpectrumGrid {
        let n = geometry.n();
        let m = self.coefficients.len();
        // F[p, q] = Σ_s g_s e^{j u_p x_s} e^{j v_q y_s}
        let ex = DMatrix::<Complex>::from_fn(n, m, |p, s| {
            Complex::from_polar(1.0, geometry.coord(p) * self.basis.points[s].0)
        });
        let ey = DMatrix::<Complex>::from_fn(m, n, |s, q| {
            self.coefficients[s] * Complex::from_polar(1.0, geometry.coord(q) * self.basis.points[s].1)
        });
        let f = ex * ey;
        let mut out = SpectrumGrid::zeros(geometry);
        for p in 0..n {
            for q in 0..n {
                let mut v = f[(p, q)];
                if let Some(pattern) = &self.basis.pattern {
                    v *= pattern.evaluate(geometry.point(p, q));
                }
                out.samples_mut()[geometry.index(p, q)] = v;
            }
        }
        out
    }
}

/// Least-squares fit of the model to scattered samples.
pub fn fit_model(
    samples: &[(SpectralPoint, Complex)],
    basis: AssemblyBasis,
) -> Result<BandLimitedModel, LeastSquaresError> {
    let m = basis.points.len();
    let mut ne = NormalEquations::new(m);
    // rows in blocks keep the accumulation in matrix products
    const BLOCK: usize = 256;
    let mut row = vec![Complex::new(0.0, 0.0); m];
    for chunk in samples.chunks(BLOCK) {
        let mut design = DMatrix::<Complex>::zeros(chunk.len(), m);
        let mut rhs = nalgebra::DVector::<Complex>::zeros(chunk.len());
        for (r, (k, v)) in chunk.iter().enumerate() {
            basis.row(*k, &mut row);
            for (c, x) in row.iter().enumerate() {
                design[(r, c)] = *x;
            }
            rhs[r] = *v;
        }
        ne.add_block(&design, &rhs);
    }
    let LeastSquares { solution, condition, ridge } = ne.solve()?;
    Ok(BandLimitedModel { basis, coefficients: solution.iter().copied().collect(), condition, ridge })
}

/// Fits scattered samples and evaluates the model on a grid.
pub fn assemble_spectrum(
    samples: &[(SpectralPoint, Complex)],
    basis: AssemblyBasis,
    geometry: GridGeometry,
) -> Result<(SpectrumGrid, BandLimitedModel), LeastSquaresError> {
    let model = fit_model(samples, basis)?;
    Ok((model.to_grid(geometry), model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario_lab::{far_field, nse_rf, periodic_grid};

    fn source() -> ApertureField {
        let step = 0.6;
        let nodes = disk_nodes(step, 3.0);
        let values = nodes
            .iter()
            .map(|&(i, j)| Complex::from_polar(1.0 - 0.02 * (i * i + j * j) as f64, 0.3 * i as f64 - 0.1 * j as f64))
            .collect();
        ApertureField::new(step, step * step, nodes, values).unwrap()
    }

    fn ring_samples(grid: &SpectrumGrid, ap: &ApertureField, radius: f64) -> Vec<(SpectralPoint, Complex)> {
        let _ = grid;
        let mut out = Vec::new();
        let kbar = std::f64::consts::PI / 6.0;
        let count = (radius / kbar).ceil() as i64;
        for a in -count..=count {
            for b in -count..=count {
                let c = SpectralPoint::new(1.5 * kbar * a as f64, kbar * 3f64.sqrt() * (0.5 * a as f64 + b as f64));
                if c.norm() > radius {
                    continue;
                }
                for s in 0..17 {
                    let phi = 2.0 * std::f64::consts::PI * s as f64 / 17.0;
                    let k = SpectralPoint::new(c.u + kbar * phi.cos(), c.v + kbar * phi.sin());
                    let v: Complex = (0..ap.nodes().len())
                        .map(|n| {
                            let (x, y) = ap.position(n);
                            ap.values()[n] * Complex::from_polar(ap.weight(), k.u * x + k.v * y)
                        })
                        .sum();
                    out.push((k, v));
                }
            }
        }
        out
    }

    #[test]
    fn exact_basis_reproduces_the_spectrum() {
        let ap = source();
        let g = periodic_grid(ap.step(), ap.max_index(), 7.5).unwrap();
        let truth = far_field(&ap, g);
        let samples = ring_samples(&truth, &ap, 7.0);
        let (grid, model) = assemble_spectrum(&samples, AssemblyBasis::from_aperture(&ap), g).unwrap();
        assert!(nse_rf(&truth, &grid).unwrap() < 1e-16);
        for (a, b) in model.coefficients().iter().zip(ap.values()) {
            assert!((a - b * ap.weight()).norm() < 1e-9);
        }
    }

    #[test]
    fn generic_lattice_matches_in_the_visible_disk() {
        let ap = source();
        let g = periodic_grid(ap.step(), ap.max_index(), 7.5).unwrap();
        let truth = far_field(&ap, g);
        let samples = ring_samples(&truth, &ap, 7.3);
        let (grid, _) =
            assemble_spectrum(&samples, AssemblyBasis::for_samples(3.0, 7.3), g).unwrap();
        let nse = nse_rf(&truth, &grid).unwrap();
        assert!(nse < 1e-4, "nse {nse}");
    }

    #[test]
    fn zero_samples_give_zero_grid() {
        let ap = source();
        let g = periodic_grid(ap.step(), ap.max_index(), 7.5).unwrap();
        let zero = SpectrumGrid::zeros(g);
        let samples: Vec<_> = ring_samples(&zero, &ap, 7.0).into_iter().map(|(k, _)| (k, Complex::new(0.0, 0.0))).collect();
        let (grid, _) = assemble_spectrum(&samples, AssemblyBasis::from_aperture(&ap), g).unwrap();
        assert!(grid.samples().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn too_few_samples() {
        let samples = vec![(SpectralPoint::new(0.0, 0.0), Complex::new(1.0, 0.0))];
        assert!(matches!(
            fit_model(&samples, AssemblyBasis::lattice(0.5, 2.0)),
            Err(LeastSquaresError::Underdetermined { .. })
        ));
    }
}
