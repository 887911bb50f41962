//! Aperture fields on square lattices: the deformed reflector model, random
//! smooth surface deformations and the inverse transform back from a spectrum.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Result, ScenarioError};
use crate::field_model::{Complex, SourceSupport, SpectrumGrid};

/// Complex source samples at lattice nodes `(i·step, j·step)`.
///
/// The radiated spectrum is `F(u, v) = w Σ f_ij e^{j(u x_i + v y_j)}` with
/// `w` the per-node weight (the cell area for continuous apertures, 1 for
/// arrays of point radiators).
#[derive(Clone, Debug, PartialEq)]
pub struct ApertureField {
    step: f64,
    weight: f64,
    nodes: Vec<(i64, i64)>,
    values: Vec<Complex>,
}

impl ApertureField {
    pub fn new(step: f64, weight: f64, nodes: Vec<(i64, i64)>, values: Vec<Complex>) -> Result<Self> {
        if !(step > 0.0) || !(weight > 0.0) {
            return Err(ScenarioError::InvalidParameter(format!(
                "lattice step {step} and weight {weight} must be positive"
            )));
        }
        if nodes.len() != values.len() {
            return Err(ScenarioError::InvalidParameter(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        Ok(Self { step, weight, nodes, values })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn nodes(&self) -> &[(i64, i64)] {
        &self.nodes
    }

    pub fn values(&self) -> &[Complex] {
        &self.values
    }

    pub fn position(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.nodes[k];
        (i as f64 * self.step, j as f64 * self.step)
    }

    /// Largest `|i|` or `|j|` over the nodes.
    pub fn max_index(&self) -> i64 {
        self.nodes.iter().map(|&(i, j)| i.abs().max(j.abs())).max().unwrap_or(0)
    }

    /// Radius of the smallest origin-centred disk through all nodes.
    pub fn support_radius(&self) -> f64 {
        (0..self.nodes.len())
            .map(|k| {
                let (x, y) = self.position(k);
                x.hypot(y)
            })
            .fold(0.0, f64::max)
    }

    /// `w Σ |f|²`, the discrete aperture power.
    pub fn power(&self) -> f64 {
        self.weight * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn with_values(&self, values: Vec<Complex>) -> Result<Self> {
        Self::new(self.step, self.weight, self.nodes.clone(), values)
    }
}

/// Lattice nodes `(i, j)` with `|(i, j)|·step ≤ radius`.
pub fn disk_nodes(step: f64, radius: f64) -> Vec<(i64, i64)> {
    let m = (radius / step).floor() as i64;
    let mut out = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            if (i as f64 * step).hypot(j as f64 * step) <= radius * (1.0 + 1e-12) {
                out.push((i, j));
            }
        }
    }
    out
}

/// A real surface deformation `δ(x, y)` in wavelengths, written as a finite
/// Fourier series on harmonics `(π/a)·(p, q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Deformation {
    radius: f64,
    terms: Vec<DeformationTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformationTerm {
    pub p: i64,
    pub q: i64,
    pub cos: f64,
    pub sin: f64,
}

impl Deformation {
    pub fn zero(radius: f64) -> Self {
        Self { radius, terms: Vec::new() }
    }

    pub fn terms(&self) -> &[DeformationTerm] {
        &self.terms
    }

    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let k = PI / self.radius;
        self.terms
            .iter()
            .map(|t| {
                let arg = k * (t.p as f64 * x + t.q as f64 * y);
                t.cos * arg.cos() + t.sin * arg.sin()
            })
            .sum()
    }

    /// `max |δ|` over the evaluation lattice used for rescaling.
    pub fn max_abs(&self) -> f64 {
        let step = self.radius / 64.0;
        disk_nodes(step, self.radius)
            .into_iter()
            .map(|(i, j)| self.evaluate(i as f64 * step, j as f64 * step).abs())
            .fold(0.0, f64::max)
    }

    fn scaled(mut self, factor: f64) -> Self {
        for t in self.terms.iter_mut() {
            t.cos *= factor;
            t.sin *= factor;
        }
        self
    }
}

/// Random smooth deformation on the disk of radius `radius`, rescaled so its
/// peak magnitude equals `bound`. Harmonics with `|k| > π/correlation_length`
/// are excluded.
pub fn random_smooth_deformation(
    bound: f64,
    correlation_length: f64,
    radius: f64,
    seed: u64,
) -> Result<Deformation> {
    if !(bound >= 0.0) || !(correlation_length > 0.0) || !(radius > 0.0) {
        return Err(ScenarioError::InvalidParameter(format!(
            "deformation bound {bound}, correlation length {correlation_length}, radius {radius}"
        )));
    }
    if bound == 0.0 {
        return Ok(Deformation::zero(radius));
    }
    let pmax = radius / correlation_length;
    let n = pmax.floor() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for p in 0..=n {
        for q in -n..=n {
            // half plane: (p, q) and (-p, -q) are the same real harmonic
            if (p == 0 && q <= 0) || ((p * p + q * q) as f64).sqrt() > pmax + 1e-12 {
                continue;
            }
            let c: f64 = StandardNormal.sample(&mut rng);
            let s: f64 = StandardNormal.sample(&mut rng);
            terms.push(DeformationTerm { p, q, cos: c, sin: s });
        }
    }
    if terms.is_empty() {
        return Err(ScenarioError::InvalidParameter(format!(
            "correlation length {correlation_length} leaves no harmonic on radius {radius}"
        )));
    }
    let raw = Deformation { radius, terms };
    let peak = raw.max_abs();
    Ok(raw.scaled(bound / peak))
}

/// Deformed parabolic reflector illuminating a circular aperture.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectorParams {
    pub radius_a: f64,
    pub focal_fl: f64,
    pub c_tilde: f64,
    /// Wavenumber; `2π` with lengths in wavelengths.
    pub beta: f64,
    /// Centre-to-edge amplitude ratio of the illumination, dB.
    pub taper_edge_db: f64,
    pub deformation: Deformation,
}

impl ReflectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_a > 0.0) || !(self.focal_fl > 0.0) || !(self.beta > 0.0) {
            return Err(ScenarioError::InvalidParameter(format!(
                "reflector radius {}, focal length {} and wavenumber {} must be positive",
                self.radius_a, self.focal_fl, self.beta
            )));
        }
        Ok(())
    }

    /// Gaussian taper exponent giving the requested centre-to-edge ratio
    /// together with the feed's own `1/(4FL² + ρ²)` fall-off.
    pub fn taper_alpha(&self) -> f64 {
        let f2 = 4.0 * self.focal_fl * self.focal_fl;
        let a2 = self.radius_a * self.radius_a;
        let target = self.taper_edge_db / 20.0 * std::f64::consts::LN_10;
        (target - ((f2 + a2) / f2).ln()) / a2
    }

    pub fn amplitude(&self, rho: f64) -> f64 {
        let f2 = 4.0 * self.focal_fl * self.focal_fl;
        4.0 * self.focal_fl / (f2 + rho * rho) * (-self.taper_alpha() * rho * rho).exp()
    }

    /// Nominal focusing phase `φ_f`.
    pub fn nominal_phase(&self, rho: f64) -> f64 {
        let f2 = 4.0 * self.focal_fl * self.focal_fl;
        self.beta * (2.0 * self.focal_fl + self.c_tilde * (f2 - rho * rho) / (4.0 * self.focal_fl))
    }

    /// Phase distortion produced by a surface displacement `delta`.
    pub fn phase_distortion(&self, rho: f64, delta: f64) -> f64 {
        let fl2 = self.focal_fl * self.focal_fl;
        8.0 * fl2 * self.beta / (4.0 * fl2 + rho * rho) * delta
    }

    /// Inverse of [`phase_distortion`](Self::phase_distortion).
    pub fn displacement(&self, rho: f64, distortion: f64) -> f64 {
        let fl2 = self.focal_fl * self.focal_fl;
        distortion * (4.0 * fl2 + rho * rho) / (8.0 * fl2 * self.beta)
    }
}

/// Aperture field `|f| e^{j(φ_f + Δ)}` sampled on a lattice of spacing
/// `step` over the disk `ρ ≤ a`.
pub fn reflector_aperture(p: &ReflectorParams, step: f64) -> Result<ApertureField> {
    p.validate()?;
    let nodes = disk_nodes(step, p.radius_a);
    let values = nodes
        .iter()
        .map(|&(i, j)| {
            let (x, y) = (i as f64 * step, j as f64 * step);
            let rho = x.hypot(y);
            let delta = p.deformation.evaluate(x, y);
            Complex::from_polar(
                p.amplitude(rho),
                p.nominal_phase(rho) + p.phase_distortion(rho, delta),
            )
        })
        .collect();
    ApertureField::new(step, step * step, nodes, values)
}

/// Inverse transform of a spectrum onto the lattice nodes of spacing `step`
/// inside the support disk.
///
/// `f(x) = (1/(n² w)) Σ F(u, v) e^{-j(u x + v y)}`, which inverts the forward
/// model exactly when the grid spans whole periods of the lattice spectrum.
pub fn aperture_from_spectrum(
    spec: &SpectrumGrid,
    support: &SourceSupport,
    step: f64,
    weight: f64,
) -> Result<ApertureField> {
    let g = spec.geometry();
    let n = g.n();
    let nodes = disk_nodes(step, support.radius());
    let m = nodes.iter().map(|&(i, j)| i.abs().max(j.abs())).max().unwrap_or(0);
    let span = (2 * m + 1) as usize;
    // E[i, p] = e^{-j u_p x_i}
    let e = DMatrix::<Complex>::from_fn(span, n, |i, p| {
        let x = (i as i64 - m) as f64 * step;
        Complex::from_polar(1.0, -g.coord(p) * x)
    });
    let f = DMatrix::<Complex>::from_fn(n, n, |p, q| spec.at(p, q));
    let lattice = &e * f * e.transpose();
    let scale = 1.0 / ((n * n) as f64 * weight);
    let values = nodes
        .iter()
        .map(|&(i, j)| lattice[((i + m) as usize, (j + m) as usize)] * scale)
        .collect();
    ApertureField::new(step, weight, nodes, values)
}

/// Recovered displacement at the aperture nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationMap {
    pub step: f64,
    pub nodes: Vec<(i64, i64)>,
    pub values: Vec<f64>,
}

impl DeformationMap {
    /// `max |δ_rec − δ_true|` over the nodes.
    pub fn max_error(&self, truth: &Deformation) -> f64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .map(|(&(i, j), d)| (d - truth.evaluate(i as f64 * self.step, j as f64 * self.step)).abs())
            .fold(0.0, f64::max)
    }
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Surface displacement from the aperture phase.
///
/// The residual phase `arg f − φ_f` is unwrapped outward from the centre,
/// each node against its already-unwrapped neighbour nearest the centre.
/// Residues (nonzero wrapped circulation around a lattice cell) abort with
/// [`ScenarioError::PhaseUnwrapFailure`].
pub fn deformation_from_phase(aperture: &ApertureField, p: &ReflectorParams) -> Result<DeformationMap> {
    let step = aperture.step();
    let index: HashMap<(i64, i64), usize> =
        aperture.nodes().iter().enumerate().map(|(k, n)| (*n, k)).collect();
    let residual: Vec<f64> = (0..aperture.nodes().len())
        .map(|k| {
            let (x, y) = aperture.position(k);
            wrap(aperture.values()[k].arg() - p.nominal_phase(x.hypot(y)))
        })
        .collect();

    let mut residues = 0;
    for &(i, j) in aperture.nodes() {
        let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
        let ids: Option<Vec<usize>> = corners.iter().map(|c| index.get(c).copied()).collect();
        if let Some(ids) = ids {
            let circulation: f64 =
                (0..4).map(|k| wrap(residual[ids[(k + 1) % 4]] - residual[ids[k]])).sum();
            if circulation.abs() > PI {
                residues += 1;
            }
        }
    }
    if residues > 0 {
        return Err(ScenarioError::PhaseUnwrapFailure { residues });
    }

    let mut order: Vec<usize> = (0..aperture.nodes().len()).collect();
    order.sort_by_key(|&k| {
        let (i, j) = aperture.nodes()[k];
        (i * i + j * j, i, j)
    });
    let mut unwrapped: Vec<Option<f64>> = vec![None; residual.len()];
    for &k in &order {
        let (i, j) = aperture.nodes()[k];
        let r2 = i * i + j * j;
        let parent = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)]
            .iter()
            .filter_map(|(di, dj)| {
                let nb = (i + di, j + dj);
                let id = *index.get(&nb)?;
                let nr2 = nb.0 * nb.0 + nb.1 * nb.1;
                (nr2 < r2).then_some((nr2, id))
            })
            .min_by_key(|&(nr2, id)| (nr2, id))
            .and_then(|(_, id)| unwrapped[id]);
        unwrapped[k] = Some(match parent {
            Some(base) => base + wrap(residual[k] - base),
            None => residual[k],
        });
    }

    let values = (0..aperture.nodes().len())
        .map(|k| {
            let (x, y) = aperture.position(k);
            p.displacement(x.hypot(y), unwrapped[k].expect("every node reached"))
        })
        .collect();
    Ok(DeformationMap { step, nodes: aperture.nodes().to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(deformation: Deformation) -> ReflectorParams {
        ReflectorParams {
            radius_a: 3.0,
            focal_fl: 4.0,
            c_tilde: 0.5,
            beta: 2.0 * PI,
            taper_edge_db: 20.0,
            deformation,
        }
    }

    #[test]
    fn taper_meets_edge_ratio() {
        let p = params(Deformation::zero(3.0));
        let ratio = p.amplitude(0.0) / p.amplitude(3.0);
        assert!((20.0 * ratio.log10() - 20.0).abs() < 1e-10);
    }

    #[test]
    fn centre_values() {
        let d = random_smooth_deformation(1.0 / 30.0, 1.0, 3.0, 4).unwrap();
        let p = params(d.clone());
        // without taper |f(0)| = 1/FL
        assert!((p.amplitude(0.0) - 0.25).abs() < 1e-15);
        let delta0 = d.evaluate(0.0, 0.0);
        assert!((p.phase_distortion(0.0, delta0) - 2.0 * p.beta * delta0).abs() < 1e-15);
    }

    #[test]
    fn undeformed_phase_is_nominal() {
        let p = params(Deformation::zero(3.0));
        let ap = reflector_aperture(&p, 0.375).unwrap();
        for (k, v) in ap.values().iter().enumerate() {
            let (x, y) = ap.position(k);
            assert!(wrap(v.arg() - p.nominal_phase(x.hypot(y))).abs() < 1e-12);
        }
    }

    #[test]
    fn deformation_is_bounded_and_reproducible() {
        let a = random_smooth_deformation(1.0 / 30.0, 1.0, 3.0, 17).unwrap();
        let b = random_smooth_deformation(1.0 / 30.0, 1.0, 3.0, 17).unwrap();
        assert_eq!(a, b);
        assert!((a.max_abs() - 1.0 / 30.0).abs() < 1e-15);
        let c = random_smooth_deformation(1.0 / 30.0, 1.0, 3.0, 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn long_correlation_keeps_low_harmonics() {
        // Sample one period [-a, a)² of the series; the DFT bins are the
        // harmonics (p, q) themselves.
        let a = 3.0;
        let d = random_smooth_deformation(0.05, a / 2.0, a, 9).unwrap();
        let n = 16usize;
        let h = 2.0 * a / n as f64;
        let mut total = 0.0;
        let mut outside = 0.0;
        for p in 0..n as i64 {
            for q in 0..n as i64 {
                let mut acc = Complex::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let (x, y) = (-a + i as f64 * h, -a + j as f64 * h);
                        acc += Complex::from_polar(
                            d.evaluate(x, y),
                            -2.0 * PI * (p as f64 * i as f64 + q as f64 * j as f64) / n as f64,
                        );
                    }
                }
                let pp = if p > n as i64 / 2 { p - n as i64 } else { p };
                let qq = if q > n as i64 / 2 { q - n as i64 } else { q };
                total += acc.norm_sqr();
                if pp * pp + qq * qq > 4 {
                    outside += acc.norm_sqr();
                }
            }
        }
        assert!(outside <= 1e-20 * total);
    }

    #[test]
    fn unwrap_recovers_displacement_from_exact_phase() {
        let d = random_smooth_deformation(1.0 / 30.0, 1.0, 3.0, 2).unwrap();
        let p = params(d.clone());
        let ap = reflector_aperture(&p, 0.375).unwrap();
        let map = deformation_from_phase(&ap, &p).unwrap();
        assert!(map.max_error(&d) < 1e-12);

        let flat = params(Deformation::zero(3.0));
        let ap0 = reflector_aperture(&flat, 0.375).unwrap();
        let map0 = deformation_from_phase(&ap0, &flat).unwrap();
        assert!(map0.values.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn residues_are_reported() {
        // a phase vortex around the cell between (0,0) and (1,1)
        let flat = params(Deformation::zero(3.0));
        let step = 0.375;
        let nodes = disk_nodes(step, 3.0);
        let values = nodes
            .iter()
            .map(|&(i, j)| {
                let (x, y) = (i as f64 * step, j as f64 * step);
                let vortex = (y - 0.5 * step).atan2(x - 0.5 * step);
                Complex::from_polar(1.0, flat.nominal_phase(x.hypot(y)) + vortex)
            })
            .collect();
        let ap = ApertureField::new(step, step * step, nodes, values).unwrap();
        assert!(matches!(
            deformation_from_phase(&ap, &flat),
            Err(ScenarioError::PhaseUnwrapFailure { residues: 1 })
        ));
    }
}
