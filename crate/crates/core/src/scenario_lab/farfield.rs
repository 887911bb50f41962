//! Forward transform from lattice apertures to spectrum grids.

use nalgebra::DMatrix;

use super::aperture::ApertureField;
use super::Result;
use crate::field_model::{Complex, GridGeometry, SpectrumGrid};

/// Smallest odd grid spanning whole periods `2πM/step` of a lattice spectrum
/// and reaching at least `min_half_extent`.
///
/// `n ≥ 4·M·max_index + 1` keeps both the spectrum and its square amplitude
/// exactly representable by the periodic interpolant of the grid.
pub fn periodic_grid(step: f64, max_index: i64, min_half_extent: f64) -> Result<GridGeometry> {
    let k = max_index.max(1) as usize;
    let mut periods = 1usize;
    loop {
        let period = 2.0 * std::f64::consts::PI * periods as f64 / step;
        let mut n = 4 * periods * k + 1;
        // grow n until the half extent (n-1)/2·h reaches the target, if the
        // period allows it at all
        while (n - 1) as f64 / (2 * n) as f64 * period < min_half_extent && n < 64 * periods * k + 1 {
            n += 2;
        }
        let half = (n - 1) as f64 / (2 * n) as f64 * period;
        if half >= min_half_extent {
            return Ok(GridGeometry::new(n, half)?);
        }
        periods += 1;
    }
}

/// `F(u, v) = w Σ f_ij e^{j(u x_i + v y_j)}` on every node of `geometry`.
pub fn far_field(aperture: &ApertureField, geometry: GridGeometry) -> SpectrumGrid {
    let m = aperture.max_index();
    let span = (2 * m + 1) as usize;
    let mut lattice = DMatrix::<Complex>::zeros(span, span);
    for (&(i, j), v) in aperture.nodes().iter().zip(aperture.values()) {
        lattice[((i + m) as usize, (j + m) as usize)] += *v;
    }
    let n = geometry.n();
    let step = aperture.step();
    let e = DMatrix::<Complex>::from_fn(n, span, |p, i| {
        Complex::from_polar(1.0, geometry.coord(p) * (i as i64 - m) as f64 * step)
    });
    let f = &e * lattice * e.transpose() * Complex::new(aperture.weight(), 0.0);
    let mut out = SpectrumGrid::zeros(geometry);
    for p in 0..n {
        for q in 0..n {
            out.samples_mut()[geometry.index(p, q)] = f[(p, q)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_model::{InterpConfig, RefinedGrid, SourceSupport, SpectralPoint};
    use crate::scenario_lab::aperture::{aperture_from_spectrum, disk_nodes};
    use std::f64::consts::PI;

    fn direct(ap: &ApertureField, u: f64, v: f64) -> Complex {
        (0..ap.nodes().len())
            .map(|k| {
                let (x, y) = ap.position(k);
                ap.values()[k] * Complex::from_polar(ap.weight(), u * x + v * y)
            })
            .sum()
    }

    fn sample_aperture() -> ApertureField {
        let step = 0.5;
        let nodes = disk_nodes(step, 2.0);
        let values = nodes
            .iter()
            .map(|&(i, j)| Complex::new(1.0 + 0.1 * i as f64, 0.2 * j as f64 - 0.05 * (i * j) as f64))
            .collect();
        ApertureField::new(step, step * step, nodes, values).unwrap()
    }

    #[test]
    fn grid_spans_whole_periods() {
        let g = periodic_grid(0.375, 8, 7.4).unwrap();
        assert_eq!(g.n() % 2, 1);
        assert!(g.n() >= 33);
        assert!(g.half_extent() >= 7.4);
        let period = g.spacing() * g.n() as f64;
        let ratio = period / (2.0 * PI / 0.375);
        assert!((ratio - ratio.round()).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_summation() {
        let ap = sample_aperture();
        let g = periodic_grid(ap.step(), ap.max_index(), 2.0 * PI).unwrap();
        let f = far_field(&ap, g);
        for (i, j) in [(0, 0), (3, 11), (g.n() - 1, g.n() / 2)] {
            let p = g.point(i, j);
            assert!((f.at(i, j) - direct(&ap, p.u, p.v)).norm() < 1e-11);
        }
    }

    #[test]
    fn single_isotropic_element() {
        let ap = ApertureField::new(0.5, 1.0, vec![(0, 0)], vec![Complex::new(1.0, 0.0)]).unwrap();
        let g = periodic_grid(0.5, 1, 2.0 * PI).unwrap();
        let f = far_field(&ap, g);
        assert!(f.samples().iter().all(|v| (v - Complex::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn uniform_disk_first_null() {
        // Airy pattern of a uniform disk of radius R: first zero at u = 3.8317/R.
        let step = 0.05;
        let r = 2.0;
        let nodes = disk_nodes(step, r);
        let values = vec![Complex::new(1.0, 0.0); nodes.len()];
        let ap = ApertureField::new(step, step * step, nodes, values).unwrap();
        let null = 3.8317 / r;
        let cut: Vec<f64> = (0..400).map(|k| direct(&ap, 1.0 + k as f64 * 0.0025, 0.0).norm()).collect();
        let kmin = (0..cut.len()).min_by(|&a, &b| cut[a].partial_cmp(&cut[b]).unwrap()).unwrap();
        let found = 1.0 + kmin as f64 * 0.0025;
        assert!((found - null).abs() < 0.02, "null at {found}, expected {null}");
        assert!(cut[kmin] < 0.01 * direct(&ap, 0.0, 0.0).norm());
    }

    #[test]
    fn inverse_transform_round_trip() {
        let ap = sample_aperture();
        let g = periodic_grid(ap.step(), ap.max_index(), 2.0 * PI).unwrap();
        let f = far_field(&ap, g);
        let support = SourceSupport::new(2.0).unwrap();
        let back = aperture_from_spectrum(&f, &support, ap.step(), ap.weight()).unwrap();
        assert_eq!(back.nodes(), ap.nodes());
        for (a, b) in back.values().iter().zip(ap.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        // Parseval over one period P: Σ|F|² h² = P² w · w Σ|f|²
        let h = g.spacing();
        let period = h * g.n() as f64;
        let spectral: f64 = f.samples().iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h;
        let aperture = period * period * ap.weight() * ap.power();
        assert!((spectral - aperture).abs() < 1e-9 * aperture);
    }

    #[test]
    fn periodic_interpolation_is_exact() {
        let ap = sample_aperture();
        let g = periodic_grid(ap.step(), ap.max_index(), 2.0 * PI).unwrap();
        let f = far_field(&ap, g);
        let refined = RefinedGrid::from_spectrum(&f, &InterpConfig::default());
        let power = RefinedGrid::from_power(&f.power(), &InterpConfig::default());
        for p in [SpectralPoint::new(0.31, -2.7), SpectralPoint::new(-5.55, 4.02)] {
            let exact = direct(&ap, p.u, p.v);
            assert!((refined.evaluate(p).unwrap() - exact).norm() < 1e-6 * exact.norm().max(1.0));
            let pw = power.evaluate(p).unwrap().re;
            assert!((pw - exact.norm_sqr()).abs() < 1e-6 * exact.norm_sqr().max(1.0));
        }
    }
}
