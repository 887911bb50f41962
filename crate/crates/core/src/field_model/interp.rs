//! Band-limited refinement of gridded samples: a zero-padded transform brings
//! the grid to `factor`× density, and values off the dense nodes are read by
//! separable Lagrange interpolation over a small stencil.

use rustfft::FftPlanner;

use super::{Complex, FieldModelError, GridGeometry, PowerGrid, Result, SpectralPoint, SpectrumGrid};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct InterpConfig {
    /// Per-axis oversampling of the dense grid.
    pub factor: usize,
    /// Stencil width of the local Lagrange evaluation.
    pub stencil: usize,
}

impl Default for InterpConfig {
    fn default() -> Self {
        Self { factor: 8, stencil: 10 }
    }
}

/// Dense periodic interpolant of a grid. The interpolant is the trigonometric
/// polynomial through the original nodes with period `n·h`.
#[derive(Clone, Debug)]
pub struct RefinedGrid {
    base: GridGeometry,
    factor: usize,
    stencil: usize,
    dense_n: usize,
    dense: Vec<Complex>,
}

impl RefinedGrid {
    pub fn from_spectrum(grid: &SpectrumGrid, config: &InterpConfig) -> Self {
        Self::build(*grid.geometry(), grid.samples().to_vec(), config)
    }

    pub fn from_power(grid: &PowerGrid, config: &InterpConfig) -> Self {
        let samples = grid.samples().iter().map(|&p| Complex::new(p, 0.0)).collect();
        Self::build(*grid.geometry(), samples, config)
    }

    fn build(base: GridGeometry, mut samples: Vec<Complex>, config: &InterpConfig) -> Self {
        let factor = config.factor.max(1);
        let stencil = config.stencil.max(2);
        let n = base.n();
        let m = n * factor;
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(m);

        // Forward transform along both axes (rows first, then columns).
        for row in samples.chunks_mut(n) {
            fwd.process(row);
        }
        transpose_in_place(&mut samples, n);
        for row in samples.chunks_mut(n) {
            fwd.process(row);
        }
        transpose_in_place(&mut samples, n);

        // Zero padding: bin k of the odd-length spectrum goes to k mod m.
        let half = (n - 1) / 2;
        let mut padded = vec![Complex::new(0.0, 0.0); m * m];
        let target = |k: usize| if k <= half { k } else { m - (n - k) };
        for i in 0..n {
            for j in 0..n {
                padded[target(i) * m + target(j)] = samples[i * n + j];
            }
        }
        for row in padded.chunks_mut(m) {
            inv.process(row);
        }
        transpose_in_place(&mut padded, m);
        for row in padded.chunks_mut(m) {
            inv.process(row);
        }
        transpose_in_place(&mut padded, m);
        let scale = 1.0 / (n * n) as f64;
        for v in padded.iter_mut() {
            *v *= scale;
        }

        Self { base, factor, stencil, dense_n: m, dense: padded }
    }

    pub fn base(&self) -> &GridGeometry {
        &self.base
    }

    pub fn dense_spacing(&self) -> f64 {
        self.base.spacing() / self.factor as f64
    }

    /// Dense-grid sample `(i, j)`, indices taken modulo the dense period.
    pub fn dense_at(&self, i: i64, j: i64) -> Complex {
        let m = self.dense_n as i64;
        let ii = i.rem_euclid(m) as usize;
        let jj = j.rem_euclid(m) as usize;
        self.dense[ii * self.dense_n + jj]
    }

    pub fn evaluate(&self, p: SpectralPoint) -> Result<Complex> {
        if !self.base.contains(&p) {
            return Err(FieldModelError::PointOutsideGrid { u: p.u, v: p.v });
        }
        Ok(self.evaluate_unchecked(p))
    }

    fn evaluate_unchecked(&self, p: SpectralPoint) -> Complex {
        let hd = self.dense_spacing();
        let x = (p.u + self.base.half_extent()) / hd;
        let y = (p.v + self.base.half_extent()) / hd;
        let (ix, wx) = lagrange_weights(x, self.stencil);
        let (iy, wy) = lagrange_weights(y, self.stencil);
        let mut acc = Complex::new(0.0, 0.0);
        for (a, wa) in wx.iter().enumerate() {
            if *wa == 0.0 {
                continue;
            }
            let mut row = Complex::new(0.0, 0.0);
            for (b, wb) in wy.iter().enumerate() {
                if *wb == 0.0 {
                    continue;
                }
                row += self.dense_at(ix + a as i64, iy + b as i64) * *wb;
            }
            acc += row * *wa;
        }
        acc
    }
}

/// First stencil index and Lagrange weights for fractional position `x` on a
/// unit-spaced lattice. An exact node returns a single unit weight.
fn lagrange_weights(x: f64, width: usize) -> (i64, Vec<f64>) {
    let nearest = x.round();
    if (x - nearest).abs() < 1e-12 {
        let mut w = vec![0.0; width];
        let first = nearest as i64 - (width as i64 - 1) / 2;
        w[(nearest as i64 - first) as usize] = 1.0;
        return (first, w);
    }
    let first = x.floor() as i64 - (width as i64 / 2 - 1);
    let t = x - first as f64;
    let mut w = vec![0.0; width];
    for (k, wk) in w.iter_mut().enumerate() {
        let mut prod = 1.0;
        for m in 0..width {
            if m != k {
                prod *= (t - m as f64) / (k as f64 - m as f64);
            }
        }
        *wk = prod;
    }
    (first, w)
}

fn transpose_in_place(data: &mut [Complex], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_reproduced() {
        let g = GridGeometry::new(33, 8.0).unwrap();
        let grid = SpectrumGrid::from_fn(g, |p| {
            Complex::new((0.4 * p.u).cos() * (-0.01 * p.v * p.v).exp(), 0.3 * p.v.sin())
        });
        let refined = RefinedGrid::from_spectrum(&grid, &InterpConfig::default());
        for (i, j) in [(0, 0), (3, 17), (16, 16), (32, 5), (20, 31)] {
            let v = refined.evaluate(g.point(i, j)).unwrap();
            assert!((v - grid.at(i, j)).norm() < 1e-10, "node ({i},{j})");
        }
    }

    #[test]
    fn periodic_plane_wave_is_interpolated_between_nodes() {
        // A plane wave whose period divides the grid period is a trigonometric
        // polynomial of the interpolant's family.
        let n = 65;
        let h = 20.0 * std::f64::consts::PI / n as f64;
        let g = GridGeometry::new(n, h * (n - 1) as f64 / 2.0).unwrap();
        let wave = |p: SpectralPoint| Complex::from_polar(1.0, 0.3 * p.u + 0.1 * p.v);
        let grid = SpectrumGrid::from_fn(g, wave);
        let refined = RefinedGrid::from_spectrum(&grid, &InterpConfig::default());
        for p in [
            SpectralPoint::new(0.123, -4.56),
            SpectralPoint::new(7.77, 2.2),
            SpectralPoint::new(-20.0, 15.3),
        ] {
            assert!((refined.evaluate(p).unwrap() - wave(p)).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_grid_stays_zero() {
        let g = GridGeometry::new(21, 7.0).unwrap();
        let refined = RefinedGrid::from_spectrum(&SpectrumGrid::zeros(g), &InterpConfig::default());
        assert_eq!(refined.evaluate(SpectralPoint::new(1.1, -0.3)).unwrap(), Complex::new(0.0, 0.0));
    }

    #[test]
    fn points_outside_are_rejected() {
        let g = GridGeometry::new(21, 7.0).unwrap();
        let refined = RefinedGrid::from_spectrum(&SpectrumGrid::zeros(g), &InterpConfig::default());
        assert!(matches!(
            refined.evaluate(SpectralPoint::new(7.5, 0.0)),
            Err(FieldModelError::PointOutsideGrid { .. })
        ));
    }

    #[test]
    fn lagrange_weights_sum_to_one() {
        for x in [0.3, 10.5, 99.999, 4.0] {
            let (_, w) = lagrange_weights(x, 10);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
