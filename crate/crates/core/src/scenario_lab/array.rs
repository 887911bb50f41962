//! Planar arrays of identical radiators on a rectangular lattice.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::aperture::ApertureField;
use super::farfield::far_field;
use super::{Result, ScenarioError};
use crate::field_model::{
    Complex, GridGeometry, InterpConfig, RefinedGrid, SpectralPoint, SpectrumGrid, VISIBLE_RADIUS,
};
use crate::linalg::NormalEquations;

/// Embedded pattern of a single element.
#[derive(Clone, Debug)]
pub enum ElementPattern {
    Isotropic,
    /// `(1 − r²/(2π)²)^{q/2}` inside the visible disk, zero outside.
    CosineTaper { q: f64 },
    /// Externally computed pattern, interpolated from its grid.
    Imported(Arc<RefinedGrid>),
}

impl ElementPattern {
    pub fn imported(grid: &SpectrumGrid) -> Self {
        Self::Imported(Arc::new(RefinedGrid::from_spectrum(grid, &InterpConfig::default())))
    }

    pub fn evaluate(&self, p: SpectralPoint) -> Complex {
        match self {
            Self::Isotropic => Complex::new(1.0, 0.0),
            Self::CosineTaper { q } => {
                let t = 1.0 - (p.norm() / VISIBLE_RADIUS).powi(2);
                Complex::new(if t > 0.0 { t.powf(0.5 * q) } else { 0.0 }, 0.0)
            }
            Self::Imported(grid) => grid.evaluate(p).unwrap_or(Complex::new(0.0, 0.0)),
        }
    }
}

/// `nx × ny` elements spaced `spacing` wavelengths, centred on the origin.
/// Excitations are row-major with the x index first.
#[derive(Clone, Debug)]
pub struct ArrayScenario {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub excitations: Vec<Complex>,
    pub element_pattern: ElementPattern,
}

impl ArrayScenario {
    pub fn new(
        nx: usize,
        ny: usize,
        spacing: f64,
        excitations: Vec<Complex>,
        element_pattern: ElementPattern,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 || !(spacing > 0.0) {
            return Err(ScenarioError::InvalidParameter(format!(
                "array {nx}x{ny} with spacing {spacing}"
            )));
        }
        if excitations.len() != nx * ny {
            return Err(ScenarioError::InvalidParameter(format!(
                "{} excitations for a {nx}x{ny} array",
                excitations.len()
            )));
        }
        Ok(Self { nx, ny, spacing, excitations, element_pattern })
    }

    /// Random excitations with real and imaginary parts uniform in `[-1, 1]`.
    pub fn random_excitations(nx: usize, ny: usize, seed: u64) -> Vec<Complex> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..nx * ny)
            .map(|_| Complex::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
            .collect()
    }

    /// Lattice indices on the half-spacing lattice: element `m` sits at
    /// `(2m − (n−1))·spacing/2`.
    fn lattice_index(n: usize, m: usize) -> i64 {
        2 * m as i64 - (n as i64 - 1)
    }

    pub fn position(&self, m: usize, n: usize) -> (f64, f64) {
        let h = 0.5 * self.spacing;
        (
            Self::lattice_index(self.nx, m) as f64 * h,
            Self::lattice_index(self.ny, n) as f64 * h,
        )
    }

    /// Radius of the smallest origin-centred disk through all elements.
    pub fn support_radius(&self) -> f64 {
        let (x, y) = self.position(0, 0);
        x.hypot(y)
    }

    /// Elements as point radiators on the half-spacing lattice.
    pub fn as_aperture(&self) -> ApertureField {
        let mut nodes = Vec::with_capacity(self.nx * self.ny);
        for m in 0..self.nx {
            for n in 0..self.ny {
                nodes.push((Self::lattice_index(self.nx, m), Self::lattice_index(self.ny, n)));
            }
        }
        ApertureField::new(0.5 * self.spacing, 1.0, nodes, self.excitations.clone())
            .expect("validated array")
    }

    /// Array factor times element pattern at one point.
    pub fn field_at(&self, p: SpectralPoint) -> Complex {
        let mut af = Complex::new(0.0, 0.0);
        for m in 0..self.nx {
            for n in 0..self.ny {
                let (x, y) = self.position(m, n);
                af += self.excitations[m * self.ny + n] * Complex::from_polar(1.0, p.u * x + p.v * y);
            }
        }
        af * self.element_pattern.evaluate(p)
    }

    /// Sets the excitation of element `(m, n)` so the field vanishes at `p`.
    pub fn with_null_at(mut self, m: usize, n: usize, p: SpectralPoint) -> Result<Self> {
        let k = m * self.ny + n;
        let (x, y) = self.position(m, n);
        let ep = self.element_pattern.evaluate(p);
        let phase = Complex::from_polar(1.0, p.u * x + p.v * y) * ep;
        if phase.norm() == 0.0 {
            return Err(ScenarioError::InvalidParameter(
                "element pattern vanishes at the requested null".into(),
            ));
        }
        let rest = self.field_at(p) - self.excitations[k] * phase;
        self.excitations[k] = -rest / phase;
        Ok(self)
    }
}

pub fn array_far_field(s: &ArrayScenario, geometry: GridGeometry) -> SpectrumGrid {
    let mut f = far_field(&s.as_aperture(), geometry);
    if !matches!(s.element_pattern, ElementPattern::Isotropic) {
        for i in 0..geometry.n() {
            for j in 0..geometry.n() {
                let idx = geometry.index(i, j);
                f.samples_mut()[idx] *= s.element_pattern.evaluate(geometry.point(i, j));
            }
        }
    }
    f
}

/// Least-squares excitations reproducing `spec` over the visible nodes.
pub fn excitations_from_spectrum(spec: &SpectrumGrid, s: &ArrayScenario) -> Result<Vec<Complex>> {
    let g = spec.geometry();
    let count = s.nx * s.ny;
    let mut ne = NormalEquations::new(count);
    let mut row = vec![Complex::new(0.0, 0.0); count];
    for idx in g.visible_indices() {
        let p = g.point(idx / g.n(), idx % g.n());
        let ep = s.element_pattern.evaluate(p);
        if ep.norm() == 0.0 {
            continue;
        }
        for m in 0..s.nx {
            for n in 0..s.ny {
                let (x, y) = s.position(m, n);
                row[m * s.ny + n] = ep * Complex::from_polar(1.0, p.u * x + p.v * y);
            }
        }
        ne.add_row(&row, spec.samples()[idx]);
    }
    let ls = ne.solve()?;
    Ok(ls.solution.iter().copied().collect())
}

/// Excitation matrix as CSV, one array row per line, each cell `re:im`.
pub fn write_excitations_csv<W: Write>(s: &ArrayScenario, mut out: W) -> std::io::Result<()> {
    for m in 0..s.nx {
        let row: Vec<String> = (0..s.ny)
            .map(|n| {
                let e = s.excitations[m * s.ny + n];
                format!("{:.17e}:{:.17e}", e.re, e.im)
            })
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a matrix written by [`write_excitations_csv`]; plain real cells are
/// accepted too. Returns `(nx, ny, values)`.
pub fn read_excitations_csv<R: BufRead>(input: R) -> Result<(usize, usize, Vec<Complex>)> {
    let mut values = Vec::new();
    let mut ny = None;
    let mut nx = 0;
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        match ny {
            None => ny = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(ScenarioError::Csv { line: k + 1, message: format!("expected {w} cells, found {}", cells.len()) })
            }
            _ => {}
        }
        for cell in cells {
            let parse = |t: &str| {
                t.parse::<f64>()
                    .map_err(|e| ScenarioError::Csv { line: k + 1, message: format!("`{t}`: {e}") })
            };
            let v = match cell.split_once(':') {
                Some((re, im)) => Complex::new(parse(re)?, parse(im)?),
                None => Complex::new(parse(cell)?, 0.0),
            };
            values.push(v);
        }
        nx += 1;
    }
    let ny = ny.ok_or(ScenarioError::Csv { line: 0, message: "empty excitation file".into() })?;
    Ok((nx, ny, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario_lab::farfield::periodic_grid;

    fn scenario() -> ArrayScenario {
        ArrayScenario::new(4, 4, 0.707, ArrayScenario::random_excitations(4, 4, 3), ElementPattern::Isotropic)
            .unwrap()
    }

    fn grid_for(s: &ArrayScenario) -> GridGeometry {
        let ap = s.as_aperture();
        periodic_grid(ap.step(), ap.max_index(), 8.0).unwrap()
    }

    #[test]
    fn positions_are_centred() {
        let s = scenario();
        let (x0, _) = s.position(0, 0);
        let (x3, _) = s.position(3, 0);
        assert!((x0 + 1.5 * 0.707).abs() < 1e-15 && (x3 - 1.5 * 0.707).abs() < 1e-15);
        assert!((s.support_radius() - 1.5 * 0.707 * 2f64.sqrt()).abs() < 1e-12);
        assert!(s.excitations.iter().all(|e| e.re.abs() <= 1.0 && e.im.abs() <= 1.0));
    }

    #[test]
    fn far_field_matches_direct_sum() {
        let s = scenario();
        let g = grid_for(&s);
        let f = array_far_field(&s, g);
        for (i, j) in [(0, 0), (5, 9), (g.n() / 2, g.n() / 2)] {
            assert!((f.at(i, j) - s.field_at(g.point(i, j))).norm() < 1e-11);
        }
    }

    #[test]
    fn excitations_round_trip() {
        for pattern in [ElementPattern::Isotropic, ElementPattern::CosineTaper { q: 1.0 }] {
            let mut s = scenario();
            s.element_pattern = pattern;
            let f = array_far_field(&s, grid_for(&s));
            let e = excitations_from_spectrum(&f, &s).unwrap();
            let err: f64 = e.iter().zip(&s.excitations).map(|(a, b)| (a - b).norm_sqr()).sum();
            let norm: f64 = s.excitations.iter().map(|b| b.norm_sqr()).sum();
            assert!((err / norm).sqrt() < 1e-6);
        }
        let s = scenario();
        let zero = SpectrumGrid::zeros(grid_for(&s));
        assert!(excitations_from_spectrum(&zero, &s).unwrap().iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn engineered_null() {
        let p = SpectralPoint::new(-0.4, 0.7);
        let s = ArrayScenario::new(3, 3, 0.5, ArrayScenario::random_excitations(3, 3, 1), ElementPattern::Isotropic)
            .unwrap()
            .with_null_at(1, 1, p)
            .unwrap();
        assert!(s.field_at(p).norm() < 1e-14);
    }

    #[test]
    fn csv_round_trip() {
        let s = scenario();
        let mut buf = Vec::new();
        write_excitations_csv(&s, &mut buf).unwrap();
        let (nx, ny, values) = read_excitations_csv(buf.as_slice()).unwrap();
        assert_eq!((nx, ny), (4, 4));
        assert_eq!(values, s.excitations);
        assert!(matches!(
            read_excitations_csv("1,2\n3\n".as_bytes()),
            Err(ScenarioError::Csv { line: 2, .. })
        ));
    }
}
