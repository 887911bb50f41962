//! Uniform square grids over the spectral plane and the PRG1 text format.
//!
//! PRG1 layout: a header line `PRG1 <complex|real> <n> <half_extent>` followed
//! by `n²` whitespace-separated records in row-major order starting at
//! `(-u_max, -v_max)`. The row index runs along `u`, the column index along
//! `v`. Complex records are written `re,im`. Values are printed with 17
//! significant digits so a write/read cycle is bit-exact.

use std::io::{BufRead, Write};

use super::{Complex, FieldModelError, Result, SourceSupport, SpectralPoint, VISIBLE_RADIUS};

/// Geometry shared by spectrum and power grids: `n` odd samples per axis over
/// `[-half_extent, half_extent]`, the origin being the centre node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridGeometry {
    n: usize,
    half_extent: f64,
}

impl GridGeometry {
    pub fn new(n: usize, half_extent: f64) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(FieldModelError::InvalidGrid(format!(
                "samples per axis must be odd and at least 3, got {n}"
            )));
        }
        if !half_extent.is_finite() || half_extent < VISIBLE_RADIUS * (1.0 - 1e-12) {
            return Err(FieldModelError::InvalidGrid(format!(
                "half extent {half_extent} does not cover the visible disk"
            )));
        }
        Ok(Self { n, half_extent })
    }

    /// Odd grid with spacing no larger than `max_spacing` covering at least
    /// `min_half_extent`.
    pub fn covering(min_half_extent: f64, max_spacing: f64) -> Result<Self> {
        let half_cells = (min_half_extent / max_spacing).ceil() as usize;
        let n = 2 * half_cells.max(1) + 1;
        Self::new(n, half_cells as f64 * max_spacing)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.spacing()
    }

    pub fn point(&self, i: usize, j: usize) -> SpectralPoint {
        SpectralPoint::new(self.coord(i), self.coord(j))
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn contains(&self, p: &SpectralPoint) -> bool {
        let lim = self.half_extent * (1.0 + 1e-12);
        p.u.abs() <= lim && p.v.abs() <= lim
    }

    /// Linear indices of the nodes inside the visible disk.
    pub fn visible_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.point(i, j).norm() <= VISIBLE_RADIUS {
                    out.push(self.index(i, j));
                }
            }
        }
        out
    }

    /// Whether the spacing is at or below the Nyquist interval of `support`.
    pub fn samples_support(&self, support: &SourceSupport) -> bool {
        self.spacing() <= support.nyquist_spacing() * (1.0 + 1e-12)
    }
}

/// Complex spectrum samples `F(u, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumGrid {
    geometry: GridGeometry,
    samples: Vec<Complex>,
}

impl SpectrumGrid {
    pub fn new(geometry: GridGeometry, samples: Vec<Complex>) -> Result<Self> {
        if samples.len() != geometry.len() {
            return Err(FieldModelError::InvalidGrid(format!(
                "expected {} samples, got {}",
                geometry.len(),
                samples.len()
            )));
        }
        Ok(Self { geometry, samples })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        Self { geometry, samples: vec![Complex::new(0.0, 0.0); geometry.len()] }
    }

    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut(SpectralPoint) -> Complex) -> Self {
        let mut samples = Vec::with_capacity(geometry.len());
        for i in 0..geometry.n() {
            for j in 0..geometry.n() {
                samples.push(f(geometry.point(i, j)));
            }
        }
        Self { geometry, samples }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn samples(&self) -> &[Complex] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex] {
        &mut self.samples
    }

    pub fn at(&self, i: usize, j: usize) -> Complex {
        self.samples[self.geometry.index(i, j)]
    }

    /// Square amplitude `|F|²`.
    pub fn power(&self) -> PowerGrid {
        PowerGrid {
            geometry: self.geometry,
            samples: self.samples.iter().map(|c| c.norm_sqr()).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex) -> Complex) -> Self {
        Self { geometry: self.geometry, samples: self.samples.iter().map(|&c| f(c)).collect() }
    }

    pub fn conj(&self) -> Self {
        self.map(|c| c.conj())
    }

    /// Point reflection `F(u, v) ↦ F(-u, -v)`; exact on the odd centred grid.
    pub fn reflected(&self) -> Self {
        let n = self.geometry.n();
        let mut samples = vec![Complex::new(0.0, 0.0); self.samples.len()];
        for i in 0..n {
            for j in 0..n {
                samples[self.geometry.index(i, j)] = self.at(n - 1 - i, n - 1 - j);
            }
        }
        Self { geometry: self.geometry, samples }
    }
}

/// Nonnegative square-amplitude samples `M²(u, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerGrid {
    geometry: GridGeometry,
    samples: Vec<f64>,
}

impl PowerGrid {
    pub fn new(geometry: GridGeometry, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != geometry.len() {
            return Err(FieldModelError::InvalidGrid(format!(
                "expected {} samples, got {}",
                geometry.len(),
                samples.len()
            )));
        }
        if let Some(bad) = samples.iter().find(|s| !(**s >= 0.0)) {
            return Err(FieldModelError::InvalidGrid(format!(
                "power samples must be nonnegative, found {bad}"
            )));
        }
        Ok(Self { geometry, samples })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.samples[self.geometry.index(i, j)]
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(0.0, f64::max)
    }

    /// Mean square amplitude over the visible-disk nodes.
    pub fn visible_mean(&self) -> f64 {
        let idx = self.geometry.visible_indices();
        idx.iter().map(|&k| self.samples[k]).sum::<f64>() / idx.len() as f64
    }
}

/// A grid read from a PRG1 document.
#[derive(Clone, Debug, PartialEq)]
pub enum Prg1Grid {
    Complex(SpectrumGrid),
    Real(PowerGrid),
}

impl Prg1Grid {
    pub fn geometry(&self) -> &GridGeometry {
        match self {
            Prg1Grid::Complex(g) => g.geometry(),
            Prg1Grid::Real(g) => g.geometry(),
        }
    }
}

impl From<SpectrumGrid> for Prg1Grid {
    fn from(g: SpectrumGrid) -> Self {
        Prg1Grid::Complex(g)
    }
}

impl From<PowerGrid> for Prg1Grid {
    fn from(g: PowerGrid) -> Self {
        Prg1Grid::Real(g)
    }
}

pub fn write_prg1<W: Write>(grid: &Prg1Grid, mut out: W) -> std::io::Result<()> {
    let geometry = grid.geometry();
    let kind = match grid {
        Prg1Grid::Complex(_) => "complex",
        Prg1Grid::Real(_) => "real",
    };
    writeln!(out, "PRG1 {kind} {} {:.16e}", geometry.n(), geometry.half_extent())?;
    match grid {
        Prg1Grid::Complex(g) => {
            for c in g.samples() {
                writeln!(out, "{:.16e},{:.16e}", c.re, c.im)?;
            }
        }
        Prg1Grid::Real(g) => {
            for s in g.samples() {
                writeln!(out, "{s:.16e}")?;
            }
        }
    }
    out.flush()
}

pub fn read_prg1<R: BufRead>(input: R) -> Result<Prg1Grid> {
    let parse_err = |line: usize, message: String| FieldModelError::Parse { line, message };
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty document".into()))?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "PRG1" {
        return Err(parse_err(1, format!("bad header `{header}`")));
    }
    let complex = match fields[1] {
        "complex" => true,
        "real" => false,
        other => return Err(parse_err(1, format!("unknown kind `{other}`"))),
    };
    let n: usize = fields[2]
        .parse()
        .map_err(|e| parse_err(1, format!("bad size `{}`: {e}", fields[2])))?;
    let half_extent: f64 = fields[3]
        .parse()
        .map_err(|e| parse_err(1, format!("bad half extent `{}`: {e}", fields[3])))?;
    let geometry = GridGeometry::new(n, half_extent)?;

    let mut re = Vec::with_capacity(geometry.len());
    let mut im = Vec::with_capacity(if complex { geometry.len() } else { 0 });
    for (idx, line) in lines {
        let line = line?;
        for token in line.split_whitespace() {
            if complex {
                let (a, b) = token
                    .split_once(',')
                    .ok_or_else(|| parse_err(idx + 1, format!("expected `re,im`, got `{token}`")))?;
                re.push(a.parse::<f64>().map_err(|e| parse_err(idx + 1, e.to_string()))?);
                im.push(b.parse::<f64>().map_err(|e| parse_err(idx + 1, e.to_string()))?);
            } else {
                re.push(token.parse::<f64>().map_err(|e| parse_err(idx + 1, e.to_string()))?);
            }
        }
    }
    if re.len() != geometry.len() {
        return Err(parse_err(
            0,
            format!("expected {} records, found {}", geometry.len(), re.len()),
        ));
    }
    if complex {
        let samples = re.into_iter().zip(im).map(|(a, b)| Complex::new(a, b)).collect();
        Ok(Prg1Grid::Complex(SpectrumGrid::new(geometry, samples)?))
    } else {
        Ok(Prg1Grid::Real(PowerGrid::new(geometry, re)?))
    }
}
