//! Fourier representations of the field and of its square amplitude along a
//! single ring of the spectral plane.
//!
//! A ring of radius `k̄` centred anywhere in the `(u, v)` plane carries a field
//! `F(φ) = Σ_{ℓ=-H}^{H} C_ℓ e^{jℓφ}` and a square amplitude
//! `M²(φ) = Σ_{ℓ=-2H}^{2H} D_ℓ e^{jℓφ}` with `D` Hermitian. Both are the
//! restrictions to `|z| = 1` of Laurent polynomials in `z = e^{jφ}`.

use std::f64::consts::PI;

use super::{Complex, RingGeometry};

/// Field coefficients `C_ℓ`, `ℓ = -H..=H`, along one ring.
#[derive(Clone, Debug, PartialEq)]
pub struct RingSignal {
    ring: RingGeometry,
    coefficients: Vec<Complex>,
}

impl RingSignal {
    /// Builds a signal from `2H+1` coefficients ordered `C_{-H} .. C_H`.
    ///
    /// Panics when the coefficient count is even.
    pub fn new(ring: RingGeometry, coefficients: Vec<Complex>) -> Self {
        assert!(
            coefficients.len() % 2 == 1,
            "ring signal needs 2H+1 coefficients, got {}",
            coefficients.len()
        );
        Self { ring, coefficients }
    }

    pub fn zero(ring: RingGeometry, order: usize) -> Self {
        Self::new(ring, vec![Complex::new(0.0, 0.0); 2 * order + 1])
    }

    pub fn ring(&self) -> &RingGeometry {
        &self.ring
    }

    pub fn order(&self) -> usize {
        (self.coefficients.len() - 1) / 2
    }

    pub fn coefficients(&self) -> &[Complex] {
        &self.coefficients
    }

    /// Coefficient `C_ℓ`; zero outside `-H..=H`.
    pub fn coefficient(&self, l: i64) -> Complex {
        let h = self.order() as i64;
        if l.abs() > h {
            Complex::new(0.0, 0.0)
        } else {
            self.coefficients[(l + h) as usize]
        }
    }

    /// `Σ C_ℓ e^{jℓφ}`.
    pub fn evaluate(&self, phi: f64) -> Complex {
        let h = self.order() as i64;
        let step = Complex::from_polar(1.0, phi);
        // Horner in z = e^{jφ}, then undo the z^H shift.
        let mut acc = Complex::new(0.0, 0.0);
        for c in self.coefficients.iter().rev() {
            acc = acc * step + c;
        }
        acc * Complex::from_polar(1.0, -(h as f64) * phi)
    }

    /// Value at a point of the spectral plane lying on the ring.
    pub fn evaluate_at(&self, u: f64, v: f64) -> Complex {
        self.evaluate(self.ring.angle_of(u, v))
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scaled(&self, factor: Complex) -> Self {
        Self {
            ring: self.ring,
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
        }
    }

    /// Pads (or keeps) the coefficient list to order `order`.
    pub fn padded(&self, order: usize) -> Self {
        let h = self.order();
        if order <= h {
            return self.clone();
        }
        let mut coefficients = vec![Complex::new(0.0, 0.0); 2 * order + 1];
        coefficients[order - h..order + h + 1].copy_from_slice(&self.coefficients);
        Self { ring: self.ring, coefficients }
    }

    /// `D_ℓ = Σ_m C_m conj(C_{m-ℓ})`, the coefficients of `|F(φ)|²`.
    pub fn autocorrelate(&self) -> RingPowerData {
        let h = self.order() as i64;
        let mut d = vec![Complex::new(0.0, 0.0); (4 * h + 1) as usize];
        for l in -2 * h..=2 * h {
            let mut acc = Complex::new(0.0, 0.0);
            let lo = (-h).max(l - h);
            let hi = h.min(l + h);
            for m in lo..=hi {
                acc += self.coefficient(m) * self.coefficient(m - l).conj();
            }
            d[(l + 2 * h) as usize] = acc;
        }
        RingPowerData::from_coefficients(self.ring, d)
    }

    /// Conjugated and index-reversed signal, `F(φ) ↦ conj(F(φ))`.
    pub fn conjugate(&self) -> Self {
        Self {
            ring: self.ring,
            coefficients: self.coefficients.iter().rev().map(|c| c.conj()).collect(),
        }
    }
}

/// Hermitian coefficients `D_ℓ`, `ℓ = -2H..=2H`, of the square amplitude along
/// one ring.
#[derive(Clone, Debug, PartialEq)]
pub struct RingPowerData {
    ring: RingGeometry,
    coefficients: Vec<Complex>,
}

impl RingPowerData {
    /// Wraps `4H+1` coefficients ordered `D_{-2H} .. D_{2H}` without checks.
    pub fn from_coefficients(ring: RingGeometry, coefficients: Vec<Complex>) -> Self {
        assert!(
            coefficients.len() % 4 == 1,
            "ring power data needs 4H+1 coefficients, got {}",
            coefficients.len()
        );
        Self { ring, coefficients }
    }

    pub fn ring(&self) -> &RingGeometry {
        &self.ring
    }

    pub fn order(&self) -> usize {
        (self.coefficients.len() - 1) / 4
    }

    pub fn coefficients(&self) -> &[Complex] {
        &self.coefficients
    }

    pub fn coefficient(&self, l: i64) -> Complex {
        let h2 = 2 * self.order() as i64;
        if l.abs() > h2 {
            Complex::new(0.0, 0.0)
        } else {
            self.coefficients[(l + h2) as usize]
        }
    }

    /// `D₀`, the mean square amplitude along the ring.
    pub fn mean_power(&self) -> f64 {
        self.coefficient(0).re
    }

    pub fn evaluate_complex(&self, phi: f64) -> Complex {
        let h2 = 2 * self.order() as i64;
        let step = Complex::from_polar(1.0, phi);
        let mut acc = Complex::new(0.0, 0.0);
        for c in self.coefficients.iter().rev() {
            acc = acc * step + c;
        }
        acc * Complex::from_polar(1.0, -(h2 as f64) * phi)
    }

    /// Square amplitude at angle `φ` (the real part of the Hermitian sum).
    pub fn evaluate(&self, phi: f64) -> f64 {
        self.evaluate_complex(phi).re
    }

    /// Measured amplitude `sqrt(max(M², 0))` at angle `φ`.
    pub fn amplitude(&self, phi: f64) -> f64 {
        self.evaluate(phi).max(0.0).sqrt()
    }

    /// Largest amplitude over `samples` equispaced angles.
    pub fn max_amplitude(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| self.amplitude(2.0 * PI * k as f64 / samples as f64))
            .fold(0.0, f64::max)
    }

    /// Smallest square-amplitude value over `samples` equispaced angles.
    pub fn min_power(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| self.evaluate(2.0 * PI * k as f64 / samples as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|D_{-ℓ} - conj(D_ℓ)|` relative to `max |D|`.
    pub fn hermitian_defect(&self) -> f64 {
        let h2 = 2 * self.order() as i64;
        let scale = self.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        (0..=h2)
            .map(|l| (self.coefficient(-l) - self.coefficient(l).conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    /// Replaces `D_ℓ` by `(D_ℓ + conj(D_{-ℓ}))/2`.
    pub fn symmetrized(&self) -> Self {
        let h2 = 2 * self.order() as i64;
        let coefficients = (-h2..=h2)
            .map(|l| (self.coefficient(l) + self.coefficient(-l).conj()) * 0.5)
            .collect();
        Self { ring: self.ring, coefficients }
    }

    /// Drops trailing orders whose outermost coefficient `|D_{±2H}|` is below
    /// `rel · D₀`. Order 0 data are returned unchanged.
    pub fn trimmed(&self, rel: f64) -> Self {
        let mut h = self.order();
        let d0 = self.mean_power().abs();
        while h > 0 {
            let top = self.coefficient(2 * h as i64).norm();
            let next = self.coefficient(2 * h as i64 - 1).norm();
            if top <= rel * d0 && next <= rel * d0 {
                h -= 1;
            } else {
                break;
            }
        }
        self.with_order(h)
    }

    /// Truncates or zero-pads to order `order`.
    pub fn with_order(&self, order: usize) -> Self {
        let h2 = 2 * order as i64;
        let coefficients = (-h2..=h2).map(|l| self.coefficient(l)).collect();
        Self { ring: self.ring, coefficients }
    }

    /// Adds `offset` to `D₀`.
    pub fn lifted(&self, offset: f64) -> Self {
        let mut out = self.clone();
        let mid = 2 * self.order();
        out.coefficients[mid] += Complex::new(offset, 0.0);
        out
    }

    /// Relative coefficient distance `max_ℓ |D_ℓ - E_ℓ| / max_ℓ |D_ℓ|`.
    pub fn relative_distance(&self, other: &RingPowerData) -> f64 {
        let h2 = 2 * self.order().max(other.order()) as i64;
        let scale = (-h2..=h2)
            .map(|l| self.coefficient(l).norm())
            .fold(0.0, f64::max);
        let diff = (-h2..=h2)
            .map(|l| (self.coefficient(l) - other.coefficient(l)).norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}
