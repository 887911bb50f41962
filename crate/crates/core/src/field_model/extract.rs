//! Square-amplitude coefficients along arbitrary rings, read from a refined
//! power grid.

use std::f64::consts::PI;

use super::{Complex, FieldModelError, RefinedGrid, Result, RingGeometry, RingPowerData};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    /// Angular samples per ring; raised to `4H+1` when smaller.
    pub fit_points: usize,
    /// Relative residual above which the order is considered too small.
    pub residual_threshold: f64,
    /// Field-domain noise standard deviation, when the data are noisy.
    pub noise_sigma: Option<f64>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { fit_points: 72, residual_threshold: 1e-3, noise_sigma: None }
    }
}

impl ExtractionConfig {
    pub fn samples_for(&self, order: usize) -> usize {
        self.fit_points.max(4 * order + 1)
    }
}

/// Coefficients extracted along a ring together with the fit quality.
#[derive(Clone, Debug)]
pub struct RingExtraction {
    pub data: RingPowerData,
    /// `‖M² − fit‖ / ‖M²‖` over the angular samples.
    pub residual: f64,
    /// Threshold applied to `residual`.
    pub threshold: f64,
}

/// Samples `M²` at equispaced angles and projects onto the `4H+1` harmonics.
/// Equispaced samples make the least-squares fit an exact discrete projection.
fn fit(power: &RefinedGrid, ring: &RingGeometry, order: usize, samples: usize)
    -> Result<(RingPowerData, f64, Vec<f64>)>
{
    let mut values = Vec::with_capacity(samples);
    for k in 0..samples {
        let phi = 2.0 * PI * k as f64 / samples as f64;
        let p = ring.point_at(phi);
        if !power.base().contains(&p) {
            return Err(FieldModelError::RingOutsideGrid {
                u: ring.center.u,
                v: ring.center.v,
                radius: ring.radius,
            });
        }
        values.push(power.evaluate(p)?.re);
    }
    let h2 = 2 * order as i64;
    let inv = 1.0 / samples as f64;
    let coefficients: Vec<Complex> = (-h2..=h2)
        .map(|l| {
            values
                .iter()
                .enumerate()
                .map(|(k, &m)| {
                    m * Complex::from_polar(inv, -(l as f64) * 2.0 * PI * k as f64 / samples as f64)
                })
                .sum()
        })
        .collect();
    let data = RingPowerData::from_coefficients(*ring, coefficients).symmetrized();

    let norm = values.iter().map(|m| m * m).sum::<f64>().sqrt();
    let resid = values
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let r = m - data.evaluate(2.0 * PI * k as f64 / samples as f64);
            r * r
        })
        .sum::<f64>()
        .sqrt();
    let residual = if norm > 0.0 { resid / norm } else { 0.0 };
    Ok((data, residual, values))
}

fn threshold_for(config: &ExtractionConfig, values: &[f64]) -> f64 {
    match config.noise_sigma {
        Some(sigma) if sigma > 0.0 => {
            let n = values.len() as f64;
            let mean_power = values.iter().map(|m| m.max(0.0)).sum::<f64>() / n;
            let rms_power = (values.iter().map(|m| m * m).sum::<f64>() / n).sqrt();
            if rms_power == 0.0 {
                return f64::INFINITY;
            }
            // |F+n|² - |F|² ≈ 2 Re(conj(F) n) + |n|²
            let floor = (2.0 * sigma * mean_power.sqrt() + sigma * sigma) / rms_power;
            config.residual_threshold.max(10.0 * floor)
        }
        _ => config.residual_threshold,
    }
}

/// Square-amplitude coefficients of order `order` along `ring`.
pub fn extract_ring_power(
    power: &RefinedGrid,
    ring: &RingGeometry,
    order: usize,
    config: &ExtractionConfig,
) -> Result<RingExtraction> {
    let samples = config.samples_for(order);
    let (data, residual, values) = fit(power, ring, order, samples)?;
    if values.iter().all(|&m| m.abs() <= f64::MIN_POSITIVE) {
        return Err(FieldModelError::DegeneratePower);
    }
    let threshold = threshold_for(config, &values);
    if residual > threshold {
        return Err(FieldModelError::FitResidualTooLarge { residual, threshold, order });
    }
    Ok(RingExtraction { data, residual, threshold })
}

/// Smallest order `H ≤ max_order` whose fit residual is within `tol_rel`.
pub fn fit_ring_order(
    power: &RefinedGrid,
    ring: &RingGeometry,
    tol_rel: f64,
    max_order: usize,
    config: &ExtractionConfig,
) -> Result<usize> {
    assert!(tol_rel > 0.0, "tolerance must be positive");
    // One sample set sized for the largest order serves every candidate order.
    let samples = config.samples_for(max_order);
    for order in 0..=max_order {
        let (_, residual, values) = fit(power, ring, order, samples)?;
        if values.iter().all(|&m| m.abs() <= f64::MIN_POSITIVE) {
            return Err(FieldModelError::DegeneratePower);
        }
        if residual <= tol_rel {
            return Ok(order);
        }
    }
    Err(FieldModelError::NoOrderFits { max_order, tol: tol_rel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_model::{GridGeometry, InterpConfig, PowerGrid, SpectralPoint};

    fn constant_grid(c: f64) -> RefinedGrid {
        let g = GridGeometry::new(41, 8.0).unwrap();
        let grid = PowerGrid::new(g, vec![c; g.len()]).unwrap();
        RefinedGrid::from_power(&grid, &InterpConfig::default())
    }

    #[test]
    fn constant_power_gives_only_d0() {
        let refined = constant_grid(2.5);
        let ring = RingGeometry::new(SpectralPoint::new(1.0, 0.5), 0.5).unwrap();
        let ex = extract_ring_power(&refined, &ring, 4, &ExtractionConfig::default()).unwrap();
        assert!((ex.data.coefficient(0).re - 2.5).abs() < 1e-9 * 2.5);
        for l in 1..=8 {
            assert!(ex.data.coefficient(l).norm() <= 1e-9 * 2.5);
        }
    }

    #[test]
    fn sample_count_respects_order() {
        let cfg = ExtractionConfig { fit_points: 3, ..Default::default() };
        assert_eq!(cfg.samples_for(4), 17);
        assert!(ExtractionConfig::default().samples_for(4) >= 17);
    }

    #[test]
    fn constant_power_fits_order_zero() {
        let refined = constant_grid(1.0);
        let ring = RingGeometry::new(SpectralPoint::new(0.0, 0.0), 1.0).unwrap();
        assert_eq!(fit_ring_order(&refined, &ring, 1e-6, 6, &ExtractionConfig::default()).unwrap(), 0);
    }

    #[test]
    fn ring_leaving_the_grid_is_rejected() {
        let refined = constant_grid(1.0);
        let ring = RingGeometry::new(SpectralPoint::new(7.8, 0.0), 0.5).unwrap();
        assert!(matches!(
            extract_ring_power(&refined, &ring, 2, &ExtractionConfig::default()),
            Err(FieldModelError::RingOutsideGrid { .. })
        ));
    }

    #[test]
    fn zero_power_is_degenerate() {
        let refined = constant_grid(0.0);
        let ring = RingGeometry::new(SpectralPoint::new(0.0, 0.0), 1.0).unwrap();
        assert!(matches!(
            extract_ring_power(&refined, &ring, 2, &ExtractionConfig::default()),
            Err(FieldModelError::DegeneratePower)
        ));
        assert!(fit_ring_order(&refined, &ring, 1e-3, 4, &ExtractionConfig::default()).is_err());
    }
}
