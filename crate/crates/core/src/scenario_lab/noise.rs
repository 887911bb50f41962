//! Complex white Gaussian noise on field samples.
//!
//! SNR convention: mean `|F|²` over the visible nodes divided by the noise
//! variance `E|n|²`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Result, ScenarioError};
use crate::field_model::{Complex, PowerGrid, SpectrumGrid};

fn check_snr(snr_db: f64) -> Result<()> {
    if snr_db.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::InvalidParameter(format!("SNR must be finite, got {snr_db}")))
    }
}

fn visible_mean_power(field: &SpectrumGrid) -> f64 {
    let idx = field.geometry().visible_indices();
    idx.iter().map(|&i| field.samples()[i].norm_sqr()).sum::<f64>() / idx.len().max(1) as f64
}

/// Noise standard deviation `σ` (with `E|n|² = σ²`) for a clean field.
pub fn noise_sigma(field: &SpectrumGrid, snr_db: f64) -> f64 {
    (visible_mean_power(field) / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// `σ` estimated from noisy square-amplitude data, using
/// `E[M²] = mean |F|² + σ²`.
pub fn noise_sigma_from_power(power: &PowerGrid, snr_db: f64) -> f64 {
    (power.visible_mean() / (10f64.powf(snr_db / 10.0) + 1.0)).sqrt()
}

/// Field samples plus complex white noise at the given SNR.
pub fn noisy_field(field: &SpectrumGrid, snr_db: f64, seed: u64) -> Result<SpectrumGrid> {
    check_snr(snr_db)?;
    let sigma = noise_sigma(field, snr_db);
    let normal = Normal::new(0.0, sigma / 2f64.sqrt()).expect("finite sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = field.clone();
    for f in out.samples_mut() {
        *f += Complex::new(normal.sample(&mut rng), normal.sample(&mut rng));
    }
    Ok(out)
}

/// Square amplitude of the noisy field.
pub fn add_noise(field: &SpectrumGrid, snr_db: f64, seed: u64) -> Result<PowerGrid> {
    Ok(noisy_field(field, snr_db, seed)?.power())
}

/// Noise on a power grid: the amplitude `sqrt(M²)` is treated as a real
/// field, corrupted and squared again.
pub fn add_noise_to_power(power: &PowerGrid, snr_db: f64, seed: u64) -> Result<PowerGrid> {
    let field = SpectrumGrid::new(
        *power.geometry(),
        power.samples().iter().map(|&p| Complex::new(p.sqrt(), 0.0)).collect(),
    )?;
    add_noise(&field, snr_db, seed)
}

/// Realized SNR of `noisy` with respect to `clean`, in dB.
pub fn empirical_snr_db(clean: &SpectrumGrid, noisy: &SpectrumGrid) -> f64 {
    let idx = clean.geometry().visible_indices();
    let signal: f64 = idx.iter().map(|&i| clean.samples()[i].norm_sqr()).sum();
    let noise: f64 = idx.iter().map(|&i| (noisy.samples()[i] - clean.samples()[i]).norm_sqr()).sum();
    10.0 * (signal / noise).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_model::GridGeometry;

    fn field(n: usize) -> SpectrumGrid {
        let g = GridGeometry::new(n, 2.0 * std::f64::consts::PI).unwrap();
        SpectrumGrid::from_fn(g, |p| Complex::from_polar(1.0 + 0.3 * (0.7 * p.u).cos(), 0.2 * p.v))
    }

    #[test]
    fn huge_snr_leaves_data_unchanged() {
        let f = field(41);
        let noisy = add_noise(&f, 200.0, 5).unwrap();
        for (a, b) in noisy.samples().iter().zip(f.power().samples()) {
            assert!((a - b).abs() <= 1e-8 * b);
        }
    }

    #[test]
    fn realized_snr_is_close_to_target() {
        let f = field(161);
        for seed in 0..3 {
            let noisy = noisy_field(&f, 25.0, seed).unwrap();
            let snr = empirical_snr_db(&f, &noisy);
            assert!((snr - 25.0).abs() <= 1.0, "realized {snr} dB");
        }
    }

    #[test]
    fn fixed_seed_is_bit_reproducible() {
        let f = field(33);
        assert_eq!(add_noise(&f, 25.0, 9).unwrap(), add_noise(&f, 25.0, 9).unwrap());
        assert_ne!(add_noise(&f, 25.0, 9).unwrap(), add_noise(&f, 25.0, 10).unwrap());
        assert!(add_noise(&f, f64::NAN, 1).is_err());
    }

    #[test]
    fn sigma_estimate_from_noisy_power() {
        let f = field(161);
        let noisy = add_noise(&f, 25.0, 4).unwrap();
        let est = noise_sigma_from_power(&noisy, 25.0);
        let truth = noise_sigma(&f, 25.0);
        assert!((est / truth - 1.0).abs() < 0.02);
    }
}
