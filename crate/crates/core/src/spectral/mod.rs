//! One-dimensional phase retrieval along a ring by spectral factorization.
//!
//! The square amplitude `Σ D_ℓ z^ℓ` is turned into the degree-`4H` polynomial
//! `Σ D_ℓ z^{ℓ+2H}`. Its roots come in conjugate-reciprocal pairs
//! `(z, 1/conj(z))`; picking one root of each pair gives a field polynomial
//! with the same modulus on `|z| = 1`. Enumerating the picks yields every
//! field compatible with the ring data up to a constant phase.

mod roots;

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::field_model::{Complex, RingPowerData, RingSignal};

pub use roots::{expand_roots, polynomial_roots};

/// Distance from the unit circle below which a root is treated as lying on it.
pub const UNIT_CIRCLE_EPS: f64 = 1e-7;

/// Outer coefficients below this fraction of `D₀` are dropped before
/// factorization.
pub const TRIM_REL: f64 = 1e-13;

#[derive(Debug, thiserror::Error)]
pub enum FactorizationError {
    #[error("ring data of order 0 have no zeros to factor")]
    ZeroOrder,
    #[error("ring data are not Hermitian (relative defect {0:.3e})")]
    NonHermitianInput(f64),
    #[error("{count} root(s) lie on the unit circle")]
    RootsOnUnitCircle { count: usize },
    #[error("root finding failed to converge")]
    RootFinding,
    #[error("{count} candidates exceed the cap of {cap}")]
    TooManyCandidates { count: u128, cap: usize },
}

/// How many zero-flip selections to enumerate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateMode {
    /// Every selection, `2^{2H}` candidates.
    Full,
    /// Only selections with half of the free roots inside the unit circle,
    /// `C(2H, H)` candidates.
    #[default]
    Balanced,
}

impl std::str::FromStr for CandidateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Self::Full),
            "balanced" => Ok(Self::Balanced),
            other => Err(format!("unknown candidate mode `{other}` (expected balanced|full)")),
        }
    }
}

/// A conjugate-reciprocal root pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroPair {
    /// Root with `|z| ≤ 1`.
    pub inner: Complex,
    /// Root with `|z| ≥ 1`, ideally `1/conj(inner)`.
    pub outer: Complex,
    /// The pair collapsed onto the unit circle; no flip freedom.
    pub on_unit_circle: bool,
}

/// Roots of a ring's square-amplitude polynomial, grouped in pairs.
#[derive(Clone, Debug)]
pub struct ZeroPairing {
    pairs: Vec<ZeroPair>,
    leading: Complex,
    order: usize,
    lift: f64,
}

impl ZeroPairing {
    pub fn pairs(&self) -> &[ZeroPair] {
        &self.pairs
    }

    /// Field order `H` after trimming negligible outer coefficients.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Leading coefficient `D_{2H}` of the factored polynomial.
    pub fn leading(&self) -> Complex {
        self.leading
    }

    /// Positive real scale `|D_{2H}|`.
    pub fn scale(&self) -> f64 {
        self.leading.norm()
    }

    /// Offset added to `D₀` to restore positivity of noisy data (0 if none).
    pub fn lift(&self) -> f64 {
        self.lift
    }

    pub fn unit_circle_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| p.on_unit_circle).count()
    }

    /// Ascending coefficients `leading · Π (z - r)` over the finite roots,
    /// padded to `4H+1` terms.
    pub fn reconstruct(&self) -> Vec<Complex> {
        let roots: Vec<Complex> = self
            .pairs
            .iter()
            .flat_map(|p| [p.inner, p.outer])
            .filter(|z| z.norm().is_finite())
            .collect();
        let mut out: Vec<Complex> =
            expand_roots(&roots).into_iter().map(|c| c * self.leading).collect();
        out.resize(4 * self.order + 1, Complex::new(0.0, 0.0));
        out
    }
}

/// A field along the ring consistent with the square-amplitude data.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSolution {
    pub signal: RingSignal,
    /// Bit `i` set: the outer root of pair `i` was selected.
    pub flip_mask: u64,
}

/// Factors the square-amplitude polynomial of `power` into root pairs.
///
/// Roots within [`UNIT_CIRCLE_EPS`] of the unit circle are snapped onto it
/// and their pair is marked as forced; this is reported through
/// [`ZeroPairing::unit_circle_pairs`] rather than as an error. Use
/// [`factorize_strict`] to reject such data.
pub fn factorize(power: &RingPowerData) -> Result<ZeroPairing, FactorizationError> {
    let defect = power.hermitian_defect();
    if defect > 1e-10 {
        return Err(FactorizationError::NonHermitianInput(defect));
    }
    let power = power.symmetrized().trimmed(TRIM_REL);
    let order = power.order();
    if order == 0 {
        return Err(FactorizationError::ZeroOrder);
    }

    // Noise can push the fitted square amplitude below zero; lift D₀ so the
    // polynomial stays nonnegative on the unit circle.
    let d0 = power.mean_power();
    let min = power.min_power(64 * order.max(4));
    let lift = if min < -1e-12 * d0 { -min * 1.001 + 1e-12 * d0 } else { 0.0 };
    let power = if lift > 0.0 { power.lifted(lift) } else { power };

    // Vanishing outer coefficients mean roots at zero and at infinity; they
    // pair with each other.
    let mut coeffs: Vec<Complex> = power.coefficients().to_vec();
    let negligible = TRIM_REL * power.mean_power().abs();
    let last = coeffs.len() - 1;
    let mut top = last;
    let mut degenerate = 0;
    while top > 0 && coeffs[top].norm() <= negligible {
        coeffs[last - top] = Complex::new(0.0, 0.0);
        top -= 1;
        degenerate += 1;
    }
    let leading = coeffs[top];
    let roots = polynomial_roots(&coeffs[..=top]).ok_or(FactorizationError::RootFinding)?;
    let mut finite: Vec<Complex> = roots;
    let mut pairs = Vec::with_capacity(2 * order);
    for _ in 0..degenerate {
        let k = finite
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(k, _)| k)
            .expect("a zero root per missing leading coefficient");
        finite.swap_remove(k);
        pairs.push(ZeroPair {
            inner: Complex::new(0.0, 0.0),
            outer: Complex::new(f64::INFINITY, 0.0),
            on_unit_circle: false,
        });
    }
    pairs.extend(pair_roots(&finite));
    Ok(ZeroPairing { pairs, leading, order, lift })
}

/// As [`factorize`], but fails when any root lies on the unit circle.
pub fn factorize_strict(power: &RingPowerData) -> Result<ZeroPairing, FactorizationError> {
    let pairing = factorize(power)?;
    match pairing.unit_circle_pairs() {
        0 => Ok(pairing),
        count => Err(FactorizationError::RootsOnUnitCircle { count }),
    }
}

fn pair_roots(roots: &[Complex]) -> Vec<ZeroPair> {
    let mut sorted: Vec<Complex> = roots.to_vec();
    sorted.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(std::cmp::Ordering::Equal));
    let half = sorted.len() / 2;
    let inner: Vec<Complex> = sorted[..half].to_vec();
    let mut outer: Vec<Option<Complex>> = sorted[half..].iter().copied().map(Some).collect();

    // Greedy matching: the globally closest (inner, mirrored outer) first.
    let mut candidates = Vec::with_capacity(half * half);
    for (i, z) in inner.iter().enumerate() {
        let mirror = mirror_root(*z);
        for (k, w) in outer.iter().enumerate() {
            let w = w.expect("all outer roots available");
            let d = (w - mirror).norm() / (1.0 + w.norm());
            candidates.push((d, i, k));
        }
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut partner = vec![None; half];
    for (_, i, k) in candidates {
        if partner[i].is_none() {
            if let Some(w) = outer[k].take() {
                partner[i] = Some(w);
            }
        }
    }

    inner
        .into_iter()
        .zip(partner)
        .map(|(z, w)| {
            let w = w.expect("every inner root matched");
            let near = (z.norm() - 1.0).abs() < UNIT_CIRCLE_EPS.sqrt()
                && (w.norm() - 1.0).abs() < UNIT_CIRCLE_EPS.sqrt()
                && ((z.norm() * w.norm()).ln().abs() < 2.0 * UNIT_CIRCLE_EPS.sqrt());
            let on_circle = (z.norm() - 1.0).abs() <= UNIT_CIRCLE_EPS
                || (w.norm() - 1.0).abs() <= UNIT_CIRCLE_EPS
                || near && (z.norm() - 1.0).abs() <= 10.0 * UNIT_CIRCLE_EPS;
            if on_circle {
                // A double root on the circle: snap the pair to its mean angle.
                let theta = (z / z.norm() + w / w.norm()).arg();
                let s = Complex::from_polar(1.0, theta);
                ZeroPair { inner: s, outer: s, on_unit_circle: true }
            } else {
                ZeroPair { inner: z, outer: w, on_unit_circle: false }
            }
        })
        .collect()
}

/// `1 / conj(z)`.
pub fn mirror_root(z: Complex) -> Complex {
    if z.norm() == 0.0 {
        Complex::new(f64::INFINITY, 0.0)
    } else {
        Complex::new(1.0, 0.0) / z.conj()
    }
}

/// Number of candidates `mode` would produce for `pairing`.
pub fn candidate_count(pairing: &ZeroPairing, mode: CandidateMode) -> u128 {
    let free = pairing.pairs.len() - pairing.unit_circle_pairs();
    match mode {
        CandidateMode::Full => 1u128 << free,
        CandidateMode::Balanced => balanced_inside_counts(free)
            .into_iter()
            .map(|k| binomial(free as u64, k as u64))
            .sum(),
    }
}

fn balanced_inside_counts(free: usize) -> Vec<usize> {
    if free % 2 == 0 {
        vec![free / 2]
    } else {
        vec![free / 2, free / 2 + 1]
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Expands every admissible zero-flip selection into a ring signal.
///
/// Candidates are scaled so their `D₀` matches the data and rotated so their
/// value at `φ = 0` is real and nonnegative. The list is sorted by
/// `flip_mask`.
pub fn enumerate_candidates(
    pairing: &ZeroPairing,
    power: &RingPowerData,
    mode: CandidateMode,
    cap: usize,
) -> Result<Vec<CandidateSolution>, FactorizationError> {
    let count = candidate_count(pairing, mode);
    if count > cap as u128 {
        return Err(FactorizationError::TooManyCandidates { count, cap });
    }
    let free: Vec<usize> = pairing
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.on_unit_circle)
        .map(|(i, _)| i)
        .collect();
    let allowed = balanced_inside_counts(free.len());
    let masks: Vec<u64> = (0u64..(1u64 << free.len()))
        .filter(|m| match mode {
            CandidateMode::Full => true,
            CandidateMode::Balanced => {
                let outside = m.count_ones() as usize;
                allowed.contains(&(free.len() - outside))
            }
        })
        .map(|m| {
            free.iter()
                .enumerate()
                .filter(|(bit, _)| m & (1 << bit) != 0)
                .fold(0u64, |acc, (_, &pair)| acc | (1 << pair))
        })
        .collect();

    let target_d0 = power.mean_power() + pairing.lift;
    let ring = *power.ring();
    let mut out: Vec<CandidateSolution> = masks
        .par_iter()
        .map(|&mask| {
            let roots: Vec<Complex> = pairing
                .pairs
                .iter()
                .enumerate()
                .map(|(i, p)| if mask & (1 << i) != 0 { p.outer } else { p.inner })
                .filter(|z| z.norm().is_finite())
                .collect();
            let mut monic = expand_roots(&roots);
            monic.resize(2 * pairing.order + 1, Complex::new(0.0, 0.0));
            let a0: f64 = monic.iter().map(|c| c.norm_sqr()).sum();
            let k = if a0 > 0.0 { (target_d0.max(0.0) / a0).sqrt() } else { 0.0 };
            let signal = RingSignal::new(ring, monic.iter().map(|c| c * k).collect());
            CandidateSolution { signal: canonical_phase(signal), flip_mask: mask }
        })
        .collect();
    out.sort_by_key(|c| c.flip_mask);
    Ok(out)
}

fn canonical_phase(signal: RingSignal) -> RingSignal {
    let at0 = signal.evaluate(0.0);
    let scale = signal.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if at0.norm() <= 1e-12 * scale {
        return signal;
    }
    signal.scaled(Complex::from_polar(1.0, -at0.arg()))
}

/// The candidate equal to `original` up to a unit-modulus constant, if any.
pub fn exact_recovery_check<'a>(
    original: &RingSignal,
    candidates: &'a [CandidateSolution],
    tol: f64,
) -> Option<&'a CandidateSolution> {
    candidates
        .iter()
        .map(|c| (phase_aligned_distance(original, &c.signal), c))
        .filter(|(d, _)| *d <= tol)
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(_, c)| c)
}

/// `min_θ ‖a − e^{jθ} b‖ / ‖a‖` over the coefficient sequences.
pub fn phase_aligned_distance(a: &RingSignal, b: &RingSignal) -> f64 {
    let h = a.order().max(b.order());
    let a = a.padded(h);
    let b = b.padded(h);
    let inner: Complex = a
        .coefficients()
        .iter()
        .zip(b.coefficients())
        .map(|(x, y)| x * y.conj())
        .sum();
    let rot = if inner.norm() > 0.0 { inner / inner.norm() } else { Complex::new(1.0, 0.0) };
    let norm_a: f64 = a.coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let diff: f64 = a
        .coefficients()
        .iter()
        .zip(b.coefficients())
        .map(|(x, y)| (x - rot * y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if norm_a == 0.0 {
        diff
    } else {
        diff / norm_a
    }
}

/// Value of `signal` at `φ` sampled on `n` equispaced angles.
pub fn sample_ring(signal: &RingSignal, n: usize) -> Vec<Complex> {
    (0..n).map(|k| signal.evaluate(2.0 * PI * k as f64 / n as f64)).collect()
}
