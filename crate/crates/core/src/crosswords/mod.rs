//! Crosswords pruning: per-ring candidate fields are chained through the
//! honeycomb, keeping only tuples whose phases agree at ring intersections.

mod assemble;
mod search;

pub use assemble::{assemble_spectrum, fit_model, AssemblyBasis, BandLimitedModel};
pub use search::{
    extend, prepare_ring_data, prepare_rings, run, run_with, search, trigger, PreparedRing, PreparedRings, RunOptions,
};

use serde::{Deserialize, Serialize};

use crate::field_model::{Complex, ExtractionConfig, FieldModelError, InterpConfig, RingSignal, SpectralPoint, SpectrumGrid};
use crate::linalg::LeastSquaresError;
use crate::ring_system::{RingSystem, RingSystemError};
use crate::spectral::{CandidateMode, FactorizationError};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    RingSystem(#[from] RingSystemError),
    #[error("ring {ring}: {source}")]
    Extraction { ring: usize, source: FieldModelError },
    #[error("ring {ring}: {source}")]
    Factorization { ring: usize, source: FactorizationError },
    #[error("ring {ring}: no non-null reference point")]
    NullReference { ring: usize },
    #[error("phase of a zero value is undefined")]
    NullValue,
    #[error("ring {ring} (step {step}) admitted no candidate; frontier trace {trace:?}")]
    EmptyFrontier { ring: usize, step: usize, trace: Vec<usize> },
    #[error("ring {ring}: frontier of {size} exceeds the cap of {cap}")]
    FrontierOverflow { ring: usize, size: usize, cap: usize },
    #[error("spectrum assembly: {0}")]
    Assembly(#[from] LeastSquaresError),
    #[error("both solutions have the same phase sign at ({u}, {v})")]
    UndecidablePoint { u: f64, v: f64 },
    #[error("conjugate resolution needs exactly 2 solutions, found {count}")]
    NotAPair { count: usize },
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// Ring order rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRule {
    Fixed(usize),
    /// Smallest order whose fit residual is within `tol`, at most `max`.
    Fit { tol: f64, max: usize },
}

impl Default for OrderRule {
    fn default() -> Self {
        Self::Fixed(4)
    }
}

/// Known sign of `Im(F(point)·conj(F(P₀)))`, which tells a solution from its
/// conjugate partner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateBit {
    pub point: SpectralPoint,
    /// `+1` or `-1`.
    pub sign: i8,
}

impl std::str::FromStr for ConjugateBit {
    type Err = String;

    /// `u,v,sign`, with sign `+`, `-`, `1` or `-1`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [u, v, sign] = parts.as_slice() else {
            return Err(format!("expected `u,v,sign`, got `{s}`"));
        };
        let u: f64 = u.parse().map_err(|e| format!("u: {e}"))?;
        let v: f64 = v.parse().map_err(|e| format!("v: {e}"))?;
        let sign = match *sign {
            "+" | "1" | "+1" => 1,
            "-" | "-1" => -1,
            other => return Err(format!("sign must be + or -, got `{other}`")),
        };
        Ok(Self { point: SpectralPoint::new(u, v), sign })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Misfit acceptance threshold, degrees.
    pub phase_tol_deg: f64,
    /// Points whose amplitude is below this fraction of the ring maximum
    /// are skipped.
    pub null_threshold_rel: f64,
    pub frontier_cap: usize,
    pub candidate_mode: CandidateMode,
    /// In balanced mode, retry a ring with every zero selection when no
    /// balanced candidate is admitted.
    pub full_fallback: bool,
    /// Upper bound on candidates per ring.
    pub candidate_cap: usize,
    /// Branches whose retrieved phases all agree within this fraction of
    /// the tolerance are merged, keeping the lower score. Zero disables.
    pub merge_fraction: f64,
    /// Re-estimate each accepted ring's constant phase from every known
    /// non-null point instead of the reference alone.
    pub refine_rotation: bool,
    /// Field-domain noise standard deviation of the data.
    pub noise_sigma: Option<f64>,
    /// Per-point tolerance is widened to `noise_kappa·σ/|F|` radians when
    /// that exceeds the base tolerance.
    pub noise_kappa: f64,
    pub order: OrderRule,
    pub conjugate_bit: Option<ConjugateBit>,
    pub extraction: ExtractionConfig,
    pub interpolation: InterpConfig,
    /// Samples per accepted ring used by the final fit; at least `4H+1`.
    pub assembly_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            phase_tol_deg: 2.0,
            null_threshold_rel: 1e-3,
            frontier_cap: 100_000,
            candidate_mode: CandidateMode::Balanced,
            full_fallback: true,
            candidate_cap: 1 << 16,
            merge_fraction: 0.5,
            refine_rotation: true,
            noise_sigma: None,
            noise_kappa: 0.0,
            order: OrderRule::default(),
            conjugate_bit: None,
            // fixed H = 4 truncates weak outer rings at about 1e-3
            extraction: ExtractionConfig { residual_threshold: 1e-2, ..ExtractionConfig::default() },
            interpolation: InterpConfig::default(),
            assembly_samples: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if !(self.phase_tol_deg > 0.0) {
            return bad(format!("phase_tol_deg must be positive, got {}", self.phase_tol_deg));
        }
        if !(self.null_threshold_rel > 0.0 && self.null_threshold_rel < 1.0) {
            return bad(format!("null_threshold_rel must lie in (0, 1), got {}", self.null_threshold_rel));
        }
        if self.frontier_cap == 0 || self.candidate_cap == 0 {
            return bad("caps must be positive".into());
        }
        if !(0.0..1.0).contains(&self.merge_fraction) {
            return bad(format!("merge_fraction must lie in [0, 1), got {}", self.merge_fraction));
        }
        if let Some(bit) = self.conjugate_bit {
            if bit.sign.abs() != 1 {
                return bad("conjugate bit sign must be +1 or -1".into());
            }
        }
        match self.order {
            OrderRule::Fixed(h) if h == 0 || h > 31 => bad(format!("ring order {h} outside 1..=31")),
            OrderRule::Fit { tol, max } if !(tol > 0.0) || max == 0 || max > 31 => {
                bad(format!("order fit with tol {tol}, max {max}"))
            }
            _ => Ok(()),
        }
    }
}

/// A candidate accepted on one ring: index into the ring's candidate list
/// and the unit constant aligning it to the common phase reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcceptedCandidate {
    pub candidate: usize,
    pub rotation: Complex,
}

/// One branch of the search tree.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSolution {
    /// Per ring id. Persistent vectors share storage between a branch and
    /// its children.
    pub accepted: imbl::Vector<Option<AcceptedCandidate>>,
    /// Per intersection point id.
    pub retrieved: imbl::Vector<Option<Complex>>,
    /// Summed misfit, degrees.
    pub score: f64,
}

/// One line of the frontier trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepReport {
    pub step: usize,
    pub ring: usize,
    pub cell: (i64, i64),
    pub candidates: usize,
    pub full_mode: bool,
    pub reference: usize,
    pub frontier_in: usize,
    pub frontier_out: usize,
    pub merged: usize,
    pub skipped_nulls: Vec<usize>,
}

impl StepReport {
    pub const TSV_HEADER: &'static str =
        "step\tring\tq\tr\tcandidates\tmode\treference\tfrontier_in\tfrontier_out\tmerged\tskipped_nulls";

    pub fn to_tsv(&self) -> String {
        let skipped: Vec<String> = self.skipped_nulls.iter().map(|p| p.to_string()).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.step,
            self.ring,
            self.cell.0,
            self.cell.1,
            self.candidates,
            if self.full_mode { "full" } else { "balanced" },
            self.reference,
            self.frontier_in,
            self.frontier_out,
            self.merged,
            if skipped.is_empty() { "-".to_string() } else { skipped.join(",") }
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub steps: Vec<StepReport>,
    /// Cells of rings dropped because they leave the data grid.
    pub dropped_cells: Vec<(i64, i64)>,
    /// More than two solutions survived.
    pub ambiguous: bool,
    /// NSE between the first solution and the conjugate of the second.
    pub pair_defect: Option<f64>,
}

impl Diagnostics {
    pub fn frontier_trace(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.frontier_out).collect()
    }

    pub fn skipped_nulls(&self) -> Vec<(usize, usize)> {
        self.steps
            .iter()
            .flat_map(|s| s.skipped_nulls.iter().map(move |&p| (s.ring, p)))
            .collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(StepReport::TSV_HEADER);
        out.push('\n');
        for s in &self.steps {
            out.push_str(&s.to_tsv());
            out.push('\n');
        }
        out
    }
}

/// An assembled solution.
#[derive(Clone, Debug)]
pub struct Solution {
    pub grid: SpectrumGrid,
    pub model: BandLimitedModel,
    pub branch: PartialSolution,
}

impl Solution {
    pub fn value_at(&self, p: SpectralPoint) -> Complex {
        self.model.evaluate(p)
    }
}

#[derive(Clone, Debug)]
pub struct RetrievalResult {
    /// Sorted by score.
    pub solutions: Vec<Solution>,
    /// The system actually solved.
    pub system: RingSystem,
    /// Candidate list of every ring, indexed by ring id.
    pub candidates: Vec<Vec<RingSignal>>,
    pub diagnostics: Diagnostics,
}

impl RetrievalResult {
    /// Phase-aligned signal accepted on `ring` by `solution`.
    pub fn ring_signal(&self, solution: usize, ring: usize) -> Option<RingSignal> {
        let acc = self.solutions[solution].branch.accepted[ring]?;
        Some(self.candidates[ring][acc.candidate].scaled(acc.rotation))
    }

    /// The reference point `P₀` of the trigger.
    pub fn reference_point(&self) -> SpectralPoint {
        self.system.point(self.system.trigger().p0).location
    }
}

/// Multiplies `candidate` by a unit constant so its value at `phi` has the
/// phase of `target`.
pub fn align_phase(
    candidate: &RingSignal,
    phi: f64,
    target: Complex,
    null_threshold_rel: f64,
) -> Result<RingSignal> {
    let value = candidate.evaluate(phi);
    let ring_max = (0..720)
        .map(|k| candidate.evaluate(2.0 * std::f64::consts::PI * k as f64 / 720.0).norm())
        .fold(0.0, f64::max);
    if value.norm() < null_threshold_rel * ring_max || value.norm() == 0.0 || target.norm() == 0.0 {
        return Err(SolverError::NullReference { ring: usize::MAX });
    }
    Ok(candidate.scaled(unit(target) * unit(value).conj()))
}

/// `|arg a − arg b|` wrapped to `[0, 180]` degrees.
pub fn phase_misfit(a: Complex, b: Complex) -> Result<f64> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(SolverError::NullValue);
    }
    Ok(misfit_deg(a, b))
}

fn misfit_deg(a: Complex, b: Complex) -> f64 {
    (a * b.conj()).arg().abs().to_degrees()
}

fn unit(z: Complex) -> Complex {
    z / z.norm()
}

/// Selects the solution whose `Im(F(point)·conj(F(P₀)))` has the sign of
/// the bit.
pub fn resolve_conjugate(result: &RetrievalResult, bit: &ConjugateBit) -> Result<usize> {
    if result.solutions.len() != 2 {
        return Err(SolverError::NotAPair { count: result.solutions.len() });
    }
    let p0 = result.reference_point();
    let signs: Vec<f64> = result
        .solutions
        .iter()
        .map(|s| {
            let a = s.value_at(bit.point) * s.value_at(p0).conj();
            let scale = s.value_at(bit.point).norm() * s.value_at(p0).norm();
            if a.im.abs() <= 1e-9 * scale {
                0.0
            } else {
                a.im.signum()
            }
        })
        .collect();
    let undecidable =
        SolverError::UndecidablePoint { u: bit.point.u, v: bit.point.v };
    if signs[0] == 0.0 || signs[0] == signs[1] {
        return Err(undecidable);
    }
    Ok(if signs[0] == f64::from(bit.sign) { 0 } else { 1 })
}

/// Sign bit of `truth` at `point`, for tests and generated scenarios.
pub fn conjugate_bit_of(truth: impl Fn(SpectralPoint) -> Complex, point: SpectralPoint, p0: SpectralPoint) -> Option<ConjugateBit> {
    let a = truth(point) * truth(p0).conj();
    let scale = truth(point).norm() * truth(p0).norm();
    if a.im.abs() <= 1e-9 * scale {
        None
    } else {
        Some(ConjugateBit { point, sign: if a.im > 0.0 { 1 } else { -1 } })
    }
}
