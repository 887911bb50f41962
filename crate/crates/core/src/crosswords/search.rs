//! Ring preparation, trigger, ring-by-ring extension and final assembly.

use std::collections::HashMap;

use rayon::prelude::*;

use super::assemble::{fit_model, AssemblyBasis};
use super::{
    misfit_deg, unit, AcceptedCandidate, Diagnostics, OrderRule, PartialSolution, Result,
    RetrievalResult, Solution, SolverConfig, SolverError, StepReport,
};
use crate::field_model::{
    extract_ring_power, fit_ring_order, Complex, PowerGrid, RefinedGrid, RingPowerData, RingSignal,
    SourceSupport, SpectralPoint,
};
use crate::ring_system::RingSystem;
use crate::scenario_lab::nse_aligned;
use crate::spectral::{
    enumerate_candidates, factorize, CandidateMode, CandidateSolution, ZeroPairing,
};

/// Relative coefficient distance below which two candidates of a ring are
/// the same field.
const DUPLICATE_TOL: f64 = 1e-8;

/// Angular samples used for the ring maximum.
const MAX_SAMPLES: usize = 720;

/// Everything the search needs to know about one ring.
#[derive(Clone, Debug)]
pub struct PreparedRing {
    pub ring: usize,
    pub power: RingPowerData,
    pub max_amplitude: f64,
    pub candidates: Vec<RingSignal>,
    /// Whether `candidates` holds every zero selection.
    pub full_mode: bool,
    /// Intersection point ids on the ring.
    pub points: Vec<usize>,
    /// Measured amplitude at each point.
    pub amplitudes: Vec<f64>,
    pairing: Option<ZeroPairing>,
    /// `values[c][l]`: candidate `c` at local point `l`.
    values: Vec<Vec<Complex>>,
}

impl PreparedRing {
    fn local(&self, point: usize) -> Option<usize> {
        self.points.iter().position(|&p| p == point)
    }

    fn is_null(&self, local: usize, threshold: f64) -> bool {
        self.amplitudes[local] < threshold * self.max_amplitude
    }

    fn set_candidates(&mut self, candidates: Vec<RingSignal>, system: &RingSystem) {
        let geometry = self.power.ring();
        let phis: Vec<f64> = self
            .points
            .iter()
            .map(|&p| {
                let loc = system.point(p).location;
                geometry.angle_of(loc.u, loc.v)
            })
            .collect();
        self.values = candidates.iter().map(|c| phis.iter().map(|&phi| c.evaluate(phi)).collect()).collect();
        self.candidates = candidates;
    }
}

/// Drops candidates that differ from an earlier one only by flips of pairs
/// so close to the unit circle that the fields agree within
/// `DUPLICATE_TOL`.
fn dedup_candidates(list: Vec<CandidateSolution>, pairing: &ZeroPairing) -> Vec<RingSignal> {
    let negligible = pairing
        .pairs()
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.on_unit_circle && (1.0 - p.inner.norm()).abs() <= DUPLICATE_TOL)
        .fold(0u64, |acc, (i, _)| acc | (1 << i));
    let mut seen = std::collections::HashSet::new();
    list.into_iter()
        .filter(|c| seen.insert(c.flip_mask & !negligible))
        .map(|c| c.signal)
        .collect()
}

fn candidates_for(
    ring: usize,
    pairing: &Option<ZeroPairing>,
    power: &RingPowerData,
    mode: CandidateMode,
    cap: usize,
) -> Result<Vec<RingSignal>> {
    match pairing {
        None => Ok(vec![RingSignal::new(*power.ring(), vec![Complex::new(power.mean_power().max(0.0).sqrt(), 0.0)])]),
        Some(p) => {
            let list = enumerate_candidates(p, power, mode, cap)
                .map_err(|source| SolverError::Factorization { ring, source })?;
            Ok(dedup_candidates(list, p))
        }
    }
}

/// Rings of a system with their extracted data and candidates.
#[derive(Clone, Debug)]
pub struct PreparedRings {
    pub system: RingSystem,
    pub rings: Vec<PreparedRing>,
    pub dropped_cells: Vec<(i64, i64)>,
    /// Amplitude below which a retrieved value counts as zero, per point.
    point_floor: Vec<f64>,
}

/// Extracts ring data from `power` and enumerates candidates for every ring.
/// Rings leaving the grid are dropped and the system is rebuilt without them.
pub fn prepare_rings(system: &RingSystem, power: &PowerGrid, config: &SolverConfig) -> Result<PreparedRings> {
    config.validate()?;
    let geometry = *power.geometry();
    let inside = |r: &crate::ring_system::Ring| {
        let c = r.geometry.center;
        c.u.abs() + r.geometry.radius <= geometry.half_extent()
            && c.v.abs() + r.geometry.radius <= geometry.half_extent()
    };
    let dropped_cells: Vec<(i64, i64)> = system.rings().iter().filter(|r| !inside(r)).map(|r| r.cell).collect();
    let system = if dropped_cells.is_empty() { system.clone() } else { system.retain(inside)? };

    let refined = RefinedGrid::from_power(power, &config.interpolation);
    let mut extraction = config.extraction;
    if config.noise_sigma.is_some() {
        extraction.noise_sigma = config.noise_sigma;
    }
    let data: Vec<RingPowerData> = (0..system.rings().len())
        .into_par_iter()
        .map(|id| {
            let geometry = system.ring(id).geometry;
            let order = match config.order {
                OrderRule::Fixed(h) => h,
                OrderRule::Fit { tol, max } => fit_ring_order(&refined, &geometry, tol, max, &extraction)
                    .map_err(|source| SolverError::Extraction { ring: id, source })?,
            };
            Ok(extract_ring_power(&refined, &geometry, order, &extraction)
                .map_err(|source| SolverError::Extraction { ring: id, source })?
                .data)
        })
        .collect::<Result<_>>()?;
    let mut prepared = prepare_ring_data(&system, data, config)?;
    prepared.dropped_cells = dropped_cells;
    Ok(prepared)
}

/// Factorizes given ring data, one entry per ring of `system` in id order,
/// and enumerates candidates.
pub fn prepare_ring_data(system: &RingSystem, data: Vec<RingPowerData>, config: &SolverConfig) -> Result<PreparedRings> {
    config.validate()?;
    if data.len() != system.rings().len() {
        return Err(SolverError::InvalidConfig(format!(
            "{} ring data sets for {} rings",
            data.len(),
            system.rings().len()
        )));
    }
    let rings: Vec<PreparedRing> = data
        .into_par_iter()
        .enumerate()
        .map(|(id, data)| {
            let geometry = system.ring(id).geometry;
            let pairing = if data.order() == 0 {
                None
            } else {
                Some(factorize(&data).map_err(|source| SolverError::Factorization { ring: id, source })?)
            };
            let candidates = candidates_for(id, &pairing, &data, config.candidate_mode, config.candidate_cap)?;
            let points = system.ring(id).points.clone();
            let amplitudes = points
                .iter()
                .map(|&p| {
                    let loc = system.point(p).location;
                    data.amplitude(geometry.angle_of(loc.u, loc.v))
                })
                .collect();
            let mut ring = PreparedRing {
                ring: id,
                max_amplitude: data.max_amplitude(MAX_SAMPLES),
                power: data,
                candidates: Vec::new(),
                full_mode: config.candidate_mode == CandidateMode::Full,
                points,
                amplitudes,
                pairing,
                values: Vec::new(),
            };
            ring.set_candidates(candidates, system);
            Ok(ring)
        })
        .collect::<Result<_>>()?;

    let mut point_floor = vec![0.0f64; system.intersections().len()];
    for r in &rings {
        for &p in &r.points {
            point_floor[p] = point_floor[p].max(config.null_threshold_rel * r.max_amplitude);
        }
    }
    Ok(PreparedRings { system: system.clone(), rings, dropped_cells: Vec::new(), point_floor })
}

/// Single branch holding the measured amplitude at `P₀` with phase zero.
fn seed_branch(prepared: &PreparedRings, config: &SolverConfig) -> Result<PartialSolution> {
    let p0 = prepared.system.trigger().p0;
    let first = &prepared.rings[prepared.system.steps()[0].ring];
    let l0 = first.local(p0).expect("P0 lies on the first trigger ring");
    if first.is_null(l0, config.null_threshold_rel) {
        return Err(SolverError::NullReference { ring: first.ring });
    }
    Ok(PartialSolution {
        accepted: imbl::Vector::from(vec![None; prepared.rings.len()]),
        retrieved: {
            let mut r = imbl::Vector::from(vec![None; prepared.system.intersections().len()]);
            r[p0] = Some(Complex::new(first.amplitudes[l0], 0.0));
            r
        },
        score: 0.0,
    })
}

/// Runs the three trigger steps from the seed branch.
pub fn trigger(prepared: &mut PreparedRings, config: &SolverConfig) -> Result<(Vec<PartialSolution>, Vec<StepReport>)> {
    let mut frontier = vec![seed_branch(prepared, config)?];
    let mut reports = Vec::with_capacity(3);
    for step in 0..3 {
        let (next, report) = extend(frontier, step, prepared, config)?;
        frontier = next;
        reports.push(report);
    }
    Ok((frontier, reports))
}

struct Pass {
    /// Children with the index of their parent branch.
    frontier: Vec<(usize, PartialSolution)>,
}

fn expand(
    frontier: &[PartialSolution],
    ring: &PreparedRing,
    reference: usize,
    discrimination: &[(usize, f64)],
    usable: &[usize],
    new_points: &[usize],
    refine: bool,
) -> Pass {
    let r = ring.ring;
    let ref_point = ring.points[reference];
    let out: Vec<(usize, PartialSolution)> = frontier
        .par_iter()
        .enumerate()
        .flat_map_iter(|(parent, b)| {
            let target = b.retrieved[ref_point].expect("reference is retrieved");
            let mut accepted = Vec::new();
            for (ci, vals) in ring.values.iter().enumerate() {
                let c_ref = vals[reference];
                if c_ref.norm() == 0.0 || target.norm() == 0.0 {
                    continue;
                }
                let rot = unit(target) * unit(c_ref).conj();
                let mut score = 0.0;
                let mut ok = true;
                for &(l, tol) in discrimination {
                    let known = b.retrieved[ring.points[l]].expect("discrimination point is retrieved");
                    let v = rot * vals[l];
                    if v.norm() == 0.0 || known.norm() == 0.0 {
                        continue;
                    }
                    let m = misfit_deg(v, known);
                    if m > tol {
                        ok = false;
                        break;
                    }
                    score += m;
                }
                if !ok {
                    continue;
                }
                let rotation = if refine {
                    let s: Complex = usable
                        .iter()
                        .map(|&l| vals[l].conj() * b.retrieved[ring.points[l]].expect("retrieved"))
                        .sum();
                    if s.norm() > 0.0 { unit(s) } else { rot }
                } else {
                    rot
                };
                let mut nb = b.clone();
                nb.accepted[r] = Some(AcceptedCandidate { candidate: ci, rotation });
                for &l in new_points {
                    nb.retrieved[ring.points[l]] = Some(rotation * vals[l]);
                }
                nb.score += score;
                accepted.push((parent, nb));
            }
            accepted
        })
        .collect();
    Pass { frontier: out }
}

fn same_branch(a: &PartialSolution, b: &PartialSolution, chord: f64, floor: &[f64]) -> bool {
    a.retrieved.iter().zip(&b.retrieved).enumerate().all(|(p, (x, y))| match (x, y) {
        (Some(x), Some(y)) => {
            let scale = x.norm().max(y.norm());
            scale <= floor[p] || (x - y).norm() <= chord * scale
        }
        (None, None) => true,
        _ => false,
    })
}

/// Greedy merge in score order: a branch is dropped when an already kept
/// branch agrees with it at every retrieved point. Comparisons are limited
/// to branches whose values at the key points fall in the same cells, so a
/// pair straddling a cell boundary stays unmerged.
fn merge(
    children: Vec<(usize, PartialSolution)>,
    config: &SolverConfig,
    floor: &[f64],
    key: &[(usize, f64)],
) -> (Vec<PartialSolution>, usize) {
    let mut sorted = children;
    sorted.sort_by(|a, b| a.1.score.total_cmp(&b.1.score));
    if config.merge_fraction == 0.0 {
        return (sorted.into_iter().map(|(_, b)| b).collect(), 0);
    }
    let angle = (config.merge_fraction * config.phase_tol_deg).to_radians();
    let chord = 2.0 * (0.5 * angle).sin();
    let mut kept: Vec<PartialSolution> = Vec::with_capacity(sorted.len());
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut merged = 0;
    for (parent, b) in sorted {
        let cell: Vec<i64> = if key.is_empty() {
            vec![parent as i64]
        } else {
            key.iter()
                .flat_map(|&(p, size)| {
                    let v = b.retrieved[p].expect("key point is retrieved");
                    [(v.re / size).floor() as i64, (v.im / size).floor() as i64]
                })
                .collect()
        };
        let list = buckets.entry(cell).or_default();
        if list.iter().any(|&k| same_branch(&kept[k], &b, chord, floor)) {
            merged += 1;
        } else {
            list.push(kept.len());
            kept.push(b);
        }
    }
    (kept, merged)
}

/// Processes step `step` of the system's sequence: every branch is paired
/// with every candidate of the step's ring, aligned at the reference point
/// and kept when all non-null discrimination points pass. The trigger steps
/// use `P₀` as reference.
pub fn extend(
    frontier: Vec<PartialSolution>,
    step: usize,
    prepared: &mut PreparedRings,
    config: &SolverConfig,
) -> Result<(Vec<PartialSolution>, StepReport)> {
    let ring_id = prepared.system.steps()[step].ring;
    let cell = prepared.system.ring(ring_id).cell;
    let Some(first) = frontier.first() else {
        return Err(SolverError::EmptyFrontier { ring: ring_id, step, trace: Vec::new() });
    };
    let ring = &prepared.rings[ring_id];
    let (known, new_points): (Vec<usize>, Vec<usize>) =
        (0..ring.points.len()).partition(|&l| first.retrieved[ring.points[l]].is_some());
    let (usable, skipped): (Vec<usize>, Vec<usize>) =
        known.iter().partition(|&&l| !ring.is_null(l, config.null_threshold_rel));
    let reference = if step < 3 {
        let p0 = prepared.system.trigger().p0;
        ring.local(p0).filter(|l| usable.contains(l))
    } else {
        usable.iter().copied().max_by(|&a, &b| {
            ring.amplitudes[a].total_cmp(&ring.amplitudes[b]).then(ring.points[b].cmp(&ring.points[a]))
        })
    }
    .ok_or(SolverError::NullReference { ring: ring_id })?;
    let discrimination: Vec<(usize, f64)> = usable
        .iter()
        .filter(|&&l| l != reference)
        .map(|&l| {
            let noise = config
                .noise_sigma
                .map_or(0.0, |s| (config.noise_kappa * s / ring.amplitudes[l].max(f64::MIN_POSITIVE)).to_degrees());
            (l, config.phase_tol_deg.max(noise))
        })
        .collect();

    let frontier_in = frontier.len();
    let mut pass = expand(&frontier, ring, reference, &discrimination, &usable, &new_points, config.refine_rotation);
    if pass.frontier.is_empty()
        && config.full_fallback
        && !prepared.rings[ring_id].full_mode
        && prepared.rings[ring_id].pairing.is_some()
    {
        let full = {
            let r = &prepared.rings[ring_id];
            candidates_for(ring_id, &r.pairing, &r.power, CandidateMode::Full, config.candidate_cap)?
        };
        let system = prepared.system.clone();
        let r = &mut prepared.rings[ring_id];
        r.set_candidates(full, &system);
        r.full_mode = true;
        log::debug!("ring {ring_id}: no balanced candidate admitted, retrying with every zero selection");
        pass = expand(&frontier, r, reference, &discrimination, &usable, &new_points, config.refine_rotation);
    }
    let ring = &prepared.rings[ring_id];
    // Key cells on every usable point of the ring; with no usable new point
    // the children of one parent are identical and the parent is the key.
    let cell_scale = 2.0 * (0.5 * (config.merge_fraction * config.phase_tol_deg).to_radians()).sin();
    let key: Vec<(usize, f64)> = if new_points.iter().any(|&l| ring.amplitudes[l] > prepared.point_floor[ring.points[l]]) {
        usable
            .iter()
            .chain(&new_points)
            .filter(|&&l| ring.amplitudes[l] > prepared.point_floor[ring.points[l]])
            .map(|&l| (ring.points[l], (cell_scale * ring.amplitudes[l]).max(f64::MIN_POSITIVE)))
            .collect()
    } else {
        Vec::new()
    };
    let (next, merged) = merge(pass.frontier, config, &prepared.point_floor, &key);
    let report = StepReport {
        step,
        ring: ring_id,
        cell,
        candidates: ring.candidates.len(),
        full_mode: ring.full_mode,
        reference: ring.points[reference],
        frontier_in,
        frontier_out: next.len(),
        merged,
        skipped_nulls: skipped.iter().map(|&l| ring.points[l]).collect(),
    };
    if next.is_empty() {
        return Err(SolverError::EmptyFrontier { ring: ring_id, step, trace: Vec::new() });
    }
    if next.len() > config.frontier_cap {
        return Err(SolverError::FrontierOverflow { ring: ring_id, size: next.len(), cap: config.frontier_cap });
    }
    Ok((next, report))
}

/// Optional inputs of [`run_with`].
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Source model of the final fit; a lattice sized from the samples when
    /// absent.
    pub basis: Option<AssemblyBasis>,
    /// Called after every step with the step report and the new frontier.
    pub observer: Option<&'a mut dyn FnMut(&StepReport, &[PartialSolution])>,
}

pub fn run(
    system: &RingSystem,
    power: &PowerGrid,
    support: &SourceSupport,
    config: &SolverConfig,
) -> Result<RetrievalResult> {
    run_with(system, power, support, config, RunOptions::default())
}

fn with_trace(err: SolverError, reports: &[StepReport]) -> SolverError {
    match err {
        SolverError::EmptyFrontier { ring, step, .. } => SolverError::EmptyFrontier {
            ring,
            step,
            trace: reports.iter().map(|r| r.frontier_out).collect(),
        },
        other => other,
    }
}

/// Trigger and extension over every step of the prepared system. Returns
/// the final frontier and one report per step.
pub fn search(
    prepared: &mut PreparedRings,
    config: &SolverConfig,
    mut observer: Option<&mut (dyn FnMut(&StepReport, &[PartialSolution]) + '_)>,
) -> Result<(Vec<PartialSolution>, Vec<StepReport>)> {
    let mut reports: Vec<StepReport> = Vec::with_capacity(prepared.system.steps().len());
    let mut frontier = vec![seed_branch(prepared, config)?];
    for step in 0..prepared.system.steps().len() {
        let (next, report) = extend(frontier, step, prepared, config).map_err(|e| with_trace(e, &reports))?;
        frontier = next;
        if let Some(obs) = observer.as_mut() {
            obs(&report, &frontier);
        }
        reports.push(report);
    }
    Ok((frontier, reports))
}

/// Full pipeline: ring extraction, trigger, extension in system order and
/// assembly of every surviving branch.
pub fn run_with(
    system: &RingSystem,
    power: &PowerGrid,
    support: &SourceSupport,
    config: &SolverConfig,
    mut options: RunOptions<'_>,
) -> Result<RetrievalResult> {
    let mut prepared = prepare_rings(system, power, config)?;
    for cell in &prepared.dropped_cells {
        log::warn!("ring at cell {cell:?} leaves the data grid and is dropped");
    }
    let (frontier, reports) = search(&mut prepared, config, options.observer.as_deref_mut())?;

    let geometry = *power.geometry();
    let samples: Vec<Vec<(SpectralPoint, Complex)>> = frontier
        .iter()
        .map(|b| assembly_samples(b, &prepared, config))
        .collect();
    let basis = options.basis.unwrap_or_else(|| {
        let reach = samples
            .iter()
            .flatten()
            .map(|(k, _)| k.norm())
            .fold(0.0, f64::max);
        AssemblyBasis::for_samples(support.radius(), reach)
    });
    let solutions: Vec<Solution> = frontier
        .into_par_iter()
        .zip(samples.into_par_iter())
        .map(|(branch, samples)| {
            let model = fit_model(&samples, basis.clone())?;
            Ok(Solution { grid: model.to_grid(geometry), model, branch })
        })
        .collect::<Result<_>>()?;
    let pair_defect = if solutions.len() == 2 {
        nse_aligned(&solutions[0].grid, &solutions[1].grid.conj()).ok()
    } else {
        None
    };
    let diagnostics = Diagnostics {
        ambiguous: solutions.len() > 2,
        steps: reports,
        dropped_cells: prepared.dropped_cells.clone(),
        pair_defect,
    };
    Ok(RetrievalResult {
        solutions,
        candidates: prepared.rings.iter().map(|r| r.candidates.clone()).collect(),
        system: prepared.system,
        diagnostics,
    })
}

fn assembly_samples(branch: &PartialSolution, prepared: &PreparedRings, config: &SolverConfig) -> Vec<(SpectralPoint, Complex)> {
    let mut out = Vec::new();
    for ring in &prepared.rings {
        let Some(acc) = branch.accepted[ring.ring] else { continue };
        let signal = ring.candidates[acc.candidate].scaled(acc.rotation);
        let n = config.assembly_samples.max(4 * signal.order() + 1);
        for k in 0..n {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            out.push((ring.power.ring().point_at(phi), signal.evaluate(phi)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_model::RingGeometry;
    use crate::ring_system::build_honeycomb;
    use std::f64::consts::PI;

    /// Exact ring data of a spectrum whose ring signals have order `order`.
    fn ring_data(system: &RingSystem, f: &dyn Fn(SpectralPoint) -> Complex, order: usize) -> Vec<RingPowerData> {
        system
            .rings()
            .iter()
            .map(|r| {
                let g: RingGeometry = r.geometry;
                let n = 4 * order + 4;
                let samples: Vec<Complex> = (0..n).map(|k| f(g.point_at(2.0 * PI * k as f64 / n as f64))).collect();
                let coeffs = (-(order as i64)..=order as i64)
                    .map(|l| {
                        samples
                            .iter()
                            .enumerate()
                            .map(|(k, s)| s * Complex::from_polar(1.0 / n as f64, -2.0 * PI * (l * k as i64) as f64 / n as f64))
                            .sum()
                    })
                    .collect();
                RingSignal::new(g, coeffs).autocorrelate()
            })
            .collect()
    }

    fn quadratic(k: SpectralPoint) -> Complex {
        let (x, y) = (k.u / (2.0 * PI), k.v / (2.0 * PI));
        Complex::new(1.2, 0.3)
            + Complex::new(-0.7, 0.9) * x
            + Complex::new(0.4, -0.8) * y
            + Complex::new(0.5, 0.6) * x * x
            + Complex::new(-0.3, 0.2) * x * y
            + Complex::new(0.6, -0.4) * y * y
    }

    /// Branch values against `g` at every retrieved point, relative to the
    /// largest value.
    fn worst_error(b: &PartialSolution, system: &RingSystem, g: &dyn Fn(SpectralPoint) -> Complex) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (p, v) in b.retrieved.iter().enumerate() {
            if let Some(v) = v {
                let t = g(system.point(p).location);
                worst = worst.max((v - t).norm());
                scale = scale.max(t.norm());
            }
        }
        worst / scale
    }

    /// Exact data: the tolerance only has to clear rounding, and stays below
    /// the misfit of nearly equivalent zero selections on smooth rings.
    fn exact_config() -> SolverConfig {
        SolverConfig { phase_tol_deg: 0.01, ..Default::default() }
    }

    #[test]
    fn exact_data_leave_the_field_and_its_conjugate() {
        let system = build_honeycomb(PI / 6.0, 2.0 * PI, false).unwrap();
        let config = exact_config();
        let mut prepared = prepare_ring_data(&system, ring_data(&system, &quadratic, 2), &config).unwrap();
        let (frontier, reports) = search(&mut prepared, &config, None).unwrap();
        assert_eq!(reports.len(), system.steps().len());
        assert_eq!(frontier.len(), 2, "trace {:?}", reports.iter().map(|r| r.frontier_out).collect::<Vec<_>>());
        let p0 = system.point(system.trigger().p0).location;
        let rot = unit(quadratic(p0)).conj();
        let truth = |k: SpectralPoint| quadratic(k) * rot;
        let partner = |k: SpectralPoint| (quadratic(k) * rot).conj();
        let errors: Vec<(f64, f64)> = frontier
            .iter()
            .map(|b| (worst_error(b, &system, &truth), worst_error(b, &system, &partner)))
            .collect();
        let direct = errors[0].0.max(errors[1].1);
        let swapped = errors[0].1.max(errors[1].0);
        assert!(direct.min(swapped) < 1e-8, "{errors:?}");
        assert!(frontier.iter().all(|b| b.retrieved.iter().all(|v| v.is_some())));
    }

    #[test]
    fn null_at_a_trigger_point_is_skipped() {
        let system = build_honeycomb(PI / 6.0, 2.0 * PI, false).unwrap();
        let p01 = system.point(system.trigger().p01).location;
        let f = move |k: SpectralPoint| {
            Complex::new(0.8, 0.5) * (k.u - p01.u) + Complex::new(-0.2, 0.9) * (k.v - p01.v)
        };
        let config = exact_config();
        let mut prepared = prepare_ring_data(&system, ring_data(&system, &f, 1), &config).unwrap();
        let (frontier, reports) = search(&mut prepared, &config, None).unwrap();
        assert!(reports[1].skipped_nulls.contains(&system.trigger().p01), "{:?}", reports[1]);
        assert_eq!(frontier.len(), 2);
    }

    #[test]
    fn wrong_data_count_is_rejected() {
        let system = build_honeycomb(PI / 6.0, 2.0 * PI, false).unwrap();
        let data = ring_data(&system, &quadratic, 2);
        assert!(matches!(
            prepare_ring_data(&system, data[1..].to_vec(), &SolverConfig::default()),
            Err(SolverError::InvalidConfig(_))
        ));
    }

    #[test]
    fn trace_is_reproducible() {
        let system = build_honeycomb(PI / 6.0, 2.0 * PI, false).unwrap();
        let config = exact_config();
        let data = ring_data(&system, &quadratic, 2);
        let mut a = prepare_ring_data(&system, data.clone(), &config).unwrap();
        let mut b = prepare_ring_data(&system, data, &config).unwrap();
        let (fa, ra) = search(&mut a, &config, None).unwrap();
        let (fb, rb) = search(&mut b, &config, None).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(fa, fb);
    }
}
