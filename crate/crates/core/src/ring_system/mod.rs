//! Honeycomb covering of the spectral plane by equal circles.
//!
//! Cells of a flat-top hexagonal lattice with circumradius `k̄` carry one ring
//! each (the hexagon's circumcircle). Adjacent rings meet at the shared hexagon
//! vertices, so every intersection away from the rim is a triple point.
//! Cells are addressed by axial coordinates `(q, r)` with centre
//! `q·(3k̄/2, √3k̄/2) + r·(0, √3k̄)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::field_model::{RingGeometry, SpectralPoint};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, thiserror::Error)]
pub enum RingSystemError {
    #[error("ring radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("cover radius {cover} is smaller than the ring radius {kbar}")]
    InvalidCoverRadius { cover: f64, kbar: f64 },
    #[error("circles coincide")]
    CoincidentCircles,
    #[error("ring {ring} cannot be reached with two known intersection points")]
    Unreachable { ring: usize },
    #[error("trigger ring at cell ({q}, {r}) is missing")]
    MissingTrigger { q: i64, r: i64 },
}

pub type Result<T> = std::result::Result<T, RingSystemError>;

/// Intersection points of two circles: empty, a tangency point, or two points.
pub fn intersect_circles(a: &RingGeometry, b: &RingGeometry) -> Result<Vec<SpectralPoint>> {
    let d = a.center.distance(&b.center);
    let scale = a.radius.max(b.radius);
    if d <= 1e-12 * scale {
        if (a.radius - b.radius).abs() <= 1e-12 * scale {
            return Err(RingSystemError::CoincidentCircles);
        }
        return Ok(Vec::new());
    }
    let sum = a.radius + b.radius;
    let diff = (a.radius - b.radius).abs();
    if d > sum + 1e-9 * scale || d < diff - 1e-9 * scale {
        return Ok(Vec::new());
    }
    let ex = ((b.center.u - a.center.u) / d, (b.center.v - a.center.v) / d);
    // distance from a's centre to the chord along the centre line
    let x = (d * d + a.radius * a.radius - b.radius * b.radius) / (2.0 * d);
    let base = SpectralPoint::new(a.center.u + x * ex.0, a.center.v + x * ex.1);
    if (d - sum).abs() <= 1e-9 * scale || (d - diff).abs() <= 1e-9 * scale {
        return Ok(vec![base]);
    }
    let y = (a.radius * a.radius - x * x).max(0.0).sqrt();
    Ok(vec![
        SpectralPoint::new(base.u - y * ex.1, base.v + y * ex.0),
        SpectralPoint::new(base.u + y * ex.1, base.v - y * ex.0),
    ])
}

/// The three initial rings around the first triple point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriggerTriplet {
    /// `C₀` at the origin, `C₁` above it, `C₂` to the lower right of `C₁`.
    pub rings: [RingGeometry; 3],
    /// Common point of the three rings.
    pub p0: SpectralPoint,
    pub p01: SpectralPoint,
    pub p02: SpectralPoint,
    pub p12: SpectralPoint,
}

pub fn build_trigger_triplet(kbar: f64) -> Result<TriggerTriplet> {
    if !(kbar > 0.0) || !kbar.is_finite() {
        return Err(RingSystemError::InvalidRadius(kbar));
    }
    let ring = |angle: f64, dist: f64| {
        RingGeometry::new(SpectralPoint::new(dist * angle.cos(), dist * angle.sin()), kbar)
            .expect("positive radius")
    };
    let c0 = ring(0.0, 0.0);
    let c1 = ring(PI / 2.0, SQRT3 * kbar);
    let c2 = ring(13.0 * PI / 6.0, SQRT3 * kbar);
    let p0 = SpectralPoint::new(0.5 * kbar, 0.5 * SQRT3 * kbar);
    let other = |a: &RingGeometry, b: &RingGeometry| {
        intersect_circles(a, b)
            .expect("distinct centres")
            .into_iter()
            .max_by(|x, y| x.distance(&p0).partial_cmp(&y.distance(&p0)).unwrap())
            .expect("adjacent rings intersect")
    };
    Ok(TriggerTriplet {
        rings: [c0, c1, c2],
        p0,
        p01: other(&c0, &c1),
        p02: other(&c0, &c2),
        p12: other(&c1, &c2),
    })
}

/// Default role of an intersection point in the processing order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointRole {
    /// First known point of some ring, used to fix its constant phase.
    Reference,
    Discrimination,
}

impl PointRole {
    fn as_str(&self) -> &'static str {
        match self {
            Self::Reference => "reference",
            Self::Discrimination => "discrimination",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionPoint {
    pub location: SpectralPoint,
    /// Rings through this point, ascending.
    pub ring_ids: Vec<usize>,
    pub role: PointRole,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ring {
    pub geometry: RingGeometry,
    /// Axial lattice coordinates `(q, r)`.
    pub cell: (i64, i64),
    /// Colour in `0..4`; adjacent cells never share a colour.
    pub color: u8,
    /// Intersection points on this ring.
    pub points: Vec<usize>,
}

/// Indices of the trigger rings and points within a [`RingSystem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TriggerIds {
    pub rings: [usize; 3],
    pub p0: usize,
    pub p01: usize,
    pub p02: usize,
    pub p12: usize,
}

/// One ring of the processing order with the points already retrieved when
/// it is reached.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessingStep {
    pub ring: usize,
    /// Points on this ring retrieved by earlier rings.
    pub known: Vec<usize>,
    /// Points first retrieved by this ring.
    pub new: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RingSystem {
    kbar: f64,
    rings: Vec<Ring>,
    intersections: Vec<IntersectionPoint>,
    steps: Vec<ProcessingStep>,
    trigger: TriggerIds,
}

const TRIGGER_CELLS: [(i64, i64); 3] = [(0, 0), (0, 1), (1, 0)];

pub fn cell_center(kbar: f64, q: i64, r: i64) -> SpectralPoint {
    SpectralPoint::new(1.5 * kbar * q as f64, kbar * SQRT3 * (0.5 * q as f64 + r as f64))
}

pub fn cell_color(q: i64, r: i64) -> u8 {
    (q.rem_euclid(2) + 2 * r.rem_euclid(2)) as u8
}

fn hexagon_vertices(center: SpectralPoint, kbar: f64) -> [SpectralPoint; 6] {
    std::array::from_fn(|i| {
        let t = PI / 3.0 * i as f64;
        SpectralPoint::new(center.u + kbar * t.cos(), center.v + kbar * t.sin())
    })
}

fn hexagon_contains(center: SpectralPoint, kbar: f64, p: &SpectralPoint) -> bool {
    // flat-top: |y| ≤ √3/2·k̄ and √3|x| + |y| ≤ √3·k̄
    let x = (p.u - center.u).abs();
    let y = (p.v - center.v).abs();
    let tol = 1e-12 * kbar;
    y <= 0.5 * SQRT3 * kbar + tol && SQRT3 * x + y <= SQRT3 * kbar + tol
}

fn hexagon_distance_to_origin(center: SpectralPoint, kbar: f64) -> f64 {
    let origin = SpectralPoint::new(0.0, 0.0);
    if hexagon_contains(center, kbar, &origin) {
        return 0.0;
    }
    let v = hexagon_vertices(center, kbar);
    (0..6)
        .map(|i| segment_distance(&origin, &v[i], &v[(i + 1) % 6]))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(p: &SpectralPoint, a: &SpectralPoint, b: &SpectralPoint) -> f64 {
    let (dx, dy) = (b.u - a.u, b.v - a.v);
    let len2 = dx * dx + dy * dy;
    let t = (((p.u - a.u) * dx + (p.v - a.v) * dy) / len2).clamp(0.0, 1.0);
    p.distance(&SpectralPoint::new(a.u + t * dx, a.v + t * dy))
}

/// Whether `p` lies inside the hexagon of ring `ring`.
pub fn ring_hexagon_contains(ring: &Ring, p: &SpectralPoint) -> bool {
    hexagon_contains(ring.geometry.center, ring.geometry.radius, p)
}

const NEIGHBOURS: [(i64, i64); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

/// Honeycomb covering the disk of radius `cover_radius`.
///
/// A cell is kept when its hexagon meets the disk, or in `strict` mode only
/// when it lies entirely inside it (the trigger cells are always kept; strict
/// systems do not cover the disk rim).
pub fn build_honeycomb(kbar: f64, cover_radius: f64, strict: bool) -> Result<RingSystem> {
    if !(kbar > 0.0) || !kbar.is_finite() {
        return Err(RingSystemError::InvalidRadius(kbar));
    }
    if !(cover_radius >= kbar) {
        return Err(RingSystemError::InvalidCoverRadius { cover: cover_radius, kbar });
    }
    let qmax = (cover_radius / (1.5 * kbar)).ceil() as i64 + 1;
    let mut cells = Vec::new();
    for q in -qmax..=qmax {
        let rmax = (cover_radius / (SQRT3 * kbar) + 0.5 * q.abs() as f64).ceil() as i64 + 2;
        for r in -rmax..=rmax {
            let c = cell_center(kbar, q, r);
            let keep = if strict {
                hexagon_vertices(c, kbar).iter().all(|v| v.norm() <= cover_radius * (1.0 + 1e-12))
            } else {
                hexagon_distance_to_origin(c, kbar) < cover_radius
            };
            if keep || TRIGGER_CELLS.contains(&(q, r)) {
                cells.push((q, r));
            }
        }
    }
    RingSystem::from_cells(kbar, &cells)
}

impl RingSystem {
    /// Builds the system on an arbitrary set of lattice cells containing the
    /// three trigger cells.
    pub fn from_cells(kbar: f64, cells: &[(i64, i64)]) -> Result<Self> {
        if !(kbar > 0.0) || !kbar.is_finite() {
            return Err(RingSystemError::InvalidRadius(kbar));
        }
        let mut cells: Vec<(i64, i64)> = cells.to_vec();
        cells.sort_by(|a, b| {
            let da = cell_center(kbar, a.0, a.1).norm();
            let db = cell_center(kbar, b.0, b.1).norm();
            da.partial_cmp(&db).unwrap().then(a.cmp(b))
        });
        cells.dedup();
        // trigger cells first, in order C₀, C₁, C₂
        for (k, t) in TRIGGER_CELLS.iter().enumerate() {
            let pos = cells
                .iter()
                .position(|c| c == t)
                .ok_or(RingSystemError::MissingTrigger { q: t.0, r: t.1 })?;
            let c = cells.remove(pos);
            cells.insert(k, c);
        }

        let index: HashMap<(i64, i64), usize> =
            cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let mut rings: Vec<Ring> = cells
            .iter()
            .map(|&(q, r)| Ring {
                geometry: RingGeometry::new(cell_center(kbar, q, r), kbar).expect("positive radius"),
                cell: (q, r),
                color: cell_color(q, r),
                points: Vec::new(),
            })
            .collect();

        let mut intersections: Vec<IntersectionPoint> = Vec::new();
        for i in 0..rings.len() {
            let (q, r) = rings[i].cell;
            for (dq, dr) in NEIGHBOURS {
                let Some(&j) = index.get(&(q + dq, r + dr)) else { continue };
                if j <= i {
                    continue;
                }
                let (a, b) = (rings[i].geometry, rings[j].geometry);
                // near-tangent pairs carry no independent phase information
                if (a.center.distance(&b.center) - 2.0 * kbar).abs() <= 1e-6 * kbar {
                    continue;
                }
                for p in intersect_circles(&a, &b)? {
                    let existing = rings[i]
                        .points
                        .iter()
                        .chain(rings[j].points.iter())
                        .copied()
                        .find(|&id| intersections[id].location.distance(&p) <= 1e-6 * kbar);
                    let id = match existing {
                        Some(id) => id,
                        None => {
                            intersections.push(IntersectionPoint {
                                location: p,
                                ring_ids: Vec::new(),
                                role: PointRole::Discrimination,
                            });
                            intersections.len() - 1
                        }
                    };
                    for ring in [i, j] {
                        if !intersections[id].ring_ids.contains(&ring) {
                            intersections[id].ring_ids.push(ring);
                            rings[ring].points.push(id);
                        }
                    }
                }
            }
        }
        for p in intersections.iter_mut() {
            p.ring_ids.sort_unstable();
        }

        let trig = build_trigger_triplet(kbar)?;
        let find = |loc: SpectralPoint| {
            intersections
                .iter()
                .position(|p| p.location.distance(&loc) <= 1e-6 * kbar)
                .expect("trigger point present")
        };
        let trigger = TriggerIds {
            rings: [0, 1, 2],
            p0: find(trig.p0),
            p01: find(trig.p01),
            p02: find(trig.p02),
            p12: find(trig.p12),
        };

        let steps = processing_steps(&rings, &intersections)?;
        for step in &steps {
            if let Some(&r) = step.known.first() {
                intersections[r].role = PointRole::Reference;
            }
        }
        intersections[trigger.p0].role = PointRole::Reference;
        Ok(Self { kbar, rings, intersections, steps, trigger })
    }

    pub fn kbar(&self) -> f64 {
        self.kbar
    }

    pub fn rings(&self) -> &[Ring] {
        &self.rings
    }

    pub fn ring(&self, id: usize) -> &Ring {
        &self.rings[id]
    }

    pub fn intersections(&self) -> &[IntersectionPoint] {
        &self.intersections
    }

    pub fn point(&self, id: usize) -> &IntersectionPoint {
        &self.intersections[id]
    }

    pub fn trigger(&self) -> &TriggerIds {
        &self.trigger
    }

    /// Processing sequence; the first three entries are the trigger rings.
    pub fn steps(&self) -> &[ProcessingStep] {
        &self.steps
    }

    pub fn order(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.ring).collect()
    }

    /// Ring indices grouped by colour.
    pub fn color_groups(&self) -> [Vec<usize>; 4] {
        let mut groups: [Vec<usize>; 4] = Default::default();
        for (i, r) in self.rings.iter().enumerate() {
            groups[r.color as usize].push(i);
        }
        groups
    }

    /// Rebuilds the system on the rings satisfying `keep`.
    pub fn retain(&self, mut keep: impl FnMut(&Ring) -> bool) -> Result<Self> {
        let cells: Vec<(i64, i64)> =
            self.rings.iter().filter(|r| keep(r)).map(|r| r.cell).collect();
        Self::from_cells(self.kbar, &cells)
    }

    /// Whether `p` lies inside some ring's hexagon.
    pub fn covers(&self, p: &SpectralPoint) -> bool {
        // candidate cells around p from the axial rounding
        let q = (p.u / (1.5 * self.kbar)).round() as i64;
        let r = (p.v / (SQRT3 * self.kbar) - 0.5 * q as f64).round() as i64;
        let set: HashMap<(i64, i64), usize> =
            self.rings.iter().enumerate().map(|(i, r)| (r.cell, i)).collect();
        (-1..=1).any(|dq| {
            (-2..=2).any(|dr| {
                set.get(&(q + dq, r + dr))
                    .is_some_and(|&i| ring_hexagon_contains(&self.rings[i], p))
            })
        })
    }

    /// Plain-text dump: one `ring` line per ring, one `point` line per
    /// intersection, tab-separated.
    pub fn to_text(&self) -> String {
        let mut pos = vec![usize::MAX; self.rings.len()];
        for (k, s) in self.steps.iter().enumerate() {
            pos[s.ring] = k;
        }
        let mut out = String::new();
        out.push_str("# ring\tid\tcx\tcy\tkbar\tcolor\torder\n");
        for (i, r) in self.rings.iter().enumerate() {
            let _ = writeln!(
                out,
                "ring\t{i}\t{:.12}\t{:.12}\t{:.12}\t{}\t{}",
                r.geometry.center.u, r.geometry.center.v, r.geometry.radius, r.color, pos[i]
            );
        }
        out.push_str("# point\tid\tx\ty\trings\trole\n");
        for (i, p) in self.intersections.iter().enumerate() {
            let ids: Vec<String> = p.ring_ids.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(
                out,
                "point\t{i}\t{:.12}\t{:.12}\t{}\t{}",
                p.location.u,
                p.location.v,
                ids.join(","),
                p.role.as_str()
            );
        }
        out
    }
}

/// Greedy growth from the trigger: the next ring is the one with the most
/// retrieved points, ties broken by colour, then distance from the origin.
fn processing_steps(
    rings: &[Ring],
    intersections: &[IntersectionPoint],
) -> Result<Vec<ProcessingStep>> {
    let mut known = vec![false; intersections.len()];
    let mut done = vec![false; rings.len()];
    let mut steps = Vec::with_capacity(rings.len());
    let take = |ring: usize, known: &mut Vec<bool>, done: &mut Vec<bool>| {
        let (k, n): (Vec<usize>, Vec<usize>) =
            rings[ring].points.iter().copied().partition(|&p| known[p]);
        for &p in &n {
            known[p] = true;
        }
        done[ring] = true;
        ProcessingStep { ring, known: k, new: n }
    };
    for t in 0..3 {
        steps.push(take(t, &mut known, &mut done));
    }
    loop {
        let next = (0..rings.len())
            .filter(|&i| !done[i])
            .map(|i| (i, rings[i].points.iter().filter(|&&p| known[p]).count()))
            .filter(|&(_, c)| c >= 2)
            .min_by(|a, b| {
                b.1.cmp(&a.1)
                    .then(rings[a.0].color.cmp(&rings[b.0].color))
                    .then(
                        rings[a.0]
                            .geometry
                            .center
                            .norm()
                            .partial_cmp(&rings[b.0].geometry.center.norm())
                            .unwrap(),
                    )
                    .then(a.0.cmp(&b.0))
            });
        match next {
            Some((i, _)) => steps.push(take(i, &mut known, &mut done)),
            None => break,
        }
    }
    if let Some(ring) = done.iter().position(|d| !d) {
        return Err(RingSystemError::Unreachable { ring });
    }
    Ok(steps)
}
