//! Geometry and mechanics of the disc chain.
//!
//! Particle `i` is adjacent to `i - 1` and `i + 1` modulo `N`. Edge `i` joins
//! particle `i` to particle `i + 1`. The bending term attached to particle `i`
//! involves the triplet `(i - 1, i, i + 1)`.

use crate::Vec2;
use thiserror::Error;

/// Consecutive centers closer than this fraction of the radius are treated
/// as coincident.
const DEGENERATE_EDGE_FRACTION: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("a necklace needs at least 4 particles, got {0}")]
    TooFewParticles(usize),
    #[error("particle radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("particle {0} has a non-finite center")]
    NonFiniteCenter(usize),
    #[error("edge {edge} collapsed: consecutive centers are {length:e} apart")]
    DegenerateEdge { edge: usize, length: f64 },
    #[error("particles {0} and {1} have coincident centers")]
    CoincidentCenters(usize, usize),
    #[error("pair ({0}, {1}) is not a valid pair of distinct particles")]
    InvalidPair(usize, usize),
    #[error("invalid membrane parameter: {0}")]
    InvalidParams(&'static str),
}

/// Ring of `N` rigid discs of common radius.
#[derive(Debug, Clone, PartialEq)]
pub struct NecklaceState {
    centers: Vec<Vec2>,
    radius: f64,
}

impl NecklaceState {
    pub fn new(centers: Vec<Vec2>, radius: f64) -> Result<Self, GeometryError> {
        if centers.len() < 4 {
            return Err(GeometryError::TooFewParticles(centers.len()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidRadius(radius));
        }
        if let Some(i) = centers.iter().position(|c| !(c.x.is_finite() && c.y.is_finite())) {
            return Err(GeometryError::NonFiniteCenter(i));
        }
        Ok(Self { centers, radius })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn centers(&self) -> &[Vec2] {
        &self.centers
    }

    pub fn center(&self, i: usize) -> Vec2 {
        self.centers[i]
    }

    pub fn next(&self, i: usize) -> usize {
        (i + 1) % self.len()
    }

    pub fn prev(&self, i: usize) -> usize {
        (i + self.len() - 1) % self.len()
    }

    /// True if `i` and `j` are neighbours on the ring.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        i != j && (self.next(i) == j || self.prev(i) == j)
    }

    /// Vector along edge `i`, from particle `i` to particle `i + 1`.
    pub fn edge(&self, i: usize) -> Vec2 {
        self.centers[self.next(i)] - self.centers[i]
    }

    pub fn centroid(&self) -> Vec2 {
        self.centers.iter().sum::<Vec2>() / self.len() as f64
    }

    /// Returns a copy with every center displaced by `dt * velocity`.
    pub fn advanced(&self, velocities: &[Vec2], dt: f64) -> Self {
        assert_eq!(velocities.len(), self.len());
        let centers = self
            .centers
            .iter()
            .zip(velocities)
            .map(|(x, v)| x + dt * v)
            .collect();
        Self {
            centers,
            radius: self.radius,
        }
    }

    pub fn translated(&self, shift: Vec2) -> Self {
        Self {
            centers: self.centers.iter().map(|c| c + shift).collect(),
            radius: self.radius,
        }
    }

    /// Rotation by `angle` (radians, counter-clockwise) about `pivot`.
    pub fn rotated(&self, angle: f64, pivot: Vec2) -> Self {
        let rot = nalgebra::Rotation2::new(angle);
        Self {
            centers: self.centers.iter().map(|c| pivot + rot * (c - pivot)).collect(),
            radius: self.radius,
        }
    }

    /// Returns the same ring listed counter-clockwise, keeping particle 0 first.
    pub fn counter_clockwise(mut self) -> Self {
        if signed_area(&self) < 0.0 {
            self.centers[1..].reverse();
        }
        self
    }
}

/// Uniform spring constants of the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneParams {
    /// Angular spring constant (energy).
    pub k_a: f64,
    /// Linear spring constant (energy / length^2).
    pub k_rp: f64,
    /// Spring rest length.
    pub ell0: f64,
}

impl MembraneParams {
    pub fn new(k_a: f64, k_rp: f64, ell0: f64) -> Result<Self, GeometryError> {
        if !(k_a > 0.0 && k_a.is_finite()) {
            return Err(GeometryError::InvalidParams("k_a must be positive"));
        }
        if !(k_rp >= 0.0 && k_rp.is_finite()) {
            return Err(GeometryError::InvalidParams("k_rp must be nonnegative"));
        }
        if !(ell0 > 0.0 && ell0.is_finite()) {
            return Err(GeometryError::InvalidParams("ell0 must be positive"));
        }
        Ok(Self { k_a, k_rp, ell0 })
    }
}

/// Per-particle forces, split by origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceSet {
    pub bending: Vec<Vec2>,
    pub stretching: Vec<Vec2>,
}

impl ForceSet {
    pub fn zeros(n: usize) -> Self {
        Self {
            bending: vec![Vec2::zeros(); n],
            stretching: vec![Vec2::zeros(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.bending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bending.is_empty()
    }

    pub fn total(&self, i: usize) -> Vec2 {
        self.bending[i] + self.stretching[i]
    }

    pub fn totals(&self) -> Vec<Vec2> {
        (0..self.len()).map(|i| self.total(i)).collect()
    }
}

fn unit(d: Vec2, edge: usize, radius: f64) -> Result<(Vec2, f64), GeometryError> {
    let length = d.norm();
    if length < DEGENERATE_EDGE_FRACTION * radius {
        return Err(GeometryError::DegenerateEdge { edge, length });
    }
    Ok((d / length, length))
}

/// `k_a * sum_i (1 - e_i . e_{i+1})`, where `e_i` is the unit vector from
/// particle `i - 1` to particle `i`. Zero iff every triplet is aligned.
pub fn bending_energy(state: &NecklaceState, params: &MembraneParams) -> Result<f64, GeometryError> {
    let n = state.len();
    let mut units = Vec::with_capacity(n);
    for i in 0..n {
        units.push(unit(state.edge(i), i, state.radius)?.0);
    }
    let mut energy = 0.0;
    for i in 0..n {
        // edge i-1 arrives at particle i, edge i leaves it
        let incoming = units[state.prev(i)];
        let outgoing = units[i];
        energy += 1.0 - incoming.dot(&outgoing);
    }
    Ok(params.k_a * energy)
}

/// `k_rp * sum_i (l_i - l_0)^2` over the `N` ring edges.
pub fn stretching_energy(state: &NecklaceState, params: &MembraneParams) -> f64 {
    (0..state.len())
        .map(|i| {
            let stretch = state.edge(i).norm() - params.ell0;
            params.k_rp * stretch * stretch
        })
        .sum()
}

/// Total membrane energy, bending plus stretching.
pub fn membrane_energy(state: &NecklaceState, params: &MembraneParams) -> Result<f64, GeometryError> {
    Ok(bending_energy(state, params)? + stretching_energy(state, params))
}

/// Analytic forces `-grad(E_b + E_st)` on every particle.
pub fn membrane_forces(state: &NecklaceState, params: &MembraneParams) -> Result<ForceSet, GeometryError> {
    let n = state.len();
    let mut forces = ForceSet::zeros(n);
    let mut units = Vec::with_capacity(n);
    for i in 0..n {
        units.push(unit(state.edge(i), i, state.radius)?);
    }

    for i in 0..n {
        let p = state.prev(i);
        let q = state.next(i);
        let (a, la) = units[p];
        let (b, lb) = units[i];
        let cos = a.dot(&b);
        // d(a.b)/d(incoming edge) and d(a.b)/d(outgoing edge)
        let g_in = (b - a * cos) / la;
        let g_out = (a - b * cos) / lb;
        // E = k_a (1 - a.b) so F = +k_a d(a.b)/dx
        forces.bending[p] -= params.k_a * g_in;
        forces.bending[i] += params.k_a * (g_in - g_out);
        forces.bending[q] += params.k_a * g_out;
    }

    for i in 0..n {
        let j = state.next(i);
        let (u, length) = units[i];
        let f = 2.0 * params.k_rp * (length - params.ell0) * u;
        forces.stretching[i] += f;
        forces.stretching[j] -= f;
    }
    Ok(forces)
}

/// Signed shoelace area of the center polygon; positive when counter-clockwise.
pub fn signed_area(state: &NecklaceState) -> f64 {
    let c = state.centers();
    let twice: f64 = (0..c.len())
        .map(|i| {
            let a = c[i];
            let b = c[state.next(i)];
            a.x * b.y - b.x * a.y
        })
        .sum();
    0.5 * twice
}

/// Enclosed area of the center polygon, independent of orientation.
pub fn polygon_area(state: &NecklaceState) -> f64 {
    signed_area(state).abs()
}

pub fn is_clockwise(state: &NecklaceState) -> bool {
    signed_area(state) < 0.0
}

/// Sum of the ring edge lengths.
pub fn polygon_perimeter(state: &NecklaceState) -> f64 {
    (0..state.len()).map(|i| state.edge(i).norm()).sum()
}

/// Area-variation vectors `n_i` with `dA = sum_i n_i . dx_i` to first order.
///
/// `n_i = (|x_{i+1} - x_i| n_i^+ + |x_{i-1} - x_i| n_i^-) / 2`, with `n_i^+`
/// and `n_i^-` the outward unit normals of the two edges meeting at `x_i`.
/// For a clockwise ring the normals are taken with respect to the enclosed
/// region so the result is still the gradient of [`polygon_area`].
pub fn area_normals(state: &NecklaceState) -> Vec<Vec2> {
    let orientation = if is_clockwise(state) { -1.0 } else { 1.0 };
    // length * outward normal of a counter-clockwise edge d is (d.y, -d.x)
    let scaled_normal = |d: Vec2| orientation * Vec2::new(d.y, -d.x);
    (0..state.len())
        .map(|i| {
            let forward = state.edge(i);
            let backward = state.edge(state.prev(i));
            0.5 * (scaled_normal(forward) + scaled_normal(backward))
        })
        .collect()
}

/// Linearized gap between two discs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGap {
    /// `|x_i - x_j| - 2r`.
    pub gap: f64,
    /// Derivative of the gap with respect to `x_i`.
    pub grad_i: Vec2,
    /// Derivative of the gap with respect to `x_j`.
    pub grad_j: Vec2,
}

pub fn pair_gap(state: &NecklaceState, i: usize, j: usize) -> Result<PairGap, GeometryError> {
    if i == j || i >= state.len() || j >= state.len() {
        return Err(GeometryError::InvalidPair(i, j));
    }
    let d = state.centers[i] - state.centers[j];
    let dist = d.norm();
    if dist == 0.0 {
        return Err(GeometryError::CoincidentCenters(i, j));
    }
    let u = d / dist;
    Ok(PairGap {
        gap: dist - 2.0 * state.radius,
        grad_i: u,
        grad_j: -u,
    })
}

/// Signed exterior turning angle at every particle, positive for a left turn.
///
/// For a counter-clockwise ring a convex vertex turns left; concave arcs show
/// up as runs of negative angles.
pub fn turning_angles(state: &NecklaceState) -> Vec<f64> {
    (0..state.len())
        .map(|i| {
            let a = state.edge(state.prev(i));
            let b = state.edge(i);
            let cross = a.x * b.y - a.y * b.x;
            cross.atan2(a.dot(&b))
        })
        .collect()
}

/// True when no two non-adjacent edges of the center polygon intersect.
pub fn is_simple(state: &NecklaceState) -> bool {
    let n = state.len();
    let c = state.centers();
    for i in 0..n {
        let (a, b) = (c[i], c[state.next(i)]);
        for j in (i + 2)..n {
            if state.next(j) == i {
                continue;
            }
            if segments_intersect(a, b, c[j], c[state.next(j)]) {
                return false;
            }
        }
    }
    true
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let orient = |a: Vec2, b: Vec2, c: Vec2| {
        let v = (b - a).perp(&(c - a));
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    let on_segment = |a: Vec2, b: Vec2, p: Vec2| {
        p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    let o1 = orient(p1, p2, q1);
    let o2 = orient(p1, p2, q2);
    let o3 = orient(q1, q2, p1);
    let o4 = orient(q1, q2, p2);
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && on_segment(p1, p2, q1))
        || (o2 == 0 && on_segment(p1, p2, q2))
        || (o3 == 0 && on_segment(q1, q2, p1))
        || (o4 == 0 && on_segment(q1, q2, p2))
}

/// Winding number of the center polygon around `point`; nonzero means inside.
pub fn winding_number(centers: &[Vec2], point: Vec2) -> i32 {
    let n = centers.len();
    let mut winding = 0;
    for i in 0..n {
        let a = centers[i];
        let b = centers[(i + 1) % n];
        let side = (b - a).perp(&(point - a));
        if a.y <= point.y {
            if b.y > point.y && side > 0.0 {
                winding += 1;
            }
        } else if b.y <= point.y && side < 0.0 {
            winding -= 1;
        }
    }
    winding
}
