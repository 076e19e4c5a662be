//! Per-quadrature-point sampling of viscosity, disc indicator and body force.

use super::{FluidMesh, FluidParams, QuadratureRule};
use crate::necklace::{winding_number, ForceSet, NecklaceState};
use crate::Vec2;

/// Marker for quadrature points outside every disc.
pub const NO_DISC: u32 = u32::MAX;

/// Physical positions and weights of all quadrature points of a mesh,
/// stored element by element.
#[derive(Debug, Clone)]
pub struct MeshQuadrature {
    rule: QuadratureRule,
    barycentric: Vec<[f64; 3]>,
    points: Vec<Vec2>,
    weights: Vec<f64>,
}

impl MeshQuadrature {
    pub fn new(mesh: &FluidMesh, rule: QuadratureRule) -> Self {
        let reference = rule.points();
        let per = reference.len();
        let mut points = Vec::with_capacity(per * mesh.n_elements());
        let mut weights = Vec::with_capacity(points.capacity());
        for e in 0..mesh.n_elements() {
            let v = mesh.vertices(e);
            let area = mesh.area(e);
            for (l, w) in &reference {
                points.push(v[0] * l[0] + v[1] * l[1] + v[2] * l[2]);
                weights.push(w * area);
            }
        }
        Self {
            rule,
            barycentric: reference.into_iter().map(|(l, _)| l).collect(),
            points,
            weights,
        }
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn per_element(&self) -> usize {
        self.barycentric.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Barycentric coordinates of local point `k` of any element.
    pub fn barycentric(&self, k: usize) -> [f64; 3] {
        self.barycentric[k]
    }

    /// Global indices of the quadrature points of `element`.
    pub fn range(&self, element: usize) -> std::ops::Range<usize> {
        let per = self.per_element();
        element * per..(element + 1) * per
    }
}

/// Coefficients of the penalized problem at every quadrature point.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFields {
    /// Physical viscosity, `mu_in` inside the center polygon, `mu_out` outside.
    pub viscosity: Vec<f64>,
    /// Index of the disc covering the point, or [`NO_DISC`].
    pub disc: Vec<u32>,
    /// Body-force density; nonzero only inside discs.
    pub force: Vec<Vec2>,
}

impl CoefficientFields {
    /// Constant viscosity, no discs, no force.
    pub fn uniform(quad: &MeshQuadrature, mu: f64) -> Self {
        Self {
            viscosity: vec![mu; quad.len()],
            disc: vec![NO_DISC; quad.len()],
            force: vec![Vec2::zeros(); quad.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.viscosity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.viscosity.is_empty()
    }

    pub fn indicator(&self, q: usize) -> bool {
        self.disc[q] != NO_DISC
    }

    /// Quadrature measure of each disc, `sum of weights of covered points`.
    pub fn disc_measures(&self, quad: &MeshQuadrature, n_discs: usize) -> Vec<f64> {
        let mut m = vec![0.0; n_discs];
        for (q, &d) in self.disc.iter().enumerate() {
            if d != NO_DISC {
                m[d as usize] += quad.weights()[q];
            }
        }
        m
    }
}

/// Samples viscosity, disc indicator and body force at every quadrature point.
///
/// A point belongs to disc `i` when it lies strictly inside it; points covered
/// by two discs go to the nearer center. The force density of disc `i` is
/// `f_i / |B_i|`, with `|B_i|` the quadrature measure of its sampled points, so
/// the integrated force is exactly `f_i`. Viscosity depends only on the center polygon.
pub fn sample_coefficients(
    mesh: &FluidMesh,
    quad: &MeshQuadrature,
    state: &NecklaceState,
    fluid: &FluidParams,
    forces: &ForceSet,
) -> CoefficientFields {
    assert_eq!(forces.len(), state.len(), "one force per particle");
    let n_q = quad.len();
    let points = quad.points();
    let mut viscosity = vec![fluid.mu_out; n_q];
    let mut disc = vec![NO_DISC; n_q];
    let mut force = vec![Vec2::zeros(); n_q];

    let centers = state.centers();
    let (mut lo, mut hi) = (centers[0], centers[0]);
    for c in centers {
        lo = lo.inf(c);
        hi = hi.sup(c);
    }
    for e in mesh.elements_in_box(lo, hi) {
        for q in quad.range(e) {
            let p = points[q];
            if p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && winding_number(centers, p) != 0 {
                viscosity[q] = fluid.mu_in;
            }
        }
    }

    let r = state.radius();
    let r2 = r * r;
    let pad = Vec2::new(r, r);
    for (i, c) in centers.iter().enumerate() {
        for e in mesh.elements_in_box(c - pad, c + pad) {
            for q in quad.range(e) {
                let d2 = (points[q] - c).norm_squared();
                if d2 >= r2 {
                    continue;
                }
                let current = disc[q];
                if current != NO_DISC && (points[q] - centers[current as usize]).norm_squared() <= d2 {
                    continue;
                }
                disc[q] = i as u32;
            }
        }
    }

    // each disc carries exactly its total force over its sampled measure
    let mut measure = vec![0.0; centers.len()];
    let weights = quad.weights();
    for (q, d) in disc.iter().enumerate() {
        if *d != NO_DISC {
            measure[*d as usize] += weights[q];
        }
    }
    for (q, d) in disc.iter().enumerate() {
        if *d != NO_DISC {
            let i = *d as usize;
            force[q] = forces.total(i) * (1.0 / measure[i]);
        }
    }

    CoefficientFields { viscosity, disc, force }
}
