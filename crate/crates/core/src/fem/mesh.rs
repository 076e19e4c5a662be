//! Structured triangulation of the rectangular fluid domain `[0, L] x [0, l]`.

use super::FemError;
use crate::Vec2;

/// Fixed conforming triangulation of the rectangle.
///
/// Each of the `nx * ny` grid cells is split along its rising diagonal into
/// two positively oriented triangles; cell `(i, j)` owns elements
/// `2 (j nx + i)` (below the diagonal) and `2 (j nx + i) + 1` (above it).
#[derive(Debug, Clone, PartialEq)]
pub struct FluidMesh {
    length: f64,
    height: f64,
    nx: usize,
    ny: usize,
    nodes: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    areas: Vec<f64>,
}

impl FluidMesh {
    pub fn new(length: f64, height: f64, nx: usize, ny: usize) -> Result<Self, FemError> {
        if !(length > 0.0 && length.is_finite() && height > 0.0 && height.is_finite()) {
            return Err(FemError::InvalidMesh(format!(
                "domain extents must be positive, got {length} x {height}"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(FemError::InvalidMesh(format!(
                "need at least one cell per direction, got {nx} x {ny}"
            )));
        }
        let dx = length / nx as f64;
        let dy = height / ny as f64;
        let node = |i: usize, j: usize| j * (nx + 1) + i;

        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut boundary = Vec::with_capacity(nodes.capacity());
        for j in 0..=ny {
            for i in 0..=nx {
                // pin the last row/column exactly on the domain edge
                let x = if i == nx { length } else { i as f64 * dx };
                let y = if j == ny { height } else { j as f64 * dy };
                nodes.push(Vec2::new(x, y));
                boundary.push(i == 0 || j == 0 || i == nx || j == ny);
            }
        }

        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let a = node(i, j);
                let b = node(i + 1, j);
                let c = node(i + 1, j + 1);
                let d = node(i, j + 1);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let areas = triangles
            .iter()
            .map(|t| {
                let (p0, p1, p2) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
                0.5 * (p1 - p0).perp(&(p2 - p0))
            })
            .collect();

        Ok(Self {
            length,
            height,
            nx,
            ny,
            nodes,
            triangles,
            boundary,
            areas,
        })
    }

    /// Domain length `L` (x extent).
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Domain height `l` (y extent).
    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn cells(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_markers(&self) -> &[bool] {
        &self.boundary
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, element: usize) -> f64 {
        self.areas[element]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Largest circumdiameter; the hypotenuse of the cell triangles.
    pub fn h(&self) -> f64 {
        let dx = self.length / self.nx as f64;
        let dy = self.height / self.ny as f64;
        dx.hypot(dy)
    }

    pub fn vertices(&self, element: usize) -> [Vec2; 3] {
        let t = self.triangles[element];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    /// Gradients of the three barycentric coordinates, constant on the element.
    pub fn barycentric_gradients(&self, element: usize) -> [Vec2; 3] {
        let [p0, p1, p2] = self.vertices(element);
        let twice_area = 2.0 * self.areas[element];
        [
            Vec2::new(p1.y - p2.y, p2.x - p1.x) / twice_area,
            Vec2::new(p2.y - p0.y, p0.x - p2.x) / twice_area,
            Vec2::new(p0.y - p1.y, p1.x - p0.x) / twice_area,
        ]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x > 0.0 && p.x < self.length && p.y > 0.0 && p.y < self.height
    }

    /// Element containing `p` together with the barycentric coordinates of `p`.
    pub fn locate(&self, p: Vec2) -> Option<(usize, [f64; 3])> {
        if !(p.x >= 0.0 && p.x <= self.length && p.y >= 0.0 && p.y <= self.height) {
            return None;
        }
        let dx = self.length / self.nx as f64;
        let dy = self.height / self.ny as f64;
        let i = ((p.x / dx) as usize).min(self.nx - 1);
        let j = ((p.y / dy) as usize).min(self.ny - 1);
        let s = p.x / dx - i as f64;
        let t = p.y / dy - j as f64;
        let cell = 2 * (j * self.nx + i);
        let element = if s >= t { cell } else { cell + 1 };
        let [p0, _, _] = self.vertices(element);
        let g = self.barycentric_gradients(element);
        let l1 = g[1].dot(&(p - p0));
        let l2 = g[2].dot(&(p - p0));
        Some((element, [1.0 - l1 - l2, l1, l2]))
    }

    /// Elements whose cell intersects the axis-aligned box.
    pub fn elements_in_box(&self, lo: Vec2, hi: Vec2) -> impl Iterator<Item = usize> + '_ {
        let dx = self.length / self.nx as f64;
        let dy = self.height / self.ny as f64;
        let clamp = |v: f64, n: usize| -> usize {
            if v <= 0.0 {
                0
            } else {
                (v as usize).min(n - 1)
            }
        };
        let (i0, i1) = (clamp(lo.x / dx, self.nx), clamp(hi.x / dx, self.nx));
        let (j0, j1) = (clamp(lo.y / dy, self.ny), clamp(hi.y / dy, self.ny));
        let empty = hi.x < 0.0 || hi.y < 0.0 || lo.x > self.length || lo.y > self.height;
        let nx = self.nx;
        (j0..=j1)
            .filter(move |_| !empty)
            .flat_map(move |j| (i0..=i1).flat_map(move |i| {
                let cell = 2 * (j * nx + i);
                [cell, cell + 1]
            }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_cell() {
        let m = FluidMesh::new(1.0, 1.0, 1, 1).unwrap();
        assert_eq!(m.n_elements(), 2);
        assert_eq!(m.n_nodes(), 4);
        assert_relative_eq!(m.total_area(), 1.0);
    }

    #[test]
    fn large_mesh_partition() {
        let m = FluidMesh::new(150.0, 150.0, 100, 100).unwrap();
        assert_eq!(m.n_elements(), 20000);
        assert_eq!(m.n_nodes(), 101 * 101);
        assert_relative_eq!(m.total_area(), 22500.0, max_relative = 1e-9);
        assert!((0..m.n_elements()).all(|e| m.area(e) > 0.0));
    }

    #[test]
    fn boundary_nodes_are_on_the_edges() {
        let m = FluidMesh::new(3.0, 2.0, 6, 5).unwrap();
        for (p, &b) in m.nodes().iter().zip(m.boundary_markers()) {
            let on_edge = p.x == 0.0 || p.y == 0.0 || p.x == 3.0 || p.y == 2.0;
            assert_eq!(b, on_edge);
        }
        assert_eq!(m.boundary_markers().iter().filter(|b| **b).count(), 2 * 6 + 2 * 5);
    }

    #[test]
    fn rejects_bad_extents() {
        assert!(FluidMesh::new(0.0, 1.0, 4, 4).is_err());
        assert!(FluidMesh::new(1.0, -1.0, 4, 4).is_err());
        assert!(FluidMesh::new(1.0, 1.0, 0, 4).is_err());
    }

    #[test]
    fn locate_returns_consistent_barycentrics() {
        let m = FluidMesh::new(10.0, 7.0, 9, 8).unwrap();
        for p in [Vec2::new(0.3, 0.2), Vec2::new(5.55, 3.21), Vec2::new(9.99, 6.9), Vec2::new(10.0, 7.0)] {
            let (e, l) = m.locate(p).unwrap();
            assert!(l.iter().all(|&v| v > -1e-12));
            let v = m.vertices(e);
            let back = v[0] * l[0] + v[1] * l[1] + v[2] * l[2];
            assert_relative_eq!(back, p, epsilon = 1e-12);
        }
        assert!(m.locate(Vec2::new(-1.0, 1.0)).is_none());
    }

    #[test]
    fn box_query_covers_the_box() {
        let m = FluidMesh::new(10.0, 10.0, 10, 10).unwrap();
        let hits: Vec<_> = m.elements_in_box(Vec2::new(2.5, 2.5), Vec2::new(4.5, 3.5)).collect();
        assert_eq!(hits.len(), 2 * 3 * 2);
        assert_eq!(m.elements_in_box(Vec2::new(20.0, 20.0), Vec2::new(30.0, 30.0)).count(), 0);
    }
}
