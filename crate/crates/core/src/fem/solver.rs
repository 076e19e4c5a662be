//! Assembly and direct solution of the penalized Stokes system.
//!
//! Unknowns are the P1 velocity values at interior nodes, the P1 pressure at
//! every node and one scalar multiplier enforcing `int p = 0`. The two bubble
//! coefficients of each element are eliminated locally before assembly and
//! recovered after the solve. Boundary velocities are imposed strongly by
//! moving their columns to the right-hand side.
//!
//! The sparsity pattern depends only on the mesh, so the fill-reducing
//! ordering and symbolic factorization are computed once; each solve only
//! refreshes values and refactors numerically.

use super::{CoefficientFields, FemError, FluidMesh, FluidParams, MeshQuadrature, QuadratureRule};
use crate::Vec2;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Conj, Mat, Par, Side};

const NONE: u32 = u32::MAX;
/// Relative residual required from the direct solve.
const RESIDUAL_TOL: f64 = 1e-9;
const MAX_REFINEMENTS: usize = 4;

/// Local degrees of freedom after bubble elimination: six P1 velocity
/// components (node-major, x then y) followed by three pressures.
const LOCAL: usize = 9;
/// Uncondensed local layout: six P1 velocity components, two bubble
/// components, three pressures.
const RAW: usize = 11;

/// Discrete velocity and pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    /// P1 velocity at every mesh node, boundary nodes included.
    pub velocity: Vec<Vec2>,
    /// Bubble coefficient of every element.
    pub bubble: Vec<Vec2>,
    /// P1 pressure at every node, normalized to zero mean.
    pub pressure: Vec<f64>,
}

impl FlowField {
    /// Velocity at barycentric coordinates `l` of `element`.
    pub fn velocity_at(&self, mesh: &FluidMesh, element: usize, l: [f64; 3]) -> Vec2 {
        let t = mesh.triangles()[element];
        let bubble = 27.0 * l[0] * l[1] * l[2];
        self.velocity[t[0]] * l[0] + self.velocity[t[1]] * l[1] + self.velocity[t[2]] * l[2]
            + self.bubble[element] * bubble
    }

    /// Velocity gradient `grad_u[a][b] = d u_a / d x_b` at barycentric `l`.
    pub fn gradient_at(&self, mesh: &FluidMesh, element: usize, l: [f64; 3]) -> [[f64; 2]; 2] {
        let t = mesh.triangles()[element];
        let g = mesh.barycentric_gradients(element);
        let gb = bubble_gradient(&g, l);
        let mut grad = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                grad[a][b] = (0..3).map(|s| self.velocity[t[s]][a] * g[s][b]).sum::<f64>()
                    + self.bubble[element][a] * gb[b];
            }
        }
        grad
    }

    /// Velocity at an arbitrary point of the domain.
    pub fn sample(&self, mesh: &FluidMesh, p: Vec2) -> Option<Vec2> {
        mesh.locate(p).map(|(e, l)| self.velocity_at(mesh, e, l))
    }

    pub fn pressure_at(&self, mesh: &FluidMesh, element: usize, l: [f64; 3]) -> f64 {
        let t = mesh.triangles()[element];
        (0..3).map(|k| self.pressure[t[k]] * l[k]).sum()
    }

    /// Velocity at every quadrature point.
    pub fn at_quadrature(&self, mesh: &FluidMesh, quad: &MeshQuadrature) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(quad.len());
        for e in 0..mesh.n_elements() {
            for k in 0..quad.per_element() {
                out.push(self.velocity_at(mesh, e, quad.barycentric(k)));
            }
        }
        out
    }

    /// `||D(u)||_{L^2(B)}` using the sampled disc indicator.
    pub fn strain_rate_norm_in_discs(
        &self,
        mesh: &FluidMesh,
        quad: &MeshQuadrature,
        coeffs: &CoefficientFields,
    ) -> f64 {
        let mut sum = 0.0;
        for e in 0..mesh.n_elements() {
            for (k, q) in quad.range(e).enumerate() {
                if !coeffs.indicator(q) {
                    continue;
                }
                let g = self.gradient_at(mesh, e, quad.barycentric(k));
                let off = 0.5 * (g[0][1] + g[1][0]);
                sum += quad.weights()[q] * (g[0][0] * g[0][0] + g[1][1] * g[1][1] + 2.0 * off * off);
            }
        }
        sum.sqrt()
    }

    /// `int_Omega q_k div(u)` for every pressure basis function `q_k`.
    pub fn divergence_moments(&self, mesh: &FluidMesh, quad: &MeshQuadrature) -> Vec<f64> {
        let mut out = vec![0.0; mesh.n_nodes()];
        for e in 0..mesh.n_elements() {
            let t = mesh.triangles()[e];
            for (k, q) in quad.range(e).enumerate() {
                let l = quad.barycentric(k);
                let g = self.gradient_at(mesh, e, l);
                let div = g[0][0] + g[1][1];
                for s in 0..3 {
                    out[t[s]] += quad.weights()[q] * l[s] * div;
                }
            }
        }
        out
    }

    /// Largest nodal velocity magnitude, bubbles excluded.
    pub fn max_nodal_speed(&self) -> f64 {
        self.velocity.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Mean velocity of every disc, `V_i = (1 / |B_i|) int_{B_i} u`, where both
/// the integral and `|B_i|` use the quadrature points flagged in `coeffs`.
pub fn particle_velocities(
    field: &FlowField,
    mesh: &FluidMesh,
    quad: &MeshQuadrature,
    coeffs: &CoefficientFields,
    n_discs: usize,
    radius: f64,
) -> Result<Vec<Vec2>, FemError> {
    let mut momentum = vec![Vec2::zeros(); n_discs];
    let mut measure = vec![0.0; n_discs];
    for e in 0..mesh.n_elements() {
        for (k, q) in quad.range(e).enumerate() {
            if !coeffs.indicator(q) {
                continue;
            }
            let d = coeffs.disc[q] as usize;
            let w = quad.weights()[q];
            momentum[d] += w * field.velocity_at(mesh, e, quad.barycentric(k));
            measure[d] += w;
        }
    }
    momentum
        .into_iter()
        .zip(measure)
        .enumerate()
        .map(|(disc, (m, w))| {
            if w > 0.0 {
                Ok(m / w)
            } else {
                Err(FemError::UnresolvedDisc {
                    disc,
                    radius,
                    h: mesh.h(),
                })
            }
        })
        .collect()
}

/// Diagnostics of the last linear solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    /// Final `||b - A x|| / ||b||`.
    pub relative_residual: f64,
    pub refinements: usize,
    /// Value of the zero-mean pressure multiplier; zero for compatible data.
    pub multiplier: f64,
}

/// Data kept from bubble elimination to recover the bubble coefficients.
#[derive(Debug, Clone, Copy, Default)]
struct Condensed {
    inv_bubble: [[f64; 2]; 2],
    coupling: [[f64; 2]; LOCAL],
    load: [f64; 2],
}

/// Penalized Stokes solver bound to a fixed mesh and quadrature rule.
pub struct StokesSolver {
    mesh: FluidMesh,
    quad: MeshQuadrature,
    /// Global index of velocity component `2 node + c`, or `NONE` on the boundary.
    velocity_dof: Vec<u32>,
    n_velocity: usize,
    n_dofs: usize,
    pattern: SymbolicSparseColMat<usize>,
    values: Vec<f64>,
    /// Value slot of local entry `(i, j)` of every element, or `NONE`.
    scatter: Vec<u32>,
    /// `int_Omega q_k` for every pressure basis function.
    pressure_mass: Vec<f64>,
    multiplier_slots: Vec<(usize, usize)>,
    symbolic: SymbolicCholesky<usize>,
    l_values: Vec<f64>,
    subdiag: Vec<f64>,
    perm_fwd: Vec<usize>,
    perm_bwd: Vec<usize>,
    factor_buffer: MemBuffer,
    solve_buffer: MemBuffer,
    condensed: Vec<Condensed>,
    last_stats: SolveStats,
}

impl std::fmt::Debug for StokesSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StokesSolver")
            .field("nodes", &self.mesh.n_nodes())
            .field("elements", &self.mesh.n_elements())
            .field("dofs", &self.n_dofs)
            .field("nnz", &self.values.len())
            .field("rule", &self.quad.rule())
            .finish()
    }
}

impl StokesSolver {
    pub fn new(mesh: FluidMesh, rule: QuadratureRule) -> Result<Self, FemError> {
        let quad = MeshQuadrature::new(&mesh, rule);
        let n_nodes = mesh.n_nodes();

        let mut velocity_dof = vec![NONE; 2 * n_nodes];
        let mut n_velocity = 0usize;
        for node in 0..n_nodes {
            if !mesh.is_boundary(node) {
                velocity_dof[2 * node] = n_velocity as u32;
                velocity_dof[2 * node + 1] = n_velocity as u32 + 1;
                n_velocity += 2;
            }
        }
        let multiplier = n_velocity + n_nodes;
        let n_dofs = multiplier + 1;

        let local_dofs = |t: &[usize; 3]| -> [u32; LOCAL] {
            let mut d = [NONE; LOCAL];
            for s in 0..3 {
                d[2 * s] = velocity_dof[2 * t[s]];
                d[2 * s + 1] = velocity_dof[2 * t[s] + 1];
                d[6 + s] = (n_velocity + t[s]) as u32;
            }
            d
        };

        let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n_dofs];
        for t in mesh.triangles() {
            let d = local_dofs(t);
            for &gj in &d {
                if gj == NONE {
                    continue;
                }
                for &gi in &d {
                    if gi != NONE {
                        columns[gj as usize].push(gi as usize);
                    }
                }
            }
        }
        for node in 0..n_nodes {
            columns[multiplier].push(n_velocity + node);
            columns[n_velocity + node].push(multiplier);
        }
        columns[multiplier].push(multiplier);

        let mut col_ptr = Vec::with_capacity(n_dofs + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0usize);
        for col in &mut columns {
            col.sort_unstable();
            col.dedup();
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        drop(columns);

        let slot = |row: usize, col: usize| -> usize {
            let start = col_ptr[col];
            let rows = &row_idx[start..col_ptr[col + 1]];
            start + rows.binary_search(&row).expect("entry in pattern")
        };

        let mut scatter = vec![NONE; mesh.n_elements() * LOCAL * LOCAL];
        for (e, t) in mesh.triangles().iter().enumerate() {
            let d = local_dofs(t);
            for i in 0..LOCAL {
                for j in 0..LOCAL {
                    if d[i] != NONE && d[j] != NONE {
                        scatter[(e * LOCAL + i) * LOCAL + j] = slot(d[i] as usize, d[j] as usize) as u32;
                    }
                }
            }
        }

        let mut pressure_mass = vec![0.0; n_nodes];
        for (e, t) in mesh.triangles().iter().enumerate() {
            for &node in t {
                pressure_mass[node] += mesh.area(e) / 3.0;
            }
        }
        let multiplier_slots = (0..n_nodes)
            .map(|node| (slot(n_velocity + node, multiplier), slot(multiplier, n_velocity + node)))
            .collect();

        let nnz = row_idx.len();
        let pattern = SymbolicSparseColMat::new_checked(n_dofs, n_dofs, col_ptr, None, row_idx);
        let symbolic = factorize_symbolic_cholesky(
            pattern.as_ref(),
            Side::Lower,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|e| FemError::Factorization(format!("{e:?}")))?;

        let par = Par::Seq;
        let factor_buffer = MemBuffer::try_new(
            symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(par, Default::default()),
        )
        .map_err(|e| FemError::Factorization(format!("{e:?}")))?;
        let solve_buffer = MemBuffer::try_new(symbolic.solve_in_place_scratch::<f64>(1, par))
            .map_err(|e| FemError::Factorization(format!("{e:?}")))?;

        Ok(Self {
            l_values: vec![0.0; symbolic.len_val()],
            subdiag: vec![0.0; n_dofs],
            perm_fwd: vec![0; n_dofs],
            perm_bwd: vec![0; n_dofs],
            condensed: vec![Condensed::default(); mesh.n_elements()],
            values: vec![0.0; nnz],
            mesh,
            quad,
            velocity_dof,
            n_velocity,
            n_dofs,
            pattern,
            scatter,
            pressure_mass,
            multiplier_slots,
            symbolic,
            factor_buffer,
            solve_buffer,
            last_stats: SolveStats::default(),
        })
    }

    pub fn mesh(&self) -> &FluidMesh {
        &self.mesh
    }

    pub fn quadrature(&self) -> &MeshQuadrature {
        &self.quad
    }

    /// Number of global unknowns, multiplier included.
    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn last_stats(&self) -> SolveStats {
        self.last_stats
    }

    /// Assembles the penalized system for the given coefficients and solves it.
    pub fn solve(&mut self, coeffs: &CoefficientFields, fluid: &FluidParams) -> Result<FlowField, FemError> {
        fluid.validate()?;
        if coeffs.len() != self.quad.len() {
            return Err(FemError::CoefficientMismatch {
                expected: self.quad.len(),
                got: coeffs.len(),
            });
        }
        let n_nodes = self.mesh.n_nodes();
        let boundary: Vec<Vec2> = self
            .mesh
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if self.mesh.is_boundary(i) {
                    fluid.boundary_velocity(&self.mesh, *p)
                } else {
                    Vec2::zeros()
                }
            })
            .collect();

        self.values.fill(0.0);
        let mut rhs = vec![0.0; self.n_dofs];
        for e in 0..self.mesh.n_elements() {
            let t = self.mesh.triangles()[e];
            let raw = element_system(&self.mesh, &self.quad, coeffs, fluid, e);
            let (matrix, load, cond) = condense(&raw);
            self.condensed[e] = cond;

            let mut dofs = [NONE; LOCAL];
            let mut known = [0.0; LOCAL];
            for s in 0..3 {
                for c in 0..2 {
                    dofs[2 * s + c] = self.velocity_dof[2 * t[s] + c];
                    known[2 * s + c] = boundary[t[s]][c];
                }
                dofs[6 + s] = (self.n_velocity + t[s]) as u32;
            }
            for i in 0..LOCAL {
                if dofs[i] == NONE {
                    continue;
                }
                let gi = dofs[i] as usize;
                rhs[gi] += load[i];
                for j in 0..LOCAL {
                    if dofs[j] == NONE {
                        rhs[gi] -= matrix[i][j] * known[j];
                    } else {
                        let slot = self.scatter[(e * LOCAL + i) * LOCAL + j] as usize;
                        self.values[slot] += matrix[i][j];
                    }
                }
            }
        }
        for (node, &(a, b)) in self.multiplier_slots.iter().enumerate() {
            self.values[a] = self.pressure_mass[node];
            self.values[b] = self.pressure_mass[node];
        }

        let solution = self.factor_and_solve(&rhs)?;

        let mut velocity = boundary;
        for node in 0..n_nodes {
            for c in 0..2 {
                let d = self.velocity_dof[2 * node + c];
                if d != NONE {
                    velocity[node][c] = solution[d as usize];
                }
            }
        }
        let mut pressure: Vec<f64> = solution[self.n_velocity..self.n_velocity + n_nodes].to_vec();
        let mean = pressure.iter().zip(&self.pressure_mass).map(|(p, m)| p * m).sum::<f64>()
            / self.mesh.total_area();
        for p in &mut pressure {
            *p -= mean;
        }

        let mut bubble = vec![Vec2::zeros(); self.mesh.n_elements()];
        for (e, b) in bubble.iter_mut().enumerate() {
            let t = self.mesh.triangles()[e];
            let mut x = [0.0; LOCAL];
            for s in 0..3 {
                x[2 * s] = velocity[t[s]].x;
                x[2 * s + 1] = velocity[t[s]].y;
                x[6 + s] = solution[self.n_velocity + t[s]];
            }
            let cond = &self.condensed[e];
            let mut reduced = cond.load;
            for (i, xi) in x.iter().enumerate() {
                reduced[0] -= cond.coupling[i][0] * xi;
                reduced[1] -= cond.coupling[i][1] * xi;
            }
            *b = Vec2::new(
                cond.inv_bubble[0][0] * reduced[0] + cond.inv_bubble[0][1] * reduced[1],
                cond.inv_bubble[1][0] * reduced[0] + cond.inv_bubble[1][1] * reduced[1],
            );
        }

        self.last_stats.multiplier = solution[self.n_dofs - 1];
        Ok(FlowField {
            velocity,
            bubble,
            pressure,
        })
    }

    fn matrix(&self) -> SparseColMatRef<'_, usize, f64> {
        SparseColMatRef::new(self.pattern.as_ref(), &self.values)
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mut r = rhs.to_vec();
        let pattern = self.pattern.as_ref();
        for col in 0..self.n_dofs {
            let xc = x[col];
            if xc == 0.0 {
                continue;
            }
            for slot in pattern.col_range(col) {
                r[pattern.row_idx()[slot]] -= self.values[slot] * xc;
            }
        }
        r
    }

    fn factor_and_solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>, FemError> {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rhs_norm = norm(rhs);
        if rhs_norm == 0.0 {
            self.last_stats = SolveStats::default();
            return Ok(vec![0.0; self.n_dofs]);
        }

        let par = Par::Seq;
        let a = SparseColMatRef::new(self.pattern.as_ref(), &self.values);
        let lblt = self.symbolic.factorize_numeric_intranode_lblt(
            &mut self.l_values,
            &mut self.subdiag,
            &mut self.perm_fwd,
            &mut self.perm_bwd,
            a,
            Side::Lower,
            par,
            MemStack::new(&mut self.factor_buffer),
            Default::default(),
        );

        let solve = |b: &[f64], buffer: &mut MemBuffer| -> Vec<f64> {
            let mut x = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
            lblt.solve_in_place_with_conj(Conj::No, x.as_mut(), par, MemStack::new(buffer));
            (0..b.len()).map(|i| x[(i, 0)]).collect()
        };

        let mut x = solve(rhs, &mut self.solve_buffer);
        let mut refinements = 0;
        let mut rel;
        loop {
            // residual computed against the matrix just factored
            let r = {
                let mut r = rhs.to_vec();
                let pattern = self.pattern.as_ref();
                for col in 0..self.n_dofs {
                    let xc = x[col];
                    if xc == 0.0 {
                        continue;
                    }
                    for slot in pattern.col_range(col) {
                        r[pattern.row_idx()[slot]] -= self.values[slot] * xc;
                    }
                }
                r
            };
            rel = norm(&r) / rhs_norm;
            if !rel.is_finite() {
                break;
            }
            if rel <= RESIDUAL_TOL * 1e-3 || refinements == MAX_REFINEMENTS {
                break;
            }
            let dx = solve(&r, &mut self.solve_buffer);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            refinements += 1;
        }
        self.last_stats = SolveStats {
            relative_residual: rel,
            refinements,
            multiplier: 0.0,
        };
        if !(rel <= RESIDUAL_TOL) {
            return Err(FemError::SolverBreakdown {
                residual: rel,
                refinements,
            });
        }
        Ok(x)
    }

    /// Relative residual of `x` for the most recently assembled system.
    pub fn check_residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        norm(&self.residual(x, rhs)) / norm(rhs).max(f64::MIN_POSITIVE)
    }

    /// Number of stored entries of the assembled matrix.
    pub fn nnz(&self) -> usize {
        self.matrix().compute_nnz()
    }
}

fn bubble_gradient(g: &[Vec2; 3], l: [f64; 3]) -> Vec2 {
    27.0 * (g[0] * (l[1] * l[2]) + g[1] * (l[0] * l[2]) + g[2] * (l[0] * l[1]))
}

/// Uncondensed element matrix and load in the `RAW` layout.
pub(crate) struct ElementSystem {
    pub matrix: [[f64; RAW]; RAW],
    pub load: [f64; RAW],
}

/// Element contribution of `int 2 (mu + chi / epsilon) D(u):D(v) - int p div v
/// - int q div u` and `int f . v`.
pub(crate) fn element_system(
    mesh: &FluidMesh,
    quad: &MeshQuadrature,
    coeffs: &CoefficientFields,
    fluid: &FluidParams,
    e: usize,
) -> ElementSystem {
    let g = mesh.barycentric_gradients(e);
    let penalty = 1.0 / fluid.epsilon;

    let mut s0 = 0.0;
    let mut sb = Vec2::zeros();
    let mut sbb = [[0.0; 2]; 2];
    let mut lk = [0.0; 3];
    let mut lkb = [Vec2::zeros(); 3];
    let mut fs = [Vec2::zeros(); 4];

    for (k, q) in quad.range(e).enumerate() {
        let l = quad.barycentric(k);
        let w = quad.weights()[q];
        let mu = coeffs.viscosity[q] + if coeffs.indicator(q) { penalty } else { 0.0 };
        let wmu = w * mu;
        let gb = bubble_gradient(&g, l);
        s0 += wmu;
        sb += wmu * gb;
        for a in 0..2 {
            for b in 0..2 {
                sbb[a][b] += wmu * gb[a] * gb[b];
            }
        }
        for s in 0..3 {
            lk[s] += w * l[s];
            lkb[s] += (w * l[s]) * gb;
        }
        let f = coeffs.force[q];
        if f != Vec2::zeros() {
            for s in 0..3 {
                fs[s] += (w * l[s]) * f;
            }
            fs[3] += (w * 27.0 * l[0] * l[1] * l[2]) * f;
        }
    }

    let mut m = [[0.0; RAW]; RAW];
    let mut load = [0.0; RAW];
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };

    for s in 0..3 {
        for t in 0..3 {
            let gg = g[s].dot(&g[t]);
            for a in 0..2 {
                for b in 0..2 {
                    m[2 * s + a][2 * t + b] = s0 * (delta(a, b) * gg + g[s][b] * g[t][a]);
                }
            }
        }
        let gsb = g[s].dot(&sb);
        for a in 0..2 {
            for b in 0..2 {
                let v = delta(a, b) * gsb + g[s][b] * sb[a];
                m[2 * s + a][6 + b] = v;
                m[6 + b][2 * s + a] = v;
            }
        }
    }
    let trace = sbb[0][0] + sbb[1][1];
    for a in 0..2 {
        for b in 0..2 {
            m[6 + a][6 + b] = delta(a, b) * trace + sbb[a][b];
        }
    }
    for k in 0..3 {
        for s in 0..3 {
            for a in 0..2 {
                let v = -g[s][a] * lk[k];
                m[8 + k][2 * s + a] = v;
                m[2 * s + a][8 + k] = v;
            }
        }
        for a in 0..2 {
            let v = -lkb[k][a];
            m[8 + k][6 + a] = v;
            m[6 + a][8 + k] = v;
        }
    }
    for s in 0..3 {
        load[2 * s] = fs[s].x;
        load[2 * s + 1] = fs[s].y;
    }
    load[6] = fs[3].x;
    load[7] = fs[3].y;

    ElementSystem { matrix: m, load }
}

/// Eliminates the two bubble unknowns from an element system.
fn condense(raw: &ElementSystem) -> ([[f64; LOCAL]; LOCAL], [f64; LOCAL], Condensed) {
    // RAW index of each LOCAL index
    const MAP: [usize; LOCAL] = [0, 1, 2, 3, 4, 5, 8, 9, 10];
    let kb = [[raw.matrix[6][6], raw.matrix[6][7]], [raw.matrix[7][6], raw.matrix[7][7]]];
    let det = kb[0][0] * kb[1][1] - kb[0][1] * kb[1][0];
    let inv = [[kb[1][1] / det, -kb[0][1] / det], [-kb[1][0] / det, kb[0][0] / det]];
    let fb = [raw.load[6], raw.load[7]];

    let mut coupling = [[0.0; 2]; LOCAL];
    for (i, &ri) in MAP.iter().enumerate() {
        coupling[i] = [raw.matrix[ri][6], raw.matrix[ri][7]];
    }
    // coupling * inv
    let mut ci = [[0.0; 2]; LOCAL];
    for i in 0..LOCAL {
        for b in 0..2 {
            ci[i][b] = coupling[i][0] * inv[0][b] + coupling[i][1] * inv[1][b];
        }
    }
    let mut matrix = [[0.0; LOCAL]; LOCAL];
    let mut load = [0.0; LOCAL];
    for i in 0..LOCAL {
        for j in 0..LOCAL {
            matrix[i][j] =
                raw.matrix[MAP[i]][MAP[j]] - ci[i][0] * coupling[j][0] - ci[i][1] * coupling[j][1];
        }
        load[i] = raw.load[MAP[i]] - ci[i][0] * fb[0] - ci[i][1] * fb[1];
    }
    (
        matrix,
        load,
        Condensed {
            inv_bubble: inv,
            coupling,
            load: fb,
        },
    )
}

/// Uncondensed velocity-velocity block over all P1 and bubble components,
/// boundary nodes included, as `(row, col, value)` triplets. P1 component
/// `c` of node `k` is index `2 k + c`; the bubble of element `e` follows at
/// `2 n_nodes + 2 e + c`.
pub fn velocity_block_triplets(
    mesh: &FluidMesh,
    quad: &MeshQuadrature,
    coeffs: &CoefficientFields,
    fluid: &FluidParams,
) -> Vec<(usize, usize, f64)> {
    let n_nodes = mesh.n_nodes();
    let mut out = Vec::new();
    for e in 0..mesh.n_elements() {
        let t = mesh.triangles()[e];
        let raw = element_system(mesh, quad, coeffs, fluid, e);
        let global = |i: usize| -> usize {
            if i < 6 {
                2 * t[i / 2] + i % 2
            } else {
                2 * n_nodes + 2 * e + (i - 6)
            }
        };
        for i in 0..8 {
            for j in 0..8 {
                out.push((global(i), global(j), raw.matrix[i][j]));
            }
        }
    }
    out
}
