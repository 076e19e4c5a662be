//! Velocity projections enforcing contact, chain cohesion and constant area.
//!
//! Constraints are linearized at the current positions: a pair gap becomes
//! `D + dt G . V`. Rows are stored divided by `dt`, i.e. as
//! `G . V >= -D / dt`, so multipliers and residuals are in velocity units.

mod uzawa;

pub use uzawa::{uzawa, LinearRow, UzawaOptions, UzawaSolution};

use crate::necklace::{area_normals, pair_gap, polygon_area, GeometryError, NecklaceState};
use crate::Vec2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
    #[error(
        "velocity projection did not converge in {iterations} iterations \
         (feasibility {feasibility:e}, complementarity {complementarity:e})"
    )]
    NotConverged {
        iterations: usize,
        feasibility: f64,
        complementarity: f64,
    },
    #[error("area gradient vanishes; polygon is degenerate")]
    DegenerateNormals,
    #[error("velocity vector has {got} entries, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// Non-adjacent pair, predicted gap `>= 0`.
    NonOverlap,
    /// Ring neighbors, predicted gap `= 0`.
    Stick,
    /// Predicted polygon area equal to the reference area.
    Area,
}

/// One linearized constraint `gap + dt * sum_i grad_i . V_i  (>= | =)  0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub kind: ConstraintKind,
    /// Particle pair for contact rows.
    pub pair: Option<(usize, usize)>,
    pub gap: f64,
    pub gradient: Vec<(usize, Vec2)>,
}

impl ConstraintRow {
    /// Predicted gap `gap + dt grad . V`.
    pub fn predicted(&self, v: &[Vec2], dt: f64) -> f64 {
        self.gap + dt * self.gradient.iter().map(|(i, g)| g.dot(&v[*i])).sum::<f64>()
    }

    fn linear(&self, dt: f64) -> LinearRow {
        LinearRow {
            coeffs: self.gradient.clone(),
            rhs: -self.gap / dt,
            equality: self.kind != ConstraintKind::NonOverlap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub rows: Vec<ConstraintRow>,
    pub dt: f64,
    pub n_particles: usize,
}

impl ConstraintSystem {
    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.rows.iter().filter(|r| r.kind == kind).count()
    }

    /// Rows in velocity units, as fed to [`uzawa`].
    pub fn linear_rows(&self) -> Vec<LinearRow> {
        self.rows.iter().map(|r| r.linear(self.dt)).collect()
    }

    /// Largest violation of the predicted gaps (length units).
    pub fn max_violation(&self, v: &[Vec2]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let p = r.predicted(v, self.dt);
                match r.kind {
                    ConstraintKind::NonOverlap => (-p).max(0.0),
                    _ => p.abs(),
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|predicted gap|` over stick rows (length units).
    pub fn max_stick_violation(&self, v: &[Vec2]) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.kind == ConstraintKind::Stick)
            .map(|r| r.predicted(v, self.dt).abs())
            .fold(0.0, f64::max)
    }
}

/// Stick rows for every ring edge and non-overlap rows for non-adjacent
/// pairs whose gap is below `cutoff`.
pub fn build_contact_constraints(state: &NecklaceState, dt: f64, cutoff: f64) -> Result<ConstraintSystem, ProjectionError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ProjectionError::InvalidTimeStep(dt));
    }
    let n = state.len();
    let mut rows = Vec::with_capacity(2 * n);
    for i in 0..n {
        let j = state.next(i);
        let g = pair_gap(state, i, j)?;
        rows.push(ConstraintRow {
            kind: ConstraintKind::Stick,
            pair: Some((i, j)),
            gap: g.gap,
            gradient: vec![(i, g.grad_i), (j, g.grad_j)],
        });
    }
    for i in 0..n {
        for j in i + 1..n {
            if state.adjacent(i, j) {
                continue;
            }
            let g = pair_gap(state, i, j)?;
            if g.gap < cutoff {
                rows.push(ConstraintRow {
                    kind: ConstraintKind::NonOverlap,
                    pair: Some((i, j)),
                    gap: g.gap,
                    gradient: vec![(i, g.grad_i), (j, g.grad_j)],
                });
            }
        }
    }
    Ok(ConstraintSystem {
        rows,
        dt,
        n_particles: n,
    })
}

/// Single equality row `A - A0 + dt sum n_i . V_i = 0`.
pub fn build_area_constraint(state: &NecklaceState, a0: f64, dt: f64) -> Result<ConstraintRow, ProjectionError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ProjectionError::InvalidTimeStep(dt));
    }
    Ok(ConstraintRow {
        kind: ConstraintKind::Area,
        pair: None,
        gap: polygon_area(state) - a0,
        gradient: area_normals(state).into_iter().enumerate().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub velocities: Vec<Vec2>,
    /// One multiplier per row of the system, in row order.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    /// Largest row violation in velocity units.
    pub residual: f64,
    pub complementarity: f64,
}

/// Euclidean projection of `v_tilde` onto the rows of `sys`.
pub fn project_contacts(
    v_tilde: &[Vec2],
    sys: &ConstraintSystem,
    warm: Option<&[f64]>,
    opts: &UzawaOptions,
) -> Result<ProjectionResult, ProjectionError> {
    if v_tilde.len() != sys.n_particles {
        return Err(ProjectionError::SizeMismatch {
            expected: sys.n_particles,
            got: v_tilde.len(),
        });
    }
    let s = uzawa(v_tilde, &sys.linear_rows(), warm, opts);
    if !s.converged {
        return Err(ProjectionError::NotConverged {
            iterations: s.iterations,
            feasibility: s.feasibility,
            complementarity: s.complementarity,
        });
    }
    Ok(ProjectionResult {
        velocities: s.velocities,
        multipliers: s.multipliers,
        iterations: s.iterations,
        residual: s.feasibility,
        complementarity: s.complementarity,
    })
}

/// Projection onto `{V : A_n + dt sum n_i . V_i = A0}` in closed form.
pub fn project_area(
    v_hat: &[Vec2],
    state: &NecklaceState,
    a0: f64,
    a_n: f64,
    dt: f64,
) -> Result<Vec<Vec2>, ProjectionError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ProjectionError::InvalidTimeStep(dt));
    }
    if v_hat.len() != state.len() {
        return Err(ProjectionError::SizeMismatch {
            expected: state.len(),
            got: v_hat.len(),
        });
    }
    let normals = area_normals(state);
    let norm2: f64 = normals.iter().map(|n| n.norm_squared()).sum();
    if !(norm2 > 0.0) {
        return Err(ProjectionError::DegenerateNormals);
    }
    let current: f64 = normals.iter().zip(v_hat).map(|(n, v)| n.dot(v)).sum();
    let mu = ((a0 - a_n) / dt - current) / norm2;
    Ok(v_hat.iter().zip(&normals).map(|(v, n)| v + mu * n).collect())
}
