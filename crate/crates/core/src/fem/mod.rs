//! Penalized Stokes problem on a fixed mesh.
//!
//! Velocity is approximated with continuous P1 functions enriched by the
//! cubic element bubble, pressure with continuous P1 functions. Rigidity of
//! the discs is imposed by adding `(2 / epsilon) int_B D(u) : D(v)` to the
//! viscous form, where `B` is the union of discs sampled at quadrature points.

mod coefficients;
mod mesh;
mod quadrature;
mod solver;
pub mod vtk;

pub use coefficients::{sample_coefficients, CoefficientFields, MeshQuadrature, NO_DISC};
pub use mesh::FluidMesh;
pub use quadrature::QuadratureRule;
pub use solver::{particle_velocities, velocity_block_triplets, FlowField, SolveStats, StokesSolver};

use crate::Vec2;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid fluid parameters: {0}")]
    InvalidParams(String),
    #[error("coefficient fields were sampled for {got} quadrature points, solver expects {expected}")]
    CoefficientMismatch { expected: usize, got: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error(
        "linear solve did not reach the residual target: relative residual {residual:e} \
         after {refinements} refinement steps"
    )]
    SolverBreakdown { residual: f64, refinements: usize },
    #[error(
        "disc {disc} covers no quadrature point (disc radius {radius} vs mesh size {h}); refine the mesh"
    )]
    UnresolvedDisc { disc: usize, radius: f64, h: f64 },
}

/// Dirichlet data imposed on the whole boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryProfile {
    /// `u_0 = 0`.
    #[default]
    Rest,
    /// `u_0 = (gamma_dot (y - l / 2), 0)` on all four sides.
    LinearShear,
}

impl BoundaryProfile {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryProfile::Rest => "rest",
            BoundaryProfile::LinearShear => "linear-shear",
        }
    }
}

impl fmt::Display for BoundaryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rest" => Ok(BoundaryProfile::Rest),
            "linear-shear" | "shear" => Ok(BoundaryProfile::LinearShear),
            other => Err(format!("unknown boundary profile '{other}' (expected rest or linear-shear)")),
        }
    }
}

/// Fluid and penalty parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    pub mu_in: f64,
    pub mu_out: f64,
    /// Penalty parameter; the discs behave like a fluid of viscosity `mu + 1 / epsilon`.
    pub epsilon: f64,
    pub gamma_dot: f64,
    pub boundary: BoundaryProfile,
}

impl FluidParams {
    pub fn new(
        mu_in: f64,
        mu_out: f64,
        epsilon: f64,
        gamma_dot: f64,
        boundary: BoundaryProfile,
    ) -> Result<Self, FemError> {
        let params = Self {
            mu_in,
            mu_out,
            epsilon,
            gamma_dot,
            boundary,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), FemError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.mu_in) || !positive(self.mu_out) {
            return Err(FemError::InvalidParams("viscosities must be positive".into()));
        }
        if !positive(self.epsilon) {
            return Err(FemError::InvalidParams("penalty epsilon must be positive".into()));
        }
        if !self.gamma_dot.is_finite() || self.gamma_dot < 0.0 {
            return Err(FemError::InvalidParams("shear rate must be nonnegative".into()));
        }
        if self.epsilon > 0.1 {
            log::warn!("penalty epsilon = {} is large; rigid motion will be poorly enforced", self.epsilon);
        }
        Ok(())
    }

    /// Viscosity contrast `mu_in / mu_out`.
    pub fn lambda(&self) -> f64 {
        self.mu_in / self.mu_out
    }

    /// Boundary velocity at a point of `mesh`.
    pub fn boundary_velocity(&self, mesh: &FluidMesh, p: Vec2) -> Vec2 {
        match self.boundary {
            BoundaryProfile::Rest => Vec2::zeros(),
            BoundaryProfile::LinearShear => Vec2::new(self.gamma_dot * (p.y - 0.5 * mesh.height()), 0.0),
        }
    }
}
