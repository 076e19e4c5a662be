use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;
use vesicle_core::fem::{
    particle_velocities, sample_coefficients, velocity_block_triplets, BoundaryProfile, CoefficientFields,
    FlowField, FluidMesh, FluidParams, MeshQuadrature, QuadratureRule, StokesSolver,
};
use vesicle_core::necklace::membrane_forces;
use vesicle_core::{MembraneParams, NecklaceState, Vec2};

fn shear(mu: f64, epsilon: f64) -> FluidParams {
    FluidParams::new(mu, mu, epsilon, 1.0, BoundaryProfile::LinearShear).unwrap()
}

/// Uniform viscosity with the quadrature points of one disc flagged.
fn one_disc(quad: &MeshQuadrature, mu: f64, center: Vec2, r: f64) -> CoefficientFields {
    let mut c = CoefficientFields::uniform(quad, mu);
    for (q, p) in quad.points().iter().enumerate() {
        if (p - center).norm() < r {
            c.disc[q] = 0;
        }
    }
    c
}

fn ring(n: usize, center: Vec2, big_r: f64, r: f64, squash: f64) -> NecklaceState {
    let c = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            center + Vec2::new(big_r * t.cos(), squash * big_r * t.sin())
        })
        .collect();
    NecklaceState::new(c, r).unwrap()
}

#[test]
fn linear_shear_is_reproduced_exactly() {
    let mesh = FluidMesh::new(30.0, 20.0, 24, 16).unwrap();
    let mut solver = StokesSolver::new(mesh, QuadratureRule::Dunavant7).unwrap();
    let fluid = shear(1.0, 5e-3);
    let coeffs = CoefficientFields::uniform(solver.quadrature(), 1.0);
    let field = solver.solve(&coeffs, &fluid).unwrap();
    let mesh = solver.mesh();
    let mut err: f64 = 0.0;
    for (k, p) in mesh.nodes().iter().enumerate() {
        let exact = Vec2::new(p.y - 10.0, 0.0);
        err = err.max((field.velocity[k] - exact).amax());
    }
    for b in &field.bubble {
        err = err.max(b.amax());
    }
    assert!(err < 1e-9, "max error {err:e}");
    assert!(field.pressure.iter().all(|p| p.abs() < 1e-9));
}

#[test]
fn fluid_at_rest_stays_at_rest() {
    let mesh = FluidMesh::new(10.0, 10.0, 12, 12).unwrap();
    let mut solver = StokesSolver::new(mesh, QuadratureRule::Gauss3).unwrap();
    let fluid = FluidParams::new(1.0, 1.0, 1e-2, 1.0, BoundaryProfile::Rest).unwrap();
    let coeffs = CoefficientFields::uniform(solver.quadrature(), 1.0);
    let field = solver.solve(&coeffs, &fluid).unwrap();
    assert_eq!(field.max_nodal_speed(), 0.0);
    assert!(field.pressure.iter().all(|p| *p == 0.0));
}

#[test]
fn dirichlet_nodes_carry_boundary_data_with_discs() {
    let mesh = FluidMesh::new(40.0, 30.0, 40, 30).unwrap();
    let mut solver = StokesSolver::new(mesh, QuadratureRule::Dunavant7).unwrap();
    let fluid = FluidParams::new(5.0, 1.0, 1e-2, 1.0, BoundaryProfile::LinearShear).unwrap();
    let state = ring(20, Vec2::new(20.0, 15.0), 9.0, 1.4, 0.6);
    let forces = membrane_forces(&state, &MembraneParams::new(200.0, 0.25, 2.8).unwrap()).unwrap();
    let coeffs = sample_coefficients(solver.mesh(), solver.quadrature(), &state, &fluid, &forces);
    let field = solver.solve(&coeffs, &fluid).unwrap();
    let mesh = solver.mesh();
    for (k, p) in mesh.nodes().iter().enumerate() {
        if mesh.is_boundary(k) {
            assert_eq!(field.velocity[k], fluid.boundary_velocity(mesh, *p));
        }
    }
}

#[test]
fn divergence_is_orthogonal_to_pressure_space() {
    let mesh = FluidMesh::new(40.0, 30.0, 40, 30).unwrap();
    let mut solver = StokesSolver::new(mesh, QuadratureRule::Dunavant7).unwrap();
    let fluid = FluidParams::new(3.0, 1.0, 5e-3, 1.0, BoundaryProfile::LinearShear).unwrap();
    let state = ring(24, Vec2::new(20.0, 15.0), 10.0, 1.3, 0.5);
    let forces = membrane_forces(&state, &MembraneParams::new(600.0, 0.5, 2.6).unwrap()).unwrap();
    let coeffs = sample_coefficients(solver.mesh(), solver.quadrature(), &state, &fluid, &forces);
    let field = solver.solve(&coeffs, &fluid).unwrap();
    let mesh = solver.mesh();
    let moments = field.divergence_moments(mesh, solver.quadrature());
    let l2: f64 = (field.velocity.iter().map(|v| v.norm_squared()).sum::<f64>() * mesh.total_area()
        / mesh.n_nodes() as f64)
        .sqrt();
    let worst = moments.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(worst <= 1e-9 * l2, "worst moment {worst:e}, |u| {l2:e}");
    assert!(solver.last_stats().relative_residual <= 1e-9);
}

#[test]
fn velocity_block_is_symmetric_positive_semidefinite() {
    let mesh = FluidMesh::new(6.0, 6.0, 4, 4).unwrap();
    let quad = MeshQuadrature::new(&mesh, QuadratureRule::Dunavant7);
    let mut coeffs = one_disc(&quad, 1.0, Vec2::new(3.0, 3.0), 1.2);
    for (q, p) in quad.points().iter().enumerate() {
        if p.x > 4.0 {
            coeffs.viscosity[q] = 7.5;
        }
    }
    let fluid = FluidParams::new(7.5, 1.0, 1e-2, 1.0, BoundaryProfile::LinearShear).unwrap();
    let n = 2 * mesh.n_nodes() + 2 * mesh.n_elements();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in velocity_block_triplets(&mesh, &quad, &coeffs, &fluid) {
        a[(i, j)] += v;
    }
    let scale = a.amax();
    assert!((&a - a.transpose()).amax() <= 1e-12 * scale);
    let eig = SymmetricEigen::new(a).eigenvalues;
    let min = eig.min();
    assert!(min >= -1e-10 * scale, "smallest eigenvalue {min:e}");
    // rigid motions span the kernel of the strain-rate form: 2 translations + 1 rotation
    let zero = eig.iter().filter(|e| e.abs() <= 1e-10 * scale).count();
    assert_eq!(zero, 3);
}

fn disc_strain(epsilon: f64) -> f64 {
    let (side, r) = (20.0, 2.5);
    let mesh = FluidMesh::new(side, side, 64, 64).unwrap();
    let mut solver = StokesSolver::new(mesh, QuadratureRule::Dunavant7).unwrap();
    let coeffs = one_disc(solver.quadrature(), 1.0, Vec2::new(10.0, 10.0), r);
    let field = solver.solve(&coeffs, &shear(1.0, epsilon)).unwrap();
    field.strain_rate_norm_in_discs(solver.mesh(), solver.quadrature(), &coeffs)
}

#[test]
fn penalty_drives_strain_in_disc_to_zero() {
    let eps = [1e-1, 1e-2, 5e-3, 1e-3];
    let d: Vec<f64> = eps.iter().map(|e| disc_strain(*e)).collect();
    for w in d.windows(2) {
        assert!(w[1] <= w[0], "{d:?}");
    }
    let order = |a: usize, b: usize| (d[a] / d[b]).log10() / (eps[a] / eps[b]).log10();
    assert!(order(0, 1) >= 0.8, "{d:?}");
    assert!(order(1, 3) >= 0.8, "{d:?}");
}

#[test]
fn velocity_scales_inversely_with_viscosity() {
    let mesh = FluidMesh::new(30.0, 30.0, 30, 30).unwrap();
    let mut solver = StokesSolver::new(mesh, QuadratureRule::Dunavant7).unwrap();
    let state = ring(16, Vec2::new(15.0, 15.0), 7.0, 1.2, 0.7);
    let forces = membrane_forces(&state, &MembraneParams::new(100.0, 0.3, 2.4).unwrap()).unwrap();
    let solve = |solver: &mut StokesSolver, mu: f64, eps: f64| {
        let fluid = FluidParams::new(mu, mu, eps, 0.0, BoundaryProfile::Rest).unwrap();
        let coeffs = sample_coefficients(solver.mesh(), solver.quadrature(), &state, &fluid, &forces);
        solver.solve(&coeffs, &fluid).unwrap()
    };
    // doubling mu and halving epsilon doubles every viscous coefficient
    let a = solve(&mut solver, 1.0, 1e-2);
    let b = solve(&mut solver, 2.0, 5e-3);
    let scale = a.max_nodal_speed();
    assert!(scale > 0.0);
    for (u, v) in a.velocity.iter().zip(&b.velocity) {
        assert!((u - 2.0 * v).amax() <= 1e-8 * scale);
    }
    let pscale = a.pressure.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    for (p, q) in a.pressure.iter().zip(&b.pressure) {
        assert!((p - q).abs() <= 1e-8 * pscale);
    }
}

fn prescribed(mesh: &FluidMesh, u: impl Fn(Vec2) -> Vec2) -> FlowField {
    FlowField {
        velocity: mesh.nodes().iter().map(|p| u(*p)).collect(),
        bubble: vec![Vec2::zeros(); mesh.n_elements()],
        pressure: vec![0.0; mesh.n_nodes()],
    }
}

#[test]
fn constant_field_averages_exactly() {
    let mesh = FluidMesh::new(20.0, 20.0, 20, 20).unwrap();
    let quad = MeshQuadrature::new(&mesh, QuadratureRule::Dunavant7);
    let coeffs = one_disc(&quad, 1.0, Vec2::new(7.3, 11.1), 1.5);
    let field = prescribed(&mesh, |_| Vec2::new(1.0, 0.0));
    let v = particle_velocities(&field, &mesh, &quad, &coeffs, 1, 1.5).unwrap();
    assert!((v[0] - Vec2::new(1.0, 0.0)).amax() < 1e-14);
}

#[test]
fn rotation_about_disc_center_averages_to_zero() {
    let mesh = FluidMesh::new(20.0, 20.0, 20, 20).unwrap();
    let quad = MeshQuadrature::new(&mesh, QuadratureRule::Dunavant7);
    // a mesh node: the flagged point set is symmetric about it
    let c = Vec2::new(10.0, 9.0);
    let coeffs = one_disc(&quad, 1.0, c, 2.2);
    let field = prescribed(&mesh, |p| Vec2::new(-(p.y - c.y), p.x - c.x));
    let v = particle_velocities(&field, &mesh, &quad, &coeffs, 1, 2.2).unwrap();
    assert!(v[0].amax() < 1e-12, "{}", v[0]);
}

#[test]
fn shear_average_is_center_height() {
    for n in [20usize, 40, 80] {
        let mesh = FluidMesh::new(20.0, 20.0, n, n).unwrap();
        let quad = MeshQuadrature::new(&mesh, QuadratureRule::Dunavant7);
        let c = Vec2::new(8.37, 12.61);
        let coeffs = one_disc(&quad, 1.0, c, 1.5);
        let field = prescribed(&mesh, |p| Vec2::new(p.y, 0.0));
        let v = particle_velocities(&field, &mesh, &quad, &coeffs, 1, 1.5).unwrap();
        let h = mesh.h();
        assert!((v[0].x - c.y).abs() <= h * h, "n = {n}: {} vs {}", v[0].x, c.y);
        assert_eq!(v[0].y, 0.0);
    }
}

#[test]
fn unresolved_disc_is_reported() {
    let mesh = FluidMesh::new(20.0, 20.0, 4, 4).unwrap();
    let quad = MeshQuadrature::new(&mesh, QuadratureRule::Gauss3);
    let coeffs = CoefficientFields::uniform(&quad, 1.0);
    let field = prescribed(&mesh, |_| Vec2::zeros());
    assert!(particle_velocities(&field, &mesh, &quad, &coeffs, 1, 0.01).is_err());
}

fn disc_velocity(n: usize) -> Vec2 {
    let mesh = FluidMesh::new(20.0, 20.0, n, n).unwrap();
    let mut solver = StokesSolver::new(mesh, QuadratureRule::Dunavant7).unwrap();
    let center = Vec2::new(10.0, 13.0);
    let coeffs = one_disc(solver.quadrature(), 1.0, center, 2.0);
    let field = solver.solve(&coeffs, &shear(1.0, 5e-3)).unwrap();
    particle_velocities(&field, solver.mesh(), solver.quadrature(), &coeffs, 1, 2.0).unwrap()[0]
}

#[test]
fn single_disc_velocity_is_mesh_independent() {
    let coarse = disc_velocity(64);
    let fine = disc_velocity(96);
    assert!((coarse - fine).norm() < 0.05 * fine.norm(), "{coarse} vs {fine}");
    // the disc is carried roughly with the local shear velocity
    assert!(fine.x > 1.5 && fine.x < 3.5);
}
