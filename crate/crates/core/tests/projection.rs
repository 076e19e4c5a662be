use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use vesicle_core::necklace::{pair_gap, polygon_area};
use vesicle_core::projection::{
    build_area_constraint, build_contact_constraints, project_area, project_contacts, uzawa, ConstraintKind,
    LinearRow, UzawaOptions,
};
use vesicle_core::{NecklaceState, Vec2};

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec2 {
    Vec2::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn dense(rows: &[LinearRow], n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(rows.len(), 2 * n);
    for (k, r) in rows.iter().enumerate() {
        for (i, g) in &r.coeffs {
            a[(k, 2 * i)] += g.x;
            a[(k, 2 * i + 1)] += g.y;
        }
    }
    a
}

fn flatten(v: &[Vec2]) -> DVector<f64> {
    DVector::from_iterator(2 * v.len(), v.iter().flat_map(|x| [x.x, x.y]))
}

/// Solves the projection by trying every active set and keeping the one
/// that satisfies the KKT conditions.
fn brute_force(target: &[Vec2], rows: &[LinearRow]) -> DVector<f64> {
    let n = target.len();
    let a = dense(rows, n);
    let t = flatten(target);
    let m = rows.len();
    let mut found: Option<DVector<f64>> = None;
    for mask in 0u32..(1 << m) {
        if rows.iter().enumerate().any(|(k, r)| r.equality && mask & (1 << k) == 0) {
            continue;
        }
        let active: Vec<usize> = (0..m).filter(|k| mask & (1 << k) != 0).collect();
        let mut v = t.clone();
        let mut lambda = vec![0.0; m];
        if !active.is_empty() {
            let sub = DMatrix::from_fn(active.len(), 2 * n, |r, c| a[(active[r], c)]);
            let b = DVector::from_fn(active.len(), |r, _| rows[active[r]].rhs) - &sub * &t;
            let gram = &sub * sub.transpose();
            let Some(l) = gram.lu().solve(&b) else { continue };
            v += sub.transpose() * &l;
            for (r, k) in active.iter().enumerate() {
                lambda[*k] = l[r];
            }
        }
        let ok = rows.iter().enumerate().all(|(k, r)| {
            let slack = (a.row(k) * &v)[0] - r.rhs;
            r.equality || (slack >= -1e-12 && lambda[k] >= -1e-12)
        });
        if ok {
            if let Some(prev) = &found {
                assert!((prev - &v).amax() < 1e-9, "two KKT points");
            }
            found = Some(v);
        }
    }
    found.expect("no KKT point")
}

fn well_conditioned(rows: &[LinearRow], n: usize) -> bool {
    let a = dense(rows, n);
    let s = (&a * a.transpose()).symmetric_eigenvalues();
    s.min() > 0.0 && s.max() / s.min() < 100.0
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<LinearRow> {
    (0..m)
        .map(|_| {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            LinearRow {
                coeffs: vec![(i, random_vec(rng, 1.0)), (j, random_vec(rng, 1.0))],
                rhs: rng.gen_range(-1.0..1.0),
                equality: rng.gen_bool(0.3),
            }
        })
        .collect()
}

#[test]
fn uzawa_matches_active_set_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    while checked < 200 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=5);
        let rows = random_rows(&mut rng, n, m);
        if !well_conditioned(&rows, n) {
            continue;
        }
        let target: Vec<Vec2> = (0..n).map(|_| random_vec(&mut rng, 1.0)).collect();
        let exact = brute_force(&target, &rows);
        let s = uzawa(&target, &rows, None, &UzawaOptions::default());
        assert!(s.converged, "{} iterations", s.iterations);
        assert!((flatten(&s.velocities) - exact).amax() <= 1e-9);
        assert!(s.feasibility <= 1e-10);
        assert!(s.complementarity <= 1e-9);
        checked += 1;
    }
}

/// Ring of `n` touching discs, squeezed along y so opposite sides come close.
fn pinched_ring(n: usize, r: f64, squash: f64) -> NecklaceState {
    let mut pts: Vec<Vec2> = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            Vec2::new(t.cos(), squash * t.sin())
        })
        .collect();
    let per: f64 = (0..n).map(|k| (pts[(k + 1) % n] - pts[k]).norm()).sum::<f64>() / n as f64;
    for p in &mut pts {
        *p *= 2.0 * r / per;
    }
    NecklaceState::new(pts, r).unwrap()
}

#[test]
fn projection_is_feasible_and_complementary_on_necklaces() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dt = 5e-3;
    for _ in 0..20 {
        let n = rng.gen_range(10..30);
        let s = pinched_ring(n, 1.5, rng.gen_range(0.2..0.5));
        let sys = build_contact_constraints(&s, dt, 6.0).unwrap();
        assert!(sys.count(ConstraintKind::NonOverlap) > 0);
        let v: Vec<Vec2> = (0..n).map(|_| random_vec(&mut rng, 30.0)).collect();
        let p = project_contacts(&v, &sys, None, &UzawaOptions::default()).unwrap();
        assert!(p.residual <= 1e-10);
        assert!(p.complementarity <= 1e-9);
        assert!(sys.max_violation(&p.velocities) <= 1e-10 * dt);
        let moved = s.advanced(&p.velocities, dt);
        for row in sys.rows.iter().filter(|r| r.kind == ConstraintKind::NonOverlap) {
            let (i, j) = row.pair.unwrap();
            // the true gap is convex in the positions, so it never drops below the linear prediction
            assert!(pair_gap(&moved, i, j).unwrap().gap >= -1e-8 * s.radius());
        }
    }
}

#[test]
fn long_rings_converge_within_default_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let dt = 5e-3;
    for n in [38, 50, 80] {
        let s = pinched_ring(n, 1.5, 0.6);
        let sys = build_contact_constraints(&s, dt, 4.0 * 1.5).unwrap();
        let v: Vec<Vec2> = (0..n).map(|_| random_vec(&mut rng, 5.0)).collect();
        let p = project_contacts(&v, &sys, None, &UzawaOptions::default()).unwrap();
        assert!(p.residual <= 1e-10, "N={n}: residual {:e}", p.residual);
        assert!(p.iterations < 5_000, "N={n}: {} iterations", p.iterations);
    }
}

#[test]
fn projection_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.gen_range(10..30);
        let s = pinched_ring(n, 1.5, rng.gen_range(0.2..0.5));
        let sys = build_contact_constraints(&s, 5e-3, 6.0).unwrap();
        let v: Vec<Vec2> = (0..n).map(|_| random_vec(&mut rng, 30.0)).collect();
        let once = project_contacts(&v, &sys, None, &UzawaOptions::default()).unwrap();
        let twice = project_contacts(&once.velocities, &sys, None, &UzawaOptions::default()).unwrap();
        for (a, b) in once.velocities.iter().zip(&twice.velocities) {
            assert!((a - b).amax() <= 1e-10);
        }
    }
}

#[test]
fn projection_is_non_expansive() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = pinched_ring(16, 1.5, 0.3);
    let sys = build_contact_constraints(&s, 5e-3, 6.0).unwrap();
    let opts = UzawaOptions::default();
    let mut pairs = 0;
    while pairs < 1000 {
        let a: Vec<Vec2> = (0..16).map(|_| random_vec(&mut rng, 20.0)).collect();
        let b: Vec<Vec2> = a.iter().map(|x| x + random_vec(&mut rng, 5.0)).collect();
        let pa = project_contacts(&a, &sys, None, &opts).unwrap().velocities;
        let pb = project_contacts(&b, &sys, None, &opts).unwrap().velocities;
        let before = (flatten(&a) - flatten(&b)).norm();
        let after = (flatten(&pa) - flatten(&pb)).norm();
        assert!(after <= before + 1e-8, "{after} > {before}");
        pairs += 1;
    }
}

#[test]
fn warm_start_reaches_same_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = pinched_ring(24, 1.5, 0.3);
    let sys = build_contact_constraints(&s, 5e-3, 6.0).unwrap();
    let v: Vec<Vec2> = (0..24).map(|_| random_vec(&mut rng, 30.0)).collect();
    let cold = project_contacts(&v, &sys, None, &UzawaOptions::default()).unwrap();
    let nudged: Vec<Vec2> = v.iter().map(|x| x + random_vec(&mut rng, 0.1)).collect();
    let a = project_contacts(&nudged, &sys, None, &UzawaOptions::default()).unwrap();
    let b = project_contacts(&nudged, &sys, Some(&cold.multipliers), &UzawaOptions::default()).unwrap();
    assert!(b.iterations <= a.iterations);
    for (x, y) in a.velocities.iter().zip(&b.velocities) {
        assert!((x - y).amax() <= 1e-8);
    }
}

#[test]
fn head_on_pair_stops_at_contact() {
    let (r, gap, w, dt) = (1.5, 0.02, 10.0, 5e-3);
    let s = NecklaceState::new(
        vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0 * r + gap, 0.0),
            Vec2::new(2.0 * r + gap, 50.0),
            Vec2::new(0.0, 50.0),
        ],
        r,
    )
    .unwrap();
    let g = pair_gap(&s, 0, 1).unwrap();
    let row = LinearRow {
        coeffs: vec![(0, g.grad_i), (1, g.grad_j)],
        rhs: -g.gap / dt,
        equality: false,
    };
    let v = vec![Vec2::new(w, 0.0), Vec2::new(-w, 0.0)];
    let p = uzawa(&v, &[row], None, &UzawaOptions::default());
    // each disc keeps half the gap per step
    let expected = gap / (2.0 * dt);
    assert!((p.velocities[0] - Vec2::new(expected, 0.0)).amax() < 1e-10);
    assert!((p.velocities[1] + Vec2::new(expected, 0.0)).amax() < 1e-10);
    let moved = s.advanced(&[p.velocities[0], p.velocities[1], Vec2::zeros(), Vec2::zeros()], dt);
    assert!(pair_gap(&moved, 0, 1).unwrap().gap.abs() < 1e-10);
}

#[test]
fn separating_pair_is_untouched() {
    // regular ring: every chord is exactly 2r
    let s = pinched_ring(12, 1.5, 1.0);
    let sys = build_contact_constraints(&s, 5e-3, 6.0).unwrap();
    assert!(sys.count(ConstraintKind::NonOverlap) > 0);
    let v = vec![Vec2::new(3.0, -2.0); 12];
    let p = project_contacts(&v, &sys, None, &UzawaOptions::default()).unwrap();
    assert_eq!(p.velocities, v);
    assert_eq!(p.iterations, 0);
}

#[test]
fn area_projection_hits_reference_linearization() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let dt = 5e-3;
    let s = pinched_ring(30, 1.5, 0.6);
    let a_n = polygon_area(&s);
    let a0 = a_n * 1.001;
    let v: Vec<Vec2> = (0..30).map(|_| random_vec(&mut rng, 5.0)).collect();
    let p = project_area(&v, &s, a0, a_n, dt).unwrap();
    let row = build_area_constraint(&s, a0, dt).unwrap();
    assert!(row.predicted(&p, dt).abs() < 1e-9 * a0);
    // the correction is along the area normals, so projecting twice changes nothing
    let q = project_area(&p, &s, a0, a_n, dt).unwrap();
    for (x, y) in p.iter().zip(&q) {
        assert!((x - y).amax() < 1e-10);
    }
    // the one-step area error is second order in dt
    let err = |dt: f64| {
        let p = project_area(&v, &s, a_n, a_n, dt).unwrap();
        (polygon_area(&s.advanced(&p, dt)) - a_n).abs()
    };
    let slope = (err(1e-2) / err(1e-3)).log10();
    assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn bad_inputs_are_rejected() {
    let s = pinched_ring(12, 1.5, 0.5);
    assert!(build_contact_constraints(&s, 0.0, 6.0).is_err());
    assert!(build_area_constraint(&s, 1.0, f64::NAN).is_err());
    let sys = build_contact_constraints(&s, 5e-3, 6.0).unwrap();
    assert!(project_contacts(&[Vec2::zeros(); 3], &sys, None, &UzawaOptions::default()).is_err());
    assert!(project_area(&[Vec2::zeros(); 12], &s, 1.0, 1.0, -1.0).is_err());
}
