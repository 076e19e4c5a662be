//! Dual ascent for `min 1/2 |V - V~|^2` subject to linear rows.

use crate::Vec2;

/// One linear constraint `sum_i a_i . V_i >= rhs` (or `= rhs`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, Vec2)>,
    pub rhs: f64,
    pub equality: bool,
}

impl LinearRow {
    pub fn apply(&self, v: &[Vec2]) -> f64 {
        self.coeffs.iter().map(|(i, a)| a.dot(&v[*i])).sum()
    }

    /// Signed slack `a . V - rhs`; nonnegative when an inequality holds.
    pub fn slack(&self, v: &[Vec2]) -> f64 {
        self.apply(v) - self.rhs
    }

    /// Violation measure: `|slack|` for equalities, `max(0, -slack)` otherwise.
    pub fn violation(&self, v: &[Vec2]) -> f64 {
        let s = self.slack(v);
        if self.equality {
            s.abs()
        } else {
            (-s).max(0.0)
        }
    }

    fn dot(&self, other: &LinearRow) -> f64 {
        let mut sum = 0.0;
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                if i == j {
                    sum += a.dot(b);
                }
            }
        }
        sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UzawaOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Step override; `None` uses the inverse max absolute row sum of `A A^T`.
    pub step: Option<f64>,
}

impl Default for UzawaOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-10,
            step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UzawaSolution {
    pub velocities: Vec<Vec2>,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    /// Largest row violation of the returned velocities.
    pub feasibility: f64,
    /// Largest `|lambda_k * slack_k|` over inequality rows.
    pub complementarity: f64,
    pub converged: bool,
}

/// Projects `target` onto the rows by fixed-step dual ascent.
///
/// `V(lambda) = target + sum_k lambda_k a_k`; inequality multipliers are
/// clipped at zero after every update, equality multipliers are free. The
/// updates use Nesterov extrapolation with gradient restart, which leaves the
/// fixed point unchanged and cuts the iteration count on long rings.
/// Iteration stops once feasibility, complementarity and the natural residual
/// `min(lambda_k |a_k|, slack_k / |a_k|)` are all below `opts.tol`, or after
/// `opts.max_iter` updates; `converged` tells which.
pub fn uzawa(target: &[Vec2], rows: &[LinearRow], warm: Option<&[f64]>, opts: &UzawaOptions) -> UzawaSolution {
    let m = rows.len();
    let mut lambda = match warm {
        Some(w) if w.len() == m => w
            .iter()
            .zip(rows)
            .map(|(l, r)| if r.equality { *l } else { l.max(0.0) })
            .collect(),
        _ => vec![0.0; m],
    };
    if m == 0 {
        return UzawaSolution {
            velocities: target.to_vec(),
            multipliers: lambda,
            iterations: 0,
            feasibility: 0.0,
            complementarity: 0.0,
            converged: true,
        };
    }

    let step = opts.step.unwrap_or_else(|| {
        let mut worst: f64 = 0.0;
        for a in rows {
            let s: f64 = rows.iter().map(|b| a.dot(b).abs()).sum();
            worst = worst.max(s);
        }
        1.0 / worst.max(f64::MIN_POSITIVE)
    });

    let velocities_of = |lambda: &[f64]| {
        let mut v = target.to_vec();
        for (row, l) in rows.iter().zip(lambda) {
            if *l != 0.0 {
                for (i, a) in &row.coeffs {
                    v[*i] += *l * a;
                }
            }
        }
        v
    };
    let norms: Vec<f64> = rows.iter().map(|r| r.dot(r).sqrt().max(f64::MIN_POSITIVE)).collect();
    // natural residual catches rows that are over-satisfied yet still pushing
    let residuals = |v: &[Vec2], lambda: &[f64]| {
        let mut feas: f64 = 0.0;
        let mut comp: f64 = 0.0;
        let mut natural: f64 = 0.0;
        for ((row, l), n) in rows.iter().zip(lambda).zip(&norms) {
            feas = feas.max(row.violation(v));
            if !row.equality {
                let s = row.slack(v);
                comp = comp.max((l * s).abs());
                natural = natural.max((l * n).min(s.max(0.0) / n));
            }
        }
        (feas, comp, natural)
    };

    let mut v = velocities_of(&lambda);
    let mut previous = lambda.clone();
    let mut momentum = 1.0_f64;
    let mut iterations = 0;
    loop {
        let (feas, comp, natural) = residuals(&v, &lambda);
        let done = feas <= opts.tol && comp <= opts.tol && natural <= opts.tol;
        if done || iterations >= opts.max_iter {
            return UzawaSolution {
                velocities: v,
                multipliers: lambda,
                iterations,
                feasibility: feas,
                complementarity: comp,
                converged: done,
            };
        }
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        let y: Vec<f64> = lambda
            .iter()
            .zip(&previous)
            .map(|(l, p)| l + beta * (l - p))
            .collect();
        let vy = velocities_of(&y);
        let updated: Vec<f64> = rows
            .iter()
            .zip(&y)
            .map(|(row, yk)| {
                let u = yk - step * row.slack(&vy);
                if row.equality {
                    u
                } else {
                    u.max(0.0)
                }
            })
            .collect();
        let uphill: f64 = y
            .iter()
            .zip(&updated)
            .zip(&lambda)
            .map(|((yk, u), l)| (yk - u) * (u - l))
            .sum();
        momentum = if uphill > 0.0 { 1.0 } else { next_momentum };
        previous = std::mem::replace(&mut lambda, updated);
        v = velocities_of(&lambda);
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn no_rows_returns_target() {
        let t = vec![Vec2::new(1.0, 2.0), Vec2::new(-3.0, 0.5)];
        let s = uzawa(&t, &[], None, &UzawaOptions::default());
        assert_eq!(s.velocities, t);
        assert_eq!(s.iterations, 0);
        assert!(s.converged);
    }

    #[test]
    fn single_equality_matches_hyperplane_projection() {
        let t = vec![Vec2::new(0.3, -1.0), Vec2::new(2.0, 0.7), Vec2::new(-0.4, 0.1)];
        let row = LinearRow {
            coeffs: vec![(0, Vec2::new(1.0, 2.0)), (2, Vec2::new(-0.5, 0.25))],
            rhs: 1.5,
            equality: true,
        };
        let s = uzawa(&t, std::slice::from_ref(&row), None, &UzawaOptions::default());
        let norm2: f64 = row.coeffs.iter().map(|(_, a)| a.norm_squared()).sum();
        let mu = (row.rhs - row.apply(&t)) / norm2;
        let mut exact = t.clone();
        for (i, a) in &row.coeffs {
            exact[*i] += mu * a;
        }
        for (a, b) in s.velocities.iter().zip(&exact) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn inactive_inequality_keeps_zero_multiplier() {
        let t = vec![Vec2::new(1.0, 0.0)];
        let row = LinearRow {
            coeffs: vec![(0, Vec2::new(1.0, 0.0))],
            rhs: 0.0,
            equality: false,
        };
        let s = uzawa(&t, &[row], None, &UzawaOptions::default());
        assert_eq!(s.velocities, t);
        assert_eq!(s.multipliers, vec![0.0]);
    }

    #[test]
    fn reports_non_convergence() {
        let t = vec![Vec2::new(0.0, 0.0)];
        let rows = vec![
            LinearRow {
                coeffs: vec![(0, Vec2::new(1.0, 0.0))],
                rhs: 1.0,
                equality: true,
            },
            LinearRow {
                coeffs: vec![(0, Vec2::new(1.0, 0.0))],
                rhs: 2.0,
                equality: true,
            },
        ];
        let s = uzawa(&t, &rows, None, &UzawaOptions { max_iter: 50, ..Default::default() });
        assert!(!s.converged);
        assert_eq!(s.iterations, 50);
    }
}
