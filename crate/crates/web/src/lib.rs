//! Browser bindings for a small necklace vesicle demo.
//!
//! Three operations are exposed to JavaScript:
//!
//! * [`ellipse_preview`]: initial disc placement for a reduced area.
//! * [`Demo::step`]: advance a coarse simulation and report diagnostics.
//! * [`Demo::sample_flow`]: velocity of the last solved flow on a grid.
//!
//! Everything also compiles natively so the logic is testable with `cargo test`.

use vesicle_core::diagnostics::{inclination_angle, reduced_area};
use vesicle_core::fem::BoundaryProfile;
use vesicle_core::necklace::{polygon_area, polygon_perimeter};
use vesicle_core::simulation::{init_ellipse, Simulation};
use vesicle_core::{ScenarioConfig, ScenarioKind, Vec2};
use wasm_bindgen::prelude::*;

fn flat(points: &[Vec2]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y]).collect()
}

fn demo_config(n: usize, alpha: f64, lambda: f64, shear: bool) -> ScenarioConfig {
    let r = 1.5;
    // box of about three vesicle diameters
    let r0 = n as f64 * r / std::f64::consts::PI;
    let side = (6.0 * r0).ceil();
    let mut cfg = ScenarioConfig {
        kind: ScenarioKind::Custom,
        n_particles: n,
        k_a: 200.0,
        k_rp: 0.25,
        length: side * 1.25,
        height: side,
        alpha,
        boundary: if shear {
            BoundaryProfile::LinearShear
        } else {
            BoundaryProfile::Rest
        },
        // cells about the disc radius
        nx: (1.25 * side / r).ceil() as usize,
        ny: (side / r).ceil() as usize,
        output_every: 1,
        ..ScenarioConfig::default()
    };
    cfg.set_lambda(lambda);
    cfg
}

/// Disc centers `[x0, y0, x1, y1, ...]` of the initial ellipse with `n`
/// discs and reduced area `alpha`, tilted by `angle` radians.
#[wasm_bindgen]
pub fn ellipse_preview(n: usize, alpha: f64, angle: f64) -> Result<Vec<f64>, JsError> {
    preview(n, alpha, angle).map_err(|e| JsError::new(&e))
}

fn preview(n: usize, alpha: f64, angle: f64) -> Result<Vec<f64>, String> {
    let cfg = ScenarioConfig {
        init_angle: angle,
        ..demo_config(n, alpha, 1.0, false)
    };
    let state = init_ellipse(&cfg).map_err(|e| e.to_string())?;
    Ok(flat(state.centers()))
}

/// A running simulation on a coarse mesh.
#[wasm_bindgen]
pub struct Demo {
    sim: Simulation,
}

impl Demo {
    pub fn create(n: usize, alpha: f64, lambda: f64, shear: bool) -> Result<Demo, String> {
        let sim = Simulation::new(demo_config(n, alpha, lambda, shear)).map_err(|e| e.to_string())?;
        Ok(Demo { sim })
    }

    pub fn advance(&mut self, steps: usize) -> Result<Vec<f64>, String> {
        for _ in 0..steps {
            self.sim.step().map_err(|e| e.to_string())?;
        }
        Ok(self.diagnostics())
    }
}

#[wasm_bindgen]
impl Demo {
    /// `shear = false` relaxes the vesicle in a fluid at rest.
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, alpha: f64, lambda: f64, shear: bool) -> Result<Demo, JsError> {
        Demo::create(n, alpha, lambda, shear).map_err(|e| JsError::new(&e))
    }

    /// Advances `steps` time steps and returns
    /// `[t, area, perimeter, alpha, theta]` of the new state.
    pub fn step(&mut self, steps: usize) -> Result<Vec<f64>, JsError> {
        self.advance(steps).map_err(|e| JsError::new(&e))
    }

    /// `[t, area, perimeter, alpha, theta]` of the current state.
    pub fn diagnostics(&self) -> Vec<f64> {
        let s = self.sim.state();
        vec![
            self.sim.time(),
            polygon_area(s),
            polygon_perimeter(s),
            reduced_area(s),
            inclination_angle(s).theta,
        ]
    }

    pub fn positions(&self) -> Vec<f64> {
        flat(self.sim.state().centers())
    }

    pub fn radius(&self) -> f64 {
        self.sim.state().radius()
    }

    /// Domain `[L, l]`.
    pub fn domain(&self) -> Vec<f64> {
        vec![self.sim.config().length, self.sim.config().height]
    }

    /// Velocity `[u0, v0, u1, v1, ...]` at the centers of a `cols x rows`
    /// grid, row by row from the bottom; zeros before the first step.
    pub fn sample_flow(&self, cols: usize, rows: usize) -> Vec<f64> {
        let (len, height) = (self.sim.config().length, self.sim.config().height);
        let mut out = Vec::with_capacity(2 * cols * rows);
        for j in 0..rows {
            for i in 0..cols {
                let p = Vec2::new(
                    (i as f64 + 0.5) * len / cols as f64,
                    (j as f64 + 0.5) * height / rows as f64,
                );
                let v = self
                    .sim
                    .last_field()
                    .and_then(|f| f.sample(self.sim.mesh(), p))
                    .unwrap_or_else(Vec2::zeros);
                out.extend([v.x, v.y]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preview_has_requested_alpha() {
        let xy = preview(24, 0.7, 0.3).unwrap();
        assert_eq!(xy.len(), 48);
        let centers = xy.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
        let s = vesicle_core::NecklaceState::new(centers, 1.5).unwrap();
        assert!((reduced_area(&s) - 0.7).abs() < 1e-3);
    }

    #[test]
    fn demo_steps_and_samples() {
        let mut d = Demo::create(16, 0.8, 1.0, true).unwrap();
        assert!(d.sample_flow(4, 3).iter().all(|v| *v == 0.0));
        let diag = d.advance(2).unwrap();
        assert_eq!(diag.len(), 5);
        assert!((diag[0] - 0.01).abs() < 1e-12);
        let flow = d.sample_flow(4, 3);
        assert_eq!(flow.len(), 24);
        // bottom row moves left, top row moves right
        assert!(flow[0] < 0.0 && flow[2 * 4 * 2] > 0.0);
        assert_eq!(d.positions().len(), 32);
    }
}
