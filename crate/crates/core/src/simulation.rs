//! Scenario setup and the time-stepping loop.

use crate::diagnostics::{reduced_area, AngleUnwrapper, DiagnosticsRecord};
use crate::fem::{
    particle_velocities, sample_coefficients, BoundaryProfile, CoefficientFields, FemError, FlowField, FluidMesh,
    FluidParams, QuadratureRule, SolveStats, StokesSolver,
};
use crate::necklace::{membrane_forces, pair_gap, polygon_area, GeometryError, MembraneParams, NecklaceState};
use crate::projection::{
    build_contact_constraints, project_area, project_contacts, ConstraintKind, ProjectionError, UzawaOptions,
};
use crate::Vec2;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("particle {particle} left the fluid domain at step {step} (position {x}, {y})")]
    LeftDomain { particle: usize, step: usize, x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ScenarioKind {
    #[default]
    Equilibrium,
    TankTreading,
    Tumbling,
    VacillatingBreathing,
    Custom,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Equilibrium => "equilibrium",
            ScenarioKind::TankTreading => "tt",
            ScenarioKind::Tumbling => "tb",
            ScenarioKind::VacillatingBreathing => "vb",
            ScenarioKind::Custom => "custom",
        }
    }

    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Equilibrium,
        ScenarioKind::TankTreading,
        ScenarioKind::Tumbling,
        ScenarioKind::VacillatingBreathing,
        ScenarioKind::Custom,
    ];
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equilibrium" => Ok(ScenarioKind::Equilibrium),
            "tt" | "tank-treading" => Ok(ScenarioKind::TankTreading),
            "tb" | "tumbling" => Ok(ScenarioKind::Tumbling),
            "vb" | "vacillating-breathing" => Ok(ScenarioKind::VacillatingBreathing),
            "custom" => Ok(ScenarioKind::Custom),
            other => Err(format!("unknown scenario '{other}' (expected equilibrium, tt, tb, vb or custom)")),
        }
    }
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub n_particles: usize,
    pub k_a: f64,
    pub k_rp: f64,
    pub ell0: f64,
    pub radius: f64,
    /// Domain length `L` (x extent).
    pub length: f64,
    /// Domain height `l` (y extent).
    pub height: f64,
    pub mu_in: f64,
    pub mu_out: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub gamma_dot: f64,
    pub boundary: BoundaryProfile,
    pub t_final: f64,
    pub nx: usize,
    pub ny: usize,
    /// Target reduced area of the initial ellipse.
    pub alpha: f64,
    /// Inclination of the initial ellipse, radians.
    pub init_angle: f64,
    /// Steps between output records.
    pub output_every: usize,
    pub quadrature: QuadratureRule,
    /// Non-overlap rows are built for pairs closer than `contact_cutoff * r`.
    pub contact_cutoff: f64,
    pub uzawa_max_iter: usize,
    pub uzawa_tol: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::preset(ScenarioKind::Equilibrium)
    }
}

impl ScenarioConfig {
    /// Parameter sets of the reference experiments. Shear presets keep
    /// `mu_out = 1` and set `mu_in` to the viscosity contrast.
    pub fn preset(kind: ScenarioKind) -> Self {
        let base = Self {
            kind,
            n_particles: 42,
            k_a: 200.0,
            k_rp: 0.25,
            ell0: 3.0,
            radius: 1.5,
            length: 150.0,
            height: 150.0,
            mu_in: 1.0,
            mu_out: 1.0,
            epsilon: 5e-3,
            dt: 5e-3,
            gamma_dot: 1.0,
            boundary: BoundaryProfile::Rest,
            t_final: 10.0,
            nx: 100,
            ny: 100,
            alpha: 0.42,
            init_angle: 0.0,
            output_every: 10,
            quadrature: QuadratureRule::default(),
            contact_cutoff: 4.0,
            uzawa_max_iter: 10_000,
            uzawa_tol: 1e-10,
        };
        let shear = |mu_in: f64| Self {
            n_particles: 50,
            k_a: 600.0,
            k_rp: 0.5,
            length: 300.0,
            height: 242.0,
            mu_in,
            boundary: BoundaryProfile::LinearShear,
            t_final: 20.0,
            nx: 200,
            ny: 160,
            alpha: 0.85,
            ..base.clone()
        };
        match kind {
            ScenarioKind::Equilibrium | ScenarioKind::Custom => base,
            ScenarioKind::TankTreading => shear(1.0),
            ScenarioKind::Tumbling => shear(20.0),
            ScenarioKind::VacillatingBreathing => shear(7.5),
        }
    }

    /// Viscosity contrast `mu_in / mu_out`.
    pub fn lambda(&self) -> f64 {
        self.mu_in / self.mu_out
    }

    /// Sets `mu_in = lambda * mu_out`.
    pub fn set_lambda(&mut self, lambda: f64) {
        self.mu_in = lambda * self.mu_out;
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn set_steps(&mut self, steps: usize) {
        self.t_final = steps as f64 * self.dt;
    }

    pub fn membrane(&self) -> Result<MembraneParams, SimulationError> {
        Ok(MembraneParams::new(self.k_a, self.k_rp, self.ell0)?)
    }

    pub fn fluid(&self) -> Result<FluidParams, SimulationError> {
        Ok(FluidParams::new(self.mu_in, self.mu_out, self.epsilon, self.gamma_dot, self.boundary)?)
    }

    pub fn uzawa_options(&self) -> UzawaOptions {
        UzawaOptions {
            max_iter: self.uzawa_max_iter,
            tol: self.uzawa_tol,
            step: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |msg: String| Err(SimulationError::InvalidConfig(msg));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.n_particles < 4 {
            return bad(format!("N must be at least 4, got {}", self.n_particles));
        }
        if !positive(self.radius) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if !positive(self.dt) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !positive(self.length) || !positive(self.height) {
            return bad(format!("domain extents must be positive, got {} x {}", self.length, self.height));
        }
        if self.nx == 0 || self.ny == 0 {
            return bad(format!("mesh needs at least one cell per direction, got {} x {}", self.nx, self.ny));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be nonnegative, got {}", self.t_final));
        }
        if self.output_every == 0 {
            return bad("output_every must be at least 1".into());
        }
        if !positive(self.contact_cutoff) {
            return bad(format!("contact_cutoff must be positive, got {}", self.contact_cutoff));
        }
        if self.uzawa_max_iter == 0 || !positive(self.uzawa_tol) {
            return bad("Uzawa iteration cap and tolerance must be positive".into());
        }
        if !self.init_angle.is_finite() {
            return bad("init_angle must be finite".into());
        }
        if (self.ell0 - 2.0 * self.radius).abs() > 1e-12 * self.radius {
            log::warn!(
                "spring rest length {} differs from the disc diameter {}",
                self.ell0,
                2.0 * self.radius
            );
        }
        self.membrane()?;
        self.fluid()?;
        Ok(())
    }
}

/// Centers on an ellipse at consecutive chord distance `chord`, starting at
/// parameter 0, for semi-axes `(a, b)`. Returns the parameter reached after
/// `n` chords and the points.
fn march_ellipse(a: f64, b: f64, chord: f64, n: usize) -> (f64, Vec<Vec2>) {
    let at = |t: f64| Vec2::new(a * t.cos(), b * t.sin());
    let mut t = 0.0;
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        let p = at(t);
        pts.push(p);
        let dist = |dt: f64| (at(t + dt) - p).norm() - chord;
        let mut hi = chord / a.max(b);
        while dist(hi) < 0.0 && hi < PI {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if dist(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        t += 0.5 * (lo + hi);
    }
    (t, pts)
}

/// Closed chain of `n` chords of length `chord` on an ellipse of aspect `q`.
fn closed_chain(q: f64, chord: f64, n: usize) -> Vec<Vec2> {
    // a circle of this radius closes with n chords
    let b_circle = 0.5 * chord / (PI / n as f64).sin();
    let excess = |b: f64| march_ellipse(q * b, b, chord, n).0 - 2.0 * PI;
    let (mut lo, mut hi) = (b_circle / q / 2.0, b_circle);
    while excess(lo) < 0.0 {
        lo *= 0.5;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    march_ellipse(q * hi, hi, chord, n).1
}

fn chain_alpha(points: Vec<Vec2>, r: f64) -> f64 {
    NecklaceState::new(points, r).map(|s| reduced_area(&s)).unwrap_or(f64::NAN)
}

/// Places the discs on an ellipse with reduced area `config.alpha`, centered
/// in the domain and tilted by `config.init_angle`.
///
/// Consecutive centers are exactly `2r` apart, so the perimeter is `2 N r`.
/// A target above the reduced area of the regular `N`-gon (the most a chain
/// of equal chords can reach) yields the regular polygon.
pub fn init_ellipse(config: &ScenarioConfig) -> Result<NecklaceState, SimulationError> {
    config.validate()?;
    let n = config.n_particles;
    let r = config.radius;
    let chord = 2.0 * r;
    let target = config.alpha;

    let regular = closed_chain(1.0, chord, n);
    let alpha_regular = chain_alpha(regular.clone(), r);
    let points = if target >= alpha_regular {
        if target - alpha_regular > 1e-3 {
            log::warn!(
                "reduced area {target} is not reachable with {n} discs; using the regular polygon (alpha = {alpha_regular})"
            );
        }
        regular
    } else {
        let alpha_of = |q: f64| chain_alpha(closed_chain(q, chord, n), r);
        let mut hi = 2.0;
        while alpha_of(hi) > target {
            hi *= 2.0;
            if hi > 1e3 {
                return Err(SimulationError::InvalidConfig(format!(
                    "no ellipse with reduced area {target} for N = {n}"
                )));
            }
        }
        let mut lo = 1.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if alpha_of(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        closed_chain(0.5 * (lo + hi), chord, n)
    };

    let state = NecklaceState::new(points, r)?;
    let centroid = state.centroid();
    let middle = Vec2::new(0.5 * config.length, 0.5 * config.height);
    let state = state.translated(middle - centroid).rotated(config.init_angle, middle);
    for (i, p) in state.centers().iter().enumerate() {
        if !(p.x > 0.0 && p.x < config.length && p.y > 0.0 && p.y < config.height) {
            return Err(SimulationError::LeftDomain {
                particle: i,
                step: 0,
                x: p.x,
                y: p.y,
            });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if !state.adjacent(i, j) && pair_gap(&state, i, j)?.gap < 0.0 {
                return Err(SimulationError::InvalidConfig(format!(
                    "initial ellipse for alpha = {target} makes discs {i} and {j} overlap"
                )));
            }
        }
    }
    Ok(state)
}

/// Smallest gap over non-adjacent pairs.
pub fn min_nonadjacent_gap(state: &NecklaceState) -> f64 {
    let n = state.len();
    let r2 = 2.0 * state.radius();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            if !state.adjacent(i, j) {
                best = best.min((state.center(i) - state.center(j)).norm() - r2);
            }
        }
    }
    best
}

/// Largest `| |x_i - x_{i+1}| - 2r |` over ring edges.
pub fn max_neighbor_gap(state: &NecklaceState) -> f64 {
    (0..state.len())
        .map(|i| (state.edge(i).norm() - 2.0 * state.radius()).abs())
        .fold(0.0, f64::max)
}

/// Accumulated wall-clock time per stage, seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub setup: f64,
    pub forces: f64,
    pub sampling: f64,
    pub stokes: f64,
    pub velocities: f64,
    pub contacts: f64,
    pub area: f64,
    pub update: f64,
}

impl StageTimings {
    pub fn entries(&self) -> [(&'static str, f64); 8] {
        [
            ("setup", self.setup),
            ("forces", self.forces),
            ("sampling", self.sampling),
            ("stokes", self.stokes),
            ("velocities", self.velocities),
            ("contacts", self.contacts),
            ("area", self.area),
            ("update", self.update),
        ]
    }
}

#[cfg(not(target_arch = "wasm32"))]
struct Clock(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Clock {
    fn start() -> Self {
        Clock(std::time::Instant::now())
    }

    fn lap(&mut self) -> f64 {
        let now = std::time::Instant::now();
        let dt = (now - self.0).as_secs_f64();
        self.0 = now;
        dt
    }
}

#[cfg(target_arch = "wasm32")]
struct Clock;

#[cfg(target_arch = "wasm32")]
impl Clock {
    fn start() -> Self {
        Clock
    }

    fn lap(&mut self) -> f64 {
        0.0
    }
}

/// Outcome of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Final particle velocities `V^n`.
    pub velocities: Vec<Vec2>,
    /// Velocities averaged from the flow, before any projection.
    pub fluid_velocities: Vec<Vec2>,
    pub stick_violation: f64,
    pub uzawa_iters: usize,
    pub contact_residual: f64,
    pub active_contacts: usize,
    pub solve: SolveStats,
}

/// Time integrator holding the mesh, the factorization workspace and the
/// current membrane state.
pub struct Simulation {
    config: ScenarioConfig,
    membrane: MembraneParams,
    fluid: FluidParams,
    solver: StokesSolver,
    state: NecklaceState,
    a0: f64,
    step: usize,
    warm: HashMap<(usize, usize), f64>,
    unwrapper: AngleUnwrapper,
    last_field: Option<FlowField>,
    last_coeffs: Option<CoefficientFields>,
    last_report: Option<StepReport>,
    timings: StageTimings,
}

impl fmt::Debug for Simulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulation")
            .field("kind", &self.config.kind)
            .field("step", &self.step)
            .field("solver", &self.solver)
            .finish()
    }
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimulationError> {
        let state = init_ellipse(&config)?;
        Self::with_state(config, state)
    }

    /// Starts from a given state; `A0` is its polygon area.
    pub fn with_state(config: ScenarioConfig, state: NecklaceState) -> Result<Self, SimulationError> {
        let mut clock = Clock::start();
        config.validate()?;
        if state.len() != config.n_particles {
            return Err(SimulationError::InvalidConfig(format!(
                "state has {} particles, configuration expects {}",
                state.len(),
                config.n_particles
            )));
        }
        let membrane = config.membrane()?;
        let fluid = config.fluid()?;
        let mesh = FluidMesh::new(config.length, config.height, config.nx, config.ny)?;
        if mesh.h() > 2.0 * config.radius {
            log::warn!(
                "mesh size {:.3} exceeds the disc diameter {}; discs are poorly resolved",
                mesh.h(),
                2.0 * config.radius
            );
        }
        let solver = StokesSolver::new(mesh, config.quadrature)?;
        let a0 = polygon_area(&state);
        let timings = StageTimings {
            setup: clock.lap(),
            ..Default::default()
        };
        Ok(Self {
            config,
            membrane,
            fluid,
            solver,
            state,
            a0,
            step: 0,
            warm: HashMap::new(),
            unwrapper: AngleUnwrapper::new(),
            last_field: None,
            last_coeffs: None,
            last_report: None,
            timings,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn state(&self) -> &NecklaceState {
        &self.state
    }

    pub fn mesh(&self) -> &FluidMesh {
        self.solver.mesh()
    }

    pub fn solver(&self) -> &StokesSolver {
        &self.solver
    }

    pub fn fluid(&self) -> &FluidParams {
        &self.fluid
    }

    /// Reference area `A0`.
    pub fn reference_area(&self) -> f64 {
        self.a0
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    pub fn timings(&self) -> StageTimings {
        self.timings
    }

    pub fn last_field(&self) -> Option<&FlowField> {
        self.last_field.as_ref()
    }

    pub fn last_coefficients(&self) -> Option<&CoefficientFields> {
        self.last_coeffs.as_ref()
    }

    pub fn last_report(&self) -> Option<&StepReport> {
        self.last_report.as_ref()
    }

    /// Diagnostics of the current state. Before the first step the stick
    /// violation is the largest actual neighbor gap.
    pub fn record(&mut self) -> DiagnosticsRecord {
        let (stick, iters) = match &self.last_report {
            Some(r) => (r.stick_violation, r.uzawa_iters),
            None => (max_neighbor_gap(&self.state), 0),
        };
        DiagnosticsRecord::measure(&self.state, self.step, self.time(), &mut self.unwrapper, stick, iters)
    }

    /// Advances one time step.
    pub fn step(&mut self) -> Result<StepReport, SimulationError> {
        let mut clock = Clock::start();
        let dt = self.config.dt;
        let forces = membrane_forces(&self.state, &self.membrane)?;
        self.timings.forces += clock.lap();

        let coeffs = sample_coefficients(self.solver.mesh(), self.solver.quadrature(), &self.state, &self.fluid, &forces);
        self.timings.sampling += clock.lap();

        let field = self.solver.solve(&coeffs, &self.fluid)?;
        let solve = self.solver.last_stats();
        self.timings.stokes += clock.lap();

        let v_tilde = particle_velocities(
            &field,
            self.solver.mesh(),
            self.solver.quadrature(),
            &coeffs,
            self.state.len(),
            self.state.radius(),
        )?;
        self.timings.velocities += clock.lap();

        let sys = build_contact_constraints(&self.state, dt, self.config.contact_cutoff * self.state.radius())?;
        let warm: Vec<f64> = sys
            .rows
            .iter()
            .map(|row| row.pair.and_then(|p| self.warm.get(&p).copied()).unwrap_or(0.0))
            .collect();
        let contact = project_contacts(&v_tilde, &sys, Some(&warm), &self.config.uzawa_options())?;
        self.warm.clear();
        for (row, l) in sys.rows.iter().zip(&contact.multipliers) {
            if let Some(p) = row.pair {
                if *l != 0.0 {
                    self.warm.insert(p, *l);
                }
            }
        }
        let active_contacts = sys
            .rows
            .iter()
            .zip(&contact.multipliers)
            .filter(|(r, l)| r.kind == ConstraintKind::NonOverlap && **l > 0.0)
            .count();
        self.timings.contacts += clock.lap();

        let a_n = polygon_area(&self.state);
        let v = project_area(&contact.velocities, &self.state, self.a0, a_n, dt)?;
        let stick_violation = sys.max_stick_violation(&v);
        self.timings.area += clock.lap();

        let next = self.state.advanced(&v, dt);
        for (i, p) in next.centers().iter().enumerate() {
            if !(p.x > 0.0 && p.x < self.config.length && p.y > 0.0 && p.y < self.config.height) {
                return Err(SimulationError::LeftDomain {
                    particle: i,
                    step: self.step + 1,
                    x: p.x,
                    y: p.y,
                });
            }
        }
        self.state = next;
        self.step += 1;
        self.timings.update += clock.lap();

        let report = StepReport {
            velocities: v,
            fluid_velocities: v_tilde,
            stick_violation,
            uzawa_iters: contact.iterations,
            contact_residual: contact.residual,
            active_contacts,
            solve,
        };
        self.last_field = Some(field);
        self.last_coeffs = Some(coeffs);
        self.last_report = Some(report.clone());
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub state: NecklaceState,
}

/// States and diagnostics at every output step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub records: Vec<DiagnosticsRecord>,
    /// Set when the run stopped early; earlier outputs are kept.
    pub error: Option<SimulationError>,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&NecklaceState> {
        self.snapshots.last().map(|s| &s.state)
    }
}

/// Runs `config` from its initial ellipse to `t_final`, recording every
/// `output_every` steps (step 0 included).
pub fn run(config: &ScenarioConfig) -> Trajectory {
    let mut traj = Trajectory::default();
    let mut sim = match Simulation::new(config.clone()) {
        Ok(s) => s,
        Err(e) => {
            traj.error = Some(e);
            return traj;
        }
    };
    let emit = |sim: &mut Simulation, traj: &mut Trajectory| {
        let record = sim.record();
        traj.snapshots.push(Snapshot {
            step: sim.step_index(),
            t: sim.time(),
            state: sim.state().clone(),
        });
        traj.records.push(record);
    };
    emit(&mut sim, &mut traj);
    for _ in 0..config.n_steps() {
        if let Err(e) = sim.step() {
            traj.error = Some(e);
            break;
        }
        if sim.step_index() % config.output_every == 0 {
            emit(&mut sim, &mut traj);
        }
    }
    traj
}
