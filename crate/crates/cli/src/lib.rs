//! Batch runner for necklace vesicle simulations.
//!
//! `vesicle run --config FILE` reads a `key=value` scenario, steps it to
//! `t_final` and writes `positions_XXXXX.csv`, `diagnostics.csv`,
//! `manifest.txt` and optionally `field_XXXXX.vtk` into the output directory.

pub mod config;
pub mod output;

use clap::{Args, Parser, Subcommand};
use config::{parse_config, ConfigError};
use output::{field_name, positions_name, write_positions, DiagnosticsWriter, RunManifest, RunStatus};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;
use vesicle_core::fem::vtk::write_vtk;
use vesicle_core::simulation::{Simulation, SimulationError};
use vesicle_core::{DiagnosticsRecord, ScenarioConfig, ScenarioKind};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("{stage}: {source}")]
    Numerical { stage: String, source: SimulationError },
    #[error("output error in {path}: {source} (files written so far: {written})")]
    Io {
        path: PathBuf,
        source: std::io::Error,
        written: String,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::ReadConfig { .. } => EXIT_CONFIG,
            RunError::Numerical { .. } => EXIT_NUMERICAL,
            RunError::Io { .. } => EXIT_IO,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vesicle", version, about = "Necklace model of a 2D vesicle in Stokes flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its outputs.
    Run(RunArgs),
    /// Print the fully resolved configuration without running.
    Show(RunArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct RunArgs {
    /// Scenario file (key=value lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Reference parameter set: equilibrium, tt, tb or vb.
    #[arg(long)]
    pub preset: Option<String>,
    /// Number of time steps (replaces t_final).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Mesh cells in x and y.
    #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
    pub mesh: Option<Vec<usize>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Viscosity contrast; sets mu_in = lambda * mu_out.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Also write the flow field at every output step.
    #[arg(long)]
    pub vtk: bool,
    /// Allow overriding values fixed by a preset.
    #[arg(long)]
    pub force: bool,
}

/// Resolves file, preset and flag overrides into one configuration.
pub fn resolve_config(args: &RunArgs) -> Result<ScenarioConfig, RunError> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|source| RunError::ReadConfig {
            path: path.clone(),
            source,
        })?,
        None => String::new(),
    };
    let preset = match &args.preset {
        Some(p) => Some(p.parse::<ScenarioKind>().map_err(|e| {
            ConfigError::Value {
                key: "preset".into(),
                value: p.clone(),
                reason: e,
            }
        })?),
        None => None,
    };
    let mut cfg = parse_config(&text, preset, args.force)?;
    if let Some(steps) = args.steps {
        cfg.set_steps(steps);
    }
    if let Some(m) = &args.mesh {
        cfg.nx = m[0];
        cfg.ny = m[1];
    }
    if let Some(e) = args.epsilon {
        cfg.epsilon = e;
    }
    if let Some(dt) = args.dt {
        let steps = cfg.n_steps();
        cfg.dt = dt;
        if args.steps.is_some() {
            cfg.set_steps(steps);
        }
    }
    if let Some(l) = args.lambda {
        cfg.set_lambda(l);
    }
    cfg.validate()
        .map_err(|e| RunError::Config(ConfigError::Invalid(e.to_string())))?;
    Ok(cfg)
}

/// Options of [`run_to_dir`] that are not part of the physics.
#[derive(Debug, Clone, Copy, Default)]
pub struct OutputOptions {
    pub vtk: bool,
    /// Skip the per-output positions files.
    pub no_positions: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<DiagnosticsRecord>,
    pub manifest: RunManifest,
}

/// Runs `cfg`, streaming every output record to `dir`.
///
/// The manifest is written before the first step and rewritten on exit,
/// whether the run succeeds or fails.
pub fn run_to_dir(cfg: &ScenarioConfig, dir: &Path, opts: OutputOptions) -> Result<RunSummary, RunError> {
    let started = Instant::now();
    let io_err = |path: &Path, source: std::io::Error, files: &[String]| RunError::Io {
        path: path.to_path_buf(),
        source,
        written: if files.is_empty() { "none".into() } else { files.join(" ") },
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e, &[]))?;
    let mut manifest = RunManifest::new(dir, cfg);
    manifest.write().map_err(|e| io_err(&manifest.path, e, &[]))?;
    manifest.files.push("manifest.txt".into());

    let finish = |manifest: &mut RunManifest, status: RunStatus, sim: Option<&Simulation>| {
        manifest.status = status;
        manifest.wall_seconds = started.elapsed().as_secs_f64();
        if let Some(sim) = sim {
            manifest.timings = sim.timings();
            manifest.steps_done = sim.step_index();
        }
        manifest.write()
    };

    let mut sim = match Simulation::new(cfg.clone()) {
        Ok(s) => s,
        Err(source) => {
            manifest.stage = "setup".into();
            manifest.message = Some(source.to_string());
            let _ = finish(&mut manifest, RunStatus::Failed, None);
            return Err(match source {
                SimulationError::InvalidConfig(m) => RunError::Config(ConfigError::Invalid(m)),
                source => RunError::Numerical {
                    stage: "setup".into(),
                    source,
                },
            });
        }
    };

    let diag_path = dir.join("diagnostics.csv");
    let mut diagnostics = DiagnosticsWriter::create(&diag_path).map_err(|e| io_err(&diag_path, e, &manifest.files))?;
    manifest.files.push("diagnostics.csv".into());
    let mut records = Vec::new();

    let emit = |sim: &mut Simulation,
                    manifest: &mut RunManifest,
                    diagnostics: &mut DiagnosticsWriter,
                    records: &mut Vec<DiagnosticsRecord>|
     -> Result<(), RunError> {
        let record = sim.record();
        diagnostics
            .push(&record)
            .map_err(|e| io_err(&dir.join("diagnostics.csv"), e, &manifest.files))?;
        records.push(record);
        let step = sim.step_index();
        if !opts.no_positions {
            let name = positions_name(step);
            write_positions(&dir.join(&name), sim.state()).map_err(|e| io_err(&dir.join(&name), e, &manifest.files))?;
            manifest.files.push(name);
        }
        if opts.vtk {
            if let (Some(field), Some(coeffs)) = (sim.last_field(), sim.last_coefficients()) {
                let name = field_name(step);
                let path = dir.join(&name);
                let write = || -> std::io::Result<()> {
                    let mut w = BufWriter::new(File::create(&path)?);
                    let title = format!("vesicle step {step} t {}", sim.time());
                    write_vtk(&mut w, sim.mesh(), sim.solver().quadrature(), field, coeffs, &title)
                };
                write().map_err(|e| io_err(&path, e, &manifest.files))?;
                manifest.files.push(name);
            }
        }
        Ok(())
    };

    emit(&mut sim, &mut manifest, &mut diagnostics, &mut records)?;
    for _ in 0..cfg.n_steps() {
        if let Err(source) = sim.step() {
            let stage = format!("step {}: {}", sim.step_index() + 1, stage_of(&source));
            manifest.stage = stage.clone();
            manifest.message = Some(source.to_string());
            let _ = finish(&mut manifest, RunStatus::Failed, Some(&sim));
            return Err(RunError::Numerical { stage, source });
        }
        if sim.step_index() % cfg.output_every == 0 {
            emit(&mut sim, &mut manifest, &mut diagnostics, &mut records)?;
        }
        manifest.stage = format!("step {}", sim.step_index());
    }
    manifest.stage = "done".into();
    finish(&mut manifest, RunStatus::Complete, Some(&sim)).map_err(|e| io_err(&dir.join("manifest.txt"), e, &[]))?;
    Ok(RunSummary { records, manifest })
}

fn stage_of(e: &SimulationError) -> &'static str {
    match e {
        SimulationError::InvalidConfig(_) => "setup",
        SimulationError::Geometry(_) => "forces",
        SimulationError::Fem(_) => "stokes",
        SimulationError::Projection(_) => "projection",
        SimulationError::LeftDomain { .. } => "update",
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Show(args) => resolve_config(&args).map(|cfg| {
            print!("{}", config::serialize_config(&cfg));
        }),
        Command::Run(args) => resolve_config(&args).and_then(|cfg| {
            log::info!(
                "running {} for {} steps on a {}x{} mesh into {}",
                cfg.kind,
                cfg.n_steps(),
                cfg.nx,
                cfg.ny,
                args.out.display()
            );
            let opts = OutputOptions {
                vtk: args.vtk,
                no_positions: false,
            };
            run_to_dir(&cfg, &args.out, opts).map(|s| {
                if let Some(last) = s.records.last() {
                    println!(
                        "done: t = {:.4}, alpha = {:.6}, theta = {:.4} rad, area drift {:.4}%",
                        last.t,
                        last.alpha,
                        last.theta,
                        100.0 * (last.area - s.records[0].area) / s.records[0].area
                    );
                }
            })
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
