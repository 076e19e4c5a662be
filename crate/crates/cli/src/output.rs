//! Positions, diagnostics and manifest files.

use crate::config::serialize_config;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use vesicle_core::simulation::StageTimings;
use vesicle_core::{DiagnosticsRecord, NecklaceState, ScenarioConfig};

pub const DIAGNOSTICS_HEADER: &str =
    "t,A,P,alpha,theta,theta_unwrapped,stick_violation,uzawa_iters,area_var_pct,perimeter_var_pct,aspect_ratio";

/// Writes `index,x,y` rows.
pub fn write_positions(path: &Path, state: &NecklaceState) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "index,x,y")?;
    for (i, p) in state.centers().iter().enumerate() {
        writeln!(w, "{i},{:.16e},{:.16e}", p.x, p.y)?;
    }
    w.flush()
}

/// Reads a positions file back.
pub fn read_positions(path: &Path) -> io::Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let bad = |line: &str| io::Error::new(io::ErrorKind::InvalidData, format!("bad positions row '{line}'"));
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let mut f = line.split(',');
            let _index = f.next().ok_or_else(|| bad(line))?;
            let x = f.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(line))?;
            let y = f.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(line))?;
            Ok((x, y))
        })
        .collect()
}

pub fn positions_name(step: usize) -> String {
    format!("positions_{step:05}.csv")
}

pub fn field_name(step: usize) -> String {
    format!("field_{step:05}.vtk")
}

/// Streaming writer of `diagnostics.csv`; variations are relative to the
/// first row.
pub struct DiagnosticsWriter {
    out: BufWriter<File>,
    reference: Option<(f64, f64)>,
    rows: usize,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{DIAGNOSTICS_HEADER}")?;
        Ok(Self {
            out,
            reference: None,
            rows: 0,
        })
    }

    pub fn push(&mut self, r: &DiagnosticsRecord) -> io::Result<()> {
        let (a0, p0) = *self.reference.get_or_insert((r.area, r.perimeter));
        let area_var = 100.0 * (r.area - a0) / a0;
        let perimeter_var = 100.0 * (r.perimeter - p0) / p0;
        writeln!(
            self.out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}",
            r.t,
            r.area,
            r.perimeter,
            r.alpha,
            r.theta,
            r.theta_unwrapped,
            r.stick_violation,
            r.uzawa_iters,
            area_var,
            perimeter_var,
            r.aspect_ratio
        )?;
        self.rows += 1;
        self.out.flush()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// One parsed row of `diagnostics.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub area: f64,
    pub perimeter: f64,
    pub alpha: f64,
    pub theta: f64,
    pub theta_unwrapped: f64,
    pub stick_violation: f64,
    pub uzawa_iters: usize,
    pub area_var_pct: f64,
    pub perimeter_var_pct: f64,
    pub aspect_ratio: f64,
}

pub fn read_diagnostics(path: &Path) -> io::Result<Vec<DiagnosticsRow>> {
    let text = fs::read_to_string(path)?;
    let bad = |line: &str| io::Error::new(io::ErrorKind::InvalidData, format!("bad diagnostics row '{line}'"));
    let mut rows = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(bad(line));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad(line));
        rows.push(DiagnosticsRow {
            t: num(0)?,
            area: num(1)?,
            perimeter: num(2)?,
            alpha: num(3)?,
            theta: num(4)?,
            theta_unwrapped: num(5)?,
            stick_violation: num(6)?,
            uzawa_iters: f[7].parse().map_err(|_| bad(line))?,
            area_var_pct: num(8)?,
            perimeter_var_pct: num(9)?,
            aspect_ratio: num(10)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

impl RunStatus {
    fn name(self) -> &'static str {
        match self {
            RunStatus::Running => "running",
            RunStatus::Complete => "complete",
            RunStatus::Failed => "failed",
        }
    }
}

/// Resolved configuration, timings and output inventory of a run.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub path: PathBuf,
    pub config: ScenarioConfig,
    pub status: RunStatus,
    /// Where the run stopped, e.g. `step 120: stokes`.
    pub stage: String,
    pub message: Option<String>,
    pub steps_done: usize,
    pub timings: StageTimings,
    pub wall_seconds: f64,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(dir: &Path, config: &ScenarioConfig) -> Self {
        Self {
            path: dir.join("manifest.txt"),
            config: config.clone(),
            status: RunStatus::Running,
            stage: "setup".into(),
            message: None,
            steps_done: 0,
            timings: StageTimings::default(),
            wall_seconds: 0.0,
            files: Vec::new(),
        }
    }

    pub fn write(&self) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(&self.path)?);
        writeln!(w, "# vesicle run manifest")?;
        writeln!(w, "tool=vesicle {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "status={}", self.status.name())?;
        writeln!(w, "stage={}", self.stage)?;
        if let Some(m) = &self.message {
            writeln!(w, "error={}", m.replace('\n', " "))?;
        }
        writeln!(w, "steps_done={}", self.steps_done)?;
        writeln!(w, "wall_seconds={:.3}", self.wall_seconds)?;
        for (name, secs) in self.timings.entries() {
            writeln!(w, "time.{name}={secs:.3}")?;
        }
        writeln!(w, "# resolved configuration")?;
        for line in serialize_config(&self.config).lines() {
            writeln!(w, "config.{line}")?;
        }
        writeln!(w, "# outputs")?;
        for f in &self.files {
            writeln!(w, "file={f}")?;
        }
        w.flush()
    }

    /// The `config.` lines with the prefix stripped, ready for re-parsing.
    pub fn config_text(manifest: &str) -> String {
        manifest
            .lines()
            .filter_map(|l| l.strip_prefix("config."))
            .map(|l| format!("{l}\n"))
            .collect()
    }
}
