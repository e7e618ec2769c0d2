//! Single-tier simulation runs and their CSV artifacts.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use leadfollow::hybrid::HybridSimulation;
use leadfollow::macmac::MacMacSimulation;
use leadfollow::metrics::DiagnosticsRow;
use leadfollow::micro::{sample_times, MicroSimulation};
use leadfollow::{CflConfig, FluidState, Grid1D, ParticleState};

use crate::config::{ExperimentConfig, Model};
use crate::error::{CliError, Result};
use crate::setup::{build_hybrid, build_macmac, build_micro};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const PARTICLE_SERIES_FILE: &str = "particles.csv";
pub const FIELD_SERIES_FILE: &str = "fields.csv";
pub const FINAL_PARTICLES_FILE: &str = "final_particles.csv";
pub const FINAL_FIELDS_FILE: &str = "final_fields.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub const PARTICLE_COLUMNS: [&str; 5] = ["t", "population", "index", "x", "v"];
pub const FIELD_COLUMNS: [&str; 6] = ["t", "population", "cell", "x", "rho", "mom"];

/// Any of the three tiers behind one interface.
#[derive(Debug, Clone)]
pub enum Simulation {
    Micro(MicroSimulation),
    Hybrid(HybridSimulation),
    Macmac(MacMacSimulation),
}

impl Simulation {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let cfl = CflConfig { cfl: cfg.cfl, dt_max: cfg.dt_max, ..CflConfig::default() };
        Ok(match cfg.model {
            Model::Micro => Simulation::Micro(MicroSimulation::new(build_micro(cfg)?, cfg.dt_micro)?),
            Model::Hybrid => Simulation::Hybrid(HybridSimulation::new(build_hybrid(cfg)?, cfl)?),
            Model::Macmac => Simulation::Macmac(MacMacSimulation::new(build_macmac(cfg)?, cfl)?),
        })
    }

    pub fn t(&self) -> f64 {
        match self {
            Simulation::Micro(s) => s.t,
            Simulation::Hybrid(s) => s.t,
            Simulation::Macmac(s) => s.t,
        }
    }

    pub fn advance_to(&mut self, target: f64) -> leadfollow::Result<()> {
        match self {
            Simulation::Micro(s) => s.advance_to(target),
            Simulation::Hybrid(s) => s.advance_to(target),
            Simulation::Macmac(s) => s.advance_to(target),
        }
    }

    /// Follower summary; particle densities are binned on `grid`.
    pub fn diagnostics(&self, grid: &Grid1D) -> Result<DiagnosticsRow> {
        Ok(match self {
            Simulation::Micro(s) => DiagnosticsRow::from_particles(s.t, &s.system.followers, grid),
            Simulation::Hybrid(s) => {
                DiagnosticsRow::from_fluid(s.t, &s.system.fluid, &s.system.grid, s.boundary_outflow)?
            }
            Simulation::Macmac(s) => {
                DiagnosticsRow::from_fluid(s.t, &s.system.follower, &s.system.grid, s.follower_outflow)?
            }
        })
    }

    pub fn particles(&self) -> Vec<(&'static str, &ParticleState)> {
        match self {
            Simulation::Micro(s) => vec![("leader", &s.system.leaders), ("follower", &s.system.followers)],
            Simulation::Hybrid(s) => vec![("leader", &s.system.leaders)],
            Simulation::Macmac(_) => vec![],
        }
    }

    pub fn fields(&self) -> Vec<(String, &FluidState)> {
        match self {
            Simulation::Micro(_) => vec![],
            Simulation::Hybrid(s) => vec![("follower".into(), &s.system.fluid)],
            Simulation::Macmac(s) => {
                let mut v: Vec<(String, &FluidState)> = vec![("follower".into(), &s.system.follower)];
                v.extend(s.system.leader_slices.iter().enumerate().map(|(p, f)| (format!("leader{p}"), f)));
                v
            }
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub(crate) struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvOut {
    pub(crate) fn create(path: PathBuf, header: &[&str]) -> Result<Self> {
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut out = Self { writer: csv::Writer::from_writer(file), path };
        out.record(header.iter().map(|s| s.to_string()))?;
        Ok(out)
    }

    pub(crate) fn record<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|source| CliError::Csv { path: self.path.clone(), source })
    }

    pub(crate) fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(io_err(&self.path))
    }
}

fn write_particles(out: &mut CsvOut, t: Option<f64>, sim: &Simulation) -> Result<()> {
    for (name, p) in sim.particles() {
        for (i, (x, v)) in p.positions.iter().zip(&p.velocities).enumerate() {
            let mut row = Vec::with_capacity(5);
            if let Some(t) = t {
                row.push(t.to_string());
            }
            row.extend([name.to_string(), i.to_string(), x.to_string(), v.to_string()]);
            out.record(row)?;
        }
    }
    Ok(())
}

fn write_fields(out: &mut CsvOut, t: Option<f64>, sim: &Simulation, grid: &Grid1D) -> Result<()> {
    for (name, f) in sim.fields() {
        for j in 0..f.len() {
            let mut row = Vec::with_capacity(6);
            if let Some(t) = t {
                row.push(t.to_string());
            }
            row.extend([name.clone(), j.to_string(), grid.center(j).to_string(), f.rho[j].to_string(), f.mom[j].to_string()]);
            out.record(row)?;
        }
    }
    Ok(())
}

/// Outcome of a completed run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub final_state: Simulation,
}

/// Runs one configuration, writing diagnostics, series, final snapshots and a
/// manifest into `cfg.out_dir`. On a solver failure the manifest records the
/// failure time and the error is returned.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let grid = cfg.grid()?;
    let mut sim = Simulation::new(cfg)?;

    let mut diag: Option<CsvOut> = None;
    let mut particles = None;
    let mut fields = None;
    if cfg.write_series {
        particles = Some(CsvOut::create(dir.join(PARTICLE_SERIES_FILE), &PARTICLE_COLUMNS)?);
        fields = Some(CsvOut::create(dir.join(FIELD_SERIES_FILE), &FIELD_COLUMNS)?);
    }

    let mut rows = Vec::new();
    let mut failure = None;
    for t in sample_times(cfg.t_end, cfg.sample_interval)? {
        if let Err(e) = sim.advance_to(t) {
            failure = Some(e);
            break;
        }
        let row = sim.diagnostics(&grid)?;
        let out = match &mut diag {
            Some(d) => d,
            None => diag.insert(CsvOut::create(dir.join(DIAGNOSTICS_FILE), &row.header())?),
        };
        out.record(row.values().iter().map(|v| v.to_string()))?;
        rows.push(row);
        if let Some(p) = &mut particles {
            write_particles(p, Some(t), &sim)?;
        }
        if let Some(f) = &mut fields {
            write_fields(f, Some(t), &sim, &grid)?;
        }
    }
    for out in [&mut diag, &mut particles, &mut fields].into_iter().flatten() {
        out.flush()?;
    }

    let mut fp = CsvOut::create(dir.join(FINAL_PARTICLES_FILE), &PARTICLE_COLUMNS[1..])?;
    write_particles(&mut fp, None, &sim)?;
    fp.flush()?;
    let mut ff = CsvOut::create(dir.join(FINAL_FIELDS_FILE), &FIELD_COLUMNS[1..])?;
    write_fields(&mut ff, None, &sim, &grid)?;
    ff.flush()?;

    let mut manifest = cfg.manifest();
    match &failure {
        None => manifest.push_str(&format!("status = ok\nt_reached = {}\n", sim.t())),
        Some(e) => manifest.push_str(&format!(
            "status = failed\nfailure_time = {}\nerror = {e}\n",
            failure_time(e).unwrap_or(sim.t())
        )),
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(io_err(&path))?;

    match failure {
        Some(e) => Err(e.into()),
        None => Ok(RunSummary { out_dir: dir, diagnostics: rows, final_state: sim }),
    }
}

fn failure_time(e: &leadfollow::Error) -> Option<f64> {
    use leadfollow::Error::*;
    match e {
        NonFinite { t } | NegativeDensity { t, .. } | StepFailed { t, .. } => Some(*t),
        _ => None,
    }
}
