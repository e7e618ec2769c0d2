//! Cross-tier convergence studies.
//!
//! The coarser-tier solution does not depend on the varied population size, so
//! it is computed once and stored at the sample times. The finer tier is then
//! run for every size and the distance functional is evaluated against the
//! stored snapshots. For each component and the sum three norms are reported:
//! `sup_t`, the time-L2 norm, and the time-L2 norm of the difference to the
//! reference-size run.

use std::fs;
use std::path::Path;

use leadfollow::hybrid::HybridSimulation;
use leadfollow::macmac::MacMacSimulation;
use leadfollow::metrics::{fit_rate, functional_f, functional_g, l2_time_norm, sup_norm, DiagnosticsRow, RateFit};
use leadfollow::micro::{sample_times, MicroSimulation};
use leadfollow::{CflConfig, HybridSystem, MacMacSystem};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::run::CsvOut;
use crate::setup::{build_hybrid, build_macmac, build_micro};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Tier {
    MicroVsHybrid,
    HybridVsMacmac,
}

impl Tier {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Tier::MicroVsHybrid => &DiagnosticsRow::F_COLUMNS,
            Tier::HybridVsMacmac => &DiagnosticsRow::G_COLUMNS,
        }
    }

    /// Sizes used for the original study, printed for comparison.
    pub fn original_sizes(self) -> (&'static [usize], usize) {
        (&[10, 100, 1000, 10_000], 10_000)
    }
}

/// Which time norm a rate was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    Sup,
    L2,
    L2Error,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::Sup, Norm::L2, Norm::L2Error];

    pub fn name(self) -> &'static str {
        match self {
            Norm::Sup => "sup",
            Norm::L2 => "l2",
            Norm::L2Error => "l2_err",
        }
    }
}

/// Functional time series of one size.
#[derive(Debug, Clone)]
pub struct SizeResult {
    pub size: usize,
    /// `series[k][c]`: component `c` at sample `k`; the sum is the last column.
    pub series: Vec<Vec<f64>>,
}

impl SizeResult {
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.series.iter().map(|r| r[c]).collect()
    }

    pub fn sup(&self, c: usize) -> f64 {
        sup_norm(&self.column(c))
    }

    pub fn l2(&self, times: &[f64], c: usize) -> f64 {
        l2_time_norm(times, &self.column(c))
    }

    pub fn l2_error(&self, times: &[f64], reference: &SizeResult, c: usize) -> f64 {
        let diff: Vec<f64> = self.series.iter().zip(&reference.series).map(|(a, b)| a[c] - b[c]).collect();
        l2_time_norm(times, &diff)
    }

    pub fn norm(&self, norm: Norm, times: &[f64], reference: &SizeResult, c: usize) -> f64 {
        match norm {
            Norm::Sup => self.sup(c),
            Norm::L2 => self.l2(times, c),
            Norm::L2Error => self.l2_error(times, reference, c),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateEntry {
    pub column: &'static str,
    pub norm: Norm,
    /// `None` when the regression was impossible, e.g. a vanishing component.
    pub fit: Option<RateFit>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub tier: Tier,
    pub times: Vec<f64>,
    pub results: Vec<SizeResult>,
    pub reference: SizeResult,
    pub rates: Vec<RateEntry>,
}

impl ConvergenceReport {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.tier.columns().iter().position(|c| *c == name)
    }

    pub fn values(&self, column: &str, norm: Norm) -> Vec<f64> {
        let c = self.column_index(column).expect("known column");
        self.results.iter().map(|r| r.norm(norm, &self.times, &self.reference, c)).collect()
    }

    pub fn rate(&self, column: &str, norm: Norm) -> Option<&RateFit> {
        self.rates.iter().find(|e| e.column == column && e.norm == norm).and_then(|e| e.fit.as_ref())
    }
}

/// Runs the study. `base` fixes everything except the varied count (followers
/// for `MicroVsHybrid`, leaders for `HybridVsMacmac`). When `out_dir` is given,
/// one functional CSV per size is written as soon as it is available, followed
/// by `convergence.csv` and `rates.csv`.
pub fn convergence_study(
    tier: Tier,
    sizes: &[usize],
    reference_size: usize,
    base: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<ConvergenceReport> {
    if sizes.len() < 2 {
        return Err(CliError::Config("a rate regression needs at least two sizes".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
        return Err(CliError::Config("sizes must be positive and strictly ascending".into()));
    }
    if *sizes.last().unwrap() >= reference_size {
        return Err(CliError::Config(format!("reference size {reference_size} must exceed every size")));
    }
    base.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    let times = sample_times(base.t_end, base.sample_interval)?;
    let cfl = CflConfig { cfl: base.cfl, dt_max: base.dt_max, ..CflConfig::default() };
    let ts = times.as_slice();

    let mut run_size = match tier {
        Tier::MicroVsHybrid => {
            let mut sim = HybridSimulation::new(build_hybrid(base)?, cfl)?;
            let snaps = snapshots(ts, |t| {
                sim.advance_to(t)?;
                Ok(sim.system.clone())
            })?;
            Box::new(move |size: usize| -> Result<Vec<Vec<f64>>> {
                let cfg = ExperimentConfig { n_followers: size, ..base.clone() };
                let mut micro = MicroSimulation::new(build_micro(&cfg)?, cfg.dt_micro)?;
                ts.iter()
                    .zip(&snaps)
                    .map(|(&t, h): (&f64, &HybridSystem)| {
                        micro.advance_to(t)?;
                        Ok(functional_f(&micro.system, h)?.as_array().to_vec())
                    })
                    .collect()
            }) as Box<dyn FnMut(usize) -> Result<Vec<Vec<f64>>> + '_>
        }
        Tier::HybridVsMacmac => {
            let mut sim = MacMacSimulation::new(build_macmac(base)?, cfl)?;
            let snaps = snapshots(ts, |t| {
                sim.advance_to(t)?;
                Ok(sim.system.clone())
            })?;
            Box::new(move |size: usize| -> Result<Vec<Vec<f64>>> {
                let cfg = ExperimentConfig { n_leaders: size, ..base.clone() };
                let mut hybrid = HybridSimulation::new(build_hybrid(&cfg)?, cfl)?;
                ts.iter()
                    .zip(&snaps)
                    .map(|(&t, m): (&f64, &MacMacSystem)| {
                        hybrid.advance_to(t)?;
                        Ok(functional_g(&hybrid.system, m)?.as_array().to_vec())
                    })
                    .collect()
            })
        }
    };

    let columns = tier.columns();
    let mut results = Vec::with_capacity(sizes.len());
    for &size in sizes.iter().chain(std::iter::once(&reference_size)) {
        log::info!("{tier:?}: size {size}");
        let series = run_size(size)?;
        let result = SizeResult { size, series };
        if let Some(dir) = out_dir {
            write_series(&dir.join(format!("functional_{size}.csv")), columns, &times, &result)?;
        }
        results.push(result);
    }
    let reference = results.pop().expect("reference run present");

    let mut rates = Vec::new();
    for (c, &column) in columns.iter().enumerate() {
        for norm in Norm::ALL {
            let values: Vec<f64> = results.iter().map(|r| r.norm(norm, &times, &reference, c)).collect();
            rates.push(RateEntry { column, norm, fit: fit_rate(sizes, &values).ok() });
        }
    }
    drop(run_size);
    let report = ConvergenceReport { tier, times, results, reference, rates };
    if let Some(dir) = out_dir {
        write_report(dir, &report)?;
    }
    Ok(report)
}

fn snapshots<S, F>(times: &[f64], mut at: F) -> Result<Vec<S>>
where
    F: FnMut(f64) -> leadfollow::Result<S>,
{
    times.iter().map(|&t| at(t).map_err(CliError::from)).collect()
}

fn write_series(path: &Path, columns: &[&str], times: &[f64], r: &SizeResult) -> Result<()> {
    let mut header = vec!["t"];
    header.extend(columns);
    let mut out = CsvOut::create(path.to_path_buf(), &header)?;
    for (t, row) in times.iter().zip(&r.series) {
        out.record(std::iter::once(t.to_string()).chain(row.iter().map(|v| v.to_string())))?;
    }
    out.flush()
}

fn write_report(dir: &Path, report: &ConvergenceReport) -> Result<()> {
    let columns = report.tier.columns();
    let mut out = CsvOut::create(dir.join("convergence.csv"), &["size", "column", "sup", "l2", "l2_err"])?;
    for r in &report.results {
        for (c, name) in columns.iter().enumerate() {
            out.record([
                r.size.to_string(),
                name.to_string(),
                r.sup(c).to_string(),
                r.l2(&report.times, c).to_string(),
                r.l2_error(&report.times, &report.reference, c).to_string(),
            ])?;
        }
    }
    out.flush()?;
    let mut out = CsvOut::create(dir.join("rates.csv"), &["column", "norm", "rate", "slope", "intercept", "r_squared"])?;
    for e in &report.rates {
        let nums = match &e.fit {
            Some(f) => [f.rate(), f.slope, f.intercept, f.r_squared].map(|v| v.to_string()),
            None => ["nan", "nan", "nan", "nan"].map(String::from),
        };
        out.record([e.column.to_string(), e.norm.name().to_string()].into_iter().chain(nums))?;
    }
    out.flush()
}
