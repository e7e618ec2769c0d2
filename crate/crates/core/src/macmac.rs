//! Two-fluid system with a finite mixture of leader targets.
//!
//! The target distribution is `g = sum_p a_p delta_{xi_p}`. Leaders heading to
//! `xi_p` form their own pressureless fluid ("slice" `p`, stored with unit
//! mass), so slices pass through each other without interacting through the
//! flux. Slices couple to each other and to the follower fluid only through the
//! source terms, which use the mixture-weighted leader density
//! `sum_p a_p rho_p`.

use crate::error::{Error, Result};
use crate::fluid::{
    cfl_dt, hyperbolic_step, source_step, CflConfig, ConvolutionTable, FluidState, Grid1D,
    HyperbolicOutcome, MAX_STEP_RETRIES,
};
use crate::hybrid::fluid_com;
use crate::micro::Interactions;
use crate::ode::clipped_step;
use crate::pairwise::paired_sum;

/// `g = sum_p a_p delta_{xi_p}`
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMixture {
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TargetMixture {
    pub fn new(targets: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let g = Self { targets, weights };
        g.validate()?;
        Ok(g)
    }

    pub fn single(target: f64) -> Self {
        Self { targets: vec![target], weights: vec![1.0] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() || self.targets.len() != self.weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} targets with {} weights",
                self.targets.len(),
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidParameter("target weights must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("target weights sum to {total}, expected 1")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Even weight `phi` sampled on the difference grid.
#[derive(Debug, Clone)]
struct WeightTable {
    n: usize,
    dx: f64,
    values: Vec<f64>,
    zero: bool,
}

impl WeightTable {
    fn new(weight: &crate::kernels::WeightSpec, grid: &Grid1D) -> Self {
        let n = grid.n_cells();
        let dx = grid.dx();
        let mut values = vec![0.0; 2 * n - 1];
        for m in 0..n {
            let w = weight.eval(m as f64 * dx);
            values[n - 1 + m] = w;
            values[n - 1 - m] = w;
        }
        Self { n, dx, values, zero: weight.is_zero() }
    }

    /// `sum_k phi(x_j - x_k) f_k dx`
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        if self.zero {
            return vec![0.0; n];
        }
        (0..n)
            .map(|j| {
                let base = n - 1 + j;
                paired_sum(n, |k| self.values[base - k] * f[k]) * self.dx
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MacMacSystem {
    pub leader_slices: Vec<FluidState>,
    pub follower: FluidState,
    pub mixture: TargetMixture,
    pub alpha: f64,
    pub kernels: Interactions,
    pub grid: Grid1D,
    leader_table: ConvolutionTable,
    follower_table: ConvolutionTable,
    cross_table: ConvolutionTable,
    weight_table: WeightTable,
}

/// Outflow through the boundaries during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFlux {
    pub dt: f64,
    pub leader_outflow: Vec<f64>,
    pub follower_outflow: f64,
}

impl MacMacSystem {
    pub fn new(
        leader_slices: Vec<FluidState>,
        follower: FluidState,
        mixture: TargetMixture,
        alpha: f64,
        kernels: Interactions,
        grid: Grid1D,
    ) -> Result<Self> {
        mixture.validate()?;
        kernels.validate()?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if leader_slices.len() != mixture.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} leader slices for {} targets",
                leader_slices.len(),
                mixture.len()
            )));
        }
        for s in leader_slices.iter().chain(std::iter::once(&follower)) {
            if s.len() != grid.n_cells() {
                return Err(Error::DimensionMismatch(format!(
                    "fluid has {} cells, grid has {}",
                    s.len(),
                    grid.n_cells()
                )));
            }
        }
        if leader_slices.iter().any(|s| !(s.mass(&grid) > 0.0)) || !(follower.mass(&grid) > 0.0) {
            return Err(Error::ZeroMass);
        }
        kernels.warn_if_irregular();
        Ok(Self {
            leader_table: ConvolutionTable::new(&kernels.leader, &grid),
            follower_table: ConvolutionTable::new(&kernels.follower, &grid),
            cross_table: ConvolutionTable::new(&kernels.cross, &grid),
            weight_table: WeightTable::new(&kernels.alignment, &grid),
            leader_slices,
            follower,
            mixture,
            alpha,
            kernels,
            grid,
        })
    }

    /// `sum_p a_p f(slice_p)` cell by cell.
    fn mixture_sum<F: Fn(&FluidState, usize) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.grid.n_cells())
            .map(|j| {
                self.leader_slices
                    .iter()
                    .zip(&self.mixture.weights)
                    .fold(0.0, |acc, (s, a)| acc + a * f(s, j))
            })
            .collect()
    }

    /// Mixture-weighted leader density `sum_p a_p rho_p`.
    pub fn total_leader_density(&self) -> Vec<f64> {
        self.mixture_sum(|s, j| s.rho[j])
    }

    /// Per-cell acceleration of leader slice `p`.
    pub fn leader_source(&self, p: usize) -> Result<Vec<f64>> {
        let conv = self.leader_table.apply(&self.total_leader_density());
        self.leader_source_with(p, &conv, fluid_com(&self.follower, &self.grid)?)
    }

    fn leader_source_with(&self, p: usize, conv: &[f64], com: f64) -> Result<Vec<f64>> {
        let slice = self.leader_slices.get(p).ok_or_else(|| {
            Error::InvalidParameter(format!("slice {p} out of range ({} slices)", self.leader_slices.len()))
        })?;
        let xi = self.mixture.targets[p];
        let a = self.alpha;
        Ok(self
            .grid
            .centers()
            .iter()
            .enumerate()
            .map(|(j, &x)| -(1.0 - a) * (x - xi) - a * (x - com) - slice.velocity_at(j) - conv[j])
            .collect())
    }

    /// Per-cell follower acceleration.
    pub fn follower_source(&self) -> Vec<f64> {
        let rho_l = self.total_leader_density();
        let self_conv = self.follower_table.apply(&self.follower.rho);
        let cross_conv = self.cross_table.apply(&rho_l);
        let (aligned_mom, aligned_mass) = if self.weight_table.zero {
            (vec![0.0; self.grid.n_cells()], vec![0.0; self.grid.n_cells()])
        } else {
            let mom_l = self.mixture_sum(|s, j| s.mom[j]);
            (self.weight_table.apply(&mom_l), self.weight_table.apply(&rho_l))
        };
        (0..self.grid.n_cells())
            .map(|j| {
                let u = self.follower.velocity_at(j);
                -self_conv[j] - cross_conv[j] + (aligned_mom[j] - u * aligned_mass[j])
            })
            .collect()
    }

    /// CFL step over every leader slice and the follower fluid.
    pub fn stable_dt(&self, cfg: &CflConfig) -> f64 {
        cfl_dt(self.leader_slices.iter().chain(std::iter::once(&self.follower)), &self.grid, cfg)
    }

    /// One split step of length `dt` (halved on transport failure).
    pub fn step(&mut self, dt: f64) -> Result<StepFlux> {
        let com = fluid_com(&self.follower, &self.grid)?;
        let conv = self.leader_table.apply(&self.total_leader_density());
        let leader_accel = (0..self.leader_slices.len())
            .map(|p| self.leader_source_with(p, &conv, com))
            .collect::<Result<Vec<_>>>()?;
        let follower_accel = self.follower_source();

        let mut dt_try = dt;
        let mut attempt = 0;
        let transported = loop {
            match self.transport_all(dt_try) {
                Ok(out) => break out,
                Err(e) if attempt < MAX_STEP_RETRIES => {
                    log::debug!("transport failed with dt = {dt_try:e}: {e}");
                    attempt += 1;
                    dt_try *= 0.5;
                }
                Err(_) => return Err(Error::StepFailed { t: f64::NAN, retries: MAX_STEP_RETRIES }),
            }
        };
        let (mut leaders, follower) = transported;
        let follower_out = follower.boundary_outflow;
        self.follower = source_step(&follower.state, &follower_accel, dt_try)?;
        let mut leader_outflow = Vec::with_capacity(leaders.len());
        for (p, out) in leaders.drain(..).enumerate() {
            leader_outflow.push(out.boundary_outflow);
            self.leader_slices[p] = source_step(&out.state, &leader_accel[p], dt_try)?;
        }
        Ok(StepFlux { dt: dt_try, leader_outflow, follower_outflow: follower_out })
    }

    fn transport_all(&self, dt: f64) -> Result<(Vec<HyperbolicOutcome>, HyperbolicOutcome)> {
        let leaders = self
            .leader_slices
            .iter()
            .map(|s| hyperbolic_step(s, &self.grid, dt))
            .collect::<Result<Vec<_>>>()?;
        let follower = hyperbolic_step(&self.follower, &self.grid, dt)?;
        Ok((leaders, follower))
    }
}

/// Free-function forms of the source evaluations.
pub fn leader_source_macmac(system: &MacMacSystem, p: usize) -> Result<Vec<f64>> {
    system.leader_source(p)
}

pub fn follower_source_macmac(system: &MacMacSystem) -> Vec<f64> {
    system.follower_source()
}

/// Two-fluid system with its clock and per-population boundary bookkeeping.
#[derive(Debug, Clone)]
pub struct MacMacSimulation {
    pub system: MacMacSystem,
    pub t: f64,
    pub cfl: CflConfig,
    pub leader_outflow: Vec<f64>,
    pub follower_outflow: f64,
    pub steps: usize,
}

impl MacMacSimulation {
    pub fn new(system: MacMacSystem, cfl: CflConfig) -> Result<Self> {
        cfl.validate()?;
        let p = system.leader_slices.len();
        Ok(Self { system, t: 0.0, cfl, leader_outflow: vec![0.0; p], follower_outflow: 0.0, steps: 0 })
    }

    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        while self.t < target {
            let (dt, lands) = clipped_step(self.t, target, self.system.stable_dt(&self.cfl));
            let flux = self.system.step(dt).map_err(|e| e.at(self.t))?;
            for (acc, f) in self.leader_outflow.iter_mut().zip(&flux.leader_outflow) {
                *acc += f;
            }
            self.follower_outflow += flux.follower_outflow;
            self.steps += 1;
            self.t = if lands && flux.dt == dt { target } else { self.t + flux.dt };
        }
        Ok(())
    }
}
