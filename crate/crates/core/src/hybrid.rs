//! Leader particles coupled to a pressureless follower fluid.
//!
//! Per time step the follower fluid is transported (Rusanov) and then forced
//! with the acceleration evaluated on the pre-step snapshot, while the leaders
//! take one RK4 step with the fluid frozen. Both substeps share the CFL step
//! computed from the follower velocity.

use crate::error::{Error, Result};
use crate::fluid::{
    cfl_dt, hyperbolic_step_with_retry, source_step, CflConfig, ConvolutionTable, FluidState, Grid1D,
};
use crate::micro::{
    alignment_force, leader_derivative, ControlParams, Interactions, MeanForce, ParticleState,
};
use crate::ode::{clipped_step, rk4_step};
use crate::pairwise::paired_sum;

/// Centre of mass of a grid density, normalised by its current mass.
pub fn fluid_com(state: &FluidState, grid: &Grid1D) -> Result<f64> {
    weighted_com(&state.rho, grid)
}

pub(crate) fn weighted_com(rho: &[f64], grid: &Grid1D) -> Result<f64> {
    let n = rho.len();
    let mass = paired_sum(n, |j| rho[j]);
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let x = grid.centers();
    Ok(paired_sum(n, |j| x[j] * rho[j]) / mass)
}

#[derive(Debug, Clone)]
pub struct HybridSystem {
    pub leaders: ParticleState,
    pub control: ControlParams,
    pub fluid: FluidState,
    pub grid: Grid1D,
    pub kernels: Interactions,
    follower_table: ConvolutionTable,
}

impl HybridSystem {
    pub fn new(
        leaders: ParticleState,
        control: ControlParams,
        fluid: FluidState,
        grid: Grid1D,
        kernels: Interactions,
    ) -> Result<Self> {
        control.validate()?;
        kernels.validate()?;
        if control.targets.len() != leaders.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} targets for {} leaders",
                control.targets.len(),
                leaders.len()
            )));
        }
        if fluid.len() != grid.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "fluid has {} cells, grid has {}",
                fluid.len(),
                grid.n_cells()
            )));
        }
        if !(fluid.mass(&grid) > 0.0) {
            return Err(Error::ZeroMass);
        }
        kernels.warn_if_irregular();
        let follower_table = ConvolutionTable::new(&kernels.follower, &grid);
        Ok(Self { leaders, control, fluid, grid, kernels, follower_table })
    }

    /// Leader derivative `(x', v')` with the follower centre of mass taken from the fluid.
    pub fn leader_rhs(&self) -> Result<ParticleState> {
        let com = fluid_com(&self.fluid, &self.grid)?;
        let n = self.leaders.len();
        let mut d = ParticleState { positions: vec![0.0; n], velocities: vec![0.0; n] };
        leader_derivative(&self.leaders, com, &self.control, self.kernels.leader, &mut d.positions, &mut d.velocities);
        Ok(d)
    }

    /// Per-cell follower acceleration.
    pub fn follower_source(&self) -> Vec<f64> {
        follower_source_with_table(&self.fluid, &self.grid, &self.leaders, &self.kernels, &self.follower_table)
    }

    /// CFL step; only the follower velocity enters.
    pub fn stable_dt(&self, cfg: &CflConfig) -> f64 {
        cfl_dt([&self.fluid], &self.grid, cfg)
    }

    /// Advances by `dt` (or less, if the transport step needs retries);
    /// returns `(dt_used, boundary_outflow)`.
    pub fn step(&mut self, dt: f64) -> Result<(f64, f64)> {
        let accel = self.follower_source();
        let com = fluid_com(&self.fluid, &self.grid)?;

        let (transport, dt) = hyperbolic_step_with_retry(&self.fluid, &self.grid, dt)?;
        let fluid = source_step(&transport.state, &accel, dt)?;

        let n = self.leaders.len();
        let mut packed = Vec::with_capacity(2 * n);
        packed.extend_from_slice(&self.leaders.positions);
        packed.extend_from_slice(&self.leaders.velocities);
        let control = &self.control;
        let kernel = self.kernels.leader;
        let next = rk4_step(
            |_, s: &[f64], d: &mut [f64]| {
                let leaders = ParticleState { positions: s[..n].to_vec(), velocities: s[n..].to_vec() };
                let (dx, dv) = d.split_at_mut(n);
                leader_derivative(&leaders, com, control, kernel, dx, dv);
                Ok(())
            },
            &packed,
            0.0,
            dt,
        )?;
        self.leaders = ParticleState { positions: next[..n].to_vec(), velocities: next[n..].to_vec() };
        self.fluid = fluid;
        Ok((dt, transport.boundary_outflow))
    }
}

/// Free-function form of [`HybridSystem::leader_rhs`].
pub fn leader_rhs_hybrid(system: &HybridSystem) -> Result<ParticleState> {
    system.leader_rhs()
}

/// Follower acceleration at each cell centre:
/// `-(W_F' * rho)(x_j) + 1/N sum_i W_C'(x_i - x_j) + 1/N sum_i phi(x_i - x_j)(v_i - u_j)`.
pub fn follower_source_hybrid(
    fluid: &FluidState,
    grid: &Grid1D,
    leaders: &ParticleState,
    kernels: &Interactions,
) -> Vec<f64> {
    let table = ConvolutionTable::new(&kernels.follower, grid);
    follower_source_with_table(fluid, grid, leaders, kernels, &table)
}

fn follower_source_with_table(
    fluid: &FluidState,
    grid: &Grid1D,
    leaders: &ParticleState,
    kernels: &Interactions,
    table: &ConvolutionTable,
) -> Vec<f64> {
    let self_conv = table.apply(&fluid.rho);
    let cross = MeanForce::new(kernels.cross, &leaders.positions);
    grid.centers()
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            -self_conv[j]
                + cross.at(x)
                + alignment_force(&kernels.alignment, leaders, x, fluid.velocity_at(j))
        })
        .collect()
}

/// Hybrid system with its clock and boundary bookkeeping.
#[derive(Debug, Clone)]
pub struct HybridSimulation {
    pub system: HybridSystem,
    pub t: f64,
    pub cfl: CflConfig,
    /// Follower mass that has left through the boundaries so far.
    pub boundary_outflow: f64,
    pub steps: usize,
}

impl HybridSimulation {
    pub fn new(system: HybridSystem, cfl: CflConfig) -> Result<Self> {
        cfl.validate()?;
        Ok(Self { system, t: 0.0, cfl, boundary_outflow: 0.0, steps: 0 })
    }

    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        while self.t < target {
            let (dt, lands) = clipped_step(self.t, target, self.system.stable_dt(&self.cfl));
            let (used, outflow) = self.system.step(dt).map_err(|e| e.at(self.t))?;
            self.boundary_outflow += outflow;
            self.steps += 1;
            self.t = if lands && used == dt { target } else { self.t + used };
        }
        Ok(())
    }
}
