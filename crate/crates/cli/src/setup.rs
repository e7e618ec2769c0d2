//! Consistent initial data for the three tiers.
//!
//! All tiers are built from the same cluster description: particles are the
//! deterministic quantile samples of the mixture, fluids are the cell-centre
//! values of its density, and particle velocities are the initial velocity
//! field evaluated at the particle positions.

use leadfollow::fluid::FluidState;
use leadfollow::macmac::{MacMacSystem, TargetMixture};
use leadfollow::micro::{ControlParams, MicroSystem, ParticleState};
use leadfollow::sampling::{discretize_density, sample_labeled, GaussianSpec, MixtureSpec};
use leadfollow::{Grid1D, HybridSystem};

use crate::config::ExperimentConfig;
use crate::error::Result;

pub fn leader_mixture(cfg: &ExperimentConfig) -> Result<MixtureSpec> {
    let comps = cfg
        .leaders
        .clusters
        .iter()
        .map(|c| GaussianSpec::new(c.mu, c.sigma, c.weight))
        .collect::<leadfollow::Result<Vec<_>>>()?;
    Ok(MixtureSpec::new(comps)?)
}

pub fn follower_mixture(cfg: &ExperimentConfig) -> Result<MixtureSpec> {
    let comps = cfg
        .followers
        .clusters
        .iter()
        .map(|c| GaussianSpec::new(c.mu, c.sigma, c.weight))
        .collect::<leadfollow::Result<Vec<_>>>()?;
    Ok(MixtureSpec::new(comps)?)
}

/// Leader particles and their control parameters; each leader is steered to
/// the target of the cluster it was sampled from.
pub fn initial_leaders(cfg: &ExperimentConfig) -> Result<(ParticleState, ControlParams)> {
    let samples = sample_labeled(&leader_mixture(cfg)?, cfg.n_leaders)?;
    let positions: Vec<f64> = samples.iter().map(|s| s.position).collect();
    let velocities = positions.iter().map(|&x| cfg.leaders.velocity.eval(x)).collect();
    let targets = samples.iter().map(|s| cfg.leaders.clusters[s.component].target).collect();
    Ok((ParticleState::new(positions, velocities)?, ControlParams::new(cfg.alpha, cfg.gamma, targets)?))
}

pub fn initial_followers(cfg: &ExperimentConfig, count: usize) -> Result<ParticleState> {
    let samples = sample_labeled(&follower_mixture(cfg)?, count)?;
    let positions: Vec<f64> = samples.iter().map(|s| s.position).collect();
    let velocities = positions.iter().map(|&y| cfg.followers.velocity.eval(y)).collect();
    Ok(ParticleState::new(positions, velocities)?)
}

pub fn follower_fluid(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<FluidState> {
    let rho = discretize_density(&follower_mixture(cfg)?, grid);
    let u: Vec<f64> = grid.centers().iter().map(|&x| cfg.followers.velocity.eval(x)).collect();
    Ok(FluidState::from_velocity(rho, &u)?)
}

/// One unit-mass leader slice per cluster, weighted by the cluster weights.
pub fn leader_slices(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<(Vec<FluidState>, TargetMixture)> {
    let u: Vec<f64> = grid.centers().iter().map(|&x| cfg.leaders.velocity.eval(x)).collect();
    let mut slices = Vec::with_capacity(cfg.leaders.clusters.len());
    for c in &cfg.leaders.clusters {
        let g = GaussianSpec::new(c.mu, c.sigma, 1.0)?;
        let rho = discretize_density(&MixtureSpec::single(g), grid);
        slices.push(FluidState::from_velocity(rho, &u)?);
    }
    let mixture = TargetMixture::new(
        cfg.leaders.clusters.iter().map(|c| c.target).collect(),
        cfg.leaders.clusters.iter().map(|c| c.weight).collect(),
    )?;
    Ok((slices, mixture))
}

pub fn build_micro(cfg: &ExperimentConfig) -> Result<MicroSystem> {
    let (leaders, control) = initial_leaders(cfg)?;
    let followers = initial_followers(cfg, cfg.n_followers)?;
    Ok(MicroSystem::new(leaders, followers, control, cfg.kernels)?)
}

pub fn build_hybrid(cfg: &ExperimentConfig) -> Result<HybridSystem> {
    let grid = cfg.grid()?;
    let (leaders, control) = initial_leaders(cfg)?;
    let fluid = follower_fluid(cfg, &grid)?;
    Ok(HybridSystem::new(leaders, control, fluid, grid, cfg.kernels)?)
}

pub fn build_macmac(cfg: &ExperimentConfig) -> Result<MacMacSystem> {
    let grid = cfg.grid()?;
    let (slices, mixture) = leader_slices(cfg, &grid)?;
    let follower = follower_fluid(cfg, &grid)?;
    Ok(MacMacSystem::new(slices, follower, mixture, cfg.alpha, cfg.kernels, grid)?)
}
