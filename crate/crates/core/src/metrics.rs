//! Cross-scale diagnostics.
//!
//! Distances between populations use the 1D Wasserstein-1 distance
//! `W1(mu, nu) = int |F_mu(x) - F_nu(x)| dx`, evaluated exactly for step
//! (empirical) and piecewise-linear (cell-constant density) CDFs over the
//! grid's domain. Densities are renormalised to unit mass first.

use crate::error::{Error, Result};
use crate::fluid::{FluidState, Grid1D};
use crate::hybrid::HybridSystem;
use crate::macmac::{MacMacSystem, TargetMixture};
use crate::micro::{MicroSystem, ParticleState};
use crate::pairwise::paired_sum;

/// `int_a^b |d(x)| dx` for `d` linear with end values `d0`, `d1`.
#[inline]
fn abs_linear_integral(d0: f64, d1: f64, width: f64) -> f64 {
    if (d0 >= 0.0) == (d1 >= 0.0) || d0 == 0.0 || d1 == 0.0 {
        0.5 * (d0.abs() + d1.abs()) * width
    } else {
        0.5 * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs()) * width
    }
}

fn normalized_cell_masses(rho: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    if rho.len() != grid.n_cells() {
        return Err(Error::DimensionMismatch(format!(
            "density has {} cells, grid has {}",
            rho.len(),
            grid.n_cells()
        )));
    }
    let total = paired_sum(rho.len(), |j| rho[j]);
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(rho.iter().map(|r| r / total).collect())
}

/// W1 between the uniform empirical measure on `points` and a grid density.
pub fn w1_empirical_vs_density(points: &[f64], rho: &[f64], grid: &Grid1D) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("empirical measure has no points".into()));
    }
    let cell_mass = normalized_cell_masses(rho, grid)?;
    let mut pts = points.to_vec();
    pts.sort_by(f64::total_cmp);
    let inv_count = 1.0 / pts.len() as f64;

    // points at or below x_min are already counted when integration starts
    let mut next = pts.partition_point(|&p| p <= grid.x_min());
    let mut total = 0.0;
    let mut cdf_left = 0.0;
    for (j, &mass) in cell_mass.iter().enumerate() {
        let a = grid.edge(j);
        let b = grid.edge(j + 1);
        let slope = mass / (b - a);
        let mut x0 = a;
        loop {
            let emp = next as f64 * inv_count;
            let stop = if next < pts.len() && pts[next] < b { pts[next] } else { b };
            let g0 = cdf_left + slope * (x0 - a);
            let g1 = cdf_left + slope * (stop - a);
            total += abs_linear_integral(g0 - emp, g1 - emp, stop - x0);
            x0 = stop;
            if stop >= b {
                break;
            }
            // consume every point sitting at this breakpoint
            while next < pts.len() && pts[next] <= stop {
                next += 1;
            }
        }
        cdf_left += mass;
    }
    Ok(total)
}

/// W1 between two grid densities on the same grid.
pub fn w1_density_vs_density(a: &[f64], b: &[f64], grid: &Grid1D) -> Result<f64> {
    let ma = normalized_cell_masses(a, grid)?;
    let mb = normalized_cell_masses(b, grid)?;
    let mut diff = 0.0;
    let mut total = 0.0;
    for j in 0..ma.len() {
        let next = diff + (ma[j] - mb[j]);
        total += abs_linear_integral(diff, next, grid.dx());
        diff = next;
    }
    Ok(total)
}

/// `1/M sum_i |w_i - u(y_i)|^2` with `u` linearly interpolated from cell centres.
///
/// This is twice the discrete modulated kinetic energy.
pub fn modulated_energy_followers(followers: &ParticleState, fluid: &FluidState, grid: &Grid1D) -> f64 {
    let m = followers.len();
    if m == 0 {
        return 0.0;
    }
    let u = fluid.velocity();
    paired_sum(m, |i| {
        let d = followers.velocities[i] - grid.interpolate(&u, followers.positions[i]);
        d * d
    }) / m as f64
}

/// `1/N sum_i sum_p a_p |v_i - u_p(x_i)|^2`; twice the averaged modulated energy.
pub fn modulated_energy_leaders(
    leaders: &ParticleState,
    slices: &[FluidState],
    mixture: &TargetMixture,
    grid: &Grid1D,
) -> Result<f64> {
    if slices.len() != mixture.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} slices for {} targets",
            slices.len(),
            mixture.len()
        )));
    }
    let n = leaders.len();
    if n == 0 {
        return Ok(0.0);
    }
    let fields: Vec<Vec<f64>> = slices.iter().map(FluidState::velocity).collect();
    Ok(paired_sum(n, |i| {
        let (x, v) = (leaders.positions[i], leaders.velocities[i]);
        fields
            .iter()
            .zip(&mixture.weights)
            .fold(0.0, |acc, (u, a)| {
                let d = v - grid.interpolate(u, x);
                acc + a * d * d
            })
    }) / n as f64)
}

/// Particle-vs-hybrid functional `F = F1 + F2 + F3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FComponents {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl FComponents {
    pub fn sum(&self) -> f64 {
        self.f1 + self.f2 + self.f3
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.f1, self.f2, self.f3, self.sum()]
    }
}

/// Hybrid-vs-two-fluid functional `G = G1 + G2 + G3 + G4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GComponents {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
}

impl GComponents {
    pub fn sum(&self) -> f64 {
        self.g1 + self.g2 + self.g3 + self.g4
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.g1, self.g2, self.g3, self.g4, self.sum()]
    }
}

/// Distance between the particle system and the hybrid system. Leaders are
/// paired by index.
pub fn functional_f(micro: &MicroSystem, hybrid: &HybridSystem) -> Result<FComponents> {
    let n = micro.leaders.len();
    if n != hybrid.leaders.len() {
        return Err(Error::DimensionMismatch(format!(
            "particle system has {n} leaders, hybrid has {}",
            hybrid.leaders.len()
        )));
    }
    let grid = &hybrid.grid;
    let w1 = w1_empirical_vs_density(&micro.followers.positions, &hybrid.fluid.rho, grid)?;
    let f2 = modulated_energy_followers(&micro.followers, &hybrid.fluid, grid);
    let (a, b) = (&micro.leaders, &hybrid.leaders);
    let f3 = if n == 0 {
        0.0
    } else {
        paired_sum(n, |i| {
            let dx = a.positions[i] - b.positions[i];
            let dv = a.velocities[i] - b.velocities[i];
            dx * dx + dv * dv
        }) / n as f64
    };
    Ok(FComponents { f1: w1 * w1, f2, f3 })
}

/// Distance between the hybrid system and the two-fluid system.
pub fn functional_g(hybrid: &HybridSystem, macmac: &MacMacSystem) -> Result<GComponents> {
    let grid = &macmac.grid;
    if !hybrid.grid.same_as(grid) {
        return Err(Error::DimensionMismatch("hybrid and two-fluid grids differ".into()));
    }
    let mix = &macmac.mixture;
    let g1 = modulated_energy_leaders(&hybrid.leaders, &macmac.leader_slices, mix, grid)?;

    let mut g2 = 0.0;
    for (p, (&xi, &a)) in mix.targets.iter().zip(&mix.weights).enumerate() {
        let members: Vec<f64> = hybrid
            .leaders
            .positions
            .iter()
            .zip(&hybrid.control.targets)
            .filter(|(_, t)| **t == xi)
            .map(|(x, _)| *x)
            .collect();
        if members.is_empty() {
            return Err(Error::InvalidParameter(format!("no leaders are assigned target {xi}")));
        }
        let w1 = w1_empirical_vs_density(&members, &macmac.leader_slices[p].rho, grid)?;
        g2 += a * w1 * w1;
    }

    let (h, m) = (&hybrid.fluid, &macmac.follower);
    let g3 = paired_sum(grid.n_cells(), |j| {
        let d = h.velocity_at(j) - m.velocity_at(j);
        h.rho[j] * d * d
    }) * grid.dx();
    let w1 = w1_density_vs_density(&h.rho, &m.rho, grid)?;
    Ok(GComponents { g1, g2, g3, g4: w1 * w1 })
}

/// Histogram reconstruction of density and momentum from particles.
///
/// Density is `count / (M dx)`; momentum is density times the mean velocity in
/// the bin. Particles outside the grid are dropped but still count in `M`.
pub fn bin_momentum(particles: &ParticleState, grid: &Grid1D) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n_cells();
    let mut count = vec![0usize; n];
    let mut vel_sum = vec![0.0; n];
    for (&x, &v) in particles.positions.iter().zip(&particles.velocities) {
        if let Some(j) = grid.locate(x) {
            count[j] += 1;
            vel_sum[j] += v;
        }
    }
    let norm = 1.0 / (particles.len().max(1) as f64 * grid.dx());
    let density: Vec<f64> = count.iter().map(|&c| c as f64 * norm).collect();
    let momentum = density
        .iter()
        .zip(count.iter().zip(&vel_sum))
        .map(|(&d, (&c, &s))| if c > 0 { d * (s / c as f64) } else { 0.0 })
        .collect();
    (density, momentum)
}

/// Least-squares fit of `log(value) = slope log(size) + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub sizes: Vec<usize>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RateFit {
    /// Convergence rate `-slope`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

pub fn fit_rate(sizes: &[usize], values: &[f64]) -> Result<RateFit> {
    if sizes.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} sizes for {} values",
            sizes.len(),
            values.len()
        )));
    }
    if sizes.len() < 2 {
        return Err(Error::InvalidParameter("rate regression needs at least two points".into()));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("rate regression needs positive values, got {v}")));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidParameter("sizes must be positive".into()));
    }
    let xs: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("rate regression needs distinct sizes".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit { sizes: sizes.to_vec(), values: values.to_vec(), slope, intercept, r_squared })
}

/// `max_t |f(t)|`
pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `(int_0^T f(t)^2 dt)^(1/2)` by the trapezoidal rule on the sample times.
pub fn l2_time_norm(times: &[f64], values: &[f64]) -> f64 {
    let integral: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] * v[0] + v[1] * v[1]))
        .sum();
    integral.sqrt()
}

/// One diagnostics record. Column order is fixed, see [`DiagnosticsRow::header`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass_f: f64,
    pub com_f: f64,
    pub max_rho_f: f64,
    pub min_rho_f: f64,
    pub boundary_flux: f64,
    pub f: Option<FComponents>,
    pub g: Option<GComponents>,
}

impl DiagnosticsRow {
    pub const BASE_COLUMNS: [&'static str; 6] =
        ["t", "mass_F", "com_F", "max_rho_F", "min_rho_F", "boundary_flux"];
    pub const F_COLUMNS: [&'static str; 4] = ["F1", "F2", "F3", "Fsum"];
    pub const G_COLUMNS: [&'static str; 5] = ["G1", "G2", "G3", "G4", "Gsum"];

    /// Follower summary of a fluid state.
    pub fn from_fluid(t: f64, fluid: &FluidState, grid: &Grid1D, boundary_flux: f64) -> Result<Self> {
        Ok(Self {
            t,
            mass_f: fluid.mass(grid),
            com_f: crate::hybrid::fluid_com(fluid, grid)?,
            max_rho_f: fluid.max_density(),
            min_rho_f: fluid.min_density(),
            boundary_flux,
            f: None,
            g: None,
        })
    }

    /// Follower summary of a particle population, densities taken from binning.
    pub fn from_particles(t: f64, followers: &ParticleState, grid: &Grid1D) -> Self {
        let (density, _) = bin_momentum(followers, grid);
        let inside = density.iter().sum::<f64>() * grid.dx();
        Self {
            t,
            mass_f: inside,
            com_f: followers.center_of_mass(),
            max_rho_f: density.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_rho_f: density.iter().copied().fold(f64::INFINITY, f64::min),
            boundary_flux: 1.0 - inside,
            f: None,
            g: None,
        }
    }

    pub fn header(&self) -> Vec<&'static str> {
        let mut h = Self::BASE_COLUMNS.to_vec();
        if self.f.is_some() {
            h.extend(Self::F_COLUMNS);
        }
        if self.g.is_some() {
            h.extend(Self::G_COLUMNS);
        }
        h
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.t, self.mass_f, self.com_f, self.max_rho_f, self.min_rho_f, self.boundary_flux];
        if let Some(f) = &self.f {
            v.extend(f.as_array());
        }
        if let Some(g) = &self.g {
            v.extend(g.as_array());
        }
        v
    }
}
