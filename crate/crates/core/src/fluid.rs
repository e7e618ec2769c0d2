//! First-order finite-volume machinery for the 1D pressureless Euler system
//!
//! ```text
//! rho_t + (rho u)_x        = 0
//! (rho u)_t + (rho u^2)_x  = rho a
//! ```
//!
//! The hyperbolic part uses the Rusanov (local Lax-Friedrichs) flux with
//! zero-gradient ghost cells; the acceleration `a` is applied in a separate
//! forward-Euler substep. Both characteristic speeds of the pressureless
//! system equal `u`, so the local wave speed is `max(|u_L|, |u_R|)`.

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::pairwise::paired_sum;

/// Below this density a cell is treated as vacuum: `u = 0`, `rho u = 0`.
pub const RHO_VACUUM: f64 = 1e-12;

/// Negative densities above this magnitude abort the step instead of being clipped.
pub const NEGATIVE_DENSITY_TOLERANCE: f64 = 1e-13;

/// Number of halved-dt retries after a failed hyperbolic step.
pub const MAX_STEP_RETRIES: usize = 5;

/// Uniform cell-centred grid on `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    dx: f64,
    centers: Vec<f64>,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidParameter(format!(
                "grid domain [{x_min}, {x_max}] is empty"
            )));
        }
        if n_cells < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 cells, got {n_cells}"
            )));
        }
        let dx = (x_max - x_min) / n_cells as f64;
        // Centres are measured from the domain midpoint so a symmetric domain
        // yields centres that mirror exactly: x[n-1-j] == -x[j].
        let mid = 0.5 * (x_min + x_max);
        let half = 0.5 * (n_cells as f64 - 1.0);
        let centers = (0..n_cells).map(|j| mid + (j as f64 - half) * dx).collect();
        Ok(Self { x_min, x_max, n_cells, dx, centers })
    }

    /// Grid with cells of (approximately) the requested width.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::InvalidParameter(format!("dx must be positive, got {dx}")));
        }
        let n = ((x_max - x_min) / dx).round() as usize;
        Self::new(x_min, x_max, n)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn center(&self, j: usize) -> f64 {
        self.centers[j]
    }

    /// Left edge of cell `j`; `edge(n_cells) == x_max`.
    pub fn edge(&self, j: usize) -> f64 {
        if j == self.n_cells {
            self.x_max
        } else {
            self.x_min + j as f64 * self.dx
        }
    }

    /// Index of the cell containing `x`, or `None` outside the domain. The right
    /// boundary belongs to the last cell.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.x_min && x <= self.x_max) {
            return None;
        }
        let j = ((x - self.x_min) / self.dx).floor() as usize;
        Some(j.min(self.n_cells - 1))
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n_cells == other.n_cells && self.x_min == other.x_min && self.x_max == other.x_max
    }

    /// Linear interpolation of a cell-centred field, clamped to the end values
    /// outside the outermost centres.
    pub fn interpolate(&self, field: &[f64], x: f64) -> f64 {
        let n = self.n_cells;
        let s = (x - self.centers[0]) / self.dx;
        if !(s > 0.0) {
            return field[0];
        }
        if s >= (n - 1) as f64 {
            return field[n - 1];
        }
        let j = s.floor() as usize;
        let j = j.min(n - 2);
        let theta = s - j as f64;
        (1.0 - theta) * field[j] + theta * field[j + 1]
    }
}

/// Cell-averaged density and momentum of one fluid population.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub rho: Vec<f64>,
    pub mom: Vec<f64>,
}

impl FluidState {
    pub fn new(rho: Vec<f64>, mom: Vec<f64>) -> Result<Self> {
        if rho.len() != mom.len() {
            return Err(Error::DimensionMismatch(format!(
                "rho has {} cells, mom has {}",
                rho.len(),
                mom.len()
            )));
        }
        if let Some((j, &r)) = rho.iter().enumerate().find(|(_, r)| !(**r >= 0.0)) {
            return Err(Error::NegativeDensity { cell: j, value: r, t: 0.0 });
        }
        let mut state = Self { rho, mom };
        state.enforce_vacuum();
        Ok(state)
    }

    /// Fluid at rest with the given density.
    pub fn at_rest(rho: Vec<f64>) -> Result<Self> {
        let mom = vec![0.0; rho.len()];
        Self::new(rho, mom)
    }

    /// Fluid with density `rho` moving with the cell-centre velocities `u`.
    pub fn from_velocity(rho: Vec<f64>, u: &[f64]) -> Result<Self> {
        if u.len() != rho.len() {
            return Err(Error::DimensionMismatch(format!(
                "rho has {} cells, u has {}",
                rho.len(),
                u.len()
            )));
        }
        let mom = rho.iter().zip(u).map(|(r, v)| r * v).collect();
        Self::new(rho, mom)
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    #[inline]
    pub fn velocity_at(&self, j: usize) -> f64 {
        cell_velocity(self.rho[j], self.mom[j])
    }

    pub fn velocity(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.velocity_at(j)).collect()
    }

    pub fn mass(&self, grid: &Grid1D) -> f64 {
        paired_sum(self.len(), |j| self.rho[j]) * grid.dx()
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.len()).map(|j| self.velocity_at(j).abs()).fold(0.0, f64::max)
    }

    pub fn max_density(&self) -> f64 {
        self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_density(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn enforce_vacuum(&mut self) {
        for (r, m) in self.rho.iter().zip(self.mom.iter_mut()) {
            if *r < RHO_VACUUM {
                *m = 0.0;
            }
        }
    }
}

#[inline]
fn cell_velocity(rho: f64, mom: f64) -> f64 {
    if rho >= RHO_VACUUM {
        mom / rho
    } else {
        0.0
    }
}

/// Rusanov flux between a left and right state `(rho, rho u)`.
#[inline]
pub fn rusanov_flux(left: (f64, f64), right: (f64, f64)) -> (f64, f64) {
    let (rho_l, m_l) = left;
    let (rho_r, m_r) = right;
    let u_l = cell_velocity(rho_l, m_l);
    let u_r = cell_velocity(rho_r, m_r);
    // vacuum cells carry no momentum
    let m_l = if rho_l >= RHO_VACUUM { m_l } else { 0.0 };
    let m_r = if rho_r >= RHO_VACUUM { m_r } else { 0.0 };
    let lambda = u_l.abs().max(u_r.abs());
    let mass = 0.5 * (m_l + m_r) - 0.5 * lambda * (rho_r - rho_l);
    let momentum = 0.5 * (m_l * u_l + m_r * u_r) - 0.5 * lambda * (m_r - m_l);
    (mass, momentum)
}

/// Adaptive time-step settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflConfig {
    pub cfl: f64,
    pub dt_max: f64,
    pub lambda_floor: f64,
}

impl Default for CflConfig {
    fn default() -> Self {
        Self { cfl: 0.9, dt_max: 1e-2, lambda_floor: 1e-8 }
    }
}

impl CflConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::InvalidParameter(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        if !(self.lambda_floor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda_floor must be positive, got {}",
                self.lambda_floor
            )));
        }
        Ok(())
    }
}

/// Largest stable step over every supplied fluid.
pub fn cfl_dt<'a, I>(states: I, grid: &Grid1D, cfg: &CflConfig) -> f64
where
    I: IntoIterator<Item = &'a FluidState>,
{
    let lambda = states.into_iter().map(FluidState::max_speed).fold(0.0, f64::max);
    (cfg.cfl * grid.dx() / lambda.max(cfg.lambda_floor)).min(cfg.dt_max)
}

/// Result of one transport step.
#[derive(Debug, Clone)]
pub struct HyperbolicOutcome {
    pub state: FluidState,
    /// Mass that left through the two boundaries during the step (outflow positive).
    pub boundary_outflow: f64,
}

/// One explicit Rusanov update with homogeneous Neumann boundaries.
pub fn hyperbolic_step(state: &FluidState, grid: &Grid1D, dt: f64) -> Result<HyperbolicOutcome> {
    let n = state.len();
    if n != grid.n_cells() {
        return Err(Error::DimensionMismatch(format!(
            "state has {n} cells, grid has {}",
            grid.n_cells()
        )));
    }
    let ratio = dt / grid.dx();
    // interface fluxes F_{j-1/2} for j = 0..=n; ghosts copy the boundary cells
    let cell = |j: usize| (state.rho[j], state.mom[j]);
    let mut flux = Vec::with_capacity(n + 1);
    flux.push(rusanov_flux(cell(0), cell(0)));
    for j in 1..n {
        flux.push(rusanov_flux(cell(j - 1), cell(j)));
    }
    flux.push(rusanov_flux(cell(n - 1), cell(n - 1)));

    let mut rho = Vec::with_capacity(n);
    let mut mom = Vec::with_capacity(n);
    for j in 0..n {
        let (fm_r, fp_r) = flux[j + 1];
        let (fm_l, fp_l) = flux[j];
        let mut r = state.rho[j] - ratio * (fm_r - fm_l);
        let m = state.mom[j] - ratio * (fp_r - fp_l);
        if !(r.is_finite() && m.is_finite()) {
            return Err(Error::NonFinite { t: f64::NAN });
        }
        if r < 0.0 {
            if r < -NEGATIVE_DENSITY_TOLERANCE {
                return Err(Error::NegativeDensity { cell: j, value: r, t: f64::NAN });
            }
            r = 0.0;
        }
        rho.push(r);
        mom.push(m);
    }
    let boundary_outflow = dt * (flux[n].0 - flux[0].0);
    let mut next = FluidState { rho, mom };
    next.enforce_vacuum();
    Ok(HyperbolicOutcome { state: next, boundary_outflow })
}

/// Transport step that retries with halved `dt` on failure. Returns the outcome
/// together with the step actually taken.
pub fn hyperbolic_step_with_retry(
    state: &FluidState,
    grid: &Grid1D,
    dt: f64,
) -> Result<(HyperbolicOutcome, f64)> {
    let mut dt_try = dt;
    let mut last_err = None;
    for _ in 0..=MAX_STEP_RETRIES {
        match hyperbolic_step(state, grid, dt_try) {
            Ok(outcome) => return Ok((outcome, dt_try)),
            Err(e) => {
                log::debug!("hyperbolic step failed with dt = {dt_try:e}: {e}");
                last_err = Some(e);
                dt_try *= 0.5;
            }
        }
    }
    match last_err {
        Some(Error::NegativeDensity { cell, value, .. }) => {
            Err(Error::NegativeDensity { cell, value, t: f64::NAN })
        }
        _ => Err(Error::StepFailed { t: f64::NAN, retries: MAX_STEP_RETRIES }),
    }
}

/// Forward-Euler momentum update `mom += dt rho a` for a per-cell acceleration `a`.
pub fn source_step(state: &FluidState, accel: &[f64], dt: f64) -> Result<FluidState> {
    if accel.len() != state.len() {
        return Err(Error::DimensionMismatch(format!(
            "source has {} cells, state has {}",
            accel.len(),
            state.len()
        )));
    }
    if accel.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite { t: f64::NAN });
    }
    let mom = state
        .rho
        .iter()
        .zip(&state.mom)
        .zip(accel)
        .map(|((&r, &m), &a)| if r >= RHO_VACUUM { m + dt * r * a } else { m })
        .collect();
    Ok(FluidState { rho: state.rho.clone(), mom })
}

/// Midpoint-quadrature convolution `(W' * rho)(x_j) = sum_k W'(x_j - x_k) rho_k dx`.
pub fn convolve_grid(kernel: &KernelSpec, density: &[f64], grid: &Grid1D) -> Vec<f64> {
    ConvolutionTable::new(kernel, grid).apply(density)
}

/// `W'` sampled on the difference grid `{m dx}` so repeated convolutions on a
/// fixed grid only cost the matrix-vector product.
#[derive(Debug, Clone)]
pub struct ConvolutionTable {
    kernel: KernelSpec,
    n: usize,
    dx: f64,
    centers: Vec<f64>,
    // values[n - 1 + m] = W'(m dx), m in -(n-1)..=(n-1)
    values: Vec<f64>,
}

impl ConvolutionTable {
    pub fn new(kernel: &KernelSpec, grid: &Grid1D) -> Self {
        let n = grid.n_cells();
        let dx = grid.dx();
        let values = match kernel {
            KernelSpec::Zero | KernelSpec::Linear { .. } => Vec::new(),
            _ => {
                let mut v = vec![0.0; 2 * n - 1];
                for m in 1..n {
                    let w = kernel.eval(m as f64 * dx);
                    v[n - 1 + m] = w;
                    v[n - 1 - m] = -w;
                }
                v
            }
        };
        Self { kernel: *kernel, n, dx, centers: grid.centers().to_vec(), values }
    }

    pub fn apply(&self, density: &[f64]) -> Vec<f64> {
        let n = self.n;
        match self.kernel {
            KernelSpec::Zero => vec![0.0; n],
            KernelSpec::Linear { c } => {
                // sum_k c (x_j - x_k) rho_k dx = c (x_j M0 - M1)
                let m0 = paired_sum(n, |k| density[k]) * self.dx;
                let m1 = paired_sum(n, |k| self.centers[k] * density[k]) * self.dx;
                self.centers.iter().map(|&x| c * (x * m0 - m1)).collect()
            }
            _ => (0..n)
                .map(|j| {
                    let base = n - 1 + j;
                    paired_sum(n, |k| self.values[base - k] * density[k]) * self.dx
                })
                .collect(),
        }
    }
}
