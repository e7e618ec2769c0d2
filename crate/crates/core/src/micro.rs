//! Controlled leader-follower particle system.
//!
//! Leaders `(x_i, v_i)`, `i < N`, and followers `(y_k, w_k)`, `k < M`, obey
//!
//! ```text
//! x_i' = v_i
//! v_i' = -(1-alpha)(x_i - x_{d_i}) - alpha (x_i - <y>) - v_i + 1/N sum_j W_L'(x_j - x_i)
//! y_k' = w_k
//! w_k' = 1/M sum_j W_F'(y_j - y_k) + 1/N sum_j W_C'(x_j - y_k)
//!        + 1/N sum_j phi(x_j - y_k) (v_j - w_k)
//! ```
//!
//! All pairwise sums are mirror-paired (see [`crate::pairwise`]).

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, WeightSpec};
use crate::ode::{clipped_step, rk4_step};
use crate::pairwise::paired_sum;
use serde::{Deserialize, Serialize};

/// Default fixed time step for particle-only runs.
pub const DEFAULT_MICRO_DT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParticleState {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl ParticleState {
    pub fn new(positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        if positions.len() != velocities.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions but {} velocities",
                positions.len(),
                velocities.len()
            )));
        }
        if positions.iter().chain(&velocities).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: 0.0 });
        }
        Ok(Self { positions, velocities })
    }

    pub fn at_rest(positions: Vec<f64>) -> Self {
        let velocities = vec![0.0; positions.len()];
        Self { positions, velocities }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Mean position; zero for an empty population.
    pub fn center_of_mass(&self) -> f64 {
        mean(&self.positions)
    }

    fn write_into(&self, buf: &mut Vec<f64>) {
        buf.extend_from_slice(&self.positions);
        buf.extend_from_slice(&self.velocities);
    }

    fn read_from(buf: &[f64]) -> Self {
        let n = buf.len() / 2;
        Self { positions: buf[..n].to_vec(), velocities: buf[n..].to_vec() }
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        paired_sum(values.len(), |k| values[k]) / values.len() as f64
    }
}

/// Parameters of the feedback law. The target weight is `beta = 1 - alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlParams {
    pub alpha: f64,
    pub gamma: f64,
    /// One target `x_{d_i}` per leader.
    pub targets: Vec<f64>,
}

impl ControlParams {
    pub fn new(alpha: f64, gamma: f64, targets: Vec<f64>) -> Result<Self> {
        let p = Self { alpha, gamma, targets };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 - self.alpha
    }
}

/// Feedback control `-(alpha (x - <x>_F) + (1 - alpha)(x - x_d)) / gamma`.
#[inline]
pub fn feedback_control(x: f64, com_followers: f64, x_d: f64, alpha: f64, gamma: f64) -> f64 {
    (-alpha * (x - com_followers) - (1.0 - alpha) * (x - x_d)) / gamma
}

/// Minimiser of the one-step cost over a horizon `h` with a constant control.
///
/// `interaction` is the mean leader-leader force `1/N sum_j W_L'(x_j - x)`.
#[allow(clippy::too_many_arguments)]
pub fn greedy_control(
    x: f64,
    v: f64,
    interaction: f64,
    com_followers: f64,
    x_d: f64,
    h: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> f64 {
    let x_plus = x + h * v + h * h * interaction;
    -h / (gamma + h * h * h * (alpha + beta))
        * (alpha * (x_plus - com_followers) + beta * (x_plus - x_d))
}

/// Leader acceleration shared by the particle and hybrid tiers.
#[inline]
pub(crate) fn leader_acceleration(
    x: f64,
    v: f64,
    x_d: f64,
    com_followers: f64,
    interaction: f64,
    control: &ControlParams,
) -> f64 {
    feedback_control(x, com_followers, x_d, control.alpha, control.gamma) - v + interaction
}

/// Interaction kernels for the three population pairings and the alignment weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interactions {
    /// `W_L'`: leader-leader
    pub leader: KernelSpec,
    /// `W_F'`: follower-follower
    pub follower: KernelSpec,
    /// `W_C'`: leader attraction acting on followers
    pub cross: KernelSpec,
    /// `phi`: leader-to-follower velocity alignment
    pub alignment: WeightSpec,
}

impl Interactions {
    pub fn none() -> Self {
        Self {
            leader: KernelSpec::Zero,
            follower: KernelSpec::Zero,
            cross: KernelSpec::Zero,
            alignment: WeightSpec::constant(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.leader.validate()?;
        self.follower.validate()?;
        self.cross.validate()?;
        self.alignment.validate()
    }

    pub fn warn_if_irregular(&self) {
        self.leader.warn_if_irregular("leader");
        self.follower.warn_if_irregular("follower");
        self.cross.warn_if_irregular("cross");
    }
}

/// Mean pairwise force `1/n sum_j W'(s_j - target)` exerted by a set of sources.
pub(crate) struct MeanForce<'a> {
    kernel: KernelSpec,
    sources: &'a [f64],
    mean: f64,
}

impl<'a> MeanForce<'a> {
    pub(crate) fn new(kernel: KernelSpec, sources: &'a [f64]) -> Self {
        let mean = match kernel {
            KernelSpec::Linear { .. } => mean(sources),
            _ => 0.0,
        };
        Self { kernel, sources, mean }
    }

    #[inline]
    pub(crate) fn at(&self, target: f64) -> f64 {
        let n = self.sources.len();
        if n == 0 {
            return 0.0;
        }
        match self.kernel {
            KernelSpec::Zero => 0.0,
            // 1/n sum_j c (s_j - target) = c (mean - target)
            KernelSpec::Linear { c } => c * (self.mean - target),
            k => paired_sum(n, |j| k.eval(self.sources[j] - target)) / n as f64,
        }
    }
}

/// Mean alignment `1/N sum_j phi(x_j - y)(v_j - w)` exerted by the leaders.
#[inline]
pub(crate) fn alignment_force(weight: &WeightSpec, leaders: &ParticleState, y: f64, w: f64) -> f64 {
    let n = leaders.len();
    if n == 0 || weight.is_zero() {
        return 0.0;
    }
    let x = &leaders.positions;
    let v = &leaders.velocities;
    paired_sum(n, |j| weight.eval(x[j] - y) * (v[j] - w)) / n as f64
}

/// Derivatives of a leader population given the followers' centre of mass.
pub(crate) fn leader_derivative(
    leaders: &ParticleState,
    com_followers: f64,
    control: &ControlParams,
    kernel: KernelSpec,
    dx: &mut [f64],
    dv: &mut [f64],
) {
    let field = MeanForce::new(kernel, &leaders.positions);
    for i in 0..leaders.len() {
        let x = leaders.positions[i];
        let v = leaders.velocities[i];
        dx[i] = v;
        dv[i] = leader_acceleration(x, v, control.targets[i], com_followers, field.at(x), control);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroSystem {
    pub leaders: ParticleState,
    pub followers: ParticleState,
    pub control: ControlParams,
    pub kernels: Interactions,
}

/// Time derivative of both populations.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroDerivative {
    pub leaders: ParticleState,
    pub followers: ParticleState,
}

impl MicroSystem {
    pub fn new(
        leaders: ParticleState,
        followers: ParticleState,
        control: ControlParams,
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
        kernels.warn_if_irregular();
        Ok(Self { leaders, followers, control, kernels })
    }

    pub fn n_leaders(&self) -> usize {
        self.leaders.len()
    }

    pub fn n_followers(&self) -> usize {
        self.followers.len()
    }

    fn pack(&self) -> Vec<f64> {
        let mut buf = Vec::with_capacity(2 * (self.n_leaders() + self.n_followers()));
        self.leaders.write_into(&mut buf);
        self.followers.write_into(&mut buf);
        buf
    }

    fn unpack(&mut self, buf: &[f64]) {
        let split = 2 * self.n_leaders();
        self.leaders = ParticleState::read_from(&buf[..split]);
        self.followers = ParticleState::read_from(&buf[split..]);
    }

    /// `(1/N) sum (x^2 + v^2) + (1/M) sum (y^2 + w^2)`
    pub fn second_moment(&self) -> f64 {
        let part = |p: &ParticleState| {
            if p.is_empty() {
                0.0
            } else {
                paired_sum(p.len(), |k| {
                    p.positions[k] * p.positions[k] + p.velocities[k] * p.velocities[k]
                }) / p.len() as f64
            }
        };
        part(&self.leaders) + part(&self.followers)
    }

    /// Terminal cost `1/N sum alpha |x_i - <y>|^2 + beta |x_i - x_{d_i}|^2`.
    pub fn terminal_cost(&self) -> f64 {
        let n = self.n_leaders();
        if n == 0 {
            return 0.0;
        }
        let com = self.followers.center_of_mass();
        let (a, b) = (self.control.alpha, self.control.beta());
        paired_sum(n, |i| {
            let x = self.leaders.positions[i];
            let x_d = self.control.targets[i];
            a * (x - com).powi(2) + b * (x - x_d).powi(2)
        }) / n as f64
    }

    pub fn rhs(&self) -> MicroDerivative {
        let mut buf = vec![0.0; 2 * (self.n_leaders() + self.n_followers())];
        rhs_packed(self, &self.pack(), &mut buf);
        let split = 2 * self.n_leaders();
        MicroDerivative {
            leaders: ParticleState::read_from(&buf[..split]),
            followers: ParticleState::read_from(&buf[split..]),
        }
    }

    /// One RK4 step.
    pub fn step(&mut self, t: f64, dt: f64) -> Result<()> {
        let y = self.pack();
        let next = rk4_step(
            |_, s: &[f64], d: &mut [f64]| {
                rhs_packed(self, s, d);
                Ok(())
            },
            &y,
            t,
            dt,
        )?;
        self.unpack(&next);
        Ok(())
    }
}

/// Derivative of `system` evaluated at the packed state `s`.
fn rhs_packed(system: &MicroSystem, s: &[f64], d: &mut [f64]) {
    let n = system.n_leaders();
    let m = system.n_followers();
    let (xs, rest) = s.split_at(n);
    let (vs, rest) = rest.split_at(n);
    let (ys, ws) = rest.split_at(m);
    let leaders = ParticleState { positions: xs.to_vec(), velocities: vs.to_vec() };

    let (dl, df) = d.split_at_mut(2 * n);
    let (dx, dv) = dl.split_at_mut(n);
    leader_derivative(&leaders, mean(ys), &system.control, system.kernels.leader, dx, dv);

    let (dy, dw) = df.split_at_mut(m);
    let k = &system.kernels;
    let self_field = MeanForce::new(k.follower, ys);
    let cross_field = MeanForce::new(k.cross, xs);
    for i in 0..m {
        let (y, w) = (ys[i], ws[i]);
        dy[i] = w;
        dw[i] = self_field.at(y) + cross_field.at(y) + alignment_force(&k.alignment, &leaders, y, w);
    }
}

/// Free-function form of [`MicroSystem::rhs`].
pub fn micro_rhs(system: &MicroSystem, _t: f64) -> MicroDerivative {
    system.rhs()
}

/// A particle system together with its clock.
#[derive(Debug, Clone)]
pub struct MicroSimulation {
    pub system: MicroSystem,
    pub t: f64,
    pub dt: f64,
}

impl MicroSimulation {
    pub fn new(system: MicroSystem, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { system, t: 0.0, dt })
    }

    /// Advances with the fixed step, shortening the last one to hit `target` exactly.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        while self.t < target {
            let (dt, lands) = clipped_step(self.t, target, self.dt);
            self.system.step(self.t, dt).map_err(|e| e.at(self.t))?;
            self.t = if lands { target } else { self.t + dt };
        }
        Ok(())
    }
}

/// Integrates to `t_end`, calling `observer` at `t = 0` and every `sample_interval`.
pub fn simulate_micro<F>(
    system: MicroSystem,
    t_end: f64,
    dt: f64,
    sample_interval: f64,
    mut observer: F,
) -> Result<MicroSystem>
where
    F: FnMut(f64, &MicroSystem),
{
    let mut sim = MicroSimulation::new(system, dt)?;
    for t in sample_times(t_end, sample_interval)? {
        sim.advance_to(t)?;
        observer(sim.t, &sim.system);
    }
    Ok(sim.system)
}

/// `0, h, 2h, ...` up to and including `t_end`.
pub fn sample_times(t_end: f64, interval: f64) -> Result<Vec<f64>> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be >= 0, got {t_end}")));
    }
    if !(interval > 0.0) {
        return Err(Error::InvalidParameter(format!("sample interval must be positive, got {interval}")));
    }
    let count = (t_end / interval - 1e-9).ceil().max(0.0) as usize;
    let mut times: Vec<f64> = (0..=count).map(|k| (k as f64 * interval).min(t_end)).collect();
    times.dedup();
    Ok(times)
}
