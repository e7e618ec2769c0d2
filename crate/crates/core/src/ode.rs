//! Classical fourth-order Runge-Kutta on flat state vectors.

use crate::error::{Error, Result};

/// One RK4 step of `y' = f(t, y)`. `rhs` writes the derivative into its output slice.
pub fn rk4_step<F>(mut rhs: F, state: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = state.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let half = 0.5 * dt;

    rhs(t, state, &mut k1)?;
    for i in 0..n {
        tmp[i] = state[i] + half * k1[i];
    }
    rhs(t + half, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = state[i] + half * k2[i];
    }
    rhs(t + half, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = state[i] + dt * k3[i];
    }
    rhs(t + dt, &tmp, &mut k4)?;

    let sixth = dt / 6.0;
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = state[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if !out[i].is_finite() {
            return Err(Error::NonFinite { t });
        }
    }
    Ok(out)
}

/// Step length that lands exactly on `target` instead of leaving a sliver.
/// Returns `(dt, lands_on_target)`.
#[inline]
pub fn clipped_step(t: f64, target: f64, dt: f64) -> (f64, bool) {
    let remaining = target - t;
    if remaining <= dt * (1.0 + 1e-9) {
        (remaining, true)
    } else {
        (dt, false)
    }
}
