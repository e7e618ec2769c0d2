//! Interaction kernels `W'(r)` and communication weights `phi(r)`.
//!
//! Every kernel is stored as the derivative of an even potential, so it is an
//! odd function of the separation `r`. Evaluation goes through an
//! `|r|`/sign decomposition which makes `eval(-r) == -eval(r)` hold bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default regularisation used by [`KernelSpec::RegularizedSingular`].
pub const DEFAULT_SINGULAR_EPS: f64 = 0.05;

/// Derivative of a 1D interaction potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Zero,
    /// `c r`
    Linear { c: f64 },
    /// `c sign(r)`, with `sign(0) = 0`
    Sign { c: f64 },
    /// `c r` for `|r| <= radius`, zero outside
    TruncatedLinear { c: f64, radius: f64 },
    /// `c sign(r) / (|r| + eps^2)` for `eps < |r| <= radius`, zero outside
    RegularizedSingular {
        c: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        radius: f64,
    },
}

fn default_eps() -> f64 {
    DEFAULT_SINGULAR_EPS
}

impl KernelSpec {
    pub fn linear(c: f64) -> Self {
        KernelSpec::Linear { c }
    }

    pub fn sign(c: f64) -> Self {
        KernelSpec::Sign { c }
    }

    pub fn truncated_linear(c: f64, radius: f64) -> Result<Self> {
        let spec = KernelSpec::TruncatedLinear { c, radius };
        spec.validate()?;
        Ok(spec)
    }

    pub fn regularized_singular(c: f64, eps: f64, radius: f64) -> Result<Self> {
        let spec = KernelSpec::RegularizedSingular { c, eps, radius };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("kernel {name} must be finite, got {v}")))
            }
        };
        match *self {
            KernelSpec::Zero => Ok(()),
            KernelSpec::Linear { c } | KernelSpec::Sign { c } => finite("c", c),
            KernelSpec::TruncatedLinear { c, radius } => {
                finite("c", c)?;
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "truncated_linear radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
            KernelSpec::RegularizedSingular { c, eps, radius } => {
                finite("c", c)?;
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "regularized_singular eps must be positive, got {eps}"
                    )));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "regularized_singular radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Config-file name of the family.
    pub fn family_name(&self) -> &'static str {
        match self {
            KernelSpec::Zero => "zero",
            KernelSpec::Linear { .. } => "linear",
            KernelSpec::Sign { .. } => "sign",
            KernelSpec::TruncatedLinear { .. } => "truncated_linear",
            KernelSpec::RegularizedSingular { .. } => "regularized_singular",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, KernelSpec::Zero)
    }

    /// True when `W'` is globally Lipschitz.
    pub fn is_lipschitz(&self) -> bool {
        matches!(self, KernelSpec::Zero | KernelSpec::Linear { .. })
    }

    /// Logs a warning if the kernel lies outside the globally Lipschitz class.
    pub fn warn_if_irregular(&self, role: &str) {
        if !self.is_lipschitz() {
            log::warn!(
                "{role} kernel '{}' is outside the analytical (Lipschitz) class",
                self.family_name()
            );
        }
    }

    /// Evaluates `W'(r)`.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            KernelSpec::Zero => 0.0,
            KernelSpec::Linear { c } => c * r,
            KernelSpec::Sign { c } => {
                if r > 0.0 {
                    c
                } else if r < 0.0 {
                    -c
                } else {
                    0.0
                }
            }
            KernelSpec::TruncatedLinear { c, radius } => {
                if r.abs() <= radius {
                    c * r
                } else {
                    0.0
                }
            }
            KernelSpec::RegularizedSingular { c, eps, radius } => {
                let a = r.abs();
                if a > eps && a <= radius {
                    let mag = c / (a + eps * eps);
                    if r > 0.0 {
                        mag
                    } else {
                        -mag
                    }
                } else {
                    0.0
                }
            }
        }
    }
}

/// Communication weight `phi(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant { c: f64 },
    /// `(1 + r^2)^(-beta/2)`
    Power { beta: f64 },
}

impl WeightSpec {
    pub fn constant(c: f64) -> Self {
        WeightSpec::Constant { c }
    }

    pub fn power(beta: f64) -> Self {
        WeightSpec::Power { beta }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightSpec::Constant { c } if !(c >= 0.0 && c.is_finite()) => Err(
                Error::InvalidParameter(format!("constant weight must be >= 0, got {c}")),
            ),
            WeightSpec::Power { beta } if !(beta >= 0.0 && beta.is_finite()) => Err(
                Error::InvalidParameter(format!("power weight beta must be >= 0, got {beta}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            WeightSpec::Constant { .. } => "constant",
            WeightSpec::Power { .. } => "power",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, WeightSpec::Constant { c } if *c == 0.0)
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            WeightSpec::Constant { c } => c,
            WeightSpec::Power { beta } => {
                let s = 1.0 + r * r;
                // common exponents avoid powf in the hot alignment loops
                if beta == 0.0 {
                    1.0
                } else if beta == 0.5 {
                    1.0 / s.sqrt().sqrt()
                } else if beta == 1.0 {
                    1.0 / s.sqrt()
                } else if beta == 2.0 {
                    1.0 / s
                } else {
                    s.powf(-0.5 * beta)
                }
            }
        }
    }
}
