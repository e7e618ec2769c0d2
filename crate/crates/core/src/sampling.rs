//! Consistent initial data across scales: Gaussian mixtures on grids and
//! deterministic inverse-transform particle samples of the same mixtures.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::fluid::Grid1D;

pub const DEFAULT_SIGMA: f64 = 0.5;

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

fn default_weight() -> f64 {
    1.0
}

/// Weighted Gaussian bump `weight * G(x; mu, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mu: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

impl GaussianSpec {
    pub fn new(mu: f64, sigma: f64, weight: f64) -> Result<Self> {
        let g = Self { mu, sigma, weight };
        g.validate()?;
        Ok(g)
    }

    /// Unit-mass Gaussian with the default width.
    pub fn standard(mu: f64) -> Self {
        Self { mu, sigma: DEFAULT_SIGMA, weight: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {}", self.mu)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.weight >= 0.0 && self.weight <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "weight must lie in [0, 1], got {}",
                self.weight
            )));
        }
        Ok(())
    }

    pub fn density(&self, x: f64) -> f64 {
        gaussian_density(self, x)
    }

    /// `weight * Phi((x - mu) / sigma)`
    pub fn cdf(&self, x: f64) -> f64 {
        self.weight * standard_normal_cdf((x - self.mu) / self.sigma)
    }
}

pub fn gaussian_density(spec: &GaussianSpec, x: f64) -> f64 {
    let z = (x - spec.mu) / spec.sigma;
    spec.weight * (-0.5 * z * z).exp() / (spec.sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Finite Gaussian mixture. Weights are expected to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<GaussianSpec>,
}

impl MixtureSpec {
    pub fn new(components: Vec<GaussianSpec>) -> Result<Self> {
        let m = Self { components };
        m.validate()?;
        Ok(m)
    }

    pub fn single(g: GaussianSpec) -> Self {
        Self { components: vec![g] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidParameter("mixture has no components".into()));
        }
        for c in &self.components {
            c.validate()?;
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.density(x)).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.cdf(x)).sum()
    }
}

/// Quantile of the standard normal at level `k / (2 n)` for odd `k` in `1..2n`.
///
/// The two tails are solved through the lower half only, so levels `k` and
/// `2n - k` return values of exactly opposite sign.
fn symmetric_normal_quantile(k: usize, n: usize) -> Result<f64> {
    let two_n = 2 * n;
    if k == n {
        return Ok(0.0);
    }
    let (low_k, flip) = if k < n { (k, false) } else { (two_n - k, true) };
    let level = low_k as f64 / two_n as f64;
    let z = bisect_normal_quantile(level)?;
    Ok(if flip { -z } else { z })
}

fn bisect_normal_quantile(level: f64) -> Result<f64> {
    let (mut lo, mut hi) = (-40.0_f64, 0.0_f64);
    if !(standard_normal_cdf(lo) < level && standard_normal_cdf(hi) >= level) {
        return Err(Error::QuantileBracket(level));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if standard_normal_cdf(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Splits `count` samples across weights with largest-remainder rounding.
pub fn apportion(weights: &[f64], count: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || !(total > 0.0) {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / total * count as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // stable sort keeps lower indices first on ties
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &i in order.iter().take(count.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// One sampled particle position with the index of the mixture component it
/// was drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub position: f64,
    pub component: usize,
}

/// Deterministic sample of `count` positions with component labels, sorted by
/// position.
///
/// Each component receives its largest-remainder share of `count` and is
/// sampled at its own midpoint quantile levels `(i - 1/2) / n_c`.
pub fn sample_labeled(spec: &MixtureSpec, count: usize) -> Result<Vec<LabeledSample>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    spec.validate()?;
    let weights: Vec<f64> = spec.components.iter().map(|c| c.weight).collect();
    let shares = apportion(&weights, count);
    let mut out = Vec::with_capacity(count);
    for (component, (g, &n_c)) in spec.components.iter().zip(&shares).enumerate() {
        for i in 0..n_c {
            let z = symmetric_normal_quantile(2 * i + 1, n_c)?;
            out.push(LabeledSample { position: g.mu + g.sigma * z, component });
        }
    }
    out.sort_by(|a, b| a.position.total_cmp(&b.position).then(a.component.cmp(&b.component)));
    Ok(out)
}

/// Deterministic inverse-transform sample: sorted midpoint quantiles.
pub fn sample_inverse_transform(spec: &MixtureSpec, count: usize) -> Result<Vec<f64>> {
    Ok(sample_labeled(spec, count)?.into_iter().map(|s| s.position).collect())
}

/// Cell values of the mixture density by midpoint evaluation.
pub fn discretize_density(spec: &MixtureSpec, grid: &Grid1D) -> Vec<f64> {
    grid.centers().iter().map(|&x| spec.density(x)).collect()
}

/// Piecewise-constant profile built from disjoint half-open intervals `[a, b)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<VelocityInterval>", into = "Vec<VelocityInterval>")]
pub struct IndicatorVelocity {
    intervals: Vec<VelocityInterval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityInterval {
    pub a: f64,
    pub b: f64,
    pub value: f64,
}

impl IndicatorVelocity {
    pub fn new(intervals: Vec<VelocityInterval>) -> Result<Self> {
        let mut sorted = intervals.clone();
        for iv in &sorted {
            if !(iv.a < iv.b) || !iv.value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "bad velocity interval [{}, {}) -> {}",
                    iv.a, iv.b, iv.value
                )));
            }
        }
        sorted.sort_by(|p, q| p.a.total_cmp(&q.a));
        if let Some(w) = sorted.windows(2).find(|w| w[0].b > w[1].a) {
            return Err(Error::InvalidParameter(format!(
                "velocity intervals [{}, {}) and [{}, {}) overlap",
                w[0].a, w[0].b, w[1].a, w[1].b
            )));
        }
        Ok(Self { intervals })
    }

    /// Zero velocity everywhere.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[VelocityInterval] {
        &self.intervals
    }

    pub fn eval(&self, x: f64) -> f64 {
        indicator_velocity(&self.intervals, x)
    }
}

impl TryFrom<Vec<VelocityInterval>> for IndicatorVelocity {
    type Error = Error;
    fn try_from(v: Vec<VelocityInterval>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<IndicatorVelocity> for Vec<VelocityInterval> {
    fn from(v: IndicatorVelocity) -> Self {
        v.intervals
    }
}

pub fn indicator_velocity(intervals: &[VelocityInterval], x: f64) -> f64 {
    intervals.iter().filter(|iv| x >= iv.a && x < iv.b).map(|iv| iv.value).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cluster(m: f64) -> MixtureSpec {
        MixtureSpec::new(vec![
            GaussianSpec::new(-m, 0.5, 0.5).unwrap(),
            GaussianSpec::new(m, 0.5, 0.5).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn density_values() {
        let g = GaussianSpec::standard(0.0);
        assert!((g.density(0.0) - 0.797_884_560_802_865_4).abs() < 1e-15);
        let g5 = GaussianSpec::standard(5.0);
        for a in [0.1, 0.7, 2.3] {
            assert_eq!(g5.density(5.0 + a), g5.density(5.0 - a));
        }
        assert!(g.density(100.0) < 1e-300);
    }

    #[test]
    fn density_integrates_to_weight() {
        let g = GaussianSpec::new(1.0, 0.5, 0.3).unwrap();
        let grid = Grid1D::new(-20.0, 20.0, 40_000).unwrap();
        let mass: f64 = grid.centers().iter().map(|&x| g.density(x)).sum::<f64>() * grid.dx();
        assert!((mass - 0.3).abs() < 1e-6);
    }

    #[test]
    fn mixture_weights_validated() {
        assert!(MixtureSpec::new(vec![GaussianSpec::new(0.0, 0.5, 0.6).unwrap()]).is_err());
        assert!(GaussianSpec::new(0.0, 0.0, 1.0).is_err());
        assert!(MixtureSpec::new(vec![]).is_err());
    }

    #[test]
    fn inverse_transform_examples() {
        let one = MixtureSpec::single(GaussianSpec::standard(3.0));
        assert_eq!(sample_inverse_transform(&one, 1).unwrap(), vec![3.0]);

        let std_normal = MixtureSpec::single(GaussianSpec::new(0.0, 1.0, 1.0).unwrap());
        let q = sample_inverse_transform(&std_normal, 2).unwrap();
        assert!((q[0] + 0.674_489_750_196_08).abs() < 1e-10);
        assert!((q[1] - 0.674_489_750_196_08).abs() < 1e-10);

        let mix = two_cluster(5.0);
        let q = sample_inverse_transform(&mix, 2).unwrap();
        assert_eq!(q, vec![-5.0, 5.0]);
        assert!((mix.cdf(-5.0) - 0.25).abs() < 1e-12);
        assert!((mix.cdf(5.0) - 0.75).abs() < 1e-12);
        assert!(sample_inverse_transform(&mix, 0).is_err());
    }

    #[test]
    fn samples_hit_their_quantile_levels() {
        let g = GaussianSpec::new(-1.0, 0.7, 1.0).unwrap();
        let n = 37;
        let q = sample_inverse_transform(&MixtureSpec::single(g), n).unwrap();
        for (i, x) in q.iter().enumerate() {
            let level = (i as f64 + 0.5) / n as f64;
            assert!((g.cdf(*x) - level).abs() < 1e-13);
        }
    }

    #[test]
    fn samples_sorted_and_mirror_exact() {
        let mix = two_cluster(7.0);
        for n in [2, 3, 50, 150, 151] {
            let s = sample_labeled(&mix, n).unwrap();
            assert!(s.windows(2).all(|w| w[1].position > w[0].position));
            if n % 2 == 0 {
                for i in 0..n {
                    assert_eq!(s[n - 1 - i].position, -s[i].position);
                }
            }
        }
        let s = sample_labeled(&mix, 150).unwrap();
        assert!(s[..75].iter().all(|p| p.component == 0));
        assert!(s[75..].iter().all(|p| p.component == 1));
    }

    #[test]
    fn largest_remainder_split() {
        assert_eq!(apportion(&[0.5, 0.5], 150), vec![75, 75]);
        assert_eq!(apportion(&[0.5, 0.5], 3), vec![2, 1]);
        assert_eq!(apportion(&[0.2, 0.3, 0.5], 7), vec![1, 2, 4]);
        assert_eq!(apportion(&[0.2, 0.3, 0.5], 7).iter().sum::<usize>(), 7);
    }

    #[test]
    fn discretized_mass_and_symmetry() {
        let grid = Grid1D::new(-8.0, 8.0, 3200).unwrap();
        let rho = discretize_density(&MixtureSpec::single(GaussianSpec::standard(0.0)), &grid);
        let mass: f64 = rho.iter().sum::<f64>() * grid.dx();
        assert!((mass - 1.0).abs() < 1e-8);
        for j in 0..rho.len() {
            assert_eq!(rho[j], rho[rho.len() - 1 - j]);
        }
        let grid = Grid1D::new(-10.0, 10.0, 1000).unwrap();
        let rho = discretize_density(&two_cluster(5.0), &grid);
        for j in 0..rho.len() {
            assert_eq!(rho[j], rho[rho.len() - 1 - j]);
        }
        let empty = MixtureSpec { components: vec![GaussianSpec { mu: 0.0, sigma: 0.5, weight: 0.0 }] };
        assert!(discretize_density(&empty, &grid).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn indicator_profiles() {
        let test2 = IndicatorVelocity::new(vec![
            VelocityInterval { a: -2.0, b: 0.0, value: -1.0 },
            VelocityInterval { a: 0.0, b: 2.0, value: 1.0 },
        ])
        .unwrap();
        assert_eq!(test2.eval(-1.0), -1.0);
        assert_eq!(test2.eval(3.0), 0.0);
        assert_eq!(test2.eval(0.0), 1.0);
        assert_eq!(test2.eval(2.0), 0.0);
        let test3 = IndicatorVelocity::new(vec![
            VelocityInterval { a: -10.0, b: 0.0, value: -1.0 },
            VelocityInterval { a: 0.0, b: 10.0, value: 1.0 },
        ])
        .unwrap();
        assert_eq!(test3.eval(-4.0), -1.0);
        assert!(IndicatorVelocity::new(vec![
            VelocityInterval { a: -2.0, b: 1.0, value: -1.0 },
            VelocityInterval { a: 0.0, b: 2.0, value: 1.0 },
        ])
        .is_err());
    }
}
