//! Experiment configuration and the built-in presets.

use std::fmt::Write as _;
use std::path::PathBuf;

use leadfollow::kernels::{KernelSpec, WeightSpec};
use leadfollow::micro::DEFAULT_MICRO_DT;
use leadfollow::sampling::{IndicatorVelocity, VelocityInterval, DEFAULT_SIGMA};
use leadfollow::{Grid1D, Interactions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Micro,
    Hybrid,
    Macmac,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Micro => "micro",
            Model::Hybrid => "hybrid",
            Model::Macmac => "macmac",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PresetName {
    Test1,
    Test2,
    Test3,
}

impl std::str::FromStr for PresetName {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test1" => Ok(PresetName::Test1),
            "test2" => Ok(PresetName::Test2),
            "test3" => Ok(PresetName::Test3),
            other => Err(CliError::UnknownPreset(other.to_string())),
        }
    }
}

/// One Gaussian cluster of leaders together with the target it is steered to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderCluster {
    pub mu: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FollowerCluster {
    pub mu: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderInit {
    pub clusters: Vec<LeaderCluster>,
    #[serde(default)]
    pub velocity: IndicatorVelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerInit {
    pub clusters: Vec<FollowerCluster>,
    #[serde(default)]
    pub velocity: IndicatorVelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: Model,
    pub x_min: f64,
    pub x_max: f64,
    pub t_end: f64,
    pub dx: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub dt_micro: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub n_leaders: usize,
    pub n_followers: usize,
    /// Time between two diagnostics records.
    pub sample_interval: f64,
    /// Write particle and field series at every sample, not only the final snapshot.
    pub write_series: bool,
    pub out_dir: PathBuf,
    pub kernels: Interactions,
    pub leaders: LeaderInit,
    pub followers: FollowerInit,
}

/// Selective replacement of preset values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<Model>,
    pub alpha: Option<f64>,
    pub t_end: Option<f64>,
    pub dx: Option<f64>,
    pub dt_micro: Option<f64>,
    pub n_leaders: Option<usize>,
    pub n_followers: Option<usize>,
    pub sample_interval: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(m) = self.model {
            cfg.model = m;
        }
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    cfg.$f = v.clone();
                }
            )*};
        }
        set!(alpha, t_end, dx, dt_micro, n_leaders, n_followers, sample_interval, out_dir);
    }
}

fn interval(a: f64, b: f64, value: f64) -> VelocityInterval {
    VelocityInterval { a, b, value }
}

fn follower(mu: f64, weight: f64) -> FollowerCluster {
    FollowerCluster { mu, sigma: DEFAULT_SIGMA, weight }
}

fn leader(mu: f64, weight: f64, target: f64) -> LeaderCluster {
    LeaderCluster { mu, sigma: DEFAULT_SIGMA, weight, target }
}

pub fn preset(name: PresetName, overrides: &Overrides) -> ExperimentConfig {
    let base = |name: &str| ExperimentConfig {
        name: name.to_string(),
        model: Model::Hybrid,
        x_min: 0.0,
        x_max: 0.0,
        t_end: 0.0,
        dx: 0.005,
        cfl: 0.9,
        dt_max: 1e-2,
        dt_micro: DEFAULT_MICRO_DT,
        alpha: 0.5,
        gamma: 1.0,
        n_leaders: 100,
        n_followers: 100,
        sample_interval: 0.1,
        write_series: true,
        out_dir: PathBuf::from(format!("out/{name}")),
        kernels: Interactions::none(),
        leaders: LeaderInit { clusters: vec![], velocity: IndicatorVelocity::zero() },
        followers: FollowerInit { clusters: vec![], velocity: IndicatorVelocity::zero() },
    };
    let mut cfg = match name {
        PresetName::Test1 => ExperimentConfig {
            x_min: -8.0,
            x_max: 8.0,
            t_end: 15.0,
            kernels: Interactions {
                leader: KernelSpec::linear(-1.0),
                follower: KernelSpec::linear(-1.0),
                cross: KernelSpec::linear(2.0),
                alignment: WeightSpec::power(0.5),
            },
            leaders: LeaderInit { clusters: vec![leader(-3.0, 1.0, 0.0)], velocity: IndicatorVelocity::zero() },
            followers: FollowerInit { clusters: vec![follower(5.0, 1.0)], velocity: IndicatorVelocity::zero() },
            ..base("test1")
        },
        PresetName::Test2 => ExperimentConfig {
            x_min: -15.0,
            x_max: 15.0,
            t_end: 10.0,
            n_leaders: 150,
            n_followers: 150,
            kernels: Interactions {
                leader: KernelSpec::RegularizedSingular {
                    c: -2.0,
                    eps: leadfollow::kernels::DEFAULT_SINGULAR_EPS,
                    radius: 2.5,
                },
                follower: KernelSpec::sign(-1.0),
                cross: KernelSpec::TruncatedLinear { c: 1.0, radius: 4.0 },
                alignment: WeightSpec::power(0.005),
            },
            leaders: LeaderInit {
                clusters: vec![leader(-3.0, 0.5, -5.0), leader(3.0, 0.5, 5.0)],
                velocity: IndicatorVelocity::zero(),
            },
            followers: FollowerInit {
                clusters: vec![follower(0.0, 1.0)],
                velocity: IndicatorVelocity::new(vec![interval(-2.0, 0.0, -1.0), interval(0.0, 2.0, 1.0)])
                    .expect("static intervals"),
            },
            ..base("test2")
        },
        PresetName::Test3 => ExperimentConfig {
            x_min: -10.0,
            x_max: 10.0,
            t_end: 10.0,
            n_leaders: 150,
            n_followers: 150,
            kernels: Interactions {
                leader: KernelSpec::linear(1.0),
                follower: KernelSpec::linear(-0.5),
                cross: KernelSpec::linear(1.0),
                alignment: WeightSpec::power(0.5),
            },
            leaders: LeaderInit {
                clusters: vec![leader(-7.0, 0.5, 6.0), leader(7.0, 0.5, -6.0)],
                velocity: IndicatorVelocity::zero(),
            },
            followers: FollowerInit {
                clusters: vec![follower(-5.0, 0.5), follower(5.0, 0.5)],
                velocity: IndicatorVelocity::new(vec![interval(-10.0, 0.0, -1.0), interval(0.0, 10.0, 1.0)])
                    .expect("static intervals"),
            },
            ..base("test3")
        },
    };
    overrides.apply(&mut cfg);
    cfg
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Ok(Grid1D::with_spacing(self.x_min, self.x_max, self.dx)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.x_min < self.x_max) {
            return bad(format!("empty domain [{}, {}]", self.x_min, self.x_max));
        }
        self.grid()?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        for (key, v) in [
            ("cfl", self.cfl),
            ("dt_max", self.dt_max),
            ("dt_micro", self.dt_micro),
            ("gamma", self.gamma),
            ("sample_interval", self.sample_interval),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{key} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.model != Model::Macmac && self.n_leaders == 0 {
            return bad("n_leaders must be at least 1".into());
        }
        if self.model == Model::Micro && self.n_followers == 0 {
            return bad("n_followers must be at least 1".into());
        }
        if self.leaders.clusters.is_empty() || self.followers.clusters.is_empty() {
            return bad("both populations need at least one cluster".into());
        }
        self.kernels.validate()?;
        Ok(())
    }

    /// Flat `key = value` listing of every resolved setting.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let k = &self.kernels;
        let mut kv = |key: &str, value: String| {
            let _ = writeln!(s, "{key} = {value}");
        };
        kv("name", self.name.clone());
        kv("model", self.model.name().into());
        kv("x_min", self.x_min.to_string());
        kv("x_max", self.x_max.to_string());
        kv("t_end", self.t_end.to_string());
        kv("dx", self.dx.to_string());
        kv("cfl", self.cfl.to_string());
        kv("dt_max", self.dt_max.to_string());
        kv("dt_micro", self.dt_micro.to_string());
        kv("alpha", self.alpha.to_string());
        kv("gamma", self.gamma.to_string());
        kv("n_leaders", self.n_leaders.to_string());
        kv("n_followers", self.n_followers.to_string());
        kv("sample_interval", self.sample_interval.to_string());
        kv("write_series", self.write_series.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        kv("kernel.leader", format!("{:?}", k.leader));
        kv("kernel.follower", format!("{:?}", k.follower));
        kv("kernel.cross", format!("{:?}", k.cross));
        kv("kernel.alignment", format!("{:?}", k.alignment));
        for (p, c) in self.leaders.clusters.iter().enumerate() {
            kv(
                &format!("leaders.cluster{p}"),
                format!("mu={} sigma={} weight={} target={}", c.mu, c.sigma, c.weight, c.target),
            );
        }
        kv("leaders.velocity", format_intervals(&self.leaders.velocity));
        for (p, c) in self.followers.clusters.iter().enumerate() {
            kv(&format!("followers.cluster{p}"), format!("mu={} sigma={} weight={}", c.mu, c.sigma, c.weight));
        }
        kv("followers.velocity", format_intervals(&self.followers.velocity));
        s
    }
}

fn format_intervals(v: &IndicatorVelocity) -> String {
    if v.intervals().is_empty() {
        return "0".into();
    }
    v.intervals()
        .iter()
        .map(|iv| format!("[{},{})->{}", iv.a, iv.b, iv.value))
        .collect::<Vec<_>>()
        .join(" ")
}
