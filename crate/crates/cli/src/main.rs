use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use leadfollow_cli::config::{Model, Overrides, PresetName};
use leadfollow_cli::convergence::{convergence_study, Norm, Tier};
use leadfollow_cli::{preset, run, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "leadfollow", version, about = "Leader-follower swarm simulations across particle and fluid scales")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its CSV artifacts.
    Simulate {
        #[arg(long, conflicts_with = "config")]
        preset: Option<PresetName>,
        /// TOML configuration file instead of a preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<Model>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dx: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-tier convergence study with a log-log rate fit.
    Converge {
        #[arg(long)]
        tier: Tier,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        reference: usize,
        #[arg(long, default_value = "test1")]
        preset: PresetName,
        #[arg(long)]
        dx: Option<f64>,
        #[arg(long)]
        dt_micro: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Fixed count of the population that is not varied.
        #[arg(long)]
        fixed: Option<usize>,
        #[arg(long, default_value = "out/converge")]
        out: PathBuf,
    },
    /// Print a preset as a TOML configuration.
    Preset {
        #[arg(long)]
        show: PresetName,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { preset: name, config, model, alpha, t_end, dx, out } => {
            let overrides = Overrides { model, alpha, t_end, dx, out_dir: out, ..Overrides::default() };
            let cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|source| leadfollow_cli::CliError::Io { path: path.clone(), source })?;
                    let mut cfg = ExperimentConfig::from_toml(&text)?;
                    overrides.apply(&mut cfg);
                    cfg
                }
                None => preset(name.unwrap_or(PresetName::Test1), &overrides),
            };
            let summary = run(&cfg)?;
            println!("{} run finished at t = {}; output in {}", cfg.model.name(), summary.final_state.t(), summary.out_dir.display());
        }
        Command::Converge { tier, sizes, reference, preset: name, dx, dt_micro, t_end, fixed, out } => {
            let mut overrides = Overrides { dx, dt_micro, t_end, ..Overrides::default() };
            match tier {
                Tier::MicroVsHybrid => overrides.n_leaders = fixed,
                Tier::HybridVsMacmac => overrides.n_followers = fixed,
            }
            let base = preset(name, &overrides);
            let (orig, orig_ref) = tier.original_sizes();
            println!("# {tier:?} on {}: sizes {sizes:?}, reference {reference}", base.name);
            println!("# original study: sizes {orig:?}, reference {orig_ref}");
            let report = convergence_study(tier, &sizes, reference, &base, Some(&out))?;
            for column in tier.columns() {
                for norm in Norm::ALL {
                    let values = report.values(column, norm);
                    let rate = report.rate(column, norm).map_or(f64::NAN, |f| f.rate());
                    let shown: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
                    println!("{column:>5} {:>7}  rate {rate:>7.3}  values {}", norm.name(), shown.join(" "));
                }
            }
            println!("# written to {}", out.display());
        }
        Command::Preset { show } => print!("{}", preset(show, &Overrides::default()).to_toml()),
    }
    Ok(())
}
