use std::fs;
use std::path::Path;
use std::process::Command;

use leadfollow::kernels::KernelSpec;
use leadfollow_cli::convergence::Tier;
use leadfollow_cli::run::{DIAGNOSTICS_FILE, FIELD_SERIES_FILE, FINAL_FIELDS_FILE, MANIFEST_FILE, PARTICLE_SERIES_FILE};
use leadfollow_cli::{convergence_study, preset, run, CliError, ExperimentConfig, Model, Overrides, PresetName};

fn small(name: PresetName, model: Model, dir: &Path) -> ExperimentConfig {
    preset(
        name,
        &Overrides {
            model: Some(model),
            dx: Some(0.02),
            dt_micro: Some(0.01),
            t_end: Some(1.0),
            n_leaders: Some(20),
            n_followers: Some(20),
            out_dir: Some(dir.to_path_buf()),
            ..Overrides::default()
        },
    )
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn presets_match_documented_setups() {
    let t1 = preset(PresetName::Test1, &Overrides::default());
    assert_eq!(t1.t_end, 15.0);
    assert_eq!((t1.x_min, t1.x_max), (-8.0, 8.0));
    let t2 = preset(PresetName::Test2, &Overrides::default());
    assert_eq!((t2.x_min, t2.x_max), (-15.0, 15.0));
    let t3 = preset(PresetName::Test3, &Overrides { alpha: Some(0.0), ..Overrides::default() });
    assert_eq!(t3.alpha, 0.0);
    for name in [PresetName::Test1, PresetName::Test2, PresetName::Test3] {
        preset(name, &Overrides::default()).validate().unwrap();
    }
}

#[test]
fn unknown_preset_is_rejected() {
    assert!(matches!("test9".parse::<PresetName>(), Err(CliError::UnknownPreset(_))));
    let out = Command::new(env!("CARGO_BIN_EXE_leadfollow")).args(["preset", "--show", "test9"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn toml_round_trip_and_manifest() {
    for name in [PresetName::Test1, PresetName::Test2, PresetName::Test3] {
        let cfg = preset(name, &Overrides::default());
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let manifest = cfg.manifest();
        for key in ["model", "alpha", "gamma", "dx", "cfl", "t_end", "n_leaders", "n_followers"] {
            assert!(manifest.lines().any(|l| l.starts_with(&format!("{key} ="))), "missing {key}");
        }
    }
    assert!(ExperimentConfig::from_toml("nonsense = 1").is_err());
}

#[test]
fn binary_shows_presets() {
    let out = Command::new(env!("CARGO_BIN_EXE_leadfollow")).args(["preset", "--show", "test1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), preset(PresetName::Test1, &Overrides::default()));
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for model in [Model::Micro, Model::Hybrid, Model::Macmac] {
        run(&small(PresetName::Test3, model, a.path())).unwrap();
        run(&small(PresetName::Test3, model, b.path())).unwrap();
        for file in [DIAGNOSTICS_FILE, PARTICLE_SERIES_FILE, FIELD_SERIES_FILE, FINAL_FIELDS_FILE] {
            assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
        }
    }
}

#[test]
fn zero_horizon_writes_initial_snapshot_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(PresetName::Test1, Model::Hybrid, dir.path());
    cfg.t_end = 0.0;
    let summary = run(&cfg).unwrap();
    assert_eq!(summary.diagnostics.len(), 1);
    assert_eq!(column(&dir.path().join(DIAGNOSTICS_FILE), "t"), vec![0.0]);
}

#[test]
fn smoke_runs_stay_positive_with_monotone_clock() {
    for name in [PresetName::Test1, PresetName::Test2, PresetName::Test3] {
        for model in [Model::Micro, Model::Hybrid, Model::Macmac] {
            let dir = tempfile::tempdir().unwrap();
            let summary = run(&small(name, model, dir.path())).unwrap();
            let t = column(&dir.path().join(DIAGNOSTICS_FILE), "t");
            assert!(t.windows(2).all(|w| w[0] < w[1]));
            assert!((t.last().unwrap() - 1.0).abs() < 1e-12);
            for row in &summary.diagnostics {
                assert!(row.min_rho_f >= 0.0);
                assert!(row.mass_f > 0.0 && row.mass_f.is_finite());
            }
            let manifest = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
            assert!(manifest.contains("status = ok"));
        }
    }
}

#[test]
fn failed_run_records_failure_time() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(PresetName::Test1, Model::Micro, dir.path());
    cfg.kernels.leader = KernelSpec::linear(-1e300);
    assert!(run(&cfg).is_err());
    let manifest = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(manifest.contains("status = failed"));
    assert!(manifest.lines().any(|l| l.starts_with("failure_time = ")));
}

#[test]
fn convergence_needs_two_ascending_sizes_below_reference() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(PresetName::Test1, Model::Hybrid, dir.path());
    assert!(convergence_study(Tier::MicroVsHybrid, &[10], 100, &base, None).is_err());
    assert!(convergence_study(Tier::MicroVsHybrid, &[20, 10], 100, &base, None).is_err());
    assert!(convergence_study(Tier::MicroVsHybrid, &[10, 20], 20, &base, None).is_err());
}

#[test]
fn small_convergence_study_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = small(PresetName::Test1, Model::Hybrid, dir.path());
    base.t_end = 0.5;
    let report = convergence_study(Tier::MicroVsHybrid, &[10, 20], 40, &base, Some(dir.path())).unwrap();
    assert_eq!(report.results.len(), 2);
    assert!(report.rate("Fsum", leadfollow_cli::convergence::Norm::Sup).is_some());
    for file in ["convergence.csv", "rates.csv", "functional_10.csv", "functional_40.csv"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
}
