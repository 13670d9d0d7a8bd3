use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gamehomog_lab::config::apply_override;
use gamehomog_lab::ExperimentConfig;

const BIN: &str = env!("CARGO_BIN_EXE_gamehomog");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn gamehomog(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("GAMEHOMOG_WORKERS")
        .output()
        .unwrap()
}

fn small_estimate(extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = [
        "estimate",
        "--config",
        config("transport.toml").to_str().unwrap(),
        "--set",
        "campaign.samples=12",
        "--set",
        "campaign.times=[1.0, 2.0, 4.0]",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run_strings(args: &[String], out: &Path) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    gamehomog(&refs, out)
}

#[test]
fn verify_on_the_bundled_configs_passes() {
    for name in ["transport.toml", "localized.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let out = gamehomog(&["verify", "--config", config(name).to_str().unwrap()], dir.path());
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("verify.report.json")).unwrap()).unwrap();
        assert_eq!(report["data"]["all_ok"], true);
        assert_eq!(report["data"]["checks"].as_array().unwrap().len(), 7);
        assert_eq!(report["version"], gamehomog_lab::VERSION);
        assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
        assert!(dir.path().join("config.echo.json").exists());
    }
}

#[test]
fn negative_range_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gamehomog(
        &[
            "verify",
            "--config",
            config("transport.toml").to_str().unwrap(),
            "--set",
            "environment.range=-1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("environment.range"), "{err}");
}

#[test]
fn type_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = gamehomog(
        &[
            "estimate",
            "--config",
            config("transport.toml").to_str().unwrap(),
            "--set",
            "campaign.samples=many",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("campaign.samples"));
}

#[test]
fn unknown_subcommand_and_missing_config_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gamehomog(&["frobnicate"], dir.path()).status.code(), Some(1));
    let out = gamehomog(&["verify", "--config", "/nonexistent.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let help = Command::new(BIN).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn estimate_is_byte_identical_across_runs_and_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert!(run_strings(&small_estimate(&[]), a.path()).status.success());
    assert!(run_strings(&small_estimate(&["--workers", "1"]), b.path())
        .status
        .success());
    assert!(run_strings(&small_estimate(&["--workers", "3"]), c.path())
        .status
        .success());
    for name in ["utable.json", "samples.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name}");
        assert_eq!(x, fs::read(c.path().join(name)).unwrap(), "{name}");
    }
    // The echo records the worker count and nothing else differs.
    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(c.path().join("config.echo.json")).unwrap()).unwrap();
    assert_eq!(echo["data"]["workers"], 3);
}

#[test]
fn rate_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("transport.toml");
    let args = [
        "rate",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "campaign.rate_samples=8",
        "--set",
        "campaign.eps=[0.25, 0.125]",
        "--set",
        "campaign.h_bar=-0.2",
    ];
    let out = gamehomog(&args, dir.path());
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
    let rows = gamehomog_lab::io::read_rate_csv(&dir.path().join("rate.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "0.25");
    let first = fs::read_to_string(dir.path().join("rate.csv")).unwrap();
    assert!(first.starts_with("# gamehomog "));
}

#[test]
fn config_round_trips_and_echoes_defaults() {
    let text = fs::read_to_string(config("transport.toml")).unwrap();
    let cfg = ExperimentConfig::from_toml(&text, &[]).unwrap();
    let again = ExperimentConfig::from_toml(&cfg.to_toml(), &[]).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(cfg.hash(), again.hash());
    // Defaults are written out explicitly.
    let echoed = cfg.to_toml();
    assert!(echoed.contains("m_grid") && echoed.contains("rate_radius"));

    let loc = ExperimentConfig::load(&config("localized.toml"), &[]).unwrap();
    assert_eq!(loc, ExperimentConfig::from_toml(&loc.to_toml(), &[]).unwrap());
}

#[test]
fn hash_ignores_workers_and_output() {
    let text = fs::read_to_string(config("transport.toml")).unwrap();
    let base = ExperimentConfig::from_toml(&text, &[]).unwrap();
    let set = |k: &str, v: &str| {
        ExperimentConfig::from_toml(&text, &[(k.into(), v.into())])
            .unwrap()
            .hash()
    };
    assert_eq!(set("campaign.workers", "4"), base.hash());
    assert_eq!(set("output.dir", "elsewhere"), base.hash());
    assert_ne!(set("campaign.base_seed", "1"), base.hash());
}

#[test]
fn override_paths() {
    let mut doc: toml::Table = "[a]\nb = 1\n".parse().unwrap();
    apply_override(&mut doc, "a.c", "[1, 2]").unwrap();
    apply_override(&mut doc, "a.d", "plain words").unwrap();
    apply_override(&mut doc, "e.f", "true").unwrap();
    assert_eq!(doc["a"]["c"].as_array().unwrap().len(), 2);
    assert_eq!(doc["a"]["d"].as_str(), Some("plain words"));
    assert_eq!(doc["e"]["f"].as_bool(), Some(true));
    assert!(apply_override(&mut doc, "a.b.c", "1").is_err());
    assert!(apply_override(&mut doc, "a..b", "1").is_err());
}

#[test]
fn unknown_keys_are_rejected() {
    let text = fs::read_to_string(config("transport.toml")).unwrap();
    let err = ExperimentConfig::from_toml(&text, &[("campaign.sample".into(), "3".into())]).unwrap_err();
    assert!(err.to_string().contains("campaign"), "{err}");
}
