//! End-to-end harness behavior: artifact layout, determinism, exit codes,
//! and plot export.

use std::path::{Path, PathBuf};
use std::process::Command;

use kpzfp_cli::{cmd_export_plots, cmd_simulate, Config, RunConfig, ARTIFACTS};

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kpzfp-{tag}-{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn demo_config(out: &Path) -> String {
    format!(
        "[run]\nname = demo\nseed = 1\nout = {}\n\
         [backend]\nkind = parabolic\n\
         [phi]\netas = -1, 0, 1\nvalues = 0, 0, 0\n\
         [colorgrid]\nx_min = -3.125\nx_max = 3.125\ndx = 0.25\n\
         t_min = -1.5\nt_max = 0.0\ndt = 0.25\n",
        out.display()
    )
}

fn load(text: &str) -> RunConfig {
    RunConfig::from_config(Config::parse(text).unwrap()).unwrap()
}

#[test]
fn simulate_writes_all_artifacts_and_manifest() {
    let dir = temp_dir("simulate");
    let rc = load(&demo_config(&dir.join("run")));
    let outcome = cmd_simulate(&rc).unwrap();
    let names: Vec<&str> = outcome.files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ARTIFACTS.to_vec());
    for name in ARTIFACTS {
        assert!(outcome.out_dir.join(name).is_file(), "{name} missing");
    }
    let manifest = std::fs::read_to_string(outcome.out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("command = simulate"));
    assert!(manifest.contains("check: colormap/ambiguity PASS"));
    for (name, hash) in &outcome.files {
        assert!(manifest.contains(&format!("file: {name} sha256={hash}")));
    }
    assert!(manifest.contains("config: [run]"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_is_deterministic_across_runs() {
    let dir = temp_dir("determinism");
    let a = cmd_simulate(&load(&demo_config(&dir.join("a")))).unwrap();
    let b = cmd_simulate(&load(&demo_config(&dir.join("b")))).unwrap();
    let hashes = |o: &kpzfp_cli::SimulateOutcome| o.files.clone();
    assert_eq!(hashes(&a), hashes(&b), "artifact hashes differ across runs");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_is_deterministic_across_thread_counts() {
    let dir = temp_dir("threads");
    for (sub, threads) in [("p1", "1"), ("p8", "8")] {
        let cfg = dir.join(format!("{sub}.conf"));
        std::fs::write(&cfg, demo_config(&dir.join(sub))).unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_kpzfp"))
            .args(["simulate"])
            .arg(&cfg)
            .env("RAYON_NUM_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ARTIFACTS {
        let a = std::fs::read(dir.join("p1").join(name)).unwrap();
        let b = std::fs::read(dir.join("p8").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across thread counts");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn lpp_horizon_overflow_exits_with_certificate_code() {
    let dir = temp_dir("horizon");
    let cfg = dir.join("tiny.conf");
    std::fs::write(
        &cfg,
        "[run]\nname = tiny\nseed = 1\n\
         [backend]\nkind = lpp\nn = 200\nhorizon = 100000\n\
         i_min = -20\ni_max = 20\nj_min = -20\nj_max = 20\n\
         [phi]\netas = -1, 0, 1\nvalues = 0, 0, 0\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_kpzfp"))
        .args(["simulate"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let dir = temp_dir("badsuite");
    let cfg = dir.join("bad.conf");
    std::fs::write(
        &cfg,
        "[run]\nname = bad\n[backend]\nkind = parabolic\n\
         [phi]\netas = -1, 1\nvalues = 0, 0\n[verify]\nsuites = nonsense\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_kpzfp"))
        .args(["verify"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn export_plots_demo_counts_and_idempotence() {
    let dir = temp_dir("plots");
    let rc = load(&demo_config(&dir.join("run")));
    let outcome = cmd_simulate(&rc).unwrap();

    let written = cmd_export_plots(&outcome.out_dir).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"plot_raster.csv".to_string()));
    assert_eq!(
        names.iter().filter(|n| n.starts_with("plot_border_")).count(),
        2,
        "expected two border polylines, got {names:?}"
    );
    let markers = std::fs::read_to_string(outcome.out_dir.join("plot_extinctions.csv")).unwrap();
    assert_eq!(markers.lines().count(), 2, "one marker row expected:\n{markers}");

    let before: Vec<Vec<u8>> = written.iter().map(|p| std::fs::read(p).unwrap()).collect();
    let again = cmd_export_plots(&outcome.out_dir).unwrap();
    assert_eq!(written, again);
    for (path, old) in written.iter().zip(&before) {
        assert_eq!(&std::fs::read(path).unwrap(), old, "{path:?} changed on re-export");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn export_plots_on_missing_run_is_a_usage_error() {
    let dir = temp_dir("plots-missing");
    let err = cmd_export_plots(&dir.join("nope")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    std::fs::remove_dir_all(&dir).ok();
}
