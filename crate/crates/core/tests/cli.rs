use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use ultracontract::cli::{parse_config, run_subcommand, ExitStatus, Subcommand};

const BIN: &str = env!("CARGO_BIN_EXE_ultracontract");

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn config(&self, name: &str, body: &str) -> PathBuf {
        let out = self.dir.path().join(format!("{name}_out"));
        let path = self.dir.path().join(format!("{name}.toml"));
        fs::write(&path, format!("output = {}\n{body}", out.display())).unwrap();
        path
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(format!("{name}_out"))
    }
}

fn invoke(cmd: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(BIN).arg(cmd).arg("--config").arg(config).args(extra).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(p: PathBuf) -> String {
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn csv_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    lines.map(|l| l.split(',').nth(j).unwrap().to_string()).collect()
}

#[test]
fn example_subcommand_end_to_end() {
    let run = Run::new();
    let cfg = run.config("ex", "example = e1\ndelta = 3\n");
    let o = invoke("example", &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = run.out("ex");
    let spectrum = read(out.join("spectrum.csv"));
    assert_eq!(csv_rows(&spectrum).len(), 2048);
    assert_eq!(spectrum.lines().next().unwrap().split(',').count(), 1 + 16);
    let intrinsic = read(out.join("intrinsic.csv"));
    assert_eq!(csv_rows(&intrinsic).len(), 5);
    let sharp = read(out.join("sharpness.csv"));
    assert!(sharp.lines().next().unwrap().contains("verdict=stabilizes"), "{sharp}");
    assert_eq!(csv_rows(&sharp).len(), 3);
    let manifest = read(out.join("manifest.txt"));
    assert!(manifest.contains("exit_status = 0"));
    assert!(manifest.contains("files = spectrum.csv, intrinsic.csv, sharpness.csv"));
    assert!(manifest.contains("[config]"));
}

#[test]
fn bound_without_iu_bound_is_flagged_not_failed() {
    let run = Run::new();
    let cfg = run.config("b", "example = e1\ndelta = 3\nrate = exp_power\nrate_epsilon = 1\n");
    let o = invoke("bound", &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("hypercontractive regime, no IU bound"));
    let manifest = read(run.out("b").join("manifest.txt"));
    assert!(manifest.contains("flags = no_iu_bound"), "{manifest}");
    let bound = read(run.out("b").join("bound.csv"));
    assert!(column(&bound, "log_S_bound").iter().all(|v| v == "inf"));
}

#[test]
fn bound_rows_follow_the_time_list() {
    let run = Run::new();
    let cfg = run.config("b", "example = e1\ndelta = 3\ntimes = 0.25, 0.5, 1\n[grid]\nn = 512\nr_max = 12\n");
    let o = invoke("bound", &cfg, &["--quiet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let bound = read(run.out("b").join("bound.csv"));
    let logs: Vec<f64> = column(&bound, "log_S_bound").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(logs.len(), 3);
    assert!(logs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn halved_fitted_parameter_produces_violations() {
    let run = Run::new();
    let cfg = run.config("v", "example = e1\ndelta = 3\n");
    let o = invoke("verify", &cfg, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = read(run.out("v").join("verify.csv"));
    let row = table.lines().find(|l| l.starts_with("isp,")).unwrap();
    let theta: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(row.split(',').nth(2).unwrap(), "0");
    let cfg = run.config("half", &format!("example = e1\ndelta = 3\nisp_theta = {}\n", 0.5 * theta));
    let o = invoke("verify", &cfg, &[]);
    assert_eq!(code(&o), 3);
    let table = read(run.out("half").join("verify.csv"));
    let row = table.lines().find(|l| l.starts_with("isp,")).unwrap();
    assert!(row.split(',').nth(2).unwrap().parse::<usize>().unwrap() > 0);
}

#[test]
fn failed_growth_condition_exits_three() {
    let run = Run::new();
    let cfg = run.config("g", "example = e1\ndelta = 1\n");
    assert_eq!(code(&invoke("verify", &cfg, &[])), 3);
}

#[test]
fn config_errors_exit_one_and_are_all_listed() {
    let run = Run::new();
    let cfg = run.config("bad", "example = e9\nbogus = 1\n[grid]\nn = 4\n");
    let o = invoke("spectrum", &cfg, &[]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    for needle in ["line 2", "line 3", "line 5"] {
        assert!(err.contains(needle), "{err}");
    }
    assert_eq!(code(&invoke("spectrum", &run.dir.path().join("missing.toml"), &[])), 1);
    assert_eq!(code(&Command::new(BIN).args(["nonsense", "--config", "x"]).output().unwrap()), 1);
    assert_eq!(code(&Command::new(BIN).arg("--help").output().unwrap()), 0);
}

#[test]
fn unresolvable_modes_exit_two() {
    // Tiny grid: n/4 modes cannot resolve t = 1e-4.
    let run = Run::new();
    let cfg = run.config("h", "example = e1\ndelta = 3\ntimes = 0.0001\n[grid]\nn = 64\nr_max = 12\n");
    assert_eq!(code(&invoke("heat", &cfg, &[])), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let run = Run::new();
    let body = "example = e2\ndelta = 3\ntheta = 1\n[grid]\nn = 1024\nr_max = 12\n";
    for cmd in ["spectrum", "heat", "verify"] {
        let a = run.config("a", body);
        let b = run.config("b", body);
        assert_eq!(code(&invoke(cmd, &a, &["--quiet"])), 0, "{cmd}");
        assert_eq!(code(&invoke(cmd, &b, &["--quiet"])), 0, "{cmd}");
        for entry in fs::read_dir(run.out("a")).unwrap() {
            let name = entry.unwrap().file_name();
            if name == "manifest.txt" {
                continue;
            }
            assert_eq!(fs::read(run.out("a").join(&name)).unwrap(), fs::read(run.out("b").join(&name)).unwrap(), "{cmd}: {name:?}");
        }
        let strip = |p: PathBuf| -> Vec<String> {
            read(p)
                .lines()
                .filter(|l| !l.starts_with("wall_time_s") && !l.starts_with("timestamp_unix") && !l.starts_with("output"))
                .map(String::from)
                .collect()
        };
        assert_eq!(strip(run.out("a").join("manifest.txt")), strip(run.out("b").join("manifest.txt")));
    }
}

#[test]
fn seed_override_changes_the_family() {
    let run = Run::new();
    let body = "example = e1\ndelta = 3\n[grid]\nn = 1024\n";
    let a = run.config("a", body);
    let b = run.config("b", body);
    assert_eq!(code(&invoke("verify", &a, &["--quiet"])), 0);
    assert_eq!(code(&invoke("verify", &b, &["--quiet", "--seed", "7"])), 0);
    assert_ne!(read(run.out("a").join("isp.csv")), read(run.out("b").join("isp.csv")));
    assert!(read(run.out("b").join("manifest.txt")).contains("seed = 7"));
}

#[test]
fn out_override_redirects_output() {
    let run = Run::new();
    let cfg = run.config("s", "example = e1\ndelta = 3\n[grid]\nn = 256\nr_max = 12\n");
    let elsewhere = run.dir.path().join("elsewhere");
    assert_eq!(code(&invoke("spectrum", &cfg, &["--out", elsewhere.to_str().unwrap()])), 0);
    assert!(elsewhere.join("spectrum.csv").exists());
    assert!(elsewhere.join("geometry.csv").exists());
    assert!(!run.out("s").exists());
}

#[test]
fn library_entry_point_reports_files() {
    let run = Run::new();
    let mut config = parse_config("example = e2\ndelta = 3\n[grid]\nn = 512\nr_max = 12\n").unwrap();
    config.output = run.out("lib");
    let outcome = run_subcommand(Subcommand::Spectrum, &config);
    assert_eq!(outcome.status, ExitStatus::Success);
    assert_eq!(outcome.files, vec!["geometry.csv", "spectrum.csv"]);
    for f in &outcome.files {
        assert!(config.output.join(f).exists());
    }
}
