use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use crate::numerics::log_grid;
use crate::profiles::BoundConstants;
use crate::verify::{ExampleKind, FamilyKind, SharpnessThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleChoice {
    Known(ExampleKind),
    /// `k(r) = k_coefficient · r^{k_exponent}` with optional potential
    /// `θ r^δ`.
    Custom,
}

impl ExampleChoice {
    pub fn name(self) -> &'static str {
        match self {
            ExampleChoice::Known(k) => k.name(),
            ExampleChoice::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateChoice {
    Sectional,
    Drift,
    ExpPower,
}

impl RateChoice {
    pub fn name(self) -> &'static str {
        match self {
            RateChoice::Sectional => "sectional",
            RateChoice::Drift => "drift",
            RateChoice::ExpPower => "exp_power",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: ExampleChoice,
    pub delta: f64,
    pub theta: f64,
    pub d: usize,
    pub m: f64,
    pub k_coefficient: f64,
    pub k_exponent: f64,
    pub n: usize,
    pub r_max: f64,
    pub ladder: Vec<f64>,
    pub times: Vec<f64>,
    pub rs: Vec<f64>,
    pub modes: usize,
    pub seed: u64,
    pub family: FamilyKind,
    pub count: usize,
    pub support: (f64, f64),
    pub probe_time: f64,
    pub thresholds: SharpnessThresholds,
    pub rate: RateChoice,
    pub rate_epsilon: f64,
    pub constants: BoundConstants,
    /// Rate parameter for the intrinsic inequality; fitted when absent.
    pub isp_theta: Option<f64>,
    pub theta_prime: Option<f64>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}: {k}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "{k}: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

const TOP_KEYS: &[&str] = &[
    "example",
    "delta",
    "theta",
    "d",
    "m",
    "k_coefficient",
    "k_exponent",
    "times",
    "rs",
    "modes",
    "seed",
    "family",
    "count",
    "support",
    "probe_time",
    "stabilize_ratio",
    "grow_ratio",
    "rate",
    "rate_epsilon",
    "isp_theta",
    "theta_prime",
    "output",
];
const GRID_KEYS: &[&str] = &["n", "r_max", "ladder"];
const CONSTANT_KEYS: &[&str] = &["theta", "big_c", "c0", "epsilon", "small_c"];

struct Entry {
    value: String,
    line: usize,
}

/// Parses the line-oriented `key = value` format with `[grid]` and
/// `[constants]` sections, collecting every error instead of stopping at the
/// first.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut entries: HashMap<String, Entry> = HashMap::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            match rest.strip_suffix(']').map(str::trim) {
                Some(name @ ("grid" | "constants")) => section = name.to_string(),
                Some(name) => errors.push(ConfigError { line: Some(line), field: None, message: format!("unknown section [{name}]") }),
                None => errors.push(ConfigError { line: Some(line), field: None, message: "unterminated section header".into() }),
            }
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            errors.push(ConfigError { line: Some(line), field: None, message: format!("expected `key = value`, got {content:?}") });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        let allowed = match section.as_str() {
            "grid" => GRID_KEYS,
            "constants" => CONSTANT_KEYS,
            _ => TOP_KEYS,
        };
        if k.is_empty() || !allowed.contains(&k) {
            let place = if section.is_empty() { String::new() } else { format!(" in [{section}]") };
            errors.push(ConfigError { line: Some(line), field: Some(k.to_string()), message: format!("unknown key{place}") });
            continue;
        }
        let full = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
        if let Some(prev) = entries.get(&full) {
            errors.push(ConfigError {
                line: Some(line),
                field: Some(full.clone()),
                message: format!("duplicate key (first set on line {}, again on line {line})", prev.line),
            });
            continue;
        }
        entries.insert(full, Entry { value: v.to_string(), line });
    }

    let mut p = Fields { entries: &entries, errors: &mut errors };
    let example = match p.raw("example") {
        None => {
            p.errors.push(ConfigError { line: None, field: Some("example".into()), message: "missing (e1, e2 or custom)".into() });
            ExampleChoice::Known(ExampleKind::E1)
        }
        Some((v, line)) => match v {
            "e1" => ExampleChoice::Known(ExampleKind::E1),
            "e2" => ExampleChoice::Known(ExampleKind::E2),
            "custom" => ExampleChoice::Custom,
            _ => {
                p.errors.push(ConfigError { line: Some(line), field: Some("example".into()), message: format!("expected e1, e2 or custom, got {v:?}") });
                ExampleChoice::Known(ExampleKind::E1)
            }
        },
    };
    let delta = p.real("delta", 3.0, |x| x > 0.0, "must be > 0");
    let theta = p.real("theta", 1.0, |x| x >= 0.0, "must be ≥ 0");
    let d = p.int("d", 3, |x| x >= 2, "must be ≥ 2");
    let m = p.real("m", 1.0, |x| x > 0.0, "must be > 0");
    let k_coefficient = p.real("k_coefficient", 1.0, |x| x >= 0.0, "must be ≥ 0");
    let k_exponent = p.real("k_exponent", 0.0, |x| x >= 0.0, "must be ≥ 0");
    let n = p.int("grid.n", 2048, |x| x >= 16, "must be ≥ 16");
    let r_max = p.real("grid.r_max", 20.0, |x| x > 0.0, "must be > 0");
    let ladder = p.list("grid.ladder", vec![10.0, 15.0, 20.0], |v| v.len() >= 3 && v.windows(2).all(|w| w[1] > w[0]) && v[0] > 0.0, "needs ≥ 3 strictly increasing positive values");
    let times = p.list("times", vec![0.1, 0.25, 0.5, 1.0, 2.0], |v| !v.is_empty() && v.iter().all(|&t| t > 0.0), "times must be > 0");
    let rs = p.list("rs", log_grid(1e-3, 1.0, 16), |v| !v.is_empty() && v.iter().all(|&r| r > 0.0), "r values must be > 0");
    let modes = p.int("modes", 16, |x| x >= 1, "must be ≥ 1");
    let seed = p.int("seed", 42, |_| true, "") as u64;
    let family = match p.raw("family") {
        None => FamilyKind::RandomMix,
        Some((v, line)) => FamilyKind::parse(v).unwrap_or_else(|e| {
            p.errors.push(ConfigError { line: Some(line), field: Some("family".into()), message: e.to_string() });
            FamilyKind::RandomMix
        }),
    };
    let count = p.int("count", 200, |x| x >= 1, "must be ≥ 1");
    let support_default = vec![0.25, 0.5 * r_max];
    let support = p.list("support", support_default, |v| v.len() == 2 && v[0] > 0.0 && v[1] > v[0], "expects `lo, hi` with 0 < lo < hi");
    let probe_time = p.real("probe_time", 0.5, |x| x > 0.0, "must be > 0");
    let defaults = SharpnessThresholds::default();
    let stabilize = p.real("stabilize_ratio", defaults.stabilize, |x| x > 1.0, "must be > 1");
    let grow = p.real("grow_ratio", defaults.grow, |x| x > 1.0, "must be > 1");
    let rate = match p.raw("rate") {
        None => match example {
            ExampleChoice::Known(ExampleKind::E2) => RateChoice::Drift,
            _ => RateChoice::Sectional,
        },
        Some((v, line)) => match v {
            "sectional" => RateChoice::Sectional,
            "drift" => RateChoice::Drift,
            "exp_power" => RateChoice::ExpPower,
            _ => {
                p.errors.push(ConfigError { line: Some(line), field: Some("rate".into()), message: format!("expected sectional, drift or exp_power, got {v:?}") });
                RateChoice::Sectional
            }
        },
    };
    let rate_epsilon = p.real("rate_epsilon", 0.5, |x| x > 0.0, "must be > 0");
    let base = BoundConstants::default();
    let constants = BoundConstants {
        theta: p.real("constants.theta", base.theta, |x| x > 0.0, "must be > 0"),
        big_c: p.real("constants.big_c", base.big_c, |x| x > 0.0, "must be > 0"),
        c0: p.real("constants.c0", base.c0, |x| x > 0.0, "must be > 0"),
        epsilon: p.real("constants.epsilon", base.epsilon, |x| x > 0.0 && x < 1.0, "must lie in (0, 1)"),
        small_c: p.real("constants.small_c", base.small_c, |x| x > 0.0, "must be > 0"),
        split_theta: None,
    };
    let isp_theta = p.optional_real("isp_theta", |x| x > 0.0, "must be > 0");
    let theta_prime = p.optional_real("theta_prime", |x| x > 0.0, "must be > 0");
    let output = PathBuf::from(p.raw("output").map(|(v, _)| v).unwrap_or("out"));

    if support.len() == 2 && support[1] >= r_max {
        let line = entries.get("support").map(|e| e.line);
        errors.push(ConfigError { line, field: Some("support".into()), message: format!("must end below r_max = {r_max}") });
    }
    if example == ExampleChoice::Known(ExampleKind::E2) {
        if delta <= 1.0 {
            let line = entries.get("delta").map(|e| e.line);
            errors.push(ConfigError { line, field: Some("delta".into()), message: "must be > 1 for e2".into() });
        }
        if theta <= 0.0 {
            let line = entries.get("theta").map(|e| e.line);
            errors.push(ConfigError { line, field: Some("theta".into()), message: "must be > 0 for e2".into() });
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        return Err(errors);
    }
    Ok(RunConfig {
        example,
        delta,
        theta,
        d,
        m,
        k_coefficient,
        k_exponent,
        n,
        r_max,
        ladder,
        times,
        rs,
        modes,
        seed,
        family,
        count,
        support: (support[0], support[1]),
        probe_time,
        thresholds: SharpnessThresholds { stabilize, grow },
        rate,
        rate_epsilon,
        constants,
        isp_theta,
        theta_prime,
        output,
    })
}

struct Fields<'a> {
    entries: &'a HashMap<String, Entry>,
    errors: &'a mut Vec<ConfigError>,
}

impl Fields<'_> {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|e| (e.value.as_str(), e.line))
    }

    fn fail(&mut self, key: &str, line: usize, message: String) {
        self.errors.push(ConfigError { line: Some(line), field: Some(key.rsplit('.').next().unwrap_or(key).to_string()), message });
    }

    fn optional_real(&mut self, key: &str, ok: impl Fn(f64) -> bool, why: &str) -> Option<f64> {
        let (v, line) = self.raw(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() && ok(x) => Some(x),
            Ok(x) => {
                self.fail(key, line, format!("{x} out of range: {why}"));
                None
            }
            Err(_) => {
                self.fail(key, line, format!("expected a number, got {v:?}"));
                None
            }
        }
    }

    fn real(&mut self, key: &str, default: f64, ok: impl Fn(f64) -> bool, why: &str) -> f64 {
        self.optional_real(key, ok, why).unwrap_or(default)
    }

    fn int(&mut self, key: &str, default: usize, ok: impl Fn(usize) -> bool, why: &str) -> usize {
        let Some((v, line)) = self.raw(key) else { return default };
        match v.parse::<usize>() {
            Ok(x) if ok(x) => x,
            Ok(x) => {
                self.fail(key, line, format!("{x} out of range: {why}"));
                default
            }
            Err(_) => {
                self.fail(key, line, format!("expected a non-negative integer, got {v:?}"));
                default
            }
        }
    }

    fn list(&mut self, key: &str, default: Vec<f64>, ok: impl Fn(&[f64]) -> bool, why: &str) -> Vec<f64> {
        let Some((v, line)) = self.raw(key) else { return default };
        let parsed: Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(xs) if xs.iter().all(|x| x.is_finite()) && ok(&xs) => xs,
            Ok(_) => {
                self.fail(key, line, format!("out of range: {why}"));
                default
            }
            Err(_) => {
                self.fail(key, line, format!("expected comma-separated numbers, got {v:?}"));
                default
            }
        }
    }
}

impl RunConfig {
    /// Canonical `key = value` echo, stable across runs.
    pub fn echo(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
        let c = &self.constants;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("example", self.example.name().into());
        kv("delta", format!("{}", self.delta));
        kv("theta", format!("{}", self.theta));
        kv("d", format!("{}", self.d));
        kv("m", format!("{}", self.m));
        kv("k_coefficient", format!("{}", self.k_coefficient));
        kv("k_exponent", format!("{}", self.k_exponent));
        kv("times", list(&self.times));
        kv("rs", list(&self.rs));
        kv("modes", format!("{}", self.modes));
        kv("seed", format!("{}", self.seed));
        kv("family", self.family.name().into());
        kv("count", format!("{}", self.count));
        kv("support", list(&[self.support.0, self.support.1]));
        kv("probe_time", format!("{}", self.probe_time));
        kv("stabilize_ratio", format!("{}", self.thresholds.stabilize));
        kv("grow_ratio", format!("{}", self.thresholds.grow));
        kv("rate", self.rate.name().into());
        kv("rate_epsilon", format!("{}", self.rate_epsilon));
        if let Some(x) = self.isp_theta {
            kv("isp_theta", format!("{x}"));
        }
        if let Some(x) = self.theta_prime {
            kv("theta_prime", format!("{x}"));
        }
        kv("output", self.output.display().to_string());
        s.push_str("[grid]\n");
        s.push_str(&format!("n = {}\nr_max = {}\nladder = {}\n", self.n, self.r_max, list(&self.ladder)));
        s.push_str("[constants]\n");
        s.push_str(&format!(
            "theta = {}\nbig_c = {}\nc0 = {}\nepsilon = {}\nsmall_c = {}\n",
            c.theta, c.big_c, c.c0, c.epsilon, c.small_c
        ));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("example = e1\ndelta = 3\n").unwrap();
        assert_eq!(c.example, ExampleChoice::Known(ExampleKind::E1));
        assert_eq!(c.delta, 3.0);
        assert_eq!(c.d, 3);
        assert_eq!(c.ladder, vec![10.0, 15.0, 20.0]);
        assert_eq!(c.seed, 42);
        assert_eq!(c.rate, RateChoice::Sectional);
        assert_eq!(c.constants, BoundConstants::default());
    }

    #[test]
    fn range_error_names_the_field() {
        let errs = parse_config("example = e1\ndelta = -1\n").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].field.as_deref(), Some("delta"));
        assert_eq!(errs[0].line, Some(2));
    }

    #[test]
    fn duplicate_key_reports_both_lines() {
        let errs = parse_config("example = e1\ndelta = 3\n# note\ndelta = 4\n").unwrap_err();
        assert_eq!(errs.len(), 1);
        let msg = errs[0].to_string();
        assert!(msg.contains("line 2") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn errors_are_collected_not_fail_fast() {
        let text = "example = e3\nbogus = 1\n[grid]\nn = 4\nr_max = x\n[weird]\n[constants]\nepsilon = 2\nnonsense line\n";
        let errs = parse_config(text).unwrap_err();
        let lines: Vec<Option<usize>> = errs.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![Some(1), Some(2), Some(4), Some(5), Some(6), Some(8), Some(9)]);
    }

    #[test]
    fn sections_scope_keys() {
        let c = parse_config("example = e2\ndelta = 1.5\n[grid]\nn = 512\nladder = 5, 8, 11\n[constants]\ntheta = 0.25\n").unwrap();
        assert_eq!(c.n, 512);
        assert_eq!(c.ladder, vec![5.0, 8.0, 11.0]);
        assert_eq!(c.constants.theta, 0.25);
        assert_eq!(c.theta, 1.0);
        assert_eq!(c.rate, RateChoice::Drift);
        assert!(parse_config("example = e1\nn = 512\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = parse_config("example = e2\ndelta = 1.5\nrs = 0.01, 0.1\n[grid]\nn = 512\n").unwrap();
        assert_eq!(parse_config(&c.echo()).unwrap(), c);
    }
}
