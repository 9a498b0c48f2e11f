//! Batch front end.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

pub use config::{parse_config, ConfigError, ExampleChoice, RateChoice, RunConfig};

use crate::error::{Error, Result};
use crate::geometry::{solve_warping, ExampleModel, Potential, RadialGrid};
use crate::heat::{heat_kernel_from_pole, resolved_intrinsic_sup, write_heat_csv, write_intrinsic_csv, IntrinsicReport};
use crate::profiles::{
    check_growth_condition, drift_rate, psi, psi_inverse_ln, sectional_rate, GrowthVariant, PowerLawProfile,
    Psi, RateFunction,
};
use crate::spectral::{discretize, eigenpairs, write_spectrum_csv, DiscreteOperator};
use crate::verify::{
    beta_empirical, fit_rate_parameter, sharpness_probe, ss_rate_empirical, test_isp, test_ss_inequality, InequalityReport,
    TestFunctionFamily,
};

/// Formats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Spectrum,
    Heat,
    Bound,
    Verify,
    Example,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] = [Self::Spectrum, Self::Heat, Self::Bound, Self::Verify, Self::Example];

    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Heat => "heat",
            Self::Bound => "bound",
            Self::Verify => "verify",
            Self::Example => "example",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    NonConvergence = 2,
    CheckFailed = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Exit status for a numerical error.
    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::NonConvergence { .. }
            | Error::RMaxTooSmall { .. }
            | Error::InsufficientModes { .. }
            | Error::DegenerateWeight { .. }
            | Error::AllNodesGuarded
            | Error::UnboundedSearch { .. }
            | Error::PsiDivergent { .. }
            | Error::WindowTooSmall { .. }
            | Error::RankDeficient => Self::NonConvergence,
            Error::GrowthConditionFails { .. } => Self::CheckFailed,
            Error::Domain(_) | Error::Pole | Error::OutOfRange { .. } | Error::Invalid(_) | Error::Io(_) => Self::Usage,
        }
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: ExitStatus,
    /// CSV files written, relative to the output directory.
    pub files: Vec<String>,
    /// Human-readable report lines.
    pub lines: Vec<String>,
    /// Machine-readable flags such as `no_iu_bound`.
    pub flags: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { status: ExitStatus::Success, files: Vec::new(), lines: Vec::new(), flags: Vec::new() }
    }

    fn fail(&mut self, status: ExitStatus, line: String) {
        self.status = self.status.max(status);
        self.lines.push(line);
    }
}

/// Runs one subcommand, writing its CSVs and `manifest.txt` into
/// `config.output`.
pub fn run_subcommand(cmd: Subcommand, config: &RunConfig) -> Outcome {
    let start = Instant::now();
    let mut out = Outcome::new();
    if let Err(e) = fs::create_dir_all(&config.output) {
        out.fail(ExitStatus::Usage, format!("cannot create {}: {e}", config.output.display()));
        return out;
    }
    let result = match cmd {
        Subcommand::Spectrum => spectrum(config, &mut out),
        Subcommand::Heat => heat(config, &mut out),
        Subcommand::Bound => bound(config, &mut out),
        Subcommand::Verify => verify(config, &mut out),
        Subcommand::Example => example(config, &mut out),
    };
    if let Err(e) = result {
        out.fail(ExitStatus::for_error(&e), format!("error: {e}"));
    }
    if let Err(e) = write_manifest(cmd, config, &out, start.elapsed().as_secs_f64()) {
        out.fail(ExitStatus::Usage, format!("cannot write manifest: {e}"));
    }
    out
}

/// Reads and parses a config file, applies the `--out` and `--seed`
/// overrides, runs the subcommand and returns the process exit code.
pub fn execute(cmd: Subcommand, config_path: &Path, out_dir: Option<&Path>, seed: Option<u64>, quiet: bool) -> i32 {
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", config_path.display());
            return ExitStatus::Usage.code();
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            for e in &errors {
                eprintln!("{}: {e}", config_path.display());
            }
            return ExitStatus::Usage.code();
        }
    };
    if let Some(dir) = out_dir {
        config.output = dir.to_path_buf();
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    let outcome = run_subcommand(cmd, &config);
    for line in &outcome.lines {
        if outcome.status == ExitStatus::Success {
            if !quiet {
                println!("{line}");
            }
        } else {
            eprintln!("{line}");
        }
    }
    outcome.status.code()
}

fn write_manifest(cmd: Subcommand, config: &RunConfig, out: &Outcome, wall: f64) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(config.output.join("manifest.txt"))?);
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    writeln!(w, "subcommand = {}", cmd.name())?;
    writeln!(w, "version = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "threads = {}", rayon::current_num_threads())?;
    writeln!(w, "exit_status = {}", out.status.code())?;
    writeln!(w, "files = {}", out.files.join(", "))?;
    writeln!(w, "flags = {}", out.flags.join(", "))?;
    writeln!(w, "wall_time_s = {wall:.3}")?;
    writeln!(w, "timestamp_unix = {stamp}")?;
    for line in &out.lines {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "[config]")?;
    w.write_all(config.echo().as_bytes())?;
    w.flush()
}

fn create(config: &RunConfig, out: &mut Outcome, name: &str) -> Result<BufWriter<File>> {
    out.files.push(name.to_string());
    Ok(BufWriter::new(File::create(config.output.join(name))?))
}

fn write_with<F>(config: &RunConfig, out: &mut Outcome, name: &str, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = create(config, out, name)?;
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Builds the configured model on the configured grid.
pub fn build_model(config: &RunConfig, grid: RadialGrid) -> Result<ExampleModel> {
    match config.example {
        ExampleChoice::Known(kind) => kind.build(config.d, config.delta, config.theta, grid),
        ExampleChoice::Custom => {
            let k = PowerLawProfile::power(config.k_coefficient, config.k_exponent).with_smoothing(PowerLawProfile::DEFAULT_SMOOTHING);
            let manifold = solve_warping(&k, config.d, grid)?;
            let (potential, growth) = if config.theta > 0.0 {
                let p = 2.0 * (config.delta - 1.0).max(0.0);
                let g = config.delta * config.theta;
                (
                    Potential::power(config.theta, config.delta, Potential::DEFAULT_CUTOFF),
                    PowerLawProfile::power(g * g, p).with_smoothing(PowerLawProfile::DEFAULT_SMOOTHING),
                )
            } else {
                (Potential::zero(), k)
            };
            let big_k = k.scaled(config.d as f64 - 1.0);
            Ok(ExampleModel {
                manifold,
                potential,
                growth,
                big_k,
                pinching: None,
                ricci_constant: None,
                r0: Potential::DEFAULT_CUTOFF,
                delta: config.delta,
            })
        }
    }
}

/// The configured theoretical rate with rate parameter `theta`.
pub fn rate_function(config: &RunConfig, model: &ExampleModel, theta: f64) -> RateFunction {
    let consts = config.constants.with_theta(theta);
    match config.rate {
        RateChoice::Sectional => sectional_rate(model.growth, model.big_k, consts, config.d),
        RateChoice::Drift => drift_rate(model.growth, model.big_k, consts, config.m, config.d),
        RateChoice::ExpPower => RateFunction::exp_power(theta, config.rate_epsilon),
    }
}

fn operator(config: &RunConfig) -> Result<(RadialGrid, ExampleModel, DiscreteOperator)> {
    let grid = RadialGrid::new(config.r_max, config.n)?;
    let model = build_model(config, grid)?;
    let op = discretize(&model.manifold, &model.potential, 0.0)?;
    Ok((grid, model, op))
}

/// `(ln Ψ⁻¹((1−ε)t), ln bound)` at each time, or `None` when Ψ diverges.
fn log_bounds(config: &RunConfig, beta: &RateFunction) -> Result<Option<Vec<(f64, f64)>>> {
    let probe = (beta.ln_infimum().max(0.0) + 1.0).exp();
    if let Psi::Divergent { .. } = psi(beta, probe)? {
        return Ok(None);
    }
    let eps = config.constants.epsilon;
    let floor = beta.ln_infimum() - eps.ln();
    config
        .times
        .par_iter()
        .map(|&t| psi_inverse_ln(beta, (1.0 - eps) * t).map(|inv| (inv, 2.0 * floor.max(inv))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

const HYPERCONTRACTIVE: &str = "hypercontractive regime, no IU bound";

fn attach_bounds(config: &RunConfig, model: &ExampleModel, reports: &mut [IntrinsicReport], out: &mut Outcome) -> Result<()> {
    let beta = rate_function(config, model, config.constants.theta);
    match log_bounds(config, &beta)? {
        None => {
            out.flags.push("no_iu_bound".into());
            out.lines.push(HYPERCONTRACTIVE.into());
        }
        Some(bounds) => {
            for (rep, (_, lb)) in reports.iter_mut().zip(bounds) {
                rep.s_bound = Some(lb.exp());
                rep.log_s_bound = Some(lb);
                rep.constants = Some(config.constants);
                if lb < rep.log_s_empirical {
                    out.lines.push(format!("bound below empirical supremum at t = {}", rep.t));
                }
            }
        }
    }
    Ok(())
}

fn report_resolution(reports: &[IntrinsicReport], out: &mut Outcome) {
    for r in reports {
        if !r.is_resolved() {
            out.fail(
                ExitStatus::NonConvergence,
                format!(
                    "t = {}: unresolved after {} modes (truncation {:.3e}, diagonal tail {:.3e})",
                    r.t, r.modes_used, r.truncation_bound, r.diagonal_tail
                ),
            );
        }
    }
}

fn spectrum(config: &RunConfig, out: &mut Outcome) -> Result<()> {
    let (grid, model, op) = operator(config)?;
    let pairs = eigenpairs(&op, config.modes.min(op.active_len()))?;
    write_with(config, out, "geometry.csv", |w| model.manifold.write_csv(&model.potential, w))?;
    write_with(config, out, "spectrum.csv", |w| write_spectrum_csv(&grid, &pairs, w))?;
    out.lines.push(format!("lambda0 = {:.12e} ({} modes, n = {})", pairs[0].lambda, pairs.len(), grid.n));
    Ok(())
}

fn heat(config: &RunConfig, out: &mut Outcome) -> Result<()> {
    let (grid, model, op) = operator(config)?;
    let nodes = grid.nodes();
    let (pairs, mut reports) = resolved_intrinsic_sup(&op, &nodes, &config.times)?;
    let snaps = config.times.iter().map(|&t| heat_kernel_from_pole(&pairs, t)).collect::<Result<Vec<_>>>()?;
    attach_bounds(config, &model, &mut reports, out)?;
    write_with(config, out, "heat.csv", |w| write_heat_csv(&nodes, &snaps, w))?;
    write_with(config, out, "intrinsic.csv", |w| write_intrinsic_csv(&reports, w))?;
    for r in &reports {
        out.lines.push(format!("t = {}: ln S = {:.6e} ({} modes)", r.t, r.log_s_empirical, r.modes_used));
    }
    report_resolution(&reports, out);
    Ok(())
}

fn bound(config: &RunConfig, out: &mut Outcome) -> Result<()> {
    let grid = RadialGrid::new(config.r_max, config.n)?;
    let model = build_model(config, grid)?;
    let beta = rate_function(config, &model, config.constants.theta);
    let eps = config.constants.epsilon;
    let rows: Vec<(f64, f64, f64)> = match log_bounds(config, &beta)? {
        None => {
            out.flags.push("no_iu_bound".into());
            out.lines.push(HYPERCONTRACTIVE.into());
            config.times.iter().map(|&t| (t, f64::NAN, f64::INFINITY)).collect()
        }
        Some(bounds) => config.times.iter().zip(bounds).map(|(&t, (i, b))| (t, i, b)).collect(),
    };
    write_with(config, out, "bound.csv", |w| {
        writeln!(w, "# rate={} theta={} epsilon={}", config.rate.name(), fmt_f64(config.constants.theta), fmt_f64(eps))?;
        writeln!(w, "t,log_psi_inverse,log_S_bound")?;
        for (t, i, b) in &rows {
            writeln!(w, "{},{},{}", fmt_f64(*t), fmt_f64(*i), fmt_f64(*b))?;
        }
        Ok(())
    })?;
    if !out.flags.iter().any(|f| f == "no_iu_bound") {
        for (t, _, b) in &rows {
            out.lines.push(format!("t = {t}: ln S_bound = {b:.6e}"));
        }
    }
    Ok(())
}

/// Margin applied to fitted rate parameters.
pub const FIT_MARGIN: f64 = 1e-6;
const FIT_BRACKET: (f64, f64) = (1e-6, 1e6);

fn verify(config: &RunConfig, out: &mut Outcome) -> Result<()> {
    let (grid, model, op) = operator(config)?;
    let mut rows: Vec<(String, f64, usize, f64)> = Vec::new();
    let growth = match config.rate {
        RateChoice::Sectional => Some(check_growth_condition(&model.growth, &model.big_k, GrowthVariant::Sectional)),
        RateChoice::Drift => Some(check_growth_condition(&model.growth, &model.big_k, GrowthVariant::Drift)),
        RateChoice::ExpPower => None,
    };
    match growth {
        Some(Ok(g)) => rows.push(("growth".into(), g.exponent, 0, 1.0 - g.exponent)),
        Some(Err(Error::GrowthConditionFails { exponent, .. })) => {
            rows.push(("growth".into(), exponent, 1, 1.0 - exponent));
            out.fail(ExitStatus::CheckFailed, format!("growth condition fails: exponent {exponent:.4} > 1"));
        }
        Some(Err(e)) => return Err(e),
        None => {}
    }
    let pairs = eigenpairs(&op, 1)?;
    let ground = &pairs[0];
    let family = TestFunctionFamily::new(config.family, config.seed, config.count, config.support)?;
    for w in family.resolution_warnings(&grid) {
        out.lines.push(format!("warning: {w}"));
    }
    let rs = &config.rs;

    let theta = match config.isp_theta {
        Some(th) => th,
        None => {
            let be = beta_empirical(&op, ground, &family, rs)?;
            let samples: Vec<(f64, f64)> = rs.iter().copied().zip(be).collect();
            fit_rate_parameter(&samples, FIT_BRACKET.0, FIT_BRACKET.1, FIT_MARGIN, |th, r| {
                rate_function(config, &model, th).ln_value(r)
            })?
        }
    };
    let isp = test_isp(&op, ground, &rate_function(config, &model, theta), &family, rs)?;
    let theta_prime = match config.theta_prime {
        Some(th) => th,
        None => {
            let be = ss_rate_empirical(&op, ground, &family, rs)?;
            let samples: Vec<(f64, f64)> = rs.iter().copied().zip(be).collect();
            fit_rate_parameter(&samples, FIT_BRACKET.0, FIT_BRACKET.1, FIT_MARGIN, |th, r| th * (1.0 + 1.0 / r))?
        }
    };
    let ss = test_ss_inequality(&op, ground, theta_prime, &family, rs)?;
    write_with(config, out, "isp.csv", |w| isp.write_csv(w))?;
    write_with(config, out, "ss.csv", |w| ss.write_csv(w))?;
    for (rep, param) in [(&isp, theta), (&ss, theta_prime)] {
        rows.push((rep.id.name().to_string(), param, rep.violations, rep.min_slack));
        record(rep, out);
    }
    write_with(config, out, "verify.csv", |w| {
        writeln!(w, "check,parameter,violations,min_slack")?;
        for (name, p, v, s) in &rows {
            writeln!(w, "{name},{},{v},{}", fmt_f64(*p), fmt_f64(*s))?;
        }
        Ok(())
    })?;
    out.lines.push(format!("isp theta = {theta:.12e}, ss theta' = {theta_prime:.12e}"));
    Ok(())
}

fn record(rep: &InequalityReport, out: &mut Outcome) {
    let line = rep.summary();
    if rep.violations > 0 {
        out.fail(ExitStatus::CheckFailed, line);
    } else {
        out.lines.push(line);
    }
    out.lines.extend(rep.warnings.iter().map(|w| format!("warning: {w}")));
}

fn example(config: &RunConfig, out: &mut Outcome) -> Result<()> {
    let (grid, model, op) = operator(config)?;
    let nodes = grid.nodes();
    let (pairs, mut reports) = resolved_intrinsic_sup(&op, &nodes, &config.times)?;
    attach_bounds(config, &model, &mut reports, out)?;
    let shown = config.modes.min(pairs.len());
    write_with(config, out, "spectrum.csv", |w| write_spectrum_csv(&grid, &pairs[..shown], w))?;
    write_with(config, out, "intrinsic.csv", |w| write_intrinsic_csv(&reports, w))?;
    out.lines.push(format!("lambda0 = {:.12e}", pairs[0].lambda));
    for r in &reports {
        out.lines.push(format!("t = {}: ln S = {:.6e}", r.t, r.log_s_empirical));
    }
    report_resolution(&reports, out);
    match config.example {
        ExampleChoice::Known(kind) => {
            let rep = sharpness_probe(kind, config.d, config.delta, config.theta, config.probe_time, &config.ladder, config.n, config.thresholds)?;
            write_with(config, out, "sharpness.csv", |w| rep.write_csv(w))?;
            out.lines.push(format!("sharpness verdict: {}", rep.verdict.name()));
        }
        ExampleChoice::Custom => out.lines.push("sharpness probe skipped for custom models".into()),
    }
    Ok(())
}

