use std::io::Write;

use rayon::prelude::*;

use super::family::{TestFunction, TestFunctionFamily};
use crate::cli::fmt_f64;
use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;
use crate::profiles::RateFunction;
use crate::spectral::{DiscreteOperator, Eigenpair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InequalityId {
    /// `μ(f²) ≤ r μ(|∇f|²) + β(r) μ(φ₀|f|)²`.
    IntrinsicSuperPoincare,
    /// `μ(f²) ≤ r μ(|∇f|²) + β₀(r) μ(|f|)²`.
    SuperPoincare,
    /// `μ_{φ₀}(f²) ≤ r μ_{φ₀}(|∇f|²) + e^{θ'(1 + r⁻¹)} μ_{φ₀}(|f|)²`.
    GroundStateSuperPoincare,
}

impl InequalityId {
    pub fn name(self) -> &'static str {
        match self {
            InequalityId::IntrinsicSuperPoincare => "isp",
            InequalityId::SuperPoincare => "super_poincare",
            InequalityId::GroundStateSuperPoincare => "ground_state_super_poincare",
        }
    }
}

/// Slack is recorded relative to the left-hand side: every test function is
/// normalized to `μ(f²) = 1` (the inequalities are 2-homogeneous), so
/// `slack = RHS − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub id: InequalityId,
    pub family: TestFunctionFamily,
    pub rs: Vec<f64>,
    /// `slack[f][k]` at `rs[k]`.
    pub slack: Vec<Vec<f64>>,
    pub min_slack: f64,
    pub violations: usize,
    /// `sup_f (1 − r E_f) / P_f`, the smallest rate the family admits.
    pub beta_empirical: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Relative tolerance below which negative slack counts as a violation.
pub const VIOLATION_TOLERANCE: f64 = 1e-10;

/// Normalized energy `E = μ(|∇f|²)/μ(f²)` and remainder `P = μ(g|f|)²/μ(f²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub energy: f64,
    pub remainder: f64,
}

impl Normalized {
    pub fn rhs(&self, r: f64, beta: f64) -> f64 {
        let b = if self.remainder == 0.0 { 0.0 } else { beta * self.remainder };
        r * self.energy + b
    }

    /// `(1 − r E) / P`.
    pub fn required_rate(&self, r: f64) -> f64 {
        (1.0 - r * self.energy) / self.remainder
    }
}

/// Which weights the three integrals use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weighting {
    /// `μ`, remainder against `φ₀`.
    Intrinsic,
    /// `μ`, remainder against 1.
    Plain,
    /// `φ₀² μ`, remainder against 1.
    GroundState,
}

/// Quadrature against the operator's cell masses; the gradient term is the
/// operator's own quadratic form, so `E(φ₀) = λ₀` exactly.
fn normalized(op: &DiscreteOperator, ground: &Eigenpair, u: &[f64], how: Weighting) -> Option<Normalized> {
    let act = op.first..=op.last;
    let lphi = |i: usize| ground.log_abs_phi[i];
    let node_weight = |i: usize| -> f64 {
        let lm = op.log_mass[i - op.first];
        if how == Weighting::GroundState {
            lm + 2.0 * lphi(i)
        } else {
            lm
        }
    };
    let log_l2 = log_sum_exp(act.clone().filter(|&i| u[i] != 0.0).map(|i| node_weight(i) + 2.0 * u[i].abs().ln()));
    if !log_l2.is_finite() {
        return None;
    }
    let log_energy = log_sum_exp(op.log_conductance.iter().enumerate().filter_map(|(k, la)| {
        let i = op.first as isize - 1 + k as isize;
        if i < 0 {
            return None;
        }
        let i = i as usize;
        let left = if i >= op.first { u[i] } else { 0.0 };
        let right = if i + 1 <= op.last { u[i + 1] } else { 0.0 };
        let du = right - left;
        if du == 0.0 {
            return None;
        }
        let w = if how == Weighting::GroundState {
            let a = if i >= op.first { lphi(i) } else { lphi(i + 1) };
            let b = if i + 1 <= op.last { lphi(i + 1) } else { lphi(i) };
            a + b
        } else {
            0.0
        };
        Some(la + w + 2.0 * du.abs().ln())
    }));
    let log_rem = log_sum_exp(act.filter(|&i| u[i] != 0.0).map(|i| {
        let g = if how == Weighting::Intrinsic { lphi(i) } else { 0.0 };
        node_weight(i) + g + u[i].abs().ln()
    }));
    Some(Normalized { energy: (log_energy - log_l2).exp(), remainder: (2.0 * log_rem - log_l2).exp() })
}

fn check_ground(op: &DiscreteOperator, ground: &Eigenpair) -> Result<()> {
    if ground.first != op.first || ground.v.len() != op.active_len() {
        return Err(Error::Invalid("ground state does not belong to this operator".into()));
    }
    Ok(())
}

fn sample_members(op: &DiscreteOperator, family: &TestFunctionFamily) -> Vec<(TestFunction, Vec<f64>)> {
    let grid = op.grid;
    family
        .members()
        .into_iter()
        .map(|f| {
            let mut u = f.sample(&grid);
            for (i, x) in u.iter_mut().enumerate() {
                if i < op.first || i > op.last {
                    *x = 0.0;
                }
            }
            (f, u)
        })
        .collect()
}

fn run(
    id: InequalityId,
    op: &DiscreteOperator,
    ground: &Eigenpair,
    how: Weighting,
    rate: &dyn Fn(f64) -> f64,
    family: &TestFunctionFamily,
    rs: &[f64],
) -> Result<InequalityReport> {
    check_ground(op, ground)?;
    if rs.is_empty() || rs.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Invalid("r values must be positive and finite".into()));
    }
    let mut warnings = family.resolution_warnings(&op.grid);
    let members = sample_members(op, family);
    if how != Weighting::Plain {
        for (j, (_, u)) in members.iter().enumerate() {
            let bad = (op.first..=op.last).any(|i| u[i] != 0.0 && !(ground.sign_v[i - op.first] > 0.0 && ground.log_abs_phi[i].is_finite()));
            if bad {
                return Err(Error::Domain(format!("ground state not strictly positive on the support of member {j}")));
            }
        }
    }
    let betas: Vec<f64> = rs.iter().map(|&r| rate(r)).collect();
    let norms: Vec<Option<Normalized>> = members.par_iter().map(|(_, u)| normalized(op, ground, u, how)).collect();
    let mut slack = Vec::with_capacity(norms.len());
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    let mut beta_empirical = vec![f64::NEG_INFINITY; rs.len()];
    for (j, nz) in norms.iter().enumerate() {
        let Some(nz) = nz else {
            warnings.push(format!("member {j} vanishes on the active grid"));
            slack.push(vec![f64::NAN; rs.len()]);
            continue;
        };
        let row: Vec<f64> = rs
            .iter()
            .zip(&betas)
            .enumerate()
            .map(|(k, (&r, &b))| {
                beta_empirical[k] = beta_empirical[k].max(nz.required_rate(r));
                let rhs = nz.rhs(r, b);
                let s = rhs - 1.0;
                if s < -VIOLATION_TOLERANCE * rhs.abs() || s.is_nan() {
                    violations += 1;
                }
                s
            })
            .collect();
        min_slack = row.iter().copied().fold(min_slack, f64::min);
        slack.push(row);
    }
    Ok(InequalityReport { id, family: *family, rs: rs.to_vec(), slack, min_slack, violations, beta_empirical, warnings })
}

/// Intrinsic super-Poincaré inequality with rate `β` on a test family.
pub fn test_isp(
    op: &DiscreteOperator,
    ground: &Eigenpair,
    beta: &RateFunction,
    family: &TestFunctionFamily,
    rs: &[f64],
) -> Result<InequalityReport> {
    run(InequalityId::IntrinsicSuperPoincare, op, ground, Weighting::Intrinsic, &|r| beta.value(r), family, rs)
}

/// Super-Poincaré inequality with rate `β₀`.
pub fn test_super_poincare(
    op: &DiscreteOperator,
    ground: &Eigenpair,
    beta0: &RateFunction,
    family: &TestFunctionFamily,
    rs: &[f64],
) -> Result<InequalityReport> {
    run(InequalityId::SuperPoincare, op, ground, Weighting::Plain, &|r| beta0.value(r), family, rs)
}

/// Super-Poincaré inequality for `μ_{φ₀} = φ₀² μ` with rate
/// `e^{θ'(1 + r⁻¹)}`.
pub fn test_ss_inequality(
    op: &DiscreteOperator,
    ground: &Eigenpair,
    theta_prime: f64,
    family: &TestFunctionFamily,
    rs: &[f64],
) -> Result<InequalityReport> {
    if !(theta_prime > 0.0 && theta_prime.is_finite()) {
        return Err(Error::Invalid(format!("theta' must be positive, got {theta_prime}")));
    }
    run(
        InequalityId::GroundStateSuperPoincare,
        op,
        ground,
        Weighting::GroundState,
        &|r| (theta_prime * (1.0 + 1.0 / r)).exp(),
        family,
        rs,
    )
}

/// `sup_f (1 − r E_f)/P_f` for the intrinsic inequality, without a rate.
pub fn beta_empirical(op: &DiscreteOperator, ground: &Eigenpair, family: &TestFunctionFamily, rs: &[f64]) -> Result<Vec<f64>> {
    Ok(test_isp(op, ground, &RateFunction::constant(1.0), family, rs)?.beta_empirical)
}

/// Same supremum for the plain super-Poincaré inequality.
pub fn beta0_empirical(op: &DiscreteOperator, ground: &Eigenpair, family: &TestFunctionFamily, rs: &[f64]) -> Result<Vec<f64>> {
    Ok(test_super_poincare(op, ground, &RateFunction::constant(1.0), family, rs)?.beta_empirical)
}

/// Same supremum for the ground-state inequality.
pub fn ss_rate_empirical(op: &DiscreteOperator, ground: &Eigenpair, family: &TestFunctionFamily, rs: &[f64]) -> Result<Vec<f64>> {
    Ok(test_ss_inequality(op, ground, 1.0, family, rs)?.beta_empirical)
}

/// Normalized energy and remainder of an arbitrary nodal function against
/// the intrinsic weighting.
pub fn intrinsic_terms(op: &DiscreteOperator, ground: &Eigenpair, u: &[f64]) -> Option<Normalized> {
    normalized(op, ground, u, Weighting::Intrinsic)
}

impl InequalityReport {
    /// CSV with `#` header lines echoing the family and seed, then
    /// `member,r,slack`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# inequality={}", self.id.name())?;
        writeln!(
            out,
            "# family={} seed={} count={} support={},{}",
            self.family.kind.name(),
            self.family.seed,
            self.family.count,
            fmt_f64(self.family.support.0),
            fmt_f64(self.family.support.1)
        )?;
        writeln!(out, "# violations={} min_slack={}", self.violations, fmt_f64(self.min_slack))?;
        writeln!(out, "member,r,slack")?;
        for (j, row) in self.slack.iter().enumerate() {
            for (r, s) in self.rs.iter().zip(row) {
                writeln!(out, "{j},{},{}", fmt_f64(*r), fmt_f64(*s))?;
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} members x {} r-values, {} violations, min slack {:.6e}",
            self.id.name(),
            self.slack.len(),
            self.rs.len(),
            self.violations,
            self.min_slack
        )
    }
}
