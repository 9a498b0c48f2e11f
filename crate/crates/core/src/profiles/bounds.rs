use crate::error::{Error, Result};
use crate::numerics::{linear_regression, log_grid};

use super::rate::RateFunction;
use super::{BoundConstants, PowerLawProfile, Profile};

/// Independent values for the three places θ enters the curvature rate:
/// the algebraic prefactor, the argument scale `θ/r` and the exponent scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaRoles {
    pub prefactor: f64,
    pub argument: f64,
    pub exponent: f64,
}

impl ThetaRoles {
    pub fn single(theta: f64) -> Self {
        Self { prefactor: theta, argument: theta, exponent: theta }
    }
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("rate argument must be positive and finite, got {r}")))
    }
}

/// `ln β(r)` for the curvature-bounded case:
/// `θ r^{-d/2} exp[θ k⁻¹(θ/r) √K(4 + 2k⁻¹(θ/r))]`.
pub fn log_beta_sectional<P: Profile + ?Sized, Q: Profile + ?Sized>(
    k: &P,
    big_k: &Q,
    consts: &BoundConstants,
    d: usize,
    r: f64,
) -> Result<f64> {
    check_r(r)?;
    let th = consts.theta_roles();
    let s = k.inverse(th.argument / r)?;
    let tail = s * big_k.value(4.0 + 2.0 * s).max(0.0).sqrt();
    Ok(th.prefactor.ln() - 0.5 * d as f64 * r.ln() + th.exponent * tail)
}

pub fn beta_sectional<P: Profile + ?Sized, Q: Profile + ?Sized>(
    k: &P,
    big_k: &Q,
    consts: &BoundConstants,
    d: usize,
    r: f64,
) -> Result<f64> {
    log_beta_sectional(k, big_k, consts, d, r).map(f64::exp)
}

/// `ln β(r)` for the drift case:
/// `θ r^{-(m+d+1)/2} exp[θ γ⁻¹(32/r) √K(2 + 2γ⁻¹(32/r))]`.
pub fn log_beta_drift<P: Profile + ?Sized, Q: Profile + ?Sized>(
    gamma: &P,
    big_k: &Q,
    consts: &BoundConstants,
    m: f64,
    d: usize,
    r: f64,
) -> Result<f64> {
    check_r(r)?;
    let th = consts.theta_roles();
    let s = gamma.inverse(32.0 / r)?;
    let tail = s * big_k.value(2.0 + 2.0 * s).max(0.0).sqrt();
    Ok(th.prefactor.ln() - 0.5 * (m + d as f64 + 1.0) * r.ln() + th.exponent * tail)
}

pub fn beta_drift<P: Profile + ?Sized, Q: Profile + ?Sized>(
    gamma: &P,
    big_k: &Q,
    consts: &BoundConstants,
    m: f64,
    d: usize,
    r: f64,
) -> Result<f64> {
    log_beta_drift(gamma, big_k, consts, m, d, r).map(f64::exp)
}

/// `ln β(r)` for the rate composed from a super-Poincaré rate `β₀` and the
/// exterior spectral curve: `C β₀(r/8) exp[C R √K(2 + 2R)]` with
/// `R = λ₀⁻¹(8/r)`. With `literal_statement` the exponent uses `K(2 + 2R)`
/// without the square root.
pub fn log_beta_composed<L, Q>(
    beta0: &RateFunction,
    lambda0_inv: L,
    big_k: &Q,
    consts: &BoundConstants,
    literal_statement: bool,
    r: f64,
) -> Result<f64>
where
    L: Fn(f64) -> Result<f64>,
    Q: Profile + ?Sized,
{
    check_r(r)?;
    let radius = lambda0_inv(8.0 / r)?;
    let kv = big_k.value(2.0 + 2.0 * radius).max(0.0);
    let growth = if literal_statement { kv } else { kv.sqrt() };
    Ok(consts.big_c.ln() + beta0.ln_value(r / 8.0) + consts.big_c * radius * growth)
}

pub fn beta_composed<L, Q>(
    beta0: &RateFunction,
    lambda0_inv: L,
    big_k: &Q,
    consts: &BoundConstants,
    literal_statement: bool,
    r: f64,
) -> Result<f64>
where
    L: Fn(f64) -> Result<f64>,
    Q: Profile + ?Sized,
{
    log_beta_composed(beta0, lambda0_inv, big_k, consts, literal_statement, r).map(f64::exp)
}

/// `λ₀⁻¹(y) ≤ 1 + k⁻¹(4y/c₀²)` with `c₀ = (d−1) tanh 1`, the inverse of the
/// Cheeger lower bound for the exterior eigenvalue when `k ≥ 1`.
pub fn cheeger_lambda0_inverse<P: Profile + ?Sized>(k: &P, d: usize, y: f64) -> Result<f64> {
    let c0 = (d as f64 - 1.0) * 1f64.tanh();
    Ok(1.0 + k.inverse(4.0 * y / (c0 * c0))?)
}

/// `(d−1)² tanh²(min(1, √k(R))) k(R) / 4`.
pub fn cheeger_lower_bound<P: Profile + ?Sized>(k: &P, d: usize, radius: f64) -> f64 {
    let kv = k.value(radius).max(0.0);
    let c0 = (d as f64 - 1.0) * kv.sqrt().min(1.0).tanh();
    c0 * c0 * kv / 4.0
}

/// `(1/C) exp[−C ρ √K(2ρ)]`.
pub fn ground_state_lower_bound<Q: Profile + ?Sized>(big_k: &Q, big_c: f64, rho: f64) -> f64 {
    ln_ground_state_lower_bound(big_k, big_c, rho).exp()
}

pub fn ln_ground_state_lower_bound<Q: Profile + ?Sized>(big_k: &Q, big_c: f64, rho: f64) -> f64 {
    -big_c.ln() - big_c * rho * big_k.value(2.0 * rho).max(0.0).sqrt()
}

/// Which offset the growth condition uses: `4 + 2s` (curvature case) or
/// `2 + 2s` (drift case).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthVariant {
    Sectional,
    Drift,
}

impl GrowthVariant {
    fn offset(self) -> f64 {
        match self {
            GrowthVariant::Sectional => 4.0,
            GrowthVariant::Drift => 2.0,
        }
    }
}

/// Fitted `LHS(R) ≤ c R^ε` on a log window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub coefficient: f64,
    /// Fitted slope rounded up by the residual margin.
    pub exponent: f64,
    pub slope: f64,
    pub margin: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

const GROWTH_SAMPLES: usize = 41;
const GROWTH_DECADES: f64 = 4.0;

/// Fits `s(R) √K(o + 2 s(R)) ≤ c R^ε` with `s = inv_profile⁻¹`.
///
/// The window starts where `s(R) ≥ 100` (and `R ≥ 100`) so the smoothing of
/// the profiles near the origin does not bias the slope, and spans four
/// decades. Fails when the fitted slope exceeds `1 + margin`, i.e. when the
/// profiles are not certifiable by the growth condition.
pub fn check_growth_condition<P: Profile + ?Sized, Q: Profile + ?Sized>(
    inv_profile: &P,
    big_k: &Q,
    variant: GrowthVariant,
) -> Result<GrowthFit> {
    let r_lo = inv_profile.value(100.0).max(100.0);
    let r_hi = r_lo * 10f64.powf(GROWTH_DECADES);
    let grid = log_grid(r_lo, r_hi, GROWTH_SAMPLES);
    let mut xs = Vec::with_capacity(grid.len());
    let mut ys = Vec::with_capacity(grid.len());
    for &big_r in &grid {
        let s = inv_profile.inverse(big_r)?;
        let lhs = s * big_k.value(variant.offset() + 2.0 * s).max(0.0).sqrt();
        if !(lhs > 0.0) {
            return Err(Error::Domain(format!("growth left-hand side vanishes at R = {big_r}")));
        }
        xs.push(big_r.ln());
        ys.push(lhs.ln());
    }
    let fit = linear_regression(&xs, &ys)?;
    let margin = fit.max_residual / (r_hi.ln() - r_lo.ln());
    let exponent = fit.slope + margin;
    let log_c = xs.iter().zip(&ys).map(|(x, y)| y - exponent * x).fold(f64::NEG_INFINITY, f64::max);
    let coefficient = log_c.exp();
    if fit.slope > 1.0 + margin {
        return Err(Error::GrowthConditionFails { coefficient, exponent, margin });
    }
    Ok(GrowthFit { coefficient, exponent, slope: fit.slope, margin, r_lo, r_hi })
}

/// The curvature-case rate as a [`RateFunction`].
pub fn sectional_rate(k: PowerLawProfile, big_k: PowerLawProfile, consts: BoundConstants, d: usize) -> RateFunction {
    RateFunction::from_log_fn("sectional", f64::NEG_INFINITY, move |r| {
        log_beta_sectional(&k, &big_k, &consts, d, r).unwrap_or(f64::INFINITY)
    })
}

/// The drift-case rate as a [`RateFunction`].
pub fn drift_rate(gamma: PowerLawProfile, big_k: PowerLawProfile, consts: BoundConstants, m: f64, d: usize) -> RateFunction {
    RateFunction::from_log_fn("drift", f64::NEG_INFINITY, move |r| {
        log_beta_drift(&gamma, &big_k, &consts, m, d, r).unwrap_or(f64::INFINITY)
    })
}
