//! Curvature and growth profiles, rate functions and the explicit bound
//! formulas built from them.
//!
//! All rate functions are evaluated in log space: the interesting regimes
//! (`β(r)` for `r → 0`, `Ψ⁻¹(u)` for `u → 0`) overflow `f64` long before the
//! asymptotics kick in.

mod bounds;
mod rate;

pub use bounds::{
    beta_composed, beta_drift, beta_sectional, check_growth_condition, cheeger_lambda0_inverse,
    cheeger_lower_bound, drift_rate, ground_state_lower_bound, ln_ground_state_lower_bound,
    log_beta_composed, log_beta_drift, log_beta_sectional, sectional_rate, GrowthFit, GrowthVariant,
    ThetaRoles,
};
pub use rate::{
    beta_inverse, beta_inverse_ln, iu_upper_bound, iu_upper_bound_ln, psi, psi_inverse,
    psi_inverse_ln, psi_ln, Psi, RateFunction, RateTag,
};

use crate::error::{Error, Result};

/// Largest abscissa explored when inverting an increasing profile.
pub const INVERSE_SEARCH_CAP: f64 = 1e150;

/// A non-decreasing function on `[0, ∞)`.
pub trait Profile: Send + Sync {
    fn value(&self, r: f64) -> f64;

    /// Generalized inverse `inf{s > 0 : h(s) ≥ y}`.
    fn inverse(&self, y: f64) -> Result<f64> {
        inverse_increasing(self, y)
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Profile for F {
    fn value(&self, r: f64) -> f64 {
        self(r)
    }
}

/// Smoothed power law `floor + coefficient · (r⁴ + r_s⁴)^{exponent/4}`.
///
/// The quartic smoothing keeps the profile even in `r` (so ODEs driven by
/// it stay regular at the pole) while agreeing with `coefficient·r^p` to
/// better than 1% once `r ≥ 10 r_s`, for every exponent used here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawProfile {
    pub coefficient: f64,
    pub exponent: f64,
    pub smoothing_radius: f64,
    pub floor_value: f64,
}

impl PowerLawProfile {
    pub const DEFAULT_SMOOTHING: f64 = 0.5;

    pub fn new(coefficient: f64, exponent: f64, smoothing_radius: f64, floor_value: f64) -> Result<Self> {
        if !(coefficient >= 0.0 && coefficient.is_finite()) {
            return Err(Error::Invalid(format!("coefficient must be finite and ≥ 0, got {coefficient}")));
        }
        if !exponent.is_finite() {
            return Err(Error::Invalid("exponent must be finite".into()));
        }
        if !(smoothing_radius > 0.0) {
            return Err(Error::Invalid("smoothing radius must be positive".into()));
        }
        if !(floor_value >= 0.0) {
            return Err(Error::Invalid("floor value must be non-negative".into()));
        }
        Ok(Self { coefficient, exponent, smoothing_radius, floor_value })
    }

    /// `coefficient · r^exponent` with the default smoothing radius.
    pub fn power(coefficient: f64, exponent: f64) -> Self {
        Self { coefficient, exponent, smoothing_radius: Self::DEFAULT_SMOOTHING, floor_value: 0.0 }
    }

    pub fn constant(value: f64) -> Self {
        Self { coefficient: 0.0, exponent: 0.0, smoothing_radius: Self::DEFAULT_SMOOTHING, floor_value: value }
    }

    pub fn with_smoothing(mut self, r_s: f64) -> Self {
        self.smoothing_radius = r_s;
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor_value = floor;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.coefficient *= factor;
        self.floor_value *= factor;
        self
    }

    /// Unsmoothed asymptote `coefficient · r^exponent`.
    pub fn asymptote(&self, r: f64) -> f64 {
        self.coefficient * r.powf(self.exponent)
    }

    /// Derivative in `r`.
    pub fn derivative(&self, r: f64) -> f64 {
        if self.coefficient == 0.0 || self.exponent == 0.0 {
            return 0.0;
        }
        let rs4 = self.smoothing_radius.powi(4);
        let base = r.powi(4) + rs4;
        self.coefficient * self.exponent * r.powi(3) * base.powf(self.exponent / 4.0 - 1.0)
    }
}

impl Profile for PowerLawProfile {
    fn value(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        if self.coefficient == 0.0 {
            return self.floor_value;
        }
        let base = r.powi(4) + self.smoothing_radius.powi(4);
        self.floor_value + self.coefficient * base.powf(self.exponent / 4.0)
    }

    /// Closed-form inverse; agrees with [`inverse_increasing`] to its
    /// bisection tolerance.
    fn inverse(&self, y: f64) -> Result<f64> {
        if self.value(0.0) >= y {
            return Ok(0.0);
        }
        if self.coefficient == 0.0 || self.exponent <= 0.0 {
            return Err(Error::UnboundedSearch { target: y, cap: INVERSE_SEARCH_CAP });
        }
        let base = ((y - self.floor_value) / self.coefficient).powf(4.0 / self.exponent);
        let r4 = base - self.smoothing_radius.powi(4);
        let s = if r4 > 0.0 { r4.powf(0.25) } else { 0.0 };
        if s > INVERSE_SEARCH_CAP {
            return Err(Error::UnboundedSearch { target: y, cap: INVERSE_SEARCH_CAP });
        }
        Ok(s)
    }
}

/// `inf{s > 0 : h(s) ≥ y}` by bracketing and bisection (relative tolerance
/// 1e-10). Returns 0 if `h(0) ≥ y`.
pub fn inverse_increasing<H: Profile + ?Sized>(h: &H, y: f64) -> Result<f64> {
    inverse_increasing_capped(h, y, INVERSE_SEARCH_CAP)
}

pub fn inverse_increasing_capped<H: Profile + ?Sized>(h: &H, y: f64, cap: f64) -> Result<f64> {
    if y.is_nan() {
        return Err(Error::Invalid("NaN target".into()));
    }
    if h.value(0.0) >= y {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while h.value(hi) < y {
        hi *= 2.0;
        if hi > cap {
            return Err(Error::UnboundedSearch { target: y, cap });
        }
    }
    let mut lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
    // Shrink the lower end geometrically first so the relative tolerance is
    // meaningful for tiny roots.
    if lo == 0.0 {
        let mut probe = hi;
        while probe > 1e-300 && h.value(probe) >= y {
            probe *= 0.5;
        }
        if h.value(probe) >= y {
            return Ok(probe);
        }
        lo = probe;
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h.value(mid) >= y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Free constants of the bound formulas; the theory only asserts their
/// existence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub theta: f64,
    pub big_c: f64,
    pub c0: f64,
    /// Split in the ultracontractivity bound; must lie in `(0, 1]`.
    pub epsilon: f64,
    pub small_c: f64,
    /// Independent θ values for the prefactor, argument scale and exponent
    /// scale of the curvature-rate formula.
    pub split_theta: Option<ThetaRoles>,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self { theta: 1.0, big_c: 1.0, c0: 1.0, epsilon: 0.5, small_c: 1.0, split_theta: None }
    }
}

impl BoundConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("theta", self.theta),
            ("big_c", self.big_c),
            ("c0", self.c0),
            ("epsilon", self.epsilon),
            ("small_c", self.small_c),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.epsilon > 1.0 {
            return Err(Error::Invalid(format!("epsilon must be ≤ 1, got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn theta_roles(&self) -> ThetaRoles {
        self.split_theta.unwrap_or(ThetaRoles::single(self.theta))
    }
}
