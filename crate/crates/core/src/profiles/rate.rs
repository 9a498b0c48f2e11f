use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, composite_simpson};

type LogEval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateTag {
    ClosedForm,
    Tabulated,
}

/// A positive non-increasing rate `r ↦ β(r)`, stored through `ln β`.
#[derive(Clone)]
pub struct RateFunction {
    log_eval: LogEval,
    log_infimum: f64,
    /// Smallest `r` the inverse search explores.
    pub domain_floor: f64,
    pub tag: RateTag,
    pub label: String,
}

impl fmt::Debug for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateFunction")
            .field("label", &self.label)
            .field("tag", &self.tag)
            .field("log_infimum", &self.log_infimum)
            .field("domain_floor", &self.domain_floor)
            .finish()
    }
}

impl RateFunction {
    pub const DEFAULT_FLOOR: f64 = 1e-300;

    /// Builds a closed-form rate from `ln β` and `ln inf β` (use
    /// `f64::NEG_INFINITY` when the infimum is 0).
    pub fn from_log_fn(
        label: impl Into<String>,
        log_infimum: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            log_eval: Arc::new(f),
            log_infimum,
            domain_floor: Self::DEFAULT_FLOOR,
            tag: RateTag::ClosedForm,
            label: label.into(),
        }
    }

    pub fn constant(value: f64) -> Self {
        let l = value.ln();
        Self::from_log_fn(format!("const({value})"), l, move |_| l)
    }

    /// `exp[θ(1 + r^{-ε})]`.
    pub fn exp_power(theta: f64, eps: f64) -> Self {
        Self::from_log_fn(format!("exp[{theta}(1+r^-{eps})]"), theta, move |r| theta * (1.0 + r.powf(-eps)))
    }

    /// `c (1 + r^{-p})`, the super-Poincaré rate of Nash/Sobolev type.
    pub fn nash(c: f64, p: f64) -> Self {
        Self::from_log_fn(format!("{c}(1+r^-{p})"), c.ln(), move |r| {
            // ln(1 + r^{-p}) without overflow
            let lr = -p * r.ln();
            c.ln() + if lr > 30.0 { lr + (-lr).exp().ln_1p() } else { lr.exp().ln_1p() }
        })
    }

    /// Rate tabulated at increasing abscissae with log-log interpolation and
    /// log-log extrapolation of the end segments.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invalid("tabulated rate needs at least two points".into()));
        }
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for &(r, b) in points {
            if !(r > 0.0 && b > 0.0) {
                return Err(Error::Invalid(format!("tabulated rate needs positive entries, got ({r}, {b})")));
            }
            pts.push((r.ln(), b.ln()));
        }
        if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Invalid("tabulated abscissae must be strictly increasing".into()));
        }
        Self::tabulated_ln(pts)
    }

    /// As [`RateFunction::tabulated`] with `(ln r, ln β)` pairs.
    pub fn tabulated_ln(pts: Vec<(f64, f64)>) -> Result<Self> {
        if pts.len() < 2 || pts.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Invalid("tabulated abscissae must be strictly increasing".into()));
        }
        let last = pts[pts.len() - 1];
        let prev = pts[pts.len() - 2];
        let tail_slope = (last.1 - prev.1) / (last.0 - prev.0);
        let log_inf = if tail_slope < 0.0 { f64::NEG_INFINITY } else { last.1 };
        let pts = Arc::new(pts);
        let mut rate = Self::from_log_fn("tabulated", log_inf, move |r| {
            let x = r.ln();
            let n = pts.len();
            let seg = match pts.binary_search_by(|p| p.0.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
                Ok(i) => return pts[i].1,
                Err(0) => 0,
                Err(i) if i >= n => n - 2,
                Err(i) => i - 1,
            };
            let (x0, y0) = pts[seg];
            let (x1, y1) = pts[seg + 1];
            let y = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            if x > pts[n - 1].0 && tail_slope >= 0.0 {
                pts[n - 1].1
            } else {
                y
            }
        });
        rate.tag = RateTag::Tabulated;
        Ok(rate)
    }

    /// `β(min(r, r_cap))`: flat beyond `r_cap`, with infimum `β(r_cap)`.
    pub fn capped(&self, r_cap: f64) -> Self {
        let inner = self.log_eval.clone();
        let log_inf = inner(r_cap);
        Self {
            log_eval: Arc::new(move |r| inner(r.min(r_cap))),
            log_infimum: log_inf,
            domain_floor: self.domain_floor,
            tag: self.tag,
            label: format!("{} capped at {r_cap}", self.label),
        }
    }

    /// `factor · β`.
    pub fn scaled(&self, factor: f64) -> Self {
        let inner = self.log_eval.clone();
        let lf = factor.ln();
        Self {
            log_eval: Arc::new(move |r| inner(r) + lf),
            log_infimum: self.log_infimum + lf,
            domain_floor: self.domain_floor,
            tag: self.tag,
            label: format!("{factor}·{}", self.label),
        }
    }

    pub fn ln_value(&self, r: f64) -> f64 {
        (self.log_eval)(r)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.ln_value(r).exp()
    }

    /// `ln inf_r β(r)`.
    pub fn ln_infimum(&self) -> f64 {
        self.log_infimum
    }

    pub fn infimum(&self) -> f64 {
        self.log_infimum.exp()
    }
}

/// `β⁻¹(s) = inf{r > 0 : β(r) ≤ s}` given `ln s`, returned as `ln r`.
///
/// `None` stands for `r = 0` (every admissible `r` satisfies the bound) and
/// `Some(+∞)` for an empty set (`s` below the infimum).
pub fn beta_inverse_ln(beta: &RateFunction, ln_s: f64) -> Option<f64> {
    let floor = beta.domain_floor.ln();
    if beta.ln_value(beta.domain_floor) <= ln_s {
        return None;
    }
    // Bracket upward in ln r.
    let mut lo = floor;
    let mut hi = 0.0f64.max(floor + 1.0);
    let mut step = 1.0;
    while beta.ln_value(hi.exp()) > ln_s {
        lo = hi;
        hi += step;
        step *= 2.0;
        if hi > 700.0 {
            return Some(f64::INFINITY);
        }
    }
    // Tighten the lower bracket before bisecting so a huge initial interval
    // costs only a handful of extra steps.
    let mut probe = hi - 1.0;
    let mut gap = 1.0;
    while probe > lo && beta.ln_value(probe.exp()) <= ln_s {
        hi = probe;
        gap *= 2.0;
        probe = hi - gap;
    }
    if probe > lo {
        lo = probe;
    }
    // Bisect down to adjacent floats so the inverse is smooth enough for the
    // Ψ quadrature; this is well below the 1e-10 relative tolerance on r.
    while hi - lo > 1e-14 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta.ln_value(mid.exp()) <= ln_s {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// `β⁻¹(s)`; 0 when every `r` qualifies, `+∞` when none does.
pub fn beta_inverse(beta: &RateFunction, s: f64) -> f64 {
    if !(s > 0.0) {
        return f64::INFINITY;
    }
    match beta_inverse_ln(beta, s.ln()) {
        None => 0.0,
        Some(l) => l.exp(),
    }
}

/// Outcome of evaluating `Ψ(t) = ∫_t^∞ β⁻¹(s)/s ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psi {
    Finite(f64),
    Divergent { last_increment: f64 },
}

impl Psi {
    pub fn finite(self) -> Option<f64> {
        match self {
            Psi::Finite(v) => Some(v),
            Psi::Divergent { .. } => None,
        }
    }
}

const PSI_INTEGRAND_FLOOR: f64 = 1e-14;
const PSI_TAU_CAP: f64 = 480.0;
const PSI_CAUCHY_TOL: f64 = 1e-6;
const PSI_QUAD_TOL: f64 = 1e-11;
const PSI_QUAD_DEPTH: u32 = 18;

/// `β⁻¹(e^σ)` with the `r = 0` convention, as a plain value.
fn g_of_sigma(beta: &RateFunction, sigma: f64) -> f64 {
    match beta_inverse_ln(beta, sigma) {
        None => 0.0,
        Some(l) => l.exp(),
    }
}

/// `Ψ(t)` by quadrature in `σ = ln s`, switching to `τ = ln σ` once
/// `σ > 1` so the power-law tails become exponential tails.
///
/// The integral is truncated once the `τ`-integrand falls below 1e-14 or
/// `β⁻¹` vanishes; if neither happens before `τ = 480`, the partial
/// integrals at three successive doublings of the upper limit must agree to
/// 1e-6 (relative) or the integral is flagged divergent.
pub fn psi(beta: &RateFunction, t: f64) -> Result<Psi> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("psi needs t > 0, got {t}")));
    }
    psi_ln(beta, t.ln())
}

/// `Ψ(e^{ln_t})`, for arguments beyond `f64` range.
pub fn psi_ln(beta: &RateFunction, ln_t: f64) -> Result<Psi> {
    if !(ln_t > beta.ln_infimum()) {
        return Err(Error::Domain(format!(
            "psi needs t > inf β = {:e}, got t = e^{ln_t}",
            beta.infimum()
        )));
    }
    let sigma1 = (ln_t + 1.0).max(1.0);
    let mut total = 0.0;
    if sigma1 > ln_t {
        total += quad_rel(|s| g_of_sigma(beta, s), ln_t, sigma1, 16, 0.0);
    }
    let tau_start = sigma1.ln();
    let big_g = |tau: f64| -> f64 {
        let sigma = tau.exp();
        match beta_inverse_ln(beta, sigma) {
            None => 0.0,
            Some(l) => (l + tau).exp(),
        }
    };
    if big_g(tau_start) == 0.0 {
        return Ok(Psi::Finite(total));
    }
    let chunk = 1.0;
    let mut tau = tau_start;
    // Partial integrals measured from tau_start, keyed by chunk count.
    let mut partials: Vec<f64> = vec![total];
    loop {
        let upper = tau + chunk;
        let piece = quad_rel(&big_g, tau, upper, 2, total);
        total += piece;
        partials.push(total);
        tau = upper;
        let g_end = big_g(tau);
        if g_end == 0.0 || (g_end < PSI_INTEGRAND_FLOOR * total.abs().max(1.0) && piece < PSI_INTEGRAND_FLOOR * total.abs().max(1.0) * 10.0) {
            return Ok(Psi::Finite(total));
        }
        if !total.is_finite() {
            return Ok(Psi::Divergent { last_increment: f64::INFINITY });
        }
        if tau - tau_start >= PSI_TAU_CAP {
            break;
        }
    }
    // Cauchy test over three doublings of the (τ-measured) upper limit.
    let n = partials.len() - 1;
    let at = |k: usize| partials[k.min(n)];
    let i8 = at(n);
    let i4 = at(n / 2);
    let i2 = at(n / 4);
    let i1 = at(n / 8);
    let d3 = (i8 - i4).abs();
    let d2 = (i4 - i2).abs();
    let d1 = (i2 - i1).abs();
    let contracting = d3 <= d2 && d2 <= d1;
    if contracting && d3 <= PSI_CAUCHY_TOL * i8.abs() {
        Ok(Psi::Finite(i8))
    } else {
        Ok(Psi::Divergent { last_increment: d3 })
    }
}

/// Composite adaptive Simpson with tolerance relative to the larger of the
/// running total and a coarse estimate of the piece itself.
fn quad_rel<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, running: f64) -> f64 {
    let coarse = composite_simpson(&f, a, b, panels, f64::INFINITY).abs();
    let scale = coarse.max(running.abs());
    if scale == 0.0 {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == panels { b } else { lo + h };
            adaptive_simpson(&f, lo, hi, PSI_QUAD_TOL * scale / panels as f64, PSI_QUAD_DEPTH)
        })
        .sum()
}

/// `ln Ψ⁻¹(u)`: natural log of the smallest `t` with `Ψ(t) ≤ u`.
pub fn psi_inverse_ln(beta: &RateFunction, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("psi_inverse needs u > 0, got {u}")));
    }
    let psi_at = |s: f64| -> Result<Option<f64>> {
        match psi_ln(beta, s)? {
            Psi::Finite(v) => Ok(Some(v)),
            Psi::Divergent { last_increment } => Err(Error::PsiDivergent { increment: last_increment }),
        }
    };
    let ln_inf = beta.ln_infimum();
    // Upper bracket: Ψ(e^hi) ≤ u.
    let mut hi = if ln_inf.is_finite() { ln_inf.max(0.0) + 1.0 } else { 1.0 };
    let mut guard = 0;
    while psi_at(hi)?.is_some_and(|v| v > u) {
        hi = if hi < 1.0 { hi + 1.0 } else { 2.0 * hi };
        guard += 1;
        if guard > 2000 || hi > 1e300 {
            return Err(Error::Domain(format!("psi never drops below {u}")));
        }
    }
    // Lower bracket: Ψ(e^lo) > u, or the infimum itself.
    let mut lo;
    if ln_inf.is_finite() {
        let edge = ln_inf + 1e-12 * ln_inf.abs().max(1.0);
        if psi_at(edge)?.is_some_and(|v| v <= u) {
            return Ok(ln_inf);
        }
        lo = edge;
        // Tighten geometrically toward hi.
        let mut gap = (hi - lo) * 0.5;
        while gap > 1e-3 && psi_at(hi - gap)?.is_some_and(|v| v <= u) {
            hi -= gap;
            gap *= 0.5;
        }
        if hi - gap > lo {
            lo = hi - gap;
        }
    } else {
        lo = hi - 1.0;
        let mut step = 1.0;
        while psi_at(lo)?.is_some_and(|v| v <= u) {
            hi = lo;
            step *= 2.0;
            lo -= step;
            if lo < -700.0 {
                return Ok(f64::NEG_INFINITY);
            }
        }
    }
    while hi - lo > 1e-10 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi_at(mid)?.is_some_and(|v| v <= u) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn psi_inverse(beta: &RateFunction, u: f64) -> Result<f64> {
    psi_inverse_ln(beta, u).map(f64::exp)
}

/// `ln` of the intrinsic ultracontractivity bound
/// `max{ε⁻¹ inf β, Ψ⁻¹((1−ε)t)}²`.
pub fn iu_upper_bound_ln(beta: &RateFunction, eps: f64, t: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let first = beta.ln_infimum() - eps.ln();
    let second = psi_inverse_ln(beta, (1.0 - eps) * t)?;
    Ok(2.0 * first.max(second))
}

pub fn iu_upper_bound(beta: &RateFunction, eps: f64, t: f64) -> Result<f64> {
    iu_upper_bound_ln(beta, eps, t).map(f64::exp)
}
