//! Small numerical kernels shared across modules: adaptive Simpson
//! quadrature, log-space accumulation and ordinary least squares.

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// `tol` is an absolute tolerance on the whole interval; the recursion
/// stops at `max_depth` and accepts the Richardson-corrected estimate.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || !delta.is_finite() {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Composite adaptive Simpson over `panels` equal sub-intervals. Robust for
/// integrands with localized features that a single top-level Simpson
/// estimate would miss.
pub fn composite_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == panels { b } else { lo + h };
            adaptive_simpson(&mut f, lo, hi, tol / panels as f64, 40)
        })
        .sum()
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ exp(x_i)`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln ∫_0^L exp(l0 + (l1 - l0) x / L) dx` for a log-linear integrand.
pub fn log_integral_loglinear(l0: f64, l1: f64, length: f64) -> f64 {
    let (lo, hi) = if l0 < l1 { (l0, l1) } else { (l1, l0) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let delta = hi - lo;
    if delta < 1e-8 {
        return length.ln() + hi - 0.5 * delta;
    }
    // ∫ = L e^{hi} (1 - e^{-Δ}) / Δ
    length.ln() + hi + (-(-delta).exp_m1()).ln() - delta.ln()
}

/// Result of a simple linear regression `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
}

pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Invalid("regression inputs differ in length".into()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::Invalid("regression needs at least two samples".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let scale = xs.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    if sxx <= (1e-14 * scale) * (1e-14 * scale) * nf {
        return Err(Error::RankDeficient);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - intercept - slope * x).collect();
    let max_residual = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let ss: f64 = residuals.iter().map(|r| r * r).sum();
    let rms_residual = (ss / nf).sqrt();
    let slope_stderr = if n > 2 { (ss / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LinearFit { slope, intercept, max_residual, rms_residual, slope_stderr })
}

/// `n` points spaced uniformly in log between `lo` and `hi` (inclusive).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Bisection on a monotone predicate: returns the smallest `x` in `[lo, hi]`
/// (up to `tol` in the bisected variable) with `pred(x) == true`, given
/// `pred(hi)` holds and `pred(lo)` does not.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(mut lo: f64, mut hi: f64, tol: impl Fn(f64, f64) -> bool, mut pred: P) -> f64 {
    for _ in 0..400 {
        if tol(lo, hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomials_and_exponentials() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12, 30);
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-12, 40);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn log_space_helpers() {
        assert!((log_add(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_add(f64::NEG_INFINITY, 3.0), 3.0);
        let l = log_sum_exp([1000.0, 1000.0]);
        assert!((l - 1000.0 - 2f64.ln()).abs() < 1e-12);
        // ∫_0^2 e^{x} dx = e^2 - 1
        let li = log_integral_loglinear(0.0, 2.0, 2.0);
        assert!((li.exp() - (2f64.exp() - 1.0)).abs() < 1e-12);
        let li = log_integral_loglinear(5.0, 5.0, 3.0);
        assert!((li - (5.0 + 3f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn regression_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = linear_regression(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!((fit.intercept - 2.0).abs() < 1e-13);
        assert!(linear_regression(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
