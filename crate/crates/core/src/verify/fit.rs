use crate::error::{Error, Result};
use crate::geometry::RadialGrid;
use crate::heat::UNDERFLOW_GUARD;
use crate::numerics::{bisect_predicate, linear_regression};
use crate::spectral::Eigenpair;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `y = C₁ e^{C₂ x}`.
    LogAffine,
    /// `y = C₁ x^{C₂}`.
    PowerLaw,
}

/// Least-squares constants in the model's linearizing coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedConstants {
    pub model: FitModel,
    /// Prefactor `C₁`.
    pub prefactor: f64,
    /// Rate or exponent `C₂`.
    pub rate: f64,
    /// Largest residual in `ln y`.
    pub max_residual: f64,
    /// `C₁ e^{max residual}`: with it the fitted curve dominates every sample.
    pub inflated_prefactor: f64,
}

impl FittedConstants {
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with(self.prefactor, x)
    }

    pub fn eval_inflated(&self, x: f64) -> f64 {
        self.eval_with(self.inflated_prefactor, x)
    }

    fn eval_with(&self, c: f64, x: f64) -> f64 {
        match self.model {
            FitModel::LogAffine => c * (self.rate * x).exp(),
            FitModel::PowerLaw => c * x.powf(self.rate),
        }
    }
}

pub const MIN_FIT_SAMPLES: usize = 8;

pub fn fit_constants(samples: &[(f64, f64)], model: FitModel) -> Result<FittedConstants> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::Invalid(format!("need at least {MIN_FIT_SAMPLES} samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(x, y)| !(y > 0.0) || !x.is_finite()) {
        return Err(Error::Invalid("fit samples need finite x and positive y".into()));
    }
    if model == FitModel::PowerLaw && samples.iter().any(|&(x, _)| !(x > 0.0)) {
        return Err(Error::Invalid("power-law fit needs positive x".into()));
    }
    let xs: Vec<f64> = samples
        .iter()
        .map(|&(x, _)| if model == FitModel::PowerLaw { x.ln() } else { x })
        .collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, y)| y.ln()).collect();
    let fit = linear_regression(&xs, &ys)?;
    // Largest positive residual: how far the samples rise above the fit.
    let above = xs.iter().zip(&ys).map(|(x, y)| y - fit.intercept - fit.slope * x).fold(0.0f64, f64::max);
    Ok(FittedConstants {
        model,
        prefactor: fit.intercept.exp(),
        rate: fit.slope,
        max_residual: fit.max_residual,
        inflated_prefactor: (fit.intercept + above).exp(),
    })
}

/// Smallest parameter `p ∈ [lo, hi]` with `ln β_p(r) ≥ ln target(r)` at every
/// sample, for a family increasing in `p`; found by bisection in `ln p` to
/// relative accuracy `1e-9`, then multiplied by `1 + margin`.
pub fn fit_rate_parameter<F>(samples: &[(f64, f64)], lo: f64, hi: f64, margin: f64, log_beta: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Invalid(format!("parameter bracket ({lo}, {hi}) is invalid")));
    }
    let relevant: Vec<(f64, f64)> = samples.iter().copied().filter(|&(_, b)| b > 0.0).collect();
    let dominates = |p: f64| relevant.iter().all(|&(r, b)| log_beta(p, r) >= b.ln());
    if relevant.is_empty() || dominates(lo) {
        return Ok(lo * (1.0 + margin));
    }
    if !dominates(hi) {
        return Err(Error::Invalid(format!("no parameter up to {hi} dominates the samples")));
    }
    let lp = bisect_predicate(lo.ln(), hi.ln(), |a, b| b - a < 1e-9, |x| dominates(x.exp()));
    Ok(lp.exp() * (1.0 + margin))
}

/// Least-squares exponent of `−ln(φ₀/max φ₀)` against `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub nodes: usize,
}

pub const MIN_WINDOW_NODES: usize = 20;

/// Fits `ln(−ln(φ₀(r)/max φ₀))` against `ln r` over grid nodes in `window`
/// where `φ₀` is above the underflow guard.
pub fn groundstate_asymptotics(ground: &Eigenpair, grid: &RadialGrid, window: (f64, f64)) -> Result<AsymptoticFit> {
    let (a, b) = window;
    if !(a >= 1.0 && b <= 0.6 * grid.r_max + 1e-12 && b > a) {
        return Err(Error::Invalid(format!("fit window ({a}, {b}) must lie in [1, 0.6 r_max = {}]", 0.6 * grid.r_max)));
    }
    let lmax = ground.log_abs_phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let guard = UNDERFLOW_GUARD.ln();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..grid.n {
        let r = grid.node(i);
        let l = ground.log_abs_phi[i];
        if r < a || r > b || !(l >= guard) {
            continue;
        }
        let depth = lmax - l;
        if depth > 0.0 {
            xs.push(r.ln());
            ys.push(depth.ln());
        }
    }
    if xs.len() < MIN_WINDOW_NODES {
        return Err(Error::WindowTooSmall { usable: xs.len(), required: MIN_WINDOW_NODES });
    }
    let fit = linear_regression(&xs, &ys)?;
    Ok(AsymptoticFit { slope: fit.slope, intercept: fit.intercept, residual: fit.rms_residual, nodes: xs.len() })
}
