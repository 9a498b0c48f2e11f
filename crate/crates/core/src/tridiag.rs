//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues; vectors by one step of inverse iteration from the twisted
//! factorization's best unit vector, falling back to pivoted-LU inverse
//! iteration with re-orthogonalization inside clusters.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;

/// Unit eigenvector with `ln |v_i|` kept separately, so components below the
/// `f64` range stay available.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagVector {
    pub v: Vec<f64>,
    pub log_abs: Vec<f64>,
    /// `±1` per component, defined where `v_i` underflows.
    pub sign: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Invalid("tridiagonal needs n diagonal and n − 1 off-diagonal entries".into()));
        }
        if diag.iter().chain(&off).any(|x| !x.is_finite()) {
            return Err(Error::Invalid("tridiagonal entries must be finite".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut rad = 0.0;
            if i > 0 {
                rad += self.off[i - 1].abs();
            }
            if i + 1 < n {
                rad += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - rad);
            hi = hi.max(self.diag[i] + rad);
        }
        (lo, hi)
    }

    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * self.norm_hint();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let qq = if q.abs() < tiny { -tiny } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / qq;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn norm_hint(&self) -> f64 {
        self.diag.iter().chain(&self.off).fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE)
    }

    /// `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count,
    /// to `max(1e-12 |λ|, 4 eps ‖T‖)`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let span = (hi - lo).abs().max(self.norm_hint());
        lo -= 1e-12 * span;
        hi += 1e-12 * span;
        let floor = 4.0 * f64::EPSILON * self.norm_bound();
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= (1e-12 * mid.abs()).max(floor) || mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Lowest `count` eigenvalues.
    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        (0..count.min(self.len())).into_par_iter().map(|k| self.eigenvalue(k)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// `‖T v − λ v‖₂` for unit `v`.
    pub fn residual(&self, lambda: f64, v: &[f64]) -> f64 {
        self.matvec(v).iter().zip(v).map(|(tv, x)| (tv - lambda * x).powi(2)).sum::<f64>().sqrt()
    }

    /// Eigenvectors for the given (sorted) eigenvalues. Isolated eigenvalues
    /// use the twisted factorization, which keeps every component (including
    /// ones far below `eps` of the maximum) to high relative accuracy;
    /// clusters closer than `1e-6 ‖T‖` use re-orthogonalized inverse iteration.
    pub fn eigenvectors(&self, lambdas: &[f64]) -> Result<Vec<TridiagVector>> {
        let norm = self.norm_bound();
        let cluster_gap = 1e-6 * norm;
        let mut clusters: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for i in 1..=lambdas.len() {
            if i == lambdas.len() || lambdas[i] - lambdas[i - 1] > cluster_gap {
                clusters.push((start, i));
                start = i;
            }
        }
        let solved: Vec<Result<Vec<TridiagVector>>> = clusters
            .par_iter()
            .map(|&(a, b)| {
                if b - a == 1 {
                    let tol = self.residual_tolerance(lambdas[a]);
                    let tv = self.twisted_vector(lambdas[a]);
                    if tv.residual <= tol {
                        return Ok(vec![tv]);
                    }
                }
                let mut out: Vec<TridiagVector> = Vec::with_capacity(b - a);
                for idx in a..b {
                    let prev: Vec<&[f64]> = out.iter().map(|t| t.v.as_slice()).collect();
                    let (v, residual) = self.inverse_iteration(lambdas[idx], idx, &prev)?;
                    let log_abs = v.iter().map(|x| x.abs().ln()).collect();
                    let sign = v.iter().map(|x| x.signum()).collect();
                    out.push(TridiagVector { v, log_abs, sign, residual });
                }
                Ok(out)
            })
            .collect();
        let mut all = Vec::with_capacity(lambdas.len());
        for c in solved {
            all.extend(c?);
        }
        Ok(all)
    }

    fn residual_tolerance(&self, lambda: f64) -> f64 {
        (1e-10 * lambda.abs()).max(1e-11).max(64.0 * f64::EPSILON * self.norm_bound())
    }

    /// Solves `(T − λ) x = γ_k e_k` at the twist index `k` minimizing `|γ_k|`.
    /// Components are products of pivot ratios, accumulated in log space.
    pub fn twisted_vector(&self, lambda: f64) -> TridiagVector {
        let n = self.len();
        let tiny = f64::MIN_POSITIVE.sqrt() * self.norm_hint();
        let guard = |q: f64| if q.abs() < tiny { -tiny } else { q };
        let mut dp = vec![0.0; n];
        let mut dm = vec![0.0; n];
        dp[0] = guard(self.diag[0] - lambda);
        for i in 1..n {
            dp[i] = guard(self.diag[i] - lambda - self.off[i - 1] * self.off[i - 1] / dp[i - 1]);
        }
        dm[n - 1] = guard(self.diag[n - 1] - lambda);
        for i in (0..n - 1).rev() {
            dm[i] = guard(self.diag[i] - lambda - self.off[i] * self.off[i] / dm[i + 1]);
        }
        let k = (0..n)
            .map(|i| (i, (dp[i] + dm[i] - (self.diag[i] - lambda)).abs()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
            .0;
        let mut log_abs = vec![f64::NEG_INFINITY; n];
        let mut sign = vec![1.0f64; n];
        log_abs[k] = 0.0;
        for i in (0..k).rev() {
            let ratio = -self.off[i] / dp[i];
            log_abs[i] = log_abs[i + 1] + ratio.abs().ln();
            sign[i] = sign[i + 1] * ratio.signum();
        }
        for i in k + 1..n {
            let ratio = -self.off[i - 1] / dm[i];
            log_abs[i] = log_abs[i - 1] + ratio.abs().ln();
            sign[i] = sign[i - 1] * ratio.signum();
        }
        let ln_norm = 0.5 * log_sum_exp(log_abs.iter().map(|l| 2.0 * l));
        let imax = (0..n).fold(0, |a, i| if log_abs[i] > log_abs[a] { i } else { a });
        let flip = sign[imax];
        let mut v = vec![0.0; n];
        for i in 0..n {
            log_abs[i] -= ln_norm;
            sign[i] *= flip;
            v[i] = sign[i] * log_abs[i].exp();
        }
        let residual = self.residual(lambda, &v);
        TridiagVector { v, log_abs, sign, residual }
    }

    fn inverse_iteration(&self, lambda: f64, index: usize, against: &[&[f64]]) -> Result<(Vec<f64>, f64)> {
        let n = self.len();
        let norm = self.norm_bound();
        let tol = self.residual_tolerance(lambda);
        let lu = TridiagLu::factor(self, lambda, f64::EPSILON * norm);
        // Deterministic start vector with components in every direction.
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.7548776662466927).fract()).collect();
        let mut best = (x.clone(), f64::INFINITY);
        for _ in 0..8 {
            lu.solve_in_place(&mut x);
            for v in against {
                let dot: f64 = x.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                for (xi, vi) in x.iter_mut().zip(v.iter()) {
                    *xi -= dot * vi;
                }
            }
            let nrm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(nrm > 0.0 && nrm.is_finite()) {
                break;
            }
            for xi in &mut x {
                *xi /= nrm;
            }
            let res = self.residual(lambda, &x);
            if res < best.1 {
                best = (x.clone(), res);
            }
            if res <= tol {
                break;
            }
        }
        if best.1 > tol {
            return Err(Error::NonConvergence { index, residual: best.1 });
        }
        let mut v = best.0;
        // Sign convention: largest-magnitude component positive.
        let imax = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc })
            .0;
        if v[imax] < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        Ok((v, best.1))
    }
}

/// LU of `T − σ I` with partial pivoting (fill-in in a second superdiagonal).
struct TridiagLu {
    l: Vec<f64>,
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagLu {
    fn factor(t: &SymTridiag, sigma: f64, tiny: f64) -> Self {
        let n = t.len();
        let mut u0: Vec<f64> = t.diag.iter().map(|d| d - sigma).collect();
        let mut u1: Vec<f64> = t.off.clone();
        u1.push(0.0);
        let mut u2 = vec![0.0; n];
        let mut l = vec![0.0; n];
        let mut swap = vec![false; n];
        let tiny = tiny.max(f64::MIN_POSITIVE);
        for i in 0..n.saturating_sub(1) {
            let sub = t.off[i];
            if sub.abs() > u0[i].abs() {
                // Swap rows i and i + 1.
                swap[i] = true;
                let m = u0[i] / sub;
                l[i] = m;
                let a1 = u1[i];
                let b0 = u0[i + 1];
                let b1 = if i + 1 < n - 1 { t.off[i + 1] } else { 0.0 };
                u0[i] = sub;
                u1[i] = b0;
                u2[i] = b1;
                u0[i + 1] = a1 - m * b0;
                u1[i + 1] = -m * b1;
            } else {
                let piv = if u0[i] == 0.0 { tiny } else { u0[i] };
                u0[i] = piv;
                let m = sub / piv;
                l[i] = m;
                u0[i + 1] -= m * u1[i];
                u2[i] = 0.0;
            }
        }
        if u0[n - 1] == 0.0 {
            u0[n - 1] = tiny;
        }
        for p in &mut u0 {
            if p.abs() < tiny {
                *p = if *p < 0.0 { -tiny } else { tiny };
            }
        }
        Self { l, u0, u1, u2, swap }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                b.swap(i, i + 1);
                b[i + 1] -= self.l[i] * b[i];
            } else {
                b[i + 1] -= self.l[i] * b[i];
            }
        }
        let big = 1e280;
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * b[i + 2];
            }
            b[i] = s / self.u0[i];
            if !b[i].is_finite() || b[i].abs() > big {
                // Rescale to keep the iterate representable.
                let m = b[i].abs().max(1.0);
                let m = if m.is_finite() { m } else { big };
                for x in b.iter_mut() {
                    *x /= m;
                }
            }
        }
    }
}
