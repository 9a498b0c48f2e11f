//! Heat kernel from the pole by eigen-expansion, the intrinsic supremum
//! `S(t) = sup e^{λ₀t} h(x, y, t) / (φ₀(x) φ₀(y))`, and a Crank–Nicolson
//! integrator used as an independent check of the expansion.

use std::io::Write;

use rayon::prelude::*;

use crate::cli::fmt_f64;
use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;
use crate::profiles::BoundConstants;
use crate::spectral::{eigenpairs, DiscreteOperator, Eigenpair};

/// Largest admissible mode-truncation bound.
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;
/// Nodes where `φ₀` falls below this are left out of the supremum.
pub const UNDERFLOW_GUARD: f64 = 1e-280;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelSnapshot {
    pub t: f64,
    /// `h(o, r_i, t)` with respect to `μ`, on the full grid.
    pub values: Vec<f64>,
    pub modes_used: usize,
    /// `e^{−λ_N t} |φ_N(o)| max |φ_N|` for the last mode used.
    pub truncation_bound: f64,
}

fn pole_truncation_bound(last: &Eigenpair, t: f64) -> f64 {
    let max_phi = last.log_abs_phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (-last.lambda * t + last.log_abs_phi[0] + max_phi).exp()
}

/// `h(o, ·, t) = Σ_j e^{−λ_j t} φ_j(o) φ_j`.
pub fn heat_kernel_from_pole(pairs: &[Eigenpair], t: f64) -> Result<HeatKernelSnapshot> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let last = pairs.last().ok_or_else(|| Error::Invalid("no eigenpairs".into()))?;
    if pairs[0].first != 0 {
        return Err(Error::Invalid("heat kernel from the pole needs the full (pole) operator".into()));
    }
    let truncation_bound = pole_truncation_bound(last, t);
    if !(truncation_bound <= TRUNCATION_TOLERANCE) {
        return Err(Error::InsufficientModes { achieved: truncation_bound, required: TRUNCATION_TOLERANCE });
    }
    let n = pairs[0].phi.len();
    let mut values = vec![0.0; n];
    for p in pairs {
        let c = (-p.lambda * t).exp() * p.phi[0];
        for (h, x) in values.iter_mut().zip(&p.phi) {
            *h += c * x;
        }
    }
    Ok(HeatKernelSnapshot { t, values, modes_used: pairs.len(), truncation_bound })
}

/// `∫ h(o, y, t) μ(dy)` on the truncated domain.
pub fn snapshot_mass(op: &DiscreteOperator, snap: &HeatKernelSnapshot) -> f64 {
    (op.first..=op.last)
        .filter(|&i| snap.values[i] != 0.0)
        .map(|i| snap.values[i].signum() * (op.log_mass[i - op.first] + snap.values[i].abs().ln()).exp())
        .sum()
}

/// `∫ h(o, y, t) μ(dy)` computed from the expansion in log space
/// (robust to large masses): `Σ_j e^{−λ_j t} φ_j(o) Σ_i √m_i v_j(i)`.
pub fn kernel_mass(op: &DiscreteOperator, pairs: &[Eigenpair], t: f64) -> f64 {
    pairs
        .iter()
        .map(|p| {
            let s: f64 = p
                .log_abs_v
                .iter()
                .zip(&p.sign_v)
                .enumerate()
                .map(|(k, (l, sg))| sg * (l + 0.5 * op.log_mass[k]).exp())
                .sum();
            (-p.lambda * t).exp() * p.phi[0] * s
        })
        .sum()
}

/// `‖h(o,·,t+s) − P_s h(o,·,t)‖_∞ / ‖h(o,·,t+s)‖_∞` with `P_s` applied through
/// the same expansion (inner products recomputed numerically).
pub fn semigroup_residual(pairs: &[Eigenpair], t: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    if !(t > 0.0 && s > 0.0) {
        return Err(Error::Domain("semigroup residual needs t, s > 0".into()));
    }
    let m = pairs[0].v.len();
    // Symmetrized kernel y_t = √m h(o,·,t).
    let y_of = |tt: f64| -> Vec<f64> {
        let mut y = vec![0.0; m];
        for p in pairs {
            let c = (-p.lambda * tt).exp() * p.phi[0];
            for (a, b) in y.iter_mut().zip(&p.v) {
                *a += c * b;
            }
        }
        y
    };
    let yt = y_of(t);
    let yts = y_of(t + s);
    let mut ps = vec![0.0; m];
    for p in pairs {
        let dot: f64 = p.v.iter().zip(&yt).map(|(a, b)| a * b).sum();
        let c = (-p.lambda * s).exp() * dot;
        for (a, b) in ps.iter_mut().zip(&p.v) {
            *a += c * b;
        }
    }
    // Back to h = y / √m; √m_i = v_0(i) / φ_0(i).
    let ground = &pairs[0];
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for k in 0..m {
        let i = ground.first + k;
        let log_sqrt_m = ground.log_abs_v[k] - ground.log_abs_phi[i];
        if !log_sqrt_m.is_finite() {
            continue;
        }
        let scale = (-log_sqrt_m).exp();
        num = num.max(((yts[k] - ps[k]) * scale).abs());
        den = den.max((yts[k] * scale).abs());
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Intrinsic supremum at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicReport {
    pub t: f64,
    /// `sup_x e^{λ₀t} h(x, x, t) / φ₀(x)²`; by Cauchy–Schwarz this is the
    /// supremum over all pairs of radial points.
    pub s_empirical: f64,
    /// `ln` of `s_empirical`, finite where the value itself overflows.
    pub log_s_empirical: f64,
    /// `sup_y e^{λ₀t} h(o, y, t) / (φ₀(o) φ₀(y))`.
    pub s_pole: f64,
    pub s_bound: Option<f64>,
    /// `ln` of `s_bound`, finite where the bound overflows.
    pub log_s_bound: Option<f64>,
    pub constants: Option<BoundConstants>,
    pub modes_used: usize,
    /// Pole truncation bound of the expansion.
    pub truncation_bound: f64,
    /// Largest share of the last mode in the diagonal sum, relative to the
    /// supremum.
    pub diagonal_tail: f64,
    /// Radius where the diagonal supremum is attained.
    pub argmax_r: f64,
    /// Nodes excluded by the underflow guard.
    pub guarded_nodes: usize,
}

impl IntrinsicReport {
    /// Both truncation diagnostics are below [`TRUNCATION_TOLERANCE`].
    pub fn is_resolved(&self) -> bool {
        self.truncation_bound <= TRUNCATION_TOLERANCE && self.diagonal_tail <= TRUNCATION_TOLERANCE
    }
}

/// Computes both intrinsic suprema from eigenpairs of the pole problem.
pub fn intrinsic_sup(pairs: &[Eigenpair], grid_nodes: &[f64], t: f64) -> Result<IntrinsicReport> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let ground = &pairs[0];
    let lam0 = ground.lambda;
    let guard = UNDERFLOW_GUARD.ln();
    let m = ground.v.len();
    let usable: Vec<usize> = (0..m)
        .filter(|&k| {
            let l = ground.log_abs_phi[ground.first + k];
            l.is_finite() && l >= guard
        })
        .collect();
    let guarded_nodes = m - usable.len();
    let beyond = |k: usize| grid_nodes[ground.first + k] > 1.0;
    if usable.is_empty() || ((0..m).any(beyond) && !usable.iter().any(|&k| beyond(k))) {
        return Err(Error::AllNodesGuarded);
    }
    let weights: Vec<f64> = pairs.iter().map(|p| -(p.lambda - lam0) * t).collect();
    let last = pairs.len() - 1;
    // (log S(x), log last term(x)) per usable node.
    let per_node: Vec<(usize, f64, f64)> = usable
        .par_iter()
        .map(|&k| {
            let l0 = ground.log_abs_v[k];
            let total = log_sum_exp(pairs.iter().zip(&weights).map(|(p, w)| w + 2.0 * (p.log_abs_v[k] - l0)));
            let tail = weights[last] + 2.0 * (pairs[last].log_abs_v[k] - l0);
            (k, total, tail)
        })
        .collect();
    let (kmax, log_s, _) = per_node.iter().copied().fold((0, f64::NEG_INFINITY, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let log_tail = per_node.iter().map(|x| x.2).fold(f64::NEG_INFINITY, f64::max);
    let diagonal_tail = (log_tail - log_s).exp();

    // Pole-anchored version: e^{λ₀t} h(o,y,t)/(φ₀(o)φ₀(y)) = Σ_j e^{−(λ_j−λ₀)t} (φ_j(o)/φ₀(o)) (v_j/v₀)(y).
    let ratios_o: Vec<f64> = pairs.iter().map(|p| p.phi[0] / ground.phi[0]).collect();
    let s_pole = usable
        .par_iter()
        .map(|&k| {
            let l0 = ground.log_abs_v[k];
            pairs
                .iter()
                .zip(&weights)
                .zip(&ratios_o)
                .map(|((p, w), ro)| (w + p.log_abs_v[k] - l0).exp() * ro * p.sign_v[k])
                .sum::<f64>()
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let truncation_bound = if ground.first == 0 { pole_truncation_bound(&pairs[last], t) } else { f64::NAN };
    Ok(IntrinsicReport {
        t,
        s_empirical: log_s.exp(),
        log_s_empirical: log_s,
        s_pole,
        s_bound: None,
        log_s_bound: None,
        constants: None,
        modes_used: pairs.len(),
        truncation_bound,
        diagonal_tail,
        argmax_r: grid_nodes[ground.first + kmax],
        guarded_nodes,
    })
}

/// Smallest mode count tried by [`resolved_intrinsic_sup`].
pub const INITIAL_MODES: usize = 128;

/// Eigenpairs and intrinsic reports at `times`, doubling the mode count from
/// [`INITIAL_MODES`] until every report is resolved or `n/4` modes are used.
pub fn resolved_intrinsic_sup(op: &DiscreteOperator, grid_nodes: &[f64], times: &[f64]) -> Result<(Vec<Eigenpair>, Vec<IntrinsicReport>)> {
    let cap = (op.grid.n / 4).min(op.active_len());
    let mut modes = INITIAL_MODES.min(cap);
    loop {
        let pairs = eigenpairs(op, modes)?;
        let reports = times.par_iter().map(|&t| intrinsic_sup(&pairs, grid_nodes, t)).collect::<Result<Vec<_>>>()?;
        if modes >= cap || reports.iter().all(IntrinsicReport::is_resolved) {
            return Ok((pairs, reports));
        }
        modes = (2 * modes).min(cap);
    }
}

/// `ln` of [`IntrinsicReport::s_empirical`] without exponentiating, for
/// suprema beyond `f64` range.
pub fn log_intrinsic_sup(pairs: &[Eigenpair], t: f64) -> f64 {
    let ground = &pairs[0];
    let guard = UNDERFLOW_GUARD.ln();
    (0..ground.v.len())
        .filter(|&k| ground.log_abs_phi[ground.first + k] >= guard)
        .map(|k| {
            let l0 = ground.log_abs_v[k];
            log_sum_exp(pairs.iter().map(|p| -(p.lambda - ground.lambda) * t + 2.0 * (p.log_abs_v[k] - l0)))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Crank–Nicolson for `∂_t u = L u` in the symmetrized variable `√m u`, with
/// `startup` implicit-Euler half steps to damp non-smooth data.
pub fn crank_nicolson_evolve_with(op: &DiscreteOperator, u0: &[f64], t: f64, steps: usize, startup: usize) -> Result<Vec<f64>> {
    if steps < 10 {
        return Err(Error::Invalid(format!("Crank–Nicolson needs at least 10 steps, got {steps}")));
    }
    if u0.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid("initial data must be finite".into()));
    }
    let (mut y, shift) = to_symmetric(op, u0);
    let dt = t / steps as f64;
    let tri = &op.matrix;
    let solve = |rhs: &mut [f64], coef: f64| {
        // (I + coef T) x = rhs via the Thomas algorithm (SPD, no pivoting).
        let n = rhs.len();
        let mut c = vec![0.0; n];
        let mut b0 = 1.0 + coef * tri.diag[0];
        c[0] = if n > 1 { coef * tri.off[0] / b0 } else { 0.0 };
        rhs[0] /= b0;
        for i in 1..n {
            let a = coef * tri.off[i - 1];
            b0 = 1.0 + coef * tri.diag[i] - a * c[i - 1];
            if i + 1 < n {
                c[i] = coef * tri.off[i] / b0;
            }
            rhs[i] = (rhs[i] - a * rhs[i - 1]) / b0;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= c[i] * rhs[i + 1];
        }
    };
    let mut remaining = steps;
    for _ in 0..startup.min(steps) {
        // Two implicit-Euler half steps replace one CN step.
        for _ in 0..2 {
            solve(&mut y, 0.5 * dt);
        }
        remaining -= 1;
    }
    for _ in 0..remaining {
        let ty = tri.matvec(&y);
        let mut rhs: Vec<f64> = y.iter().zip(&ty).map(|(a, b)| a - 0.5 * dt * b).collect();
        solve(&mut rhs, 0.5 * dt);
        y = rhs;
    }
    Ok(from_symmetric(op, &y, shift))
}

/// `√m u / e^{shift}` on active nodes, with the shift chosen so the largest
/// entry is of unit size whatever the cell masses.
fn to_symmetric(op: &DiscreteOperator, u: &[f64]) -> (Vec<f64>, f64) {
    let logs: Vec<f64> = (0..op.active_len())
        .map(|k| {
            let x = u[op.first + k];
            if x == 0.0 {
                f64::NEG_INFINITY
            } else {
                x.abs().ln() + 0.5 * op.log_mass[k]
            }
        })
        .collect();
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    let y = logs
        .iter()
        .enumerate()
        .map(|(k, l)| u[op.first + k].signum() * (l - shift).exp())
        .collect();
    (y, shift)
}

fn from_symmetric(op: &DiscreteOperator, y: &[f64], shift: f64) -> Vec<f64> {
    let mut out = vec![0.0; op.grid.n];
    for (k, x) in y.iter().enumerate() {
        if *x != 0.0 {
            out[op.first + k] = x.signum() * (x.abs().ln() + shift - 0.5 * op.log_mass[k]).exp();
        }
    }
    out
}

pub fn crank_nicolson_evolve(op: &DiscreteOperator, u0: &[f64], t: f64, steps: usize) -> Result<Vec<f64>> {
    crank_nicolson_evolve_with(op, u0, t, steps, 0)
}

/// `Σ_j e^{−λ_j t} ⟨u₀, φ_j⟩_μ φ_j` for full-grid data `u0`.
pub fn expansion_evolve(op: &DiscreteOperator, pairs: &[Eigenpair], u0: &[f64], t: f64) -> Vec<f64> {
    let (y0, shift) = to_symmetric(op, u0);
    let mut y = vec![0.0; y0.len()];
    for p in pairs {
        let c = (-p.lambda * t).exp() * p.v.iter().zip(&y0).map(|(a, b)| a * b).sum::<f64>();
        for (a, b) in y.iter_mut().zip(&p.v) {
            *a += c * b;
        }
    }
    from_symmetric(op, &y, shift)
}

/// Heat CSV: `t, r, h`.
pub fn write_heat_csv<W: Write>(nodes: &[f64], snaps: &[HeatKernelSnapshot], out: &mut W) -> Result<()> {
    writeln!(out, "t,r,h")?;
    for s in snaps {
        for (r, h) in nodes.iter().zip(&s.values) {
            writeln!(out, "{},{},{}", fmt_f64(s.t), fmt_f64(*r), fmt_f64(*h))?;
        }
    }
    Ok(())
}

/// Intrinsic CSV: `t, S_empirical, S_bound, modes_used, truncation_bound`
/// followed by the pole-anchored supremum, the diagonal tail, the argmax and
/// both suprema in log form.
pub fn write_intrinsic_csv<W: Write>(reports: &[IntrinsicReport], out: &mut W) -> Result<()> {
    writeln!(out, "t,S_empirical,S_bound,modes_used,truncation_bound,S_pole,diagonal_tail,argmax_r,log_S_empirical,log_S_bound")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.s_empirical),
            r.s_bound.map(fmt_f64).unwrap_or_else(|| "nan".into()),
            r.modes_used,
            fmt_f64(r.truncation_bound),
            fmt_f64(r.s_pole),
            fmt_f64(r.diagonal_tail),
            fmt_f64(r.argmax_r),
            fmt_f64(r.log_s_empirical),
            r.log_s_bound.map(fmt_f64).unwrap_or_else(|| "nan".into())
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ModelManifold, Potential, RadialGrid};
    use crate::spectral::discretize;
    use std::f64::consts::PI;

    /// `J_n(x) = (1/π) ∫_0^π cos(nθ − x sin θ) dθ` by the trapezoid rule,
    /// spectrally accurate for this periodic integrand.
    fn bessel_j(n: i32, x: f64) -> f64 {
        let m = 400;
        let h = PI / m as f64;
        let f = |th: f64| (n as f64 * th - x * th.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for k in 1..m {
            s += f(k as f64 * h);
        }
        s * h / PI
    }

    /// Zeros of `J_0` by McMahon's expansion refined with Newton steps.
    fn j0_zeros(count: usize) -> Vec<f64> {
        (1..=count)
            .map(|k| {
                let b = (k as f64 - 0.25) * PI;
                let mut x = b + 1.0 / (8.0 * b);
                for _ in 0..20 {
                    x += bessel_j(0, x) / bessel_j(1, x);
                }
                x
            })
            .collect()
    }

    fn disk(n: usize) -> (DiscreteOperator, Vec<Eigenpair>) {
        let g = RadialGrid::new(1.0, n).unwrap();
        let m = ModelManifold::euclidean(2, g).unwrap();
        let op = discretize(&m, &Potential::zero(), 0.0).unwrap();
        let pairs = eigenpairs(&op, 64).unwrap();
        (op, pairs)
    }

    #[test]
    fn bessel_oracle_is_accurate() {
        let z = j0_zeros(3);
        assert!((z[0] - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((z[2] - 8.653_727_912_911_013).abs() < 1e-12);
    }

    #[test]
    fn disk_diagonal_matches_bessel_series() {
        // h(o,o,t) = Σ_k e^{−j_k² t} · 2 / J₁(j_k)² per unit solid angle, R = 1.
        let (_, pairs) = disk(8192);
        for t in [0.05, 0.1, 0.3] {
            let exact: f64 = j0_zeros(40).iter().map(|j| (-j * j * t).exp() * 2.0 / bessel_j(1, *j).powi(2)).sum();
            let snap = heat_kernel_from_pole(&pairs, t).unwrap();
            assert!((snap.values[0] / exact - 1.0).abs() < 1e-6, "t={t}: {} vs {exact}", snap.values[0]);
        }
    }

    #[test]
    fn long_time_limit_is_the_ground_state() {
        let (_, pairs) = disk(2048);
        let gap = pairs[1].lambda - pairs[0].lambda;
        let t = 20.0 / gap;
        let snap = heat_kernel_from_pole(&pairs, t).unwrap();
        let p0 = &pairs[0];
        for (i, h) in snap.values.iter().enumerate().take(2000) {
            let limit = p0.phi[0] * p0.phi[i];
            assert!(((p0.lambda * t).exp() * h / limit - 1.0).abs() < 1e-6, "node {i}");
        }
        let g = RadialGrid::new(1.0, 2048).unwrap();
        let rep = intrinsic_sup(&pairs, &g.nodes(), t).unwrap();
        assert!((rep.s_empirical - 1.0).abs() < 1e-5);
        assert!((rep.s_pole - 1.0).abs() < 1e-5);
    }

    #[test]
    fn mass_is_sub_markov_and_decreasing() {
        let (op, pairs) = disk(2048);
        let mut prev = f64::INFINITY;
        for t in [0.01, 0.05, 0.1, 0.5, 1.0] {
            let snap = heat_kernel_from_pole(&pairs, t).unwrap();
            let mass = snapshot_mass(&op, &snap);
            assert!(mass <= 1.0 + 1e-8 && mass < prev, "t={t}: {mass}");
            assert!((kernel_mass(&op, &pairs, t) - mass).abs() < 1e-9);
            assert!(snap.values.iter().all(|&h| h >= -1e-10));
            prev = mass;
        }
    }

    #[test]
    fn intrinsic_sup_is_at_least_one_and_non_increasing() {
        let g = RadialGrid::new(10.0, 2048).unwrap();
        let m = ModelManifold::hyperbolic(3, g).unwrap();
        let op = discretize(&m, &Potential::zero(), 0.0).unwrap();
        let ts = [0.2, 0.4, 0.8, 1.6, 3.2];
        let (_, reps) = resolved_intrinsic_sup(&op, &g.nodes(), &ts).unwrap();
        for w in reps.windows(2) {
            assert!(w[1].s_empirical <= w[0].s_empirical * (1.0 + 1e-6));
            assert!(w[1].s_pole <= w[0].s_pole * (1.0 + 1e-6));
        }
        assert!(reps.iter().all(|r| r.s_empirical >= 1.0 - 1e-6 && r.s_empirical >= r.s_pole * (1.0 - 1e-9)));
    }

    #[test]
    fn truncation_is_enforced() {
        let (_, pairs) = disk(2048);
        assert!(matches!(heat_kernel_from_pole(&pairs[..3], 1e-3), Err(Error::InsufficientModes { .. })));
        assert!(heat_kernel_from_pole(&pairs, 0.0).is_err());
        assert_eq!(semigroup_residual(&pairs, 0.1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn crank_nicolson_propagates_the_ground_state() {
        let g = RadialGrid::new(30.0, 2048).unwrap();
        let op = discretize(&ModelManifold::hyperbolic(2, g).unwrap(), &Potential::zero(), 0.0).unwrap();
        let pairs = eigenpairs(&op, 1).unwrap();
        let p0 = &pairs[0];
        let u = crank_nicolson_evolve(&op, &p0.phi, 1.0, 1000).unwrap();
        let scale = p0.phi.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for (a, b) in u.iter().zip(&p0.phi) {
            assert!((a - (-p0.lambda).exp() * b).abs() < 1e-6 * scale * (-p0.lambda).exp());
        }
        assert!(crank_nicolson_evolve(&op, &p0.phi, 1.0, 5).is_err());
    }
}
