use std::f64::consts::PI;

use super::{ModelManifold, Potential, RadialGrid};
use crate::error::Result;
use crate::numerics::{log_add, log_integral_loglinear, log_sum_exp};
use crate::profiles::Profile;

/// Radial density `w = f^{d−1} e^V` of `μ = e^V dx` per unit solid angle,
/// stored as `ln w` on the half-spaced grid.
#[derive(Debug, Clone)]
pub struct RadialMeasure {
    pub grid: RadialGrid,
    pub d: usize,
    log_w: Vec<f64>,
}

pub fn measure_density(m: &ModelManifold, v: &Potential) -> RadialMeasure {
    let dm1 = m.d as f64 - 1.0;
    let log_w = m
        .log_f_half()
        .iter()
        .enumerate()
        .map(|(j, lf)| if j == 0 { f64::NEG_INFINITY } else { dm1 * lf + v.value(m.grid.half_point(j)) })
        .collect();
    RadialMeasure { grid: m.grid, d: m.d, log_w }
}

impl RadialMeasure {
    /// `ln w` at node `i`.
    pub fn log_w_node(&self, i: usize) -> f64 {
        self.log_w[2 * i]
    }

    /// `ln w` at the face between nodes `i` and `i + 1`.
    pub fn log_w_face(&self, i: usize) -> f64 {
        self.log_w[2 * i + 1]
    }

    pub fn w_node(&self, i: usize) -> f64 {
        self.log_w_node(i).exp()
    }

    pub fn log_w_nodes(&self) -> Vec<f64> {
        (0..self.grid.n).map(|i| self.log_w_node(i)).collect()
    }

    /// `ln ∫_0^{r_max} w dr` by the trapezoid rule on the nodes.
    pub fn log_total_mass(&self) -> f64 {
        let n = self.grid.n;
        let h = self.grid.spacing();
        log_sum_exp((0..n).map(|i| {
            let end = if i == 0 || i + 1 == n { 0.5f64.ln() } else { 0.0 };
            self.log_w_node(i) + end
        })) + h.ln()
    }

    /// `ln ∫_a^b w dr`, log-linear between half-grid points and `w ∝ r^{d−1}`
    /// on the first half cell.
    pub fn log_integral(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        let b = b.min(self.grid.r_max);
        if b <= a {
            return f64::NEG_INFINITY;
        }
        let half = 0.5 * self.grid.spacing();
        let last = self.log_w.len() - 1;
        let j0 = ((a / half).floor() as usize).min(last - 1);
        let j1 = ((b / half).ceil() as usize).clamp(j0 + 1, last);
        let mut acc = f64::NEG_INFINITY;
        for j in j0..j1 {
            let s0 = self.grid.half_point(j);
            let s1 = self.grid.half_point(j + 1);
            let lo = a.max(s0);
            let hi = b.min(s1);
            if hi <= lo {
                continue;
            }
            let piece = if j == 0 {
                let dd = self.d as f64;
                let lead = self.log_w[1] - (dd - 1.0) * s1.ln();
                lead + ((hi.powf(dd) - lo.powf(dd)) / dd).ln()
            } else {
                let (l0, l1) = (self.log_w[j], self.log_w[j + 1]);
                let slope = (l1 - l0) / (s1 - s0);
                log_integral_loglinear(l0 + slope * (lo - s0), l0 + slope * (hi - s0), hi - lo)
            };
            acc = log_add(acc, piece);
        }
        acc
    }

    /// `ln` of the finite-volume cell masses `∫ w` over
    /// `[r_{i−½}, r_{i+½}] ∩ [0, r_max]`.
    pub fn log_cell_masses(&self) -> Vec<f64> {
        let n = self.grid.n;
        let half = 0.5 * self.grid.spacing();
        (0..n)
            .map(|i| {
                let r = self.grid.node(i);
                self.log_integral((r - half).max(0.0), (r + half).min(self.grid.r_max))
            })
            .collect()
    }
}

/// One sample of the volume-growth check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeRow {
    pub r: f64,
    /// Lower bound for `ln μ(B(x, 1))` with `|x| = r`.
    pub log_ball: f64,
    /// `√K(2 + 2r) / ln⁺ μ(B(x, 1))`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeReport {
    pub rows: Vec<VolumeRow>,
    /// Ratios strictly decrease and the last is below half the first.
    pub trends_to_zero: bool,
    pub warnings: Vec<String>,
}

/// `ln |S^{k}|`.
fn log_sphere_area(k: usize) -> f64 {
    let kp1 = (k + 1) as f64;
    (2.0f64).ln() + 0.5 * kp1 * PI.ln() - ln_gamma(0.5 * kp1)
}

/// `ln Γ(x)` for half-integer and integer `x > 0`.
fn ln_gamma(x: f64) -> f64 {
    let mut acc = 0.0;
    let mut y = x;
    while y > 1.0 + 1e-12 {
        y -= 1.0;
        acc += y.ln();
    }
    if (y - 0.5).abs() < 1e-12 {
        acc + 0.5 * PI.ln()
    } else {
        acc
    }
}

/// Lower-bounds `μ(B(x, 1))` by the shell `[r − ½, r + ½]` restricted to the
/// cone of half-angle `α = 1 / (2 f(r + ½))`: any such point is reached by a
/// radial segment of length ≤ ½ followed by an arc of length ≤ ½.
pub fn check_volume_condition<Q: Profile + ?Sized>(
    m: &ModelManifold,
    v: &Potential,
    big_k: &Q,
    samples: &[f64],
) -> Result<VolumeReport> {
    let meas = measure_density(m, v);
    let d = m.d;
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(samples.len());
    let log_cap_const = log_sphere_area(d - 2) - (d as f64 - 1.0).ln();
    for &r in samples {
        if r + 1.0 > m.grid.r_max || r < 1.0 {
            warnings.push(format!("sample r = {r} outside (1, r_max − 1); r_max = {}", m.grid.r_max));
            continue;
        }
        let (log_f_out, _) = m.state_at(r + 0.5)?;
        let alpha = (0.5 * (-log_f_out).exp()).min(0.5 * PI);
        let log_shell = meas.log_integral(r - 0.5, r + 0.5);
        let log_ball = log_shell + log_cap_const + (d as f64 - 1.0) * alpha.sin().ln();
        let kv = big_k.value(2.0 + 2.0 * r).max(0.0);
        let ratio = if kv == 0.0 {
            0.0
        } else if log_ball > 0.0 {
            kv.sqrt() / log_ball
        } else {
            f64::INFINITY
        };
        rows.push(VolumeRow { r, log_ball, ratio });
    }
    let decreasing = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let all_zero = rows.iter().all(|row| row.ratio == 0.0);
    let trends_to_zero = !rows.is_empty()
        && (all_zero || (decreasing && rows.last().map(|l| l.ratio).unwrap_or(0.0) < 0.5 * rows[0].ratio));
    Ok(VolumeReport { rows, trends_to_zero, warnings })
}
