//! Rotationally symmetric model manifolds `dr² + f(r)² dσ²` and the radial
//! reduction of `L = Δ + ∇V`.
//!
//! The warping function of the examples grows like `exp(c r^{1+δ/2})`, so
//! everything downstream works with `ln f`, `f'/f` and `ln w`.

mod examples;
mod measure;
mod potential;

pub use examples::{Example1, Example2, ExampleModel};
pub use measure::{check_volume_condition, measure_density, RadialMeasure, VolumeReport, VolumeRow};
pub use potential::Potential;

use std::io::Write;

use crate::error::{Error, Result};
use crate::profiles::{PowerLawProfile, Profile};

/// Uniform radial grid `r_i = i · r_max / (n − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n: usize,
}

impl RadialGrid {
    pub const MIN_NODES: usize = 16;

    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::Invalid(format!("r_max must be positive, got {r_max}")));
        }
        if n < Self::MIN_NODES {
            return Err(Error::Invalid(format!("grid needs at least {} nodes, got {n}", Self::MIN_NODES)));
        }
        Ok(Self { r_max, n })
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.r_max
        } else {
            i as f64 * self.spacing()
        }
    }

    /// Point `j · h/2` of the half-spaced grid (`2n − 1` points).
    pub fn half_point(&self, j: usize) -> f64 {
        if j + 1 == 2 * self.n - 1 {
            self.r_max
        } else {
            0.5 * j as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Index of the node closest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        ((r / self.spacing()).round().max(0.0) as usize).min(self.n - 1)
    }
}

/// Scaled state `(f, f') = e^{scale} (y, z)` of the Jacobi equation.
#[derive(Debug, Clone, Copy)]
struct JacobiState {
    scale: f64,
    y: f64,
    z: f64,
}

impl JacobiState {
    const RESCALE_AT: f64 = 1e100;

    fn log_f(&self) -> f64 {
        self.scale + self.y.ln()
    }

    fn q(&self) -> f64 {
        self.z / self.y
    }

    fn renormalize(&mut self) {
        if self.y.abs() > Self::RESCALE_AT || self.z.abs() > Self::RESCALE_AT {
            let m = self.y.abs().max(self.z.abs());
            self.scale += m.ln();
            self.y /= m;
            self.z /= m;
        }
    }
}

/// Largest `√k · step` used by the integrator.
const STEP_BOUND: f64 = 0.01;

fn substeps(k: &PowerLawProfile, a: f64, b: f64) -> usize {
    let sk = k.value(b).max(k.value(a)).max(0.0).sqrt();
    ((b - a) * sk / STEP_BOUND).ceil().max(1.0) as usize
}

/// Classical RK4 for `y'' = k y` from `a` to `b`.
fn advance(k: &PowerLawProfile, s: &mut JacobiState, a: f64, b: f64) {
    let m = substeps(k, a, b);
    let dt = (b - a) / m as f64;
    let mut r = a;
    for i in 0..m {
        let (y, z) = (s.y, s.z);
        let k1y = z;
        let k1z = k.value(r) * y;
        let k2y = z + 0.5 * dt * k1z;
        let k2z = k.value(r + 0.5 * dt) * (y + 0.5 * dt * k1y);
        let k3y = z + 0.5 * dt * k2z;
        let k3z = k.value(r + 0.5 * dt) * (y + 0.5 * dt * k2y);
        let r_next = if i + 1 == m { b } else { r + dt };
        let k4y = z + dt * k3z;
        let k4z = k.value(r_next) * (y + dt * k3y);
        s.y = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        s.z = z + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        s.renormalize();
        r = r_next;
    }
}

/// Model manifold of dimension `d` with warping `f'' = k f`, `f(0) = 0`,
/// `f'(0) = 1`, tabulated on the half-spaced grid.
#[derive(Debug, Clone)]
pub struct ModelManifold {
    pub d: usize,
    pub grid: RadialGrid,
    pub k: PowerLawProfile,
    log_f: Vec<f64>,
    q: Vec<f64>,
}

/// Integrates the warping equation on `grid`.
pub fn solve_warping(k: &PowerLawProfile, d: usize, grid: RadialGrid) -> Result<ModelManifold> {
    if d < 2 {
        return Err(Error::Invalid(format!("dimension must be at least 2, got {d}")));
    }
    let npts = 2 * grid.n - 1;
    for j in 0..npts {
        if k.value(grid.half_point(j)) < 0.0 {
            return Err(Error::Invalid("warping profile must be non-negative".into()));
        }
    }
    let mut log_f = Vec::with_capacity(npts);
    let mut q = Vec::with_capacity(npts);
    log_f.push(f64::NEG_INFINITY);
    q.push(f64::INFINITY);
    let mut s = JacobiState { scale: 0.0, y: 0.0, z: 1.0 };
    for j in 1..npts {
        advance(k, &mut s, grid.half_point(j - 1), grid.half_point(j));
        log_f.push(s.log_f());
        q.push(s.q());
    }
    Ok(ModelManifold { d, grid, k: *k, log_f, q })
}

impl ModelManifold {
    /// Euclidean space `f(r) = r`.
    pub fn euclidean(d: usize, grid: RadialGrid) -> Result<Self> {
        solve_warping(&PowerLawProfile::constant(0.0), d, grid)
    }

    /// Hyperbolic space of curvature −1, `f = sinh`.
    pub fn hyperbolic(d: usize, grid: RadialGrid) -> Result<Self> {
        solve_warping(&PowerLawProfile::constant(1.0), d, grid)
    }

    pub fn log_f_node(&self, i: usize) -> f64 {
        self.log_f[2 * i]
    }

    /// `f'/f` at node `i` (infinite at the pole).
    pub fn q_node(&self, i: usize) -> f64 {
        self.q[2 * i]
    }

    pub(crate) fn log_f_half(&self) -> &[f64] {
        &self.log_f
    }

    pub fn f_node(&self, i: usize) -> f64 {
        self.log_f_node(i).exp()
    }

    /// `f'` at node `i`; 1 at the pole.
    pub fn f_prime_node(&self, i: usize) -> f64 {
        if i == 0 {
            1.0
        } else {
            (self.log_f_node(i) + self.q_node(i).ln()).exp()
        }
    }

    /// `(ln f(r), f'/f(r))` at any `r ∈ (0, r_max]`, integrating from the
    /// nearest tabulated point below.
    pub fn state_at(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::Pole);
        }
        if r > self.grid.r_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("r = {r} beyond r_max = {}", self.grid.r_max)));
        }
        let half = 0.5 * self.grid.spacing();
        let j = ((r / half).floor() as usize).min(2 * self.grid.n - 2);
        let r0 = self.grid.half_point(j);
        if (r - r0).abs() <= 1e-14 * r.max(1.0) && j > 0 {
            return Ok((self.log_f[j], self.q[j]));
        }
        let mut s = if j == 0 {
            JacobiState { scale: 0.0, y: 0.0, z: 1.0 }
        } else {
            JacobiState { scale: self.log_f[j], y: 1.0, z: self.q[j] }
        };
        advance(&self.k, &mut s, r0, r);
        Ok((s.log_f(), s.q()))
    }

    /// Radial and tangential sectional curvatures `(−f''/f, (1 − f'²)/f²)`.
    pub fn sectional_range(&self, r: f64) -> Result<(f64, f64)> {
        let (log_f, q) = self.state_at(r)?;
        let k_rad = -self.k.value(r);
        let k_tan = (-2.0 * log_f).exp() - q * q;
        Ok((k_rad, k_tan))
    }

    /// Ricci curvature in the radial direction, `−(d−1) f''/f`.
    pub fn ricci_radial(&self, r: f64) -> Result<f64> {
        let (k_rad, _) = self.sectional_range(r)?;
        Ok((self.d as f64 - 1.0) * k_rad)
    }

    /// Ricci curvature in a tangential direction, `K_rad + (d−2) K_tan`.
    pub fn ricci_tangential(&self, r: f64) -> Result<f64> {
        let (k_rad, k_tan) = self.sectional_range(r)?;
        Ok(k_rad + (self.d as f64 - 2.0) * k_tan)
    }

    /// `L ρ` on radial functions: `(d−1) f'/f + V'`.
    pub fn radial_drift(&self, v: &Potential, r: f64) -> Result<f64> {
        let (_, q) = self.state_at(r)?;
        Ok((self.d as f64 - 1.0) * q + v.derivative(r))
    }

    /// CSV with columns `r, f, f_prime, V, log_w`.
    pub fn write_csv<W: Write>(&self, v: &Potential, out: &mut W) -> Result<()> {
        writeln!(out, "r,f,f_prime,V,log_w")?;
        let dm1 = self.d as f64 - 1.0;
        for i in 0..self.grid.n {
            let r = self.grid.node(i);
            let (f, fp, log_w) = if i == 0 {
                (0.0, 1.0, f64::NEG_INFINITY)
            } else {
                (self.f_node(i), self.f_prime_node(i), dm1 * self.log_f_node(i) + v.value(r))
            };
            writeln!(
                out,
                "{},{},{},{},{}",
                crate::cli::fmt_f64(r),
                crate::cli::fmt_f64(f),
                crate::cli::fmt_f64(fp),
                crate::cli::fmt_f64(v.value(r)),
                crate::cli::fmt_f64(log_w)
            )?;
        }
        Ok(())
    }
}
