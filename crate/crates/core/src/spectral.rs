//! Finite-volume discretization of `−L` on radial functions and its lowest
//! eigenpairs.
//!
//! Node `i` owns the cell `[r_{i−½}, r_{i+½}]` with mass `m_i = ∫ w`; faces
//! carry conductances `a_{i+½} = w(r_{i+½}) / h`. The weighted operator is
//! conjugated by `diag(√m)` to a symmetric tridiagonal matrix, assembled from
//! logarithms so that cell masses far beyond `f64` range cause no trouble.

use std::io::Write;

use crate::cli::fmt_f64;
use crate::error::{Error, Result};
use crate::geometry::{measure_density, ModelManifold, Potential, RadialGrid, RadialMeasure};
use crate::numerics::log_sum_exp;
use crate::tridiag::{SymTridiag, TridiagVector};

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: RadialGrid,
    /// First active node (0 for the full problem).
    pub first: usize,
    /// Last active node; node `last + 1` carries the Dirichlet condition.
    pub last: usize,
    pub inner_radius: f64,
    /// `ln m_i` for active nodes.
    pub log_mass: Vec<f64>,
    /// `ln a_{i+½}` for faces `first − 1 ..= last` (the first entry is
    /// `−∞` for the pole problem).
    pub log_conductance: Vec<f64>,
    pub matrix: SymTridiag,
}

/// `−L` with Dirichlet at `r_max` (and at `inner_radius` when positive).
pub fn discretize(m: &ModelManifold, v: &Potential, inner_radius: f64) -> Result<DiscreteOperator> {
    let meas = measure_density(m, v);
    DiscreteOperator::from_measure(&meas, inner_radius, m.grid.n - 1)
}

impl DiscreteOperator {
    /// Operator on nodes strictly between the inner Dirichlet node (if
    /// `inner_radius > 0`) and the outer Dirichlet node `outer`.
    pub fn from_measure(meas: &RadialMeasure, inner_radius: f64, outer: usize) -> Result<Self> {
        let grid = meas.grid;
        if outer >= grid.n || outer < 2 {
            return Err(Error::Invalid(format!("outer Dirichlet node {outer} outside the grid")));
        }
        let first = if inner_radius > 0.0 {
            if inner_radius >= grid.node(outer) {
                return Err(Error::Invalid(format!("inner radius {inner_radius} beyond the outer boundary")));
            }
            grid.nearest(inner_radius) + 1
        } else {
            0
        };
        let last = outer - 1;
        if last < first + 1 {
            return Err(Error::Invalid("exterior problem has fewer than two active nodes".into()));
        }
        let h = grid.spacing();
        let all_masses = meas.log_cell_masses();
        let log_mass: Vec<f64> = all_masses[first..=last].to_vec();
        for (k, lm) in log_mass.iter().enumerate() {
            if !lm.is_finite() {
                return Err(Error::DegenerateWeight { node: first + k });
            }
        }
        let log_conductance: Vec<f64> = (first as isize - 1..=last as isize)
            .map(|i| if i < 0 { f64::NEG_INFINITY } else { meas.log_w_face(i as usize) - h.ln() })
            .collect();
        let size = last - first + 1;
        let mut diag = Vec::with_capacity(size);
        let mut off = Vec::with_capacity(size - 1);
        for k in 0..size {
            let left = (log_conductance[k] - log_mass[k]).exp();
            let right = (log_conductance[k + 1] - log_mass[k]).exp();
            diag.push(left + right);
            if k + 1 < size {
                off.push(-(log_conductance[k + 1] - 0.5 * (log_mass[k] + log_mass[k + 1])).exp());
            }
        }
        if diag.iter().chain(&off).any(|x| !x.is_finite()) {
            let node = diag.iter().position(|x| !x.is_finite()).unwrap_or(0) + first;
            return Err(Error::DegenerateWeight { node });
        }
        let matrix = SymTridiag::new(diag, off)?;
        Ok(Self { grid, first, last, inner_radius, log_mass, log_conductance, matrix })
    }

    pub fn active_len(&self) -> usize {
        self.last - self.first + 1
    }

    /// `ln Σ a_{i+½} (u_{i+1} − u_i)²` for full-grid values `u` (Dirichlet
    /// nodes are read as 0).
    pub fn log_quadratic_form(&self, u: &[f64]) -> f64 {
        let val = |i: isize| -> f64 {
            if i < self.first as isize || i > self.last as isize {
                0.0
            } else {
                u[i as usize]
            }
        };
        log_sum_exp(self.log_conductance.iter().enumerate().filter_map(|(k, la)| {
            let i = self.first as isize - 1 + k as isize;
            if i < 0 {
                return None;
            }
            let du = val(i + 1) - val(i);
            (du != 0.0).then(|| la + 2.0 * du.abs().ln())
        }))
    }

    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        self.log_quadratic_form(u).exp()
    }

    /// `ln Σ m_i u_i²` over active nodes.
    pub fn log_mass_norm_sq(&self, u: &[f64]) -> f64 {
        log_sum_exp(
            (self.first..=self.last)
                .filter(|&i| u[i] != 0.0)
                .map(|i| self.log_mass[i - self.first] + 2.0 * u[i].abs().ln()),
        )
    }

    fn pair_from(&self, lambda: f64, tv: TridiagVector) -> Eigenpair {
        let n = self.grid.n;
        let mut log_abs_phi = vec![f64::NEG_INFINITY; n];
        let mut phi = vec![0.0; n];
        for (k, (la, s)) in tv.log_abs.iter().zip(&tv.sign).enumerate() {
            let i = self.first + k;
            let l = la - 0.5 * self.log_mass[k];
            log_abs_phi[i] = l;
            phi[i] = s * l.exp();
        }
        Eigenpair {
            lambda,
            v: tv.v,
            log_abs_v: tv.log_abs,
            sign_v: tv.sign,
            phi,
            log_abs_phi,
            residual: tv.residual,
            first: self.first,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Unit vector of the symmetrized problem, `v_i = √m_i φ_i`, on active
    /// nodes.
    pub v: Vec<f64>,
    /// `ln |v_i|`, accurate where `v_i` underflows.
    pub log_abs_v: Vec<f64>,
    pub sign_v: Vec<f64>,
    /// `φ` on the full grid with `Σ m_i φ_i² = 1`; zero at Dirichlet nodes
    /// (and possibly underflowed far out).
    pub phi: Vec<f64>,
    /// `ln |φ|` on the full grid; `−∞` where `φ = 0`.
    pub log_abs_phi: Vec<f64>,
    /// `‖(−L)φ − λφ‖_w`.
    pub residual: f64,
    pub first: usize,
}

impl Eigenpair {
    /// Fraction of `φ²` mass in the outer tenth of the active range; large
    /// values mean the eigenfunction feels the truncation.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let n = self.v.len();
        let start = n - (n / 10).max(1);
        self.v[start..].iter().map(|x| x * x).sum()
    }
}

/// Lowest eigenpair.
pub fn lowest_eigenpair(op: &DiscreteOperator) -> Result<Eigenpair> {
    Ok(eigenpairs_unchecked(op, 1)?.remove(0))
}

/// Lowest `count ≤ n/4` eigenpairs.
pub fn eigenpairs(op: &DiscreteOperator, count: usize) -> Result<Vec<Eigenpair>> {
    if count > op.grid.n / 4 {
        return Err(Error::Invalid(format!("at most n/4 = {} eigenpairs are resolved, asked for {count}", op.grid.n / 4)));
    }
    eigenpairs_unchecked(op, count)
}

/// As [`eigenpairs`] without the resolution cap; high modes are eigenpairs of
/// the discrete operator but no longer approximate the continuum.
pub fn eigenpairs_unchecked(op: &DiscreteOperator, count: usize) -> Result<Vec<Eigenpair>> {
    if count == 0 || count > op.active_len() {
        return Err(Error::Invalid(format!("cannot compute {count} eigenpairs of a {}-node operator", op.active_len())));
    }
    let lambdas = op.matrix.lowest_eigenvalues(count);
    let vecs = op.matrix.eigenvectors(&lambdas)?;
    Ok(lambdas
        .into_iter()
        .zip(vecs)
        .map(|(l, tv)| {
            // Rayleigh quotient sharpens λ to the vector's accuracy.
            let mv = op.matrix.matvec(&tv.v);
            let rq: f64 = mv.iter().zip(&tv.v).map(|(a, b)| a * b).sum();
            let lam = if (rq - l).abs() <= 1e-6 * l.abs().max(1e-12) { rq } else { l };
            op.pair_from(lam, tv)
        })
        .collect())
}

/// Exterior eigenvalue with its tail-halving check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorValue {
    pub radius: f64,
    pub value: f64,
    /// Value with the outer boundary at `R + (r_max − R)/2`.
    pub half_tail_value: f64,
    pub relative_change: f64,
}

/// Maximum relative change accepted when the tail is doubled.
pub const TAIL_TOLERANCE: f64 = 0.01;

/// `λ₀` outside `B(o, R)` with Dirichlet at `R` and `r_max`, without the
/// truncation check.
pub fn exterior_eigenvalue_truncated(m: &ModelManifold, v: &Potential, radius: f64) -> Result<f64> {
    check_exterior_radius(m, radius)?;
    let op = discretize(m, v, radius)?;
    Ok(lowest_eigenpair(&op)?.lambda)
}

fn check_exterior_radius(m: &ModelManifold, radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius < m.grid.r_max - 1.0) {
        return Err(Error::Invalid(format!("exterior radius must lie in (0, r_max − 1), got {radius}")));
    }
    Ok(())
}

/// `λ₀(R)`, accepted when halving the tail `[R, r_max]` moves it by less
/// than 1%.
pub fn exterior_eigenvalue(m: &ModelManifold, v: &Potential, radius: f64) -> Result<ExteriorValue> {
    check_exterior_radius(m, radius)?;
    let meas = measure_density(m, v);
    let n = m.grid.n;
    let ir = m.grid.nearest(radius);
    let full = DiscreteOperator::from_measure(&meas, radius, n - 1)?;
    let half_outer = ir + (n - 1 - ir) / 2;
    let half = DiscreteOperator::from_measure(&meas, radius, half_outer)?;
    let value = lowest_eigenpair(&full)?.lambda;
    let half_tail_value = lowest_eigenpair(&half)?.lambda;
    let relative_change = (half_tail_value - value).abs() / value.abs();
    if relative_change > TAIL_TOLERANCE {
        return Err(Error::RMaxTooSmall { relative_change });
    }
    Ok(ExteriorValue { radius, value, half_tail_value, relative_change })
}

/// Tabulated `R ↦ λ₀(R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl ExteriorCurve {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.is_empty() {
            return Err(Error::Invalid("exterior curve needs matching, non-empty radii and values".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("exterior curve radii must increase".into()));
        }
        Ok(Self { radii, values })
    }

    /// Computes `λ₀(R_j)` for each radius (with the tail check).
    pub fn compute(m: &ModelManifold, v: &Potential, radii: &[f64]) -> Result<Self> {
        let values = radii.iter().map(|&r| exterior_eigenvalue(m, v, r).map(|e| e.value)).collect::<Result<Vec<_>>>()?;
        Self::new(radii.to_vec(), values)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Smallest `R` with `λ₀(R) ≥ y`, interpolating linearly between bracketing
/// samples.
pub fn lambda0_inverse_curve(curve: &ExteriorCurve, y: f64) -> Result<f64> {
    let max = curve.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if y > max {
        return Err(Error::OutOfRange { value: y, max });
    }
    if y <= curve.values[0] {
        return Ok(curve.radii[0]);
    }
    for j in 1..curve.values.len() {
        let (v0, v1) = (curve.values[j - 1], curve.values[j]);
        if v1 >= y {
            let (r0, r1) = (curve.radii[j - 1], curve.radii[j]);
            if v1 == v0 {
                return Ok(r1);
            }
            return Ok(r0 + (r1 - r0) * (y - v0) / (v1 - v0));
        }
    }
    Err(Error::OutOfRange { value: y, max })
}

/// Spectrum CSV: `r, phi0, phi1, …`; each eigenfunction column header carries
/// its eigenvalue.
pub fn write_spectrum_csv<W: Write>(grid: &RadialGrid, pairs: &[Eigenpair], out: &mut W) -> Result<()> {
    write!(out, "r")?;
    for (j, p) in pairs.iter().enumerate() {
        write!(out, ",phi{j}@lambda={}", fmt_f64(p.lambda))?;
    }
    writeln!(out)?;
    for i in 0..grid.n {
        write!(out, "{}", fmt_f64(grid.node(i)))?;
        for p in pairs {
            write!(out, ",{}", fmt_f64(p.phi[i]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_curve_examples() {
        let c = ExteriorCurve::new(vec![1.0, 2.0, 3.0], vec![1.0, 4.0, 9.0]).unwrap();
        assert_eq!(lambda0_inverse_curve(&c, 4.0).unwrap(), 2.0);
        let r = lambda0_inverse_curve(&c, 5.0).unwrap();
        assert!((r - 2.2).abs() < 1e-12 && r > 2.0 && r < 3.0);
        assert!(matches!(lambda0_inverse_curve(&c, 100.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn euclidean_operator_is_structurally_sound() {
        let g = RadialGrid::new(10.0, 200).unwrap();
        let m = ModelManifold::euclidean(2, g).unwrap();
        let op = discretize(&m, &Potential::zero(), 0.0).unwrap();
        assert_eq!(op.active_len(), 199);
        assert!(op.matrix.off.iter().all(|&x| x < 0.0));
        assert!(op.matrix.diag.iter().all(|&x| x > 0.0));
        let ext = discretize(&m, &Potential::zero(), 3.0).unwrap();
        assert_eq!(ext.first, g.nearest(3.0) + 1);
        assert!(g.node(ext.first) > 3.0);
    }

    #[test]
    fn disk_ground_state() {
        let j01 = 2.404825557695773;
        let g = RadialGrid::new(10.0, 4096).unwrap();
        let m = ModelManifold::euclidean(2, g).unwrap();
        let op = discretize(&m, &Potential::zero(), 0.0).unwrap();
        let p = lowest_eigenpair(&op).unwrap();
        let exact = (j01 / 10.0f64).powi(2);
        assert!((p.lambda / exact - 1.0).abs() < 5e-3, "{}", p.lambda);
        assert!(p.phi[..g.n - 1].iter().all(|&x| x > 0.0));
    }
}
