use super::{solve_warping, ModelManifold, Potential, RadialGrid};
use crate::error::{Error, Result};
use crate::profiles::PowerLawProfile;

/// Model manifold plus the profiles that certify its curvature hypotheses.
#[derive(Debug, Clone)]
pub struct ExampleModel {
    pub manifold: ModelManifold,
    pub potential: Potential,
    /// Lower curvature profile: `k` (`Sec ≤ −k`) for the pinched example,
    /// `γ` (`(Lρ)² ≥ γ`) for the drift example.
    pub growth: PowerLawProfile,
    /// Ricci profile `K` with `Ric ≥ −K`.
    pub big_k: PowerLawProfile,
    /// Measured pinching `−c₁ r^δ ≤ Sec ≤ −c₂ r^δ` for `r ≥ r₀`.
    pub pinching: Option<(f64, f64)>,
    /// Measured `c` with `Ric ≥ −c (r^{2(δ−1)} + 1)`.
    pub ricci_constant: Option<f64>,
    pub r0: f64,
    pub delta: f64,
}

/// Pinched negative curvature `Sec ≈ −c r^δ` and no potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1 {
    pub d: usize,
    pub delta: f64,
    pub coefficient: f64,
    pub smoothing_radius: f64,
    pub r0: f64,
}

impl Example1 {
    pub const DEFAULT_COEFFICIENT: f64 = 1.0;

    pub fn new(delta: f64) -> Self {
        Self {
            d: 3,
            delta,
            coefficient: Self::DEFAULT_COEFFICIENT,
            smoothing_radius: PowerLawProfile::DEFAULT_SMOOTHING,
            r0: 2.0,
        }
    }

    pub fn with_dimension(mut self, d: usize) -> Self {
        self.d = d;
        self
    }

    pub fn with_coefficient(mut self, c: f64) -> Self {
        self.coefficient = c;
        self
    }

    pub fn profile(&self) -> PowerLawProfile {
        PowerLawProfile::power(self.coefficient, self.delta).with_smoothing(self.smoothing_radius)
    }

    pub fn build(&self, grid: RadialGrid) -> Result<ExampleModel> {
        if !(self.delta > 0.0) {
            return Err(Error::Invalid(format!("delta must be positive, got {}", self.delta)));
        }
        let k = self.profile();
        let manifold = solve_warping(&k, self.d, grid)?;
        let (mut c1, mut c2) = (0.0f64, f64::INFINITY);
        for i in 1..grid.n {
            let r = grid.node(i);
            if r < self.r0 {
                continue;
            }
            let (kr, kt) = manifold.sectional_range(r)?;
            let scale = r.powf(self.delta);
            for sec in [kr, kt] {
                c1 = c1.max(-sec / scale);
                c2 = c2.min(-sec / scale);
            }
        }
        if !(c2 > 0.0 && c2.is_finite()) {
            return Err(Error::Invalid(format!("grid does not reach r₀ = {} with negative curvature", self.r0)));
        }
        let dm1 = self.d as f64 - 1.0;
        Ok(ExampleModel {
            manifold,
            potential: Potential::zero(),
            growth: PowerLawProfile::power(c2, self.delta).with_smoothing(self.smoothing_radius),
            big_k: PowerLawProfile::power(dm1 * c1, self.delta).with_smoothing(self.smoothing_radius),
            pinching: Some((c1, c2)),
            ricci_constant: None,
            r0: self.r0,
            delta: self.delta,
        })
    }
}

/// Ricci curvature `≈ −c r^{2(δ−1)}` with potential `V = θ r^δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example2 {
    pub d: usize,
    pub delta: f64,
    pub theta: f64,
    pub coefficient: f64,
    pub smoothing_radius: f64,
    pub r0: f64,
}

impl Example2 {
    pub fn new(delta: f64, theta: f64) -> Self {
        Self {
            d: 3,
            delta,
            theta,
            coefficient: 1.0,
            smoothing_radius: PowerLawProfile::DEFAULT_SMOOTHING,
            r0: Potential::DEFAULT_CUTOFF,
        }
    }

    pub fn with_dimension(mut self, d: usize) -> Self {
        self.d = d;
        self
    }

    pub fn with_coefficient(mut self, c: f64) -> Self {
        self.coefficient = c;
        self
    }

    pub fn profile(&self) -> PowerLawProfile {
        let dm1 = self.d as f64 - 1.0;
        PowerLawProfile::power(self.coefficient / dm1, 2.0 * (self.delta - 1.0)).with_smoothing(self.smoothing_radius)
    }

    pub fn build(&self, grid: RadialGrid) -> Result<ExampleModel> {
        if !(self.delta > 1.0) {
            return Err(Error::Invalid(format!("delta must exceed 1, got {}", self.delta)));
        }
        if !(self.theta > 0.0) {
            return Err(Error::Invalid(format!("theta must be positive, got {}", self.theta)));
        }
        let k = self.profile();
        let manifold = solve_warping(&k, self.d, grid)?;
        let p = 2.0 * (self.delta - 1.0);
        let mut c = 0.0f64;
        for i in 1..grid.n {
            let r = grid.node(i);
            let scale = r.powf(p) + 1.0;
            c = c.max(-manifold.ricci_radial(r)? / scale);
            c = c.max(-manifold.ricci_tangential(r)? / scale);
        }
        let growth = PowerLawProfile::power(self.delta * self.delta * self.theta * self.theta, p)
            .with_smoothing(self.smoothing_radius);
        let big_k = PowerLawProfile::power(c, p).with_smoothing(self.smoothing_radius).with_floor(c);
        Ok(ExampleModel {
            manifold,
            potential: Potential::power(self.theta, self.delta, self.r0),
            growth,
            big_k,
            pinching: None,
            ricci_constant: Some(c),
            r0: self.r0,
            delta: self.delta,
        })
    }
}
