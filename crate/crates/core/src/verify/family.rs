use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::RadialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    GaussianBump,
    PolynomialBump,
    RandomMix,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::GaussianBump => "gaussian_bump",
            FamilyKind::PolynomialBump => "polynomial_bump",
            FamilyKind::RandomMix => "random_mix",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian_bump" => Ok(FamilyKind::GaussianBump),
            "polynomial_bump" => Ok(FamilyKind::PolynomialBump),
            "random_mix" => Ok(FamilyKind::RandomMix),
            _ => Err(Error::Invalid(format!("unknown test-function family {s:?}"))),
        }
    }
}

/// One radial bump supported on `[c − w, c + w]`: the polynomial
/// `(1 − ((r − c)/w)²)²`, optionally times `exp(−a (r − c)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    /// Gaussian sharpness; zero for a pure polynomial bump.
    pub sharpness: f64,
    pub weight: f64,
}

impl Bump {
    pub fn value(&self, r: f64) -> f64 {
        let z = (r - self.center) / self.half_width;
        if z.abs() >= 1.0 {
            return 0.0;
        }
        let p = 1.0 - z * z;
        let d = r - self.center;
        self.weight * p * p * (-self.sharpness * d * d).exp()
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let z = (r - self.center) / self.half_width;
        if z.abs() >= 1.0 {
            return 0.0;
        }
        let p = 1.0 - z * z;
        let d = r - self.center;
        let g = (-self.sharpness * d * d).exp();
        self.weight * g * p * (-4.0 * z / self.half_width - 2.0 * self.sharpness * d * p)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// `C¹` compactly supported radial test function: a sum of bumps.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub bumps: Vec<Bump>,
}

impl TestFunction {
    pub fn value(&self, r: f64) -> f64 {
        self.bumps.iter().map(|b| b.value(r)).sum()
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.bumps.iter().map(|b| b.derivative(r)).sum()
    }

    pub fn support(&self) -> (f64, f64) {
        self.bumps
            .iter()
            .map(Bump::support)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| (a.min(c), b.max(d)))
    }

    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        (0..grid.n).map(|i| self.value(grid.node(i))).collect()
    }

    /// Grid nodes strictly inside the support.
    pub fn nodes_in_support(&self, grid: &RadialGrid) -> usize {
        (0..grid.n).filter(|&i| self.value(grid.node(i)) != 0.0).count()
    }
}

/// Seeded family of test functions supported in `support ⊂ (0, r_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunctionFamily {
    pub kind: FamilyKind,
    pub seed: u64,
    pub count: usize,
    pub support: (f64, f64),
}

/// Fewer nodes than this inside a support triggers a resolution warning.
pub const MIN_SUPPORT_NODES: usize = 32;

impl TestFunctionFamily {
    pub fn new(kind: FamilyKind, seed: u64, count: usize, support: (f64, f64)) -> Result<Self> {
        let (lo, hi) = support;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Invalid(format!("support interval ({lo}, {hi}) must satisfy 0 < lo < hi")));
        }
        if count == 0 {
            return Err(Error::Invalid("family needs at least one member".into()));
        }
        Ok(Self { kind, seed, count, support })
    }

    fn draw_bump(&self, rng: &mut ChaCha8Rng, gaussian: bool) -> Bump {
        let (lo, hi) = self.support;
        let len = hi - lo;
        let half_width = rng.gen_range(len / 40.0..=len / 2.0);
        let center = rng.gen_range(lo + half_width..=hi - half_width);
        let sharpness = if gaussian { rng.gen_range(0.0..=4.0) / (half_width * half_width) } else { 0.0 };
        Bump { center, half_width, sharpness, weight: 1.0 }
    }

    /// Members in a fixed order determined by the seed.
    pub fn members(&self) -> Vec<TestFunction> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| match self.kind {
                FamilyKind::GaussianBump => TestFunction { bumps: vec![self.draw_bump(&mut rng, true)] },
                FamilyKind::PolynomialBump => TestFunction { bumps: vec![self.draw_bump(&mut rng, false)] },
                FamilyKind::RandomMix => {
                    let k = rng.gen_range(2..=4);
                    let bumps = (0..k)
                        .map(|_| {
                            let gaussian = rng.gen_bool(0.5);
                            let mut b = self.draw_bump(&mut rng, gaussian);
                            let mag = rng.gen_range(0.1..=1.0);
                            b.weight = if rng.gen_bool(0.5) { mag } else { -mag };
                            b
                        })
                        .collect();
                    TestFunction { bumps }
                }
            })
            .collect()
    }

    /// Resolution warnings for members with fewer than
    /// [`MIN_SUPPORT_NODES`] nodes in their support.
    pub fn resolution_warnings(&self, grid: &RadialGrid) -> Vec<String> {
        let mut out = Vec::new();
        if self.support.1 >= grid.r_max {
            out.push(format!("support ends at {} beyond r_max = {}", self.support.1, grid.r_max));
        }
        for (j, f) in self.members().iter().enumerate() {
            let k = f.nodes_in_support(grid);
            if k < MIN_SUPPORT_NODES {
                out.push(format!("member {j} has {k} nodes in its support (< {MIN_SUPPORT_NODES})"));
            }
        }
        out
    }
}
