use std::io::Write;

use crate::cli::fmt_f64;
use crate::error::{Error, Result};
use crate::geometry::{Example1, Example2, ExampleModel, RadialGrid};
use crate::heat::resolved_intrinsic_sup;
use crate::spectral::discretize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleKind {
    /// Pinched sectional curvature `−c r^δ`, no potential.
    E1,
    /// Ricci curvature `−c r^{2(δ−1)}` with potential `θ r^δ`.
    E2,
}

impl ExampleKind {
    pub fn name(self) -> &'static str {
        match self {
            ExampleKind::E1 => "e1",
            ExampleKind::E2 => "e2",
        }
    }

    /// Builds the model in dimension `d`; `theta` only enters the drift
    /// example.
    pub fn build(self, d: usize, delta: f64, theta: f64, grid: RadialGrid) -> Result<ExampleModel> {
        match self {
            ExampleKind::E1 => Example1::new(delta).with_dimension(d).build(grid),
            ExampleKind::E2 => Example2::new(delta, theta).with_dimension(d).build(grid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stabilizes,
    Grows,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Stabilizes => "stabilizes",
            Verdict::Grows => "grows",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpnessThresholds {
    /// "stabilizes" when the last growth ratio is below this.
    pub stabilize: f64,
    /// "grows" when every growth ratio exceeds this.
    pub grow: f64,
}

impl Default for SharpnessThresholds {
    fn default() -> Self {
        Self { stabilize: 1.05, grow: 1.5 }
    }
}

impl SharpnessThresholds {
    /// Applies the fixed rule to consecutive ratios.
    pub fn verdict(&self, ratios: &[f64]) -> Verdict {
        match ratios.last() {
            Some(&last) if last < self.stabilize => Verdict::Stabilizes,
            Some(_) if ratios.iter().all(|&q| q > self.grow) => Verdict::Grows,
            _ => Verdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharpnessReport {
    pub example: ExampleKind,
    pub d: usize,
    pub delta: f64,
    pub theta: f64,
    pub t: f64,
    pub ladder: Vec<f64>,
    /// Nodes on the largest rung; every rung shares its spacing.
    pub n: usize,
    pub nodes: Vec<usize>,
    pub lambda0: Vec<f64>,
    pub log_s: Vec<f64>,
    pub modes: Vec<usize>,
    pub resolved: Vec<bool>,
    /// `S_{k+1}/S_k`.
    pub ratios: Vec<f64>,
    pub verdict: Verdict,
}

/// Recomputes `λ₀`, `φ₀` and `S(t)` on each rung of an `r_max` ladder and
/// classifies how `S(t)` responds to the domain growing. Every rung uses
/// the spacing of the largest one, `r_max / (n − 1)`.
pub fn sharpness_probe(
    example: ExampleKind,
    d: usize,
    delta: f64,
    theta: f64,
    t: f64,
    ladder: &[f64],
    n: usize,
    thresholds: SharpnessThresholds,
) -> Result<SharpnessReport> {
    if ladder.len() < 3 {
        return Err(Error::Invalid(format!("ladder needs at least 3 rungs, got {}", ladder.len())));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("ladder must be strictly increasing".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let mut lambda0 = Vec::new();
    let mut log_s = Vec::new();
    let mut modes = Vec::new();
    let mut resolved = Vec::new();
    let top = ladder[ladder.len() - 1];
    let nodes: Vec<usize> = ladder.iter().map(|&r| ((n - 1) as f64 * r / top).round() as usize + 1).collect();
    for (&r_max, &nk) in ladder.iter().zip(&nodes) {
        let grid = RadialGrid::new(r_max, nk)?;
        let model = example.build(d, delta, theta, grid)?;
        let op = discretize(&model.manifold, &model.potential, 0.0)?;
        let (pairs, reports) = resolved_intrinsic_sup(&op, &grid.nodes(), &[t])?;
        lambda0.push(pairs[0].lambda);
        log_s.push(reports[0].log_s_empirical);
        modes.push(pairs.len());
        resolved.push(reports[0].is_resolved());
    }
    let ratios: Vec<f64> = log_s.windows(2).map(|w| (w[1] - w[0]).exp()).collect();
    let verdict = thresholds.verdict(&ratios);
    Ok(SharpnessReport {
        example,
        d,
        delta,
        theta,
        t,
        ladder: ladder.to_vec(),
        n,
        nodes,
        lambda0,
        log_s,
        modes,
        resolved,
        ratios,
        verdict,
    })
}

impl SharpnessReport {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(
            out,
            "# example={} d={} delta={} theta={} t={} n={} verdict={}",
            self.example.name(),
            self.d,
            fmt_f64(self.delta),
            fmt_f64(self.theta),
            fmt_f64(self.t),
            self.n,
            self.verdict.name()
        )?;
        writeln!(out, "r_max,n,lambda0,log_S,modes,resolved,ratio")?;
        for k in 0..self.ladder.len() {
            let ratio = if k == 0 { String::new() } else { fmt_f64(self.ratios[k - 1]) };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_f64(self.ladder[k]),
                self.nodes[k],
                fmt_f64(self.lambda0[k]),
                fmt_f64(self.log_s[k]),
                self.modes[k],
                self.resolved[k],
                ratio
            )?;
        }
        Ok(())
    }
}
