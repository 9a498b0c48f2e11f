/// Radial potential `V = θ r^δ` beyond `r₀`, continued inside `r₀` by the
/// even quartic `a + b r² + c r⁴` that matches `V`, `V'` and `V''` at `r₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub theta: f64,
    pub delta: f64,
    pub r0: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl Potential {
    pub const DEFAULT_CUTOFF: f64 = 1.0;

    pub fn zero() -> Self {
        Self { theta: 0.0, delta: 0.0, r0: Self::DEFAULT_CUTOFF, a: 0.0, b: 0.0, c: 0.0 }
    }

    pub fn power(theta: f64, delta: f64, r0: f64) -> Self {
        assert!(r0 > 0.0, "cutoff radius must be positive");
        let v = theta * r0.powf(delta);
        let v1 = theta * delta * r0.powf(delta - 1.0);
        let v2 = theta * delta * (delta - 1.0) * r0.powf(delta - 2.0);
        let c = (v2 - v1 / r0) / (8.0 * r0 * r0);
        let b = (v1 - 4.0 * c * r0.powi(3)) / (2.0 * r0);
        let a = v - b * r0 * r0 - c * r0.powi(4);
        Self { theta, delta, r0, a, b, c }
    }

    pub fn is_zero(&self) -> bool {
        self.theta == 0.0
    }

    pub fn value(&self, r: f64) -> f64 {
        if self.is_zero() {
            0.0
        } else if r >= self.r0 {
            self.theta * r.powf(self.delta)
        } else {
            let r2 = r * r;
            self.a + r2 * (self.b + self.c * r2)
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if self.is_zero() {
            0.0
        } else if r >= self.r0 {
            self.theta * self.delta * r.powf(self.delta - 1.0)
        } else {
            r * (2.0 * self.b + 4.0 * self.c * r * r)
        }
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        if self.is_zero() {
            0.0
        } else if r >= self.r0 {
            self.theta * self.delta * (self.delta - 1.0) * r.powf(self.delta - 2.0)
        } else {
            2.0 * self.b + 12.0 * self.c * r * r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_continuation_matches_at_cutoff() {
        for delta in [1.5, 2.0, 3.0] {
            let v = Potential::power(1.3, delta, 1.0);
            let (lo, hi) = (1.0 - 1e-9, 1.0);
            assert!((v.value(lo) - v.value(hi)).abs() < 1e-8);
            assert!((v.derivative(lo) - v.derivative(hi)).abs() < 1e-7);
            let r0 = 1.0;
            let inner = 2.0 * v.b + 12.0 * v.c * r0 * r0;
            assert!((inner - v.second_derivative(r0)).abs() < 1e-12);
            assert_eq!(v.derivative(0.0), 0.0);
            assert!((v.value(5.0) - 1.3 * 5f64.powf(delta)).abs() < 1e-10 * v.value(5.0));
        }
    }
}
