use std::env;

/// Environment variable overriding the relative comparison tolerance.
pub const TOLERANCE_ENV: &str = "OHMGRAPH_TOL";

/// Mixed relative/absolute comparison tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-9, abs: 1e-12 }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }

    /// Default tolerance with `rel` replaced by `OHMGRAPH_TOL` when it parses
    /// as a positive float.
    pub fn from_env() -> Self {
        let mut tol = Self::default();
        if let Some(rel) = env::var(TOLERANCE_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v > 0.0)
        {
            tol.rel = rel;
        }
        tol
    }

    pub fn close(&self, a: f64, b: f64) -> bool {
        self.close_scaled(a, b, 0.0)
    }

    /// Like [`close`](Self::close), but the relative part is measured against
    /// `max(|a|, |b|, scale)`. Use `scale` for quantities that can cancel to
    /// zero while the problem itself has a natural magnitude.
    pub fn close_scaled(&self, a: f64, b: f64, scale: f64) -> bool {
        (a - b).abs() <= self.bound(a, b, scale)
    }

    pub fn bound(&self, a: f64, b: f64, scale: f64) -> f64 {
        self.abs + self.rel * a.abs().max(b.abs()).max(scale.abs())
    }

    /// True when `total` is zero relative to the total absolute mass.
    pub fn is_zero_sum(&self, values: &[f64]) -> bool {
        let total: f64 = values.iter().sum();
        let magnitude: f64 = values.iter().map(|v| v.abs()).sum();
        total.abs() <= self.abs + self.rel * magnitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_tolerance() {
        let tol = Tolerance::default();
        assert!(tol.close(1.0, 1.0 + 5e-10));
        assert!(!tol.close(1.0, 1.0 + 5e-9));
        assert!(tol.close(0.0, 5e-13));
        assert!(!tol.close(0.0, 1e-10));
        assert!(tol.close_scaled(0.0, 1e-10, 1.0));
    }

    #[test]
    fn zero_sum() {
        let tol = Tolerance::default();
        assert!(tol.is_zero_sum(&[1.0, -0.5, -0.5]));
        assert!(!tol.is_zero_sum(&[1.0, -0.4]));
    }
}
