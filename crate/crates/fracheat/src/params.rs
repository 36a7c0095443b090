//! Fractional order and spatial dimension.
//!
//! Every scaling exponent in the library is derived from the pair `(s, N)`:
//! the kernel scale `t^{1/2s}`, the admissible growth `N + 2s`, the smoothing
//! rate `N/2s`. The Gaussian endpoint `s = 1` is only reachable through
//! [`FracParams::gaussian_oracle`], used by oracle tests that compare against
//! the classical heat equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fractional order `s` and spatial dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    s: f64,
    dim: usize,
    #[serde(default, skip_serializing_if = "is_false")]
    gaussian_oracle: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl FracParams {
    /// Validated constructor: requires `0 < s < 1` strictly and `N ∈ {1,2,3}`.
    pub fn new(s: f64, dim: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) || !s.is_finite() {
            return Err(Error::InvalidParams(format!(
                "params.s: fractional order must satisfy 0 < s < 1, got {s}"
            )));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParams(format!(
                "params.dim: spatial dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        Ok(Self {
            s,
            dim,
            gaussian_oracle: false,
        })
    }

    /// Gaussian limit `s = 1`, allowed only for oracle comparisons against the
    /// classical heat semigroup. Flagged so kernel construction can refuse it.
    pub fn gaussian_oracle(dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParams(format!(
                "params.dim: spatial dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        Ok(Self {
            s: 1.0,
            dim,
            gaussian_oracle: true,
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_gaussian_oracle(&self) -> bool {
        self.gaussian_oracle
    }

    /// The admissible-growth exponent `N + 2s`.
    pub fn growth_exponent(&self) -> f64 {
        self.dim as f64 + 2.0 * self.s
    }

    /// The smoothing rate `N / 2s`.
    pub fn smoothing_rate(&self) -> f64 {
        self.dim as f64 / (2.0 * self.s)
    }

    /// Space scale of the kernel at time `t`, i.e. `t^{1/2s}`.
    pub fn kernel_scale(&self, t: f64) -> f64 {
        t.powf(1.0 / (2.0 * self.s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_order() {
        assert!(FracParams::new(0.0, 1).is_err());
        assert!(FracParams::new(1.0, 1).is_err());
        assert!(FracParams::new(1.5, 1).is_err());
        assert!(FracParams::new(f64::NAN, 1).is_err());
        assert!(FracParams::new(0.5, 0).is_err());
        assert!(FracParams::new(0.5, 4).is_err());
    }

    #[test]
    fn exponents() {
        let p = FracParams::new(0.5, 1).unwrap();
        assert_eq!(p.growth_exponent(), 2.0);
        assert_eq!(p.smoothing_rate(), 1.0);
        assert!((p.kernel_scale(4.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_oracle_is_flagged() {
        let p = FracParams::gaussian_oracle(2).unwrap();
        assert_eq!(p.s(), 1.0);
        assert!(p.is_gaussian_oracle());
    }
}
