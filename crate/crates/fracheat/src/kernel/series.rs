//! Large-radius expansion of the radial stable profile.
//!
//! With `α = 2s`, the profile `F` (inverse Fourier transform of
//! `e^{-|ξ|^α}` in dimension `N`, evaluated at radius `r`) expands as
//!
//! ```text
//! F(r) = Σ_{k≥1} (-1)^{k+1}/k! · 2^{kα} Γ((N+kα)/2) Γ(1+kα/2) sin(πks)
//!        / π^{N/2+1} · r^{-N-kα}
//! ```
//!
//! obtained by transforming `e^{-ρ^α}` term by term against the Hankel
//! kernel. The series is asymptotic: terms shrink until an `r`-dependent
//! index and then diverge, so summation stops at the smallest term, which
//! also serves as the error estimate. For `s = 1/2` it reproduces the
//! Poisson kernel expansion `c_N (r^{-N-1} - ...)` exactly.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::params::FracParams;

/// Value, radial derivative, and a relative error estimate for a series
/// evaluation at one radius.
#[derive(Debug, Clone, Copy)]
pub struct SeriesEval {
    pub value: f64,
    pub derivative: f64,
    /// Magnitude of the first omitted term relative to the value.
    pub rel_error: f64,
}

const MAX_TERMS: usize = 120;

/// Evaluate the asymptotic tail series at radius `r > 0`.
pub fn tail_series(params: &FracParams, r: f64) -> SeriesEval {
    let alpha = 2.0 * params.s();
    let dim = params.dim() as f64;
    let norm = PI.powf(dim / 2.0 + 1.0);
    let ln_r = r.ln();

    let mut value = 0.0;
    let mut derivative = 0.0;
    let mut prev_mag = f64::INFINITY;
    let mut stopped_mag = 0.0;
    let mut ln_factorial = 0.0;
    for k in 1..=MAX_TERMS {
        let kf = k as f64;
        ln_factorial += kf.ln();
        let ln_mag = kf * alpha * 2f64.ln() - ln_factorial
            + ln_gamma((dim + kf * alpha) / 2.0)
            + ln_gamma(1.0 + kf * alpha / 2.0)
            - (dim + kf * alpha) * ln_r;
        let mag = ln_mag.exp() / norm;
        if mag > prev_mag {
            stopped_mag = mag;
            break;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * (PI * kf * params.s()).sin() * mag;
        value += term;
        derivative += -(dim + kf * alpha) / r * term;
        prev_mag = mag;
        stopped_mag = mag;
        if mag < 1e-18 * value.abs().max(1e-300) {
            stopped_mag = mag;
            break;
        }
    }
    let rel_error = if value.abs() > 0.0 {
        stopped_mag / value.abs()
    } else {
        f64::INFINITY
    };
    SeriesEval {
        value,
        derivative,
        rel_error,
    }
}

/// Leading tail coefficient `C` in `F(r) ≈ C r^{-(N+2s)}`.
pub fn leading_coefficient(params: &FracParams) -> f64 {
    let alpha = 2.0 * params.s();
    let dim = params.dim() as f64;
    (alpha * 2f64.ln() + ln_gamma((dim + alpha) / 2.0) + ln_gamma(1.0 + alpha / 2.0)).exp()
        * (PI * params.s()).sin()
        / PI.powf(dim / 2.0 + 1.0)
}

/// Relative deviation of the full series from its leading term at radius `r`:
/// `|F(r) r^{N+2s} / C - 1|`. Decreases in `r`; used to place the cutoff
/// radius beyond which the pure power tail stands in for the table.
pub fn deviation_from_leading(params: &FracParams, r: f64) -> f64 {
    let eval = tail_series(params, r);
    let leading = leading_coefficient(params) * r.powf(-params.growth_exponent());
    if eval.value <= 0.0 {
        return f64::INFINITY;
    }
    (eval.value / leading - 1.0).abs() + eval.rel_error
}

/// Smallest radius (within `[lo, hi]`) at which the series deviates from its
/// leading term by at most `target`. Returns `hi` when the target is not
/// reachable below `hi`.
pub fn radius_for_deviation(params: &FracParams, target: f64, lo: f64, hi: f64) -> f64 {
    let mut lo = lo;
    let mut hi = hi;
    if deviation_from_leading(params, hi) > target {
        return hi;
    }
    if deviation_from_leading(params, lo) <= target {
        return lo;
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if deviation_from_leading(params, mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Profile value at the origin from the radial moment formula:
/// `F(0) = (2π)^{-N} |S^{N-1}| Γ(N/2s) / (2s)`.
pub fn value_at_origin(params: &FracParams) -> f64 {
    let dim = params.dim() as f64;
    let two_s = 2.0 * params.s();
    crate::quad::sphere_area(params.dim()) * (ln_gamma(dim / two_s)).exp()
        / (two_s * (2.0 * PI).powf(dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: f64, dim: usize) -> FracParams {
        FracParams::new(s, dim).unwrap()
    }

    #[test]
    fn cauchy_1d_series_matches_closed_form() {
        // F(r) = (1/π) / (1 + r²); series should be exact to its own estimate.
        let params = p(0.5, 1);
        for r in [5.0, 10.0, 50.0, 200.0] {
            let exact = 1.0 / (PI * (1.0 + r * r));
            let eval = tail_series(&params, r);
            assert!(
                (eval.value - exact).abs() / exact < 1e-10,
                "r={r}: {} vs {exact}",
                eval.value
            );
            let dexact = -2.0 * r / (PI * (1.0 + r * r).powi(2));
            assert!((eval.derivative - dexact).abs() / dexact.abs() < 1e-8);
        }
    }

    #[test]
    fn cauchy_3d_series_matches_closed_form() {
        // F(r) = (1/π²) / (1 + r²)²
        let params = p(0.5, 3);
        for r in [5.0, 20.0, 100.0] {
            let exact = 1.0 / (PI * PI * (1.0 + r * r).powi(2));
            let eval = tail_series(&params, r);
            assert!(
                (eval.value - exact).abs() / exact < 1e-9,
                "r={r}: {} vs {exact}",
                eval.value
            );
        }
    }

    #[test]
    fn leading_coefficients_match_poisson_kernels() {
        // s = 1/2: C = Γ((N+1)/2) / π^{(N+1)/2}
        let c1 = leading_coefficient(&p(0.5, 1));
        assert!((c1 - 1.0 / PI).abs() < 1e-14);
        let c3 = leading_coefficient(&p(0.5, 3));
        assert!((c3 - 1.0 / (PI * PI)).abs() < 1e-14);
    }

    #[test]
    fn origin_values() {
        // F(0) = (1/π)Γ(1+1/2s) in 1D
        let f0 = value_at_origin(&p(0.5, 1));
        assert!((f0 - 1.0 / PI).abs() < 1e-14);
        let f0_3 = value_at_origin(&p(0.5, 3));
        assert!((f0_3 - 1.0 / (PI * PI)).abs() < 1e-13, "{f0_3}");
    }

    #[test]
    fn deviation_decreases_and_radius_search_works() {
        let params = p(0.25, 1);
        let d10 = deviation_from_leading(&params, 10.0);
        let d100 = deviation_from_leading(&params, 100.0);
        assert!(d100 < d10);
        let r = radius_for_deviation(&params, 0.02, 2.0, 1e5);
        let d = deviation_from_leading(&params, r);
        assert!(d <= 0.021, "r={r} d={d}");
    }
}
