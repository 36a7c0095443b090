//! The weight `Φ` and the weighted `L¹` structure it induces.
//!
//! `Φ(x) = 1` on the unit ball and `(1 + (|x|²-1)⁴)^{-(N+2s)/8}` outside: a
//! `C²` radial function comparable to `(1+|x|)^{-(N+2s)}` which behaves like
//! a quasi-eigenfunction of `(-Δ)^s` — the ratio `|(-Δ)^s Φ| / Φ` is bounded
//! above, and bounded below away from the plateau. The bounded ratio constant
//! `c₁` is never given in closed form; it is fitted here and published per
//! `(s, N)`.

use crate::error::Result;
use crate::fraclap::{apply_singular_integral, Decay, SmoothFn};
use crate::measure::RadonMeasure;
use crate::params::FracParams;
use crate::report::EstimateReport;

/// Radial profile of the weight: `phi_radial(r) = Φ(x)` for `|x| = r`.
pub fn phi_radial(r: f64, params: &FracParams) -> f64 {
    phi_radial_scaled(r, params, 1.0)
}

fn phi_radial_scaled(r: f64, params: &FracParams, scale: f64) -> f64 {
    let r = r.abs() / scale;
    if r <= 1.0 {
        1.0
    } else {
        let q = r * r - 1.0;
        (1.0 + q * q * q * q).powf(-params.growth_exponent() / 8.0)
    }
}

/// The weight at a point: `Φ(x) ∈ (0, 1]`.
pub fn weight_phi(x: &[f64], params: &FracParams) -> f64 {
    phi_radial(norm(x), params)
}

/// `Φ` (optionally rescaled, `Φ_R(x) = Φ(x/R)`) as a smooth test function.
#[derive(Debug, Clone, Copy)]
pub struct WeightPhi {
    pub params: FracParams,
    pub scale: f64,
}

impl WeightPhi {
    pub fn new(params: FracParams) -> Self {
        Self { params, scale: 1.0 }
    }

    pub fn rescaled(params: FracParams, scale: f64) -> Self {
        Self { params, scale }
    }
}

impl SmoothFn for WeightPhi {
    fn eval(&self, x: &[f64]) -> f64 {
        phi_radial_scaled(norm(x), &self.params, self.scale)
    }

    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn decay(&self) -> Decay {
        // Φ_R(x) ~ (|x|/R)^{-(N+2s)} at infinity
        Decay::Power {
            coeff: self.scale.powf(self.params.growth_exponent()),
            alpha: self.params.growth_exponent(),
        }
    }
}

/// Same construction as `Φ` with the decay exponent swapped: the appendix
/// test function `φ_α`, `C²` and radially decreasing by construction.
#[derive(Debug, Clone, Copy)]
pub struct PowerWeight {
    pub dim: usize,
    pub alpha: f64,
}

impl SmoothFn for PowerWeight {
    fn eval(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        if r <= 1.0 {
            1.0
        } else {
            let q = r * r - 1.0;
            (1.0 + q * q * q * q).powf(-self.alpha / 8.0)
        }
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn decay(&self) -> Decay {
        Decay::Power {
            coeff: 1.0,
            alpha: self.alpha,
        }
    }
}

/// Weighted norm `‖μ‖_Φ = Σ |m_i| Φ(a_i) + ∫ |ρ| Φ` with the analytic tail
/// correction driven by the density's declared law.
pub fn weighted_norm(mu: &RadonMeasure, params: &FracParams) -> Result<f64> {
    mu.integrate_weight(
        params,
        &|r: f64| phi_radial(r, params),
        params.growth_exponent(),
    )
}

/// Weighted norm of a plain field treated as a density (no tail correction
/// beyond the declared one).
pub fn weighted_norm_field(field: &crate::field::Field, params: &FracParams) -> f64 {
    let mut acc = 0.0;
    field.for_each(|x, v| {
        acc += v.abs() * weight_phi(x, params);
    });
    acc * field.cell_volume()
}

/// Fit the quasi-eigenfunction constants of `Φ`:
///
/// * `c₁ = max |(-Δ)^s Φ| / Φ` over `|x| ≤ 30` (finite by the estimate),
/// * `k₀ = min` of the same ratio over `|x| ∈ [2, 30]` (positive by the
///   reverse appendix estimate; the ratio does vanish at one sign change
///   just outside the plateau, which is why the lower window starts at 2),
/// * for `R ∈ {2, 4}`, the independently fitted constant of `Φ_R` must obey
///   `c₁(Φ_R) ≤ c₁/R^{2s}` within 5%.
pub fn phi_quasi_eigen_check(params: &FracParams) -> Result<EstimateReport> {
    let mut report = EstimateReport::new(
        "phi_quasi_eigen",
        0.05,
        format!(
            "ratio lattice |x| in [0, 30], lower-bound window [2, 30], rescales R in {{2, 4}}, s={}, N={}",
            params.s(),
            params.dim()
        ),
    );
    let radii = ratio_lattice();
    let phi = WeightPhi::new(*params);
    let mut c1 = 0.0f64;
    let mut k0 = f64::INFINITY;
    for &r in &radii {
        let ratio = eigen_ratio(&phi, r, params)?;
        c1 = c1.max(ratio);
        if (2.0..=30.0).contains(&r) {
            k0 = k0.min(ratio);
        }
    }
    report.constant("c1", c1);
    report.constant("k0", k0);
    if !(c1.is_finite() && c1 > 0.0) || !(k0 > 0.0) {
        report.log("ratio degenerate: c1 must be finite and k0 positive");
        report.observe(1.0);
        return Ok(report.finish());
    }

    for scale in [2.0, 4.0] {
        let phi_r = WeightPhi::rescaled(*params, scale);
        let mut fitted = 0.0f64;
        for &r in &radii {
            let ratio = eigen_ratio(&phi_r, r * scale, params)?;
            fitted = fitted.max(ratio);
        }
        let bound = c1 / scale.powf(2.0 * params.s());
        report.constant(format!("c1_rescaled_R{scale}"), fitted);
        // violation as relative excess past the scaling bound
        report.observe((fitted / bound - 1.0).max(0.0));
        report.log(format!(
            "R = {scale}: fitted {fitted:.6e} vs c1/R^2s = {bound:.6e}"
        ));
    }
    Ok(report.finish())
}

fn eigen_ratio(phi: &dyn SmoothFn, r: f64, params: &FracParams) -> Result<f64> {
    let mut x = vec![0.0; params.dim()];
    x[0] = r;
    let val = apply_singular_integral(phi, &x, params)?;
    Ok(val.value.abs() / phi.eval(&x))
}

fn ratio_lattice() -> Vec<f64> {
    let mut radii = vec![0.0, 0.3, 0.6, 0.9, 1.1, 1.3, 1.6, 2.0, 2.5];
    let mut r = 3.0f64;
    while r <= 30.0 {
        radii.push(r);
        r *= 1.22;
    }
    radii.push(30.0);
    radii
}

/// Which case of the appendix decay law applies to the exponent `α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayCase {
    BelowDimension,
    AtDimension,
    AboveDimension,
}

pub fn classify_alpha(alpha: f64, dim: usize) -> DecayCase {
    let n = dim as f64;
    if (alpha - n).abs() < 1e-9 {
        DecayCase::AtDimension
    } else if alpha < n {
        DecayCase::BelowDimension
    } else {
        DecayCase::AboveDimension
    }
}

/// Check the three-case decay law for `|(-Δ)^s φ_α|` on `|x| ∈ [10, 40]`:
/// the fitted log-log exponent is `α + 2s` for `α < N`, `N + 2s` (with a log
/// factor divided out) for `α = N`, and `N + 2s` for `α > N`, all within 0.15.
pub fn appendix_decay_check(alpha: f64, params: &FracParams) -> Result<EstimateReport> {
    let case = classify_alpha(alpha, params.dim());
    let (expected, divide_log) = expected_exponent(alpha, params, case);
    appendix_decay_fit(alpha, params, expected, divide_log, "appendix_decay")
}

/// Expected decay exponent per the three-case law, and whether a logarithmic
/// factor must be divided out first.
pub fn expected_exponent(alpha: f64, params: &FracParams, case: DecayCase) -> (f64, bool) {
    let two_s = 2.0 * params.s();
    let n = params.dim() as f64;
    match case {
        DecayCase::BelowDimension => (alpha + two_s, false),
        // after dividing the log factor the residual bias is downward; the
        // interval [N+2s-0.3, N+2s] is represented by its center
        DecayCase::AtDimension => (n + two_s - 0.15, true),
        DecayCase::AboveDimension => (n + two_s, false),
    }
}

/// Fit the decay exponent of `|(-Δ)^s φ_α|` and compare against `expected`.
/// Exposed with an explicit expectation so negative controls can assert the
/// wrong law and verify that the check fails.
pub fn appendix_decay_fit(
    alpha: f64,
    params: &FracParams,
    expected: f64,
    divide_log: bool,
    name: &str,
) -> Result<EstimateReport> {
    let mut report = EstimateReport::new(
        name,
        0.15,
        format!(
            "log-log fit on |x| in [10, 40], alpha = {alpha}, s = {}, N = {}",
            params.s(),
            params.dim()
        ),
    );
    let f = PowerWeight {
        dim: params.dim(),
        alpha,
    };
    let mut logs = Vec::new();
    let count = 10;
    for i in 0..count {
        let r = 10.0 * 4f64.powf(i as f64 / (count - 1) as f64);
        let mut x = vec![0.0; params.dim()];
        x[0] = r;
        let val = apply_singular_integral(&f, &x, params)?;
        let mut magnitude = val.value.abs();
        if divide_log {
            magnitude /= r.ln();
        }
        logs.push((r.ln(), magnitude.ln()));
    }
    let slope = least_squares_slope(&logs);
    let fitted_exponent = -slope;
    report.constant("fitted_exponent", fitted_exponent);
    report.constant("expected_exponent", expected);
    report.observe((fitted_exponent - expected).abs());
    Ok(report.finish())
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_plateau_and_reference_value() {
        let params = FracParams::new(0.5, 1).unwrap();
        assert_eq!(weight_phi(&[0.0], &params), 1.0);
        assert_eq!(weight_phi(&[1.0], &params), 1.0);
        assert_eq!(weight_phi(&[0.5], &params), 1.0);
        // |x| = 10, N + 2s = 2: (1 + 99⁴)^{-1/4} ≈ 0.010101
        let v = weight_phi(&[10.0], &params);
        assert!((v - 0.010101).abs() < 1e-5, "{v}");
    }

    #[test]
    fn phi_is_comparable_to_the_power_law() {
        // two-phase window: fit on |x| ≤ 50, verify on (50, 100]
        let params = FracParams::new(0.75, 2).unwrap();
        let e = params.growth_exponent();
        let mut lo_fit = f64::INFINITY;
        let mut hi_fit: f64 = 0.0;
        let mut r = 0.0;
        while r <= 50.0 {
            let ratio = phi_radial(r, &params) * (1.0 + r).powf(e);
            lo_fit = lo_fit.min(ratio);
            hi_fit = hi_fit.max(ratio);
            r += 0.1;
        }
        assert!(lo_fit > 0.0);
        while r <= 100.0 {
            let ratio = phi_radial(r, &params) * (1.0 + r).powf(e);
            assert!(ratio >= 0.9 * lo_fit && ratio <= 1.1 * hi_fit, "r={r}");
            r += 0.1;
        }
    }

    #[test]
    fn weighted_norm_of_unit_atom_at_origin() {
        let params = FracParams::new(0.5, 1).unwrap();
        let mu = RadonMeasure::dirac(vec![0.0], 1.0);
        let v = weighted_norm(&mu, &params).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distant_heavy_atom_has_unit_order_norm() {
        // mass a^{N+2s} at distance a: ‖μ_a‖_Φ ≍ 1 uniformly in a
        let params = FracParams::new(0.5, 1).unwrap();
        let e = params.growth_exponent();
        for a in [5.0, 20.0, 80.0] {
            let mu = RadonMeasure::dirac(vec![a], a.powf(e));
            let v = weighted_norm(&mu, &params).unwrap();
            assert!(v > 0.8 && v < 1.3, "a={a}: {v}");
        }
    }

    #[test]
    fn weight_phi_c2_across_plateau_edge() {
        // second difference stays bounded through |x| = 1
        let params = FracParams::new(0.5, 1).unwrap();
        let h = 1e-4;
        for r in [1.0 - 3.0 * h, 1.0, 1.0 + 3.0 * h] {
            let second = (phi_radial(r + h, &params) - 2.0 * phi_radial(r, &params)
                + phi_radial(r - h, &params))
                / (h * h);
            assert!(second.abs() < 10.0, "r={r}: {second}");
        }
    }
}
