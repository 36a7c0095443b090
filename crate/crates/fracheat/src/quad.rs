//! Quadrature building blocks: Gauss–Legendre rules, geometric panels, and
//! unit-sphere averages for `N ∈ {1,2,3}`.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton iteration
/// on the Legendre recurrence. Accurate to machine precision for `n ≤ 64`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over `[a, b]` with a fixed Gauss–Legendre rule.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (nodes, weights) = rule;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Integrate `f` over `[a, b]` split into geometrically growing panels.
///
/// The first panel has width `first`, each subsequent panel grows by `ratio`.
/// Suited to integrands that vary fastest near `a`.
pub fn integrate_geometric(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    first: f64,
    ratio: f64,
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    assert!(b >= a && first > 0.0 && ratio > 1.0);
    let mut acc = 0.0;
    let mut left = a;
    let mut width = first;
    while left < b {
        let right = (left + width).min(b);
        acc += integrate_gl(&f, left, right, rule);
        left = right;
        width *= ratio;
    }
    acc
}

/// Quadrature rule over the unit sphere `S^{N-1}`: pairs `(direction, weight)`
/// with weights summing to the sphere measure `|S^{N-1}|`.
///
/// N=1 uses the two endpoints, N=2 a uniform angular grid (trapezoid rule is
/// spectrally accurate on the circle), N=3 a Gauss–Legendre × uniform product
/// rule exact for spherical harmonics up to the polar degree.
pub fn sphere_rule(dim: usize, order: usize) -> Vec<(Vec<f64>, f64)> {
    match dim {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => {
            let n = order.max(8);
            let w = 2.0 * PI / n as f64;
            (0..n)
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / n as f64;
                    (vec![th.cos(), th.sin()], w)
                })
                .collect()
        }
        3 => {
            let np = order.max(6);
            let (nodes, weights) = gauss_legendre(np);
            let nphi = 2 * np;
            let wphi = 2.0 * PI / nphi as f64;
            let mut out = Vec::with_capacity(np * nphi);
            for (ct, wt) in nodes.iter().zip(&weights) {
                let st = (1.0 - ct * ct).sqrt();
                for k in 0..nphi {
                    let phi = 2.0 * PI * k as f64 / nphi as f64;
                    out.push((vec![st * phi.cos(), st * phi.sin(), *ct], wt * wphi));
                }
            }
            out
        }
        _ => panic!("sphere_rule: dimension {dim} unsupported"),
    }
}

/// Surface measure of the unit sphere `|S^{N-1}|`.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("sphere_area: dimension {dim} unsupported"),
    }
}

/// Volume of the unit ball in dimension `N`.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        // degree 15 is exact for an 8-point rule
        let val = integrate_gl(|x| x.powi(15) + 3.0 * x.powi(4), -1.0, 1.0, &rule);
        assert!((val - 6.0 / 5.0).abs() < 1e-14, "{val}");
    }

    #[test]
    fn gl_smooth_function() {
        let rule = gauss_legendre(24);
        let val = integrate_gl(|x| x.exp(), 0.0, 1.0, &rule);
        assert!((val - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn geometric_panels_cover_decaying_tail() {
        let rule = gauss_legendre(16);
        // ∫_1^∞ x^{-3} dx = 1/2, truncated at 1e6
        let val = integrate_geometric(|x| x.powi(-3), 1.0, 1e6, 0.25, 1.6, &rule);
        assert!((val - 0.5).abs() < 1e-10, "{val}");
    }

    #[test]
    fn sphere_rules_integrate_constants_and_quadratics() {
        for dim in 1..=3 {
            let rule = sphere_rule(dim, 12);
            let total: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((total - sphere_area(dim)).abs() < 1e-12 * sphere_area(dim));
            // ∫_{S^{N-1}} x_1^2 dω = |S^{N-1}| / N
            let x1sq: f64 = rule.iter().map(|(d, w)| w * d[0] * d[0]).sum();
            assert!(
                (x1sq - sphere_area(dim) / dim as f64).abs() < 1e-10,
                "dim {dim}: {x1sq}"
            );
        }
    }
}
