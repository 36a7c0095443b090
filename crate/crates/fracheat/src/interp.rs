//! Shape-preserving cubic interpolation (Fritsch–Carlson / PCHIP).
//!
//! Used on `(ξ, log F)` so the kernel profile stays positive and radially
//! nonincreasing between table nodes.

/// Piecewise cubic Hermite interpolant with Fritsch–Carlson slopes.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    /// Build from strictly increasing `xs`. `left_slope`, when given, pins the
    /// derivative at the first node (used to enforce zero radial slope at the
    /// origin of a smooth radial profile).
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, left_slope: Option<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2, "need at least two nodes");
        assert!(
            xs.windows(2).all(|w| w[1] > w[0]),
            "nodes must be strictly increasing"
        );
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

        let mut d = vec![0.0; n];
        // Interior slopes: weighted harmonic mean when secants share a sign,
        // zero otherwise (this is what preserves monotonicity).
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = match left_slope {
            Some(s) => s,
            None => edge_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], delta.get(1).copied().unwrap_or(delta[0])),
        };
        d[n - 1] = edge_slope(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n >= 3 { delta[n - 3] } else { delta[n - 2] },
        );

        Self {
            xs,
            ys,
            slopes: d,
        }
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.clamp(1, self.xs.len() - 1) - 1,
        }
    }

    /// Interpolated value. Arguments outside the node range are clamped.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(self.x_min(), self.x_max());
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    /// Derivative of the interpolant.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let x = x.clamp(self.x_min(), self.x_max());
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let dh00 = 6.0 * t * t - 6.0 * t;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * t * t - 2.0 * t;
        (dh00 * self.ys[i] + dh01 * self.ys[i + 1]) / h + dh10 * self.slopes[i] + dh11 * self.slopes[i + 1]
    }
}

/// Shape-preserving three-point endpoint slope (Fritsch–Butland style).
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        s = 0.0;
    } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
        s = 3.0 * d0;
    }
    s
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes() {
        let xs = vec![0.0, 0.5, 1.3, 2.0, 4.0];
        let ys = vec![1.0, 0.6, 0.3, 0.2, 0.05];
        let p = Pchip::new(xs.clone(), ys.clone(), None);
        for (x, y) in xs.iter().zip(&ys) {
            assert!((p.eval(*x) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn preserves_monotone_decrease() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 / (1.0 + x * x)).collect();
        let p = Pchip::new(xs, ys, Some(0.0));
        let mut prev = f64::INFINITY;
        let mut x = 0.0;
        while x <= 9.75 {
            let v = p.eval(x);
            assert!(v <= prev + 1e-15, "not monotone at {x}");
            assert!(p.eval_derivative(x) <= 1e-15);
            prev = v;
            x += 0.01;
        }
    }

    #[test]
    fn accuracy_on_smooth_function() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
        let p = Pchip::new(xs, ys, None);
        let mut worst = 0.0f64;
        let mut x = 0.1;
        while x < 9.5 {
            worst = worst.max((p.eval(x) - (-x as f64).exp()).abs());
            x += 0.013;
        }
        assert!(worst < 2e-6, "worst {worst}");
    }
}
