//! The fractional heat kernel `P^t` and its self-similar profile `F`.
//!
//! Everything reduces to the profile at unit time:
//! `P^t(x) = t^{-N/2s} F(|x| t^{-1/2s})`, with `F` tabulated once per `(s, N)`
//! and interpolated by a monotone cubic on `(ξ, log F)`. Outside the cutoff
//! radius the pure power tail `C ξ^{-(N+2s)}` takes over.

mod build;
pub mod series;

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

pub use build::ProfileResolution;

use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::params::FracParams;
use crate::quad::{gauss_legendre, integrate_gl, sphere_area};

/// Tabulated radial profile of the kernel at `t = 1`.
#[derive(Debug, Clone)]
pub struct KernelProfile {
    params: FracParams,
    radii: Vec<f64>,
    values: Vec<f64>,
    tail_constant: f64,
    cutoff_radius: f64,
    interp: Pchip,
    build_log: Vec<String>,
}

/// Empirical two-sided comparability constants for
/// `P^t(x) ≍ t (t^{1/s} + |x|^2)^{-(N+2s)/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    pub c_lower: f64,
    pub c_upper: f64,
    pub sample_window: String,
}

/// Sampling region for the two-sided bound certification.
#[derive(Debug, Clone, Copy)]
pub struct BoundWindow {
    pub t_min: f64,
    pub t_max: f64,
    pub x_max: f64,
    pub t_count: usize,
    pub x_count: usize,
}

impl Default for BoundWindow {
    fn default() -> Self {
        Self {
            t_min: 0.1,
            t_max: 10.0,
            x_max: 20.0,
            t_count: 24,
            x_count: 64,
        }
    }
}

impl KernelProfile {
    /// Construct the profile by numerical inversion of `e^{-|ξ|^{2s}}`.
    pub fn build(params: &FracParams, resolution: &ProfileResolution) -> Result<Self> {
        let out = build::build_table(params, resolution)?;
        Self::assemble(
            *params,
            out.radii,
            out.values,
            out.tail_constant,
            out.cutoff_radius,
            out.diagnostics,
        )
    }

    /// Rebuild a profile from table data (import path). Validates the type
    /// invariants: positivity, monotone decrease, tail match, unit mass.
    pub fn from_table(
        params: FracParams,
        radii: Vec<f64>,
        values: Vec<f64>,
        tail_constant: f64,
        cutoff_radius: f64,
    ) -> Result<Self> {
        Self::assemble(params, radii, values, tail_constant, cutoff_radius, Vec::new())
    }

    fn assemble(
        params: FracParams,
        radii: Vec<f64>,
        values: Vec<f64>,
        tail_constant: f64,
        cutoff_radius: f64,
        build_log: Vec<String>,
    ) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 16 {
            return Err(Error::Format("profile table too short".into()));
        }
        if radii[0] != 0.0 {
            return Err(Error::Format("profile table must start at ξ = 0".into()));
        }
        if !(tail_constant > 0.0) || !(cutoff_radius > 0.0) {
            return Err(Error::Format("tail constant and cutoff must be positive".into()));
        }
        for w in values.windows(2) {
            if !(w[0] > 0.0 && w[1] > 0.0) || w[1] > w[0] * (1.0 + 1e-12) {
                return Err(Error::Format(
                    "profile values must be positive and nonincreasing".into(),
                ));
            }
        }
        let exponent = params.growth_exponent();
        for (r, v) in radii.iter().zip(&values) {
            if *r >= cutoff_radius {
                let dev = (v * r.powf(exponent) / tail_constant - 1.0).abs();
                if dev > 0.05 {
                    return Err(Error::Format(format!(
                        "tail mismatch {dev:.3} at ξ = {r:.3e} violates the 5% envelope"
                    )));
                }
            }
        }
        let interp = Pchip::new(
            radii.clone(),
            values.iter().map(|v| v.ln()).collect(),
            Some(0.0),
        );
        let profile = Self {
            params,
            radii,
            values,
            tail_constant,
            cutoff_radius,
            interp,
            build_log,
        };
        let mass = profile.mass();
        if (mass - 1.0).abs() > 1e-3 {
            return Err(Error::Format(format!(
                "profile mass {mass:.6} deviates from unity"
            )));
        }
        Ok(profile)
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff_radius
    }

    pub fn build_log(&self) -> &[String] {
        &self.build_log
    }

    /// `F(ξ)`: interpolated inside the table, pure power tail beyond cutoff.
    pub fn profile_value(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        if xi >= self.cutoff_radius {
            self.tail_constant * xi.powf(-self.params.growth_exponent())
        } else {
            self.interp.eval(xi).exp()
        }
    }

    /// `F'(ξ)` from the interpolant derivative (power-tail derivative outside).
    pub fn profile_derivative(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        if xi >= self.cutoff_radius {
            let e = self.params.growth_exponent();
            -e * self.tail_constant * xi.powf(-e - 1.0)
        } else {
            // d/dξ exp(logF) = F · (logF)'
            self.interp.eval(xi).exp() * self.interp.eval_derivative(xi)
        }
    }

    /// Kernel value `P^t(x) = t^{-N/2s} F(|x| t^{-1/2s})`.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.eval_radial(t, norm(x)))
    }

    /// Radial fast path; `t > 0` is the caller's responsibility.
    pub fn eval_radial(&self, t: f64, r: f64) -> f64 {
        let scale = self.params.kernel_scale(t);
        self.profile_value(r / scale) * t.powf(-self.params.smoothing_rate())
    }

    /// Time derivative from the self-similar form:
    /// `∂_t P^t = -(N/2s) t^{-N/2s-1} F(ξ) - (ξ/2s) t^{-N/2s-1} F'(ξ)`.
    pub fn time_derivative(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.time_derivative_radial(t, norm(x)))
    }

    pub fn time_derivative_radial(&self, t: f64, r: f64) -> f64 {
        let s2 = 2.0 * self.params.s();
        let xi = r / self.params.kernel_scale(t);
        let pre = t.powf(-self.params.smoothing_rate() - 1.0);
        let dim = self.params.dim() as f64;
        pre * (-(dim / s2) * self.profile_value(xi) - (xi / s2) * self.profile_derivative(xi))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParams(format!(
                "kernel evaluation requires t > 0, got {t}"
            )));
        }
        Ok(())
    }

    /// `∫_{R^N} F` via the interpolant plus the analytic tail. Stays within
    /// `1e-3` of unity by construction; exposed for health checks.
    pub fn mass(&self) -> f64 {
        let rule = gauss_legendre(6);
        let dim = self.params.dim() as f64;
        let mut mass = 0.0;
        for w in self.radii.windows(2) {
            mass += integrate_gl(
                |r| self.interp.eval(r).exp() * r.powf(dim - 1.0),
                w[0],
                w[1],
                &rule,
            );
        }
        let r_max = *self.radii.last().unwrap();
        let two_s = 2.0 * self.params.s();
        mass * sphere_area(self.params.dim())
            + sphere_area(self.params.dim()) * self.tail_constant * r_max.powf(-two_s) / two_s
    }

    /// Kernel mass outside the ball of `radius` at time `t`:
    /// `∫_{|x| > radius} P^t = |S^{N-1}| ∫_{a}^∞ F(ξ) ξ^{N-1} dξ` with
    /// `a = radius · t^{-1/2s}`.
    pub fn tail_mass_beyond(&self, t: f64, radius: f64) -> f64 {
        let a = radius / self.params.kernel_scale(t);
        let rule = gauss_legendre(8);
        let dim = self.params.dim() as f64;
        let r_max = *self.radii.last().unwrap();
        let two_s = 2.0 * self.params.s();
        let analytic_from = r_max.max(a);
        let mut mass =
            self.tail_constant * analytic_from.powf(-two_s) / two_s * sphere_area(self.params.dim());
        if a < r_max {
            let mut lo = a;
            while lo < r_max {
                let hi = (lo * 1.5 + 0.5).min(r_max);
                mass += sphere_area(self.params.dim())
                    * integrate_gl(
                        |r| self.profile_value(r) * r.powf(dim - 1.0),
                        lo,
                        hi,
                        &rule,
                    );
                lo = hi;
            }
        }
        mass
    }

    /// Certify the two-sided bound `P^t(x) ≍ t/(t^{1/s}+|x|^2)^{(N+2s)/2}`:
    /// extremize the ratio over a coarse lattice, then re-check on a 4× finer
    /// lattice and require the extremes to stay within ±10%.
    pub fn certify_two_sided_bound(&self, window: &BoundWindow) -> Result<BoundConstants> {
        if window.t_min > 0.1 || window.t_max < 10.0 || window.x_max < 20.0 {
            return Err(Error::InvalidParams(
                "bound window must cover t in [0.1, 10] and |x| in [0, 20]".into(),
            ));
        }
        let (lo, hi) = self.ratio_extremes(window, 1);
        let (lo_fine, hi_fine) = self.ratio_extremes(window, 4);
        if lo_fine < 0.9 * lo || hi_fine > 1.1 * hi {
            return Err(Error::ResolutionDiagnostic(format!(
                "fine-lattice escape: coarse [{lo:.6e}, {hi:.6e}] vs fine [{lo_fine:.6e}, {hi_fine:.6e}]"
            )));
        }
        Ok(BoundConstants {
            c_lower: lo,
            c_upper: hi,
            sample_window: format!(
                "t in [{}, {}] ({} log nodes), |x| in [0, {}] ({} nodes), refined 4x",
                window.t_min, window.t_max, window.t_count, window.x_max, window.x_count
            ),
        })
    }

    fn ratio_extremes(&self, window: &BoundWindow, refine: usize) -> (f64, f64) {
        let nt = window.t_count * refine;
        let nx = window.x_count * refine;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let exponent = self.params.growth_exponent() / 2.0;
        for i in 0..nt {
            let t = window.t_min
                * (window.t_max / window.t_min).powf(i as f64 / (nt - 1) as f64);
            for j in 0..nx {
                let r = window.x_max * j as f64 / (nx - 1) as f64;
                let p = self.eval_radial(t, r);
                let ratio = p * (t.powf(1.0 / self.params.s()) + r * r).powf(exponent) / t;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
        (lo, hi)
    }

    // ------------------------------------------------------------------
    // Import/export
    // ------------------------------------------------------------------

    /// CSV export: header names, header values at 17 significant digits,
    /// then `(ξ, F)` rows. Round-trips bit-exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "s,N,tail_constant,cutoff_radius")?;
        writeln!(
            out,
            "{:.16e},{},{:.16e},{:.16e}",
            self.params.s(),
            self.params.dim(),
            self.tail_constant,
            self.cutoff_radius
        )?;
        writeln!(out, "xi,F")?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            writeln!(out, "{r:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut lines = reader.lines();
        let expect = |l: Option<std::io::Result<String>>| -> Result<String> {
            l.ok_or_else(|| Error::Format("unexpected end of profile CSV".into()))?
                .map_err(Error::from)
        };
        let header = expect(lines.next())?;
        if header.trim() != "s,N,tail_constant,cutoff_radius" {
            return Err(Error::Format(format!("bad profile header `{header}`")));
        }
        let meta = expect(lines.next())?;
        let parts: Vec<&str> = meta.trim().split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Format("profile metadata must have 4 fields".into()));
        }
        let s: f64 = parse_f64(parts[0])?;
        let dim: usize = parts[1]
            .parse()
            .map_err(|_| Error::Format(format!("bad dimension `{}`", parts[1])))?;
        let tail_constant = parse_f64(parts[2])?;
        let cutoff_radius = parse_f64(parts[3])?;
        let cols = expect(lines.next())?;
        if cols.trim() != "xi,F" {
            return Err(Error::Format(format!("bad column header `{cols}`")));
        }
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("bad profile row `{line}`")))?;
            radii.push(parse_f64(a)?);
            values.push(parse_f64(b)?);
        }
        Self::from_table(FracParams::new(s, dim)?, radii, values, tail_constant, cutoff_radius)
    }

    /// Compact little-endian binary twin of the CSV format.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(b"FHPROF01")?;
        out.write_all(&(self.params.dim() as u32).to_le_bytes())?;
        out.write_all(&self.params.s().to_le_bytes())?;
        out.write_all(&self.tail_constant.to_le_bytes())?;
        out.write_all(&self.cutoff_radius.to_le_bytes())?;
        out.write_all(&(self.radii.len() as u64).to_le_bytes())?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            out.write_all(&r.to_le_bytes())?;
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != b"FHPROF01" {
            return Err(Error::Format("bad profile magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        input.read_exact(&mut b8)?;
        let s = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let tail_constant = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let cutoff_radius = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let len = u64::from_le_bytes(b8) as usize;
        if len > 1 << 26 {
            return Err(Error::Format("unreasonable profile length".into()));
        }
        let mut radii = Vec::with_capacity(len);
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            input.read_exact(&mut b8)?;
            radii.push(f64::from_le_bytes(b8));
            input.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Self::from_table(FracParams::new(s, dim)?, radii, values, tail_constant, cutoff_radius)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad float `{s}`")))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Process-wide profile cache: construction is expensive and profiles are
/// immutable, so checks and tests share them freely across threads.
pub fn shared_profile(params: &FracParams, resolution: &ProfileResolution) -> Result<Arc<KernelProfile>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<KernelProfile>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = resolution.cache_key(params);
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let built = Arc::new(KernelProfile::build(params, resolution)?);
    cache
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| built.clone());
    Ok(built)
}
