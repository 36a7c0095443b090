//! Sampled functions on a uniform grid over a truncated box.
//!
//! A [`Field`] carries its own grid geometry: the box `[-h, h)^N` is split
//! into `n` cells per axis with spacing `Δ = 2h/n`, nodes at `x_i = -h + iΔ`.
//! This is the FFT-periodic arrangement, so the spectral operators use the
//! box frequencies `ξ_k = πk/h` directly.

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::FracParams;

/// Grid geometry request: box halfwidth and points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub halfwidth: f64,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(halfwidth: f64, points_per_axis: usize) -> Result<Self> {
        if !(halfwidth > 0.0) || !halfwidth.is_finite() {
            return Err(Error::InvalidParams(format!(
                "grid.halfwidth: must be positive and finite, got {halfwidth}"
            )));
        }
        if points_per_axis < 32 {
            return Err(Error::InvalidParams(format!(
                "grid.points_per_axis: must be at least 32, got {points_per_axis}"
            )));
        }
        Ok(Self {
            halfwidth,
            points_per_axis,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.halfwidth / self.points_per_axis as f64
    }
}

/// A function sampled on a uniform grid, tagged with its parameters.
#[derive(Debug, Clone)]
pub struct Field {
    params: FracParams,
    halfwidth: f64,
    values: ArrayD<f64>,
}

impl Field {
    pub fn zeros(params: FracParams, grid: &GridSpec) -> Self {
        let shape = vec![grid.points_per_axis; params.dim()];
        Self {
            params,
            halfwidth: grid.halfwidth,
            values: ArrayD::zeros(IxDyn(&shape)),
        }
    }

    /// Sample a pointwise function onto the grid.
    pub fn from_fn(params: FracParams, grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut field = Self::zeros(params, grid);
        let h = grid.halfwidth;
        let d = grid.spacing();
        let mut coord = vec![0.0; params.dim()];
        for (idx, v) in field.values.indexed_iter_mut() {
            for (a, c) in coord.iter_mut().enumerate() {
                *c = -h + idx[a] as f64 * d;
            }
            *v = f(&coord);
        }
        field
    }

    pub fn from_values(params: FracParams, halfwidth: f64, values: ArrayD<f64>) -> Result<Self> {
        let n = values.shape().first().copied().unwrap_or(0);
        if values.ndim() != params.dim() || values.shape().iter().any(|&m| m != n) {
            return Err(Error::InvalidParams(
                "field shape must be cubic and match the dimension".into(),
            ));
        }
        if n < 32 {
            return Err(Error::InvalidParams(format!(
                "field resolution {n} below the 32-point floor"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("field contains non-finite values".into()));
        }
        Ok(Self {
            params,
            halfwidth,
            values,
        })
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn points_per_axis(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            halfwidth: self.halfwidth,
            points_per_axis: self.points_per_axis(),
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.halfwidth / self.points_per_axis() as f64
    }

    /// Cell volume `Δ^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        -self.halfwidth + index as f64 * self.spacing()
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut ArrayD<f64> {
        &mut self.values
    }

    /// Apply `f(point, value)` to every node.
    pub fn for_each(&self, mut f: impl FnMut(&[f64], f64)) {
        let h = self.halfwidth;
        let d = self.spacing();
        let mut coord = vec![0.0; self.dim()];
        for (idx, v) in self.values.indexed_iter() {
            for (a, c) in coord.iter_mut().enumerate() {
                *c = -h + idx[a] as f64 * d;
            }
            f(&coord, *v);
        }
    }

    /// Box integral `Σ v · Δ^N`.
    pub fn integrate(&self) -> f64 {
        self.values.sum() * self.cell_volume()
    }

    /// `L^p` box norm for `p ≥ 1`; `p = ∞` is [`Field::max_abs`].
    pub fn norm_lp(&self, p: f64) -> f64 {
        assert!(p >= 1.0);
        (self
            .values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            * self.cell_volume())
        .powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    /// Largest absolute value on the outermost layer of cells.
    pub fn boundary_max(&self) -> f64 {
        let n = self.points_per_axis();
        let mut worst = 0.0f64;
        for (idx, v) in self.values.indexed_iter() {
            let on_boundary = (0..self.dim()).any(|a| idx[a] == 0 || idx[a] == n - 1);
            if on_boundary {
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.values
            .iter()
            .map(|v| Complex64::new(*v, 0.0))
            .collect()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.values.shape().to_vec()
    }

    /// Pointwise combination with another field on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.shape() != other.shape() || self.halfwidth != other.halfwidth {
            return Err(Error::InvalidParams("field grids do not match".into()));
        }
        let mut out = self.clone();
        out.values.zip_mut_with(&other.values, |a, b| *a = f(*a, *b));
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Field {
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v * factor);
        out
    }

    // ------------------------------------------------------------------
    // Import/export: CSV with header `N,halfwidth,points_per_axis`, then the
    // row-major flattened values, and a compact binary twin.
    // ------------------------------------------------------------------

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "N,halfwidth,points_per_axis")?;
        writeln!(
            out,
            "{},{:.16e},{}",
            self.dim(),
            self.halfwidth,
            self.points_per_axis()
        )?;
        writeln!(out, "value")?;
        for v in self.values.iter() {
            writeln!(out, "{v:.16e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, params: FracParams) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut lines = reader.lines();
        let expect = |l: Option<std::io::Result<String>>| -> Result<String> {
            l.ok_or_else(|| Error::Format("unexpected end of field CSV".into()))?
                .map_err(Error::from)
        };
        let header = expect(lines.next())?;
        if header.trim() != "N,halfwidth,points_per_axis" {
            return Err(Error::Format(format!("bad field header `{header}`")));
        }
        let meta = expect(lines.next())?;
        let parts: Vec<&str> = meta.trim().split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Format("field metadata must have 3 fields".into()));
        }
        let dim: usize = parts[0]
            .parse()
            .map_err(|_| Error::Format("bad dimension".into()))?;
        if dim != params.dim() {
            return Err(Error::Format(format!(
                "field dimension {dim} does not match params dimension {}",
                params.dim()
            )));
        }
        let halfwidth: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::Format("bad halfwidth".into()))?;
        let n: usize = parts[2]
            .parse()
            .map_err(|_| Error::Format("bad points_per_axis".into()))?;
        let cols = expect(lines.next())?;
        if cols.trim() != "value" {
            return Err(Error::Format(format!("bad column header `{cols}`")));
        }
        let mut values = Vec::with_capacity(n.pow(dim as u32));
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            values.push(
                line.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad value `{line}`")))?,
            );
        }
        if values.len() != n.pow(dim as u32) {
            return Err(Error::Format(format!(
                "expected {} values, found {}",
                n.pow(dim as u32),
                values.len()
            )));
        }
        let array = ArrayD::from_shape_vec(IxDyn(&vec![n; dim]), values)
            .map_err(|e| Error::Format(e.to_string()))?;
        Self::from_values(params, halfwidth, array)
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(b"FHFLD001")?;
        out.write_all(&(self.dim() as u32).to_le_bytes())?;
        out.write_all(&self.halfwidth.to_le_bytes())?;
        out.write_all(&(self.points_per_axis() as u64).to_le_bytes())?;
        for v in self.values.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R, params: FracParams) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != b"FHFLD001" {
            return Err(Error::Format("bad field magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        if dim != params.dim() {
            return Err(Error::Format("field dimension mismatch".into()));
        }
        input.read_exact(&mut b8)?;
        let halfwidth = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let total = n.pow(dim as u32);
        if total > 1 << 28 {
            return Err(Error::Format("unreasonable field size".into()));
        }
        let mut values = Vec::with_capacity(total);
        for _ in 0..total {
            input.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        let array = ArrayD::from_shape_vec(IxDyn(&vec![n; dim]), values)
            .map_err(|e| Error::Format(e.to_string()))?;
        Self::from_values(params, halfwidth, array)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv_file(path: &Path, params: FracParams) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FracParams {
        FracParams::new(0.5, 2).unwrap()
    }

    #[test]
    fn sampling_and_integration() {
        let grid = GridSpec::new(8.0, 64).unwrap();
        let f = Field::from_fn(params(), &grid, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        // ∫ e^{-|x|²} over R² = π
        assert!((f.integrate() - std::f64::consts::PI).abs() < 1e-8);
        assert!((f.max_abs() - 1.0).abs() < 1e-12);
        assert!(f.boundary_max() < 1e-20);
    }

    #[test]
    fn csv_roundtrip_is_bit_stable() {
        let grid = GridSpec::new(3.0, 32).unwrap();
        let f = Field::from_fn(params(), &grid, |x| (x[0] * 1.37).sin() + x[1] * 0.001);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = Field::read_csv(&buf[..], params()).unwrap();
        assert_eq!(f.values(), g.values());
        assert_eq!(f.halfwidth().to_bits(), g.halfwidth().to_bits());
        let mut buf2 = Vec::new();
        g.write_csv(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn binary_roundtrip() {
        let grid = GridSpec::new(3.0, 32).unwrap();
        let f = Field::from_fn(params(), &grid, |x| x[0] + 2.0 * x[1]);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        let g = Field::read_binary(&buf[..], params()).unwrap();
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(GridSpec::new(1.0, 16).is_err());
    }
}
