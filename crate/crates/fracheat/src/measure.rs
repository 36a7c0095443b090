//! Signed Radon measures: Dirac atoms plus an optional grid density.
//!
//! The admissible class for the evolution is
//! `∫ (1+|x|)^{-(N+2s)} d|μ| < ∞`. A finite grid cannot witness that by
//! itself, so densities carry a declared tail law that drives the analytic
//! corrections outside the box: compact support, power growth `coeff·|x|^γ`,
//! or power decay `coeff·|x|^{-α}`.
//!
//! Convention for box-plus-tail integrals in `N ≥ 2`: sampled cells are
//! counted inside the inscribed ball `|x| ≤ h` and the declared law takes
//! over radially for `|x| > h`, so the geometry is handled exactly in radial
//! coordinates.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::params::FracParams;
use crate::quad::{gauss_legendre, integrate_geometric, sphere_area};

/// One weighted Dirac atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: Vec<f64>,
    pub mass: f64,
}

/// Declared behavior of a density outside its box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    Compact,
    /// `|ρ(x)| ≈ coeff · |x|^gamma` for `|x| > h` (growing data).
    Power { gamma: f64, coeff: f64 },
    /// `|ρ(x)| ≈ coeff · |x|^{-alpha}` for `|x| > h` (decaying data).
    Decay { alpha: f64, coeff: f64 },
}

/// Signed measure: atoms plus an optional density with its tail law.
#[derive(Debug, Clone)]
pub struct RadonMeasure {
    pub atoms: Vec<Atom>,
    pub density: Option<Field>,
    pub tail: Tail,
}

impl RadonMeasure {
    pub fn dirac(position: Vec<f64>, mass: f64) -> Self {
        Self {
            atoms: vec![Atom { position, mass }],
            density: None,
            tail: Tail::Compact,
        }
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Self {
        Self {
            atoms,
            density: None,
            tail: Tail::Compact,
        }
    }

    pub fn from_density(density: Field, tail: Tail) -> Self {
        Self {
            atoms: Vec::new(),
            density: Some(density),
            tail,
        }
    }

    pub fn validate(&self, params: &FracParams) -> Result<()> {
        for atom in &self.atoms {
            if atom.position.len() != params.dim() {
                return Err(Error::InvalidParams(format!(
                    "atom position dimension {} does not match N = {}",
                    atom.position.len(),
                    params.dim()
                )));
            }
            if !atom.mass.is_finite() || atom.position.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParams("atom data must be finite".into()));
            }
        }
        if let Some(d) = &self.density {
            if d.dim() != params.dim() {
                return Err(Error::InvalidParams(
                    "density dimension does not match params".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|a| a.mass >= 0.0)
            && self
                .density
                .as_ref()
                .map(|d| d.min() >= 0.0)
                .unwrap_or(true)
    }

    /// Total signed mass: atom masses plus the box integral of the density
    /// (tail mass of decaying laws included analytically).
    pub fn total_mass(&self) -> f64 {
        let mut mass: f64 = self.atoms.iter().map(|a| a.mass).sum();
        if let Some(d) = &self.density {
            mass += d.integrate();
            if let Tail::Decay { alpha, coeff } = self.tail {
                let h = d.halfwidth();
                let n = d.dim() as f64;
                if alpha > n {
                    mass += sphere_area(d.dim()) * coeff * h.powf(n - alpha) / (alpha - n);
                }
            }
        }
        mass
    }

    /// Evaluate `∫ w(|x|) d|μ|` with the box-plus-tail convention. The weight
    /// is given by its radial profile together with its polynomial order at
    /// infinity `w(r) ~ r^{-decay}` for the analytic remainder.
    pub(crate) fn integrate_weight(
        &self,
        params: &FracParams,
        weight: &dyn Fn(f64) -> f64,
        weight_decay: f64,
    ) -> Result<f64> {
        self.validate(params)?;
        let mut acc = 0.0;
        for atom in &self.atoms {
            let r = norm(&atom.position);
            acc += atom.mass.abs() * weight(r);
        }
        let Some(d) = &self.density else {
            return Ok(acc);
        };
        let h = d.halfwidth();
        let cell = d.cell_volume();
        let dim = d.dim();
        let mut box_part = 0.0;
        d.for_each(|x, v| {
            let r = norm(x);
            if dim == 1 || r <= h {
                box_part += v.abs() * weight(r);
            }
        });
        acc += box_part * cell;

        // analytic tail of |density| · weight beyond the box
        let (growth, coeff) = match self.tail {
            Tail::Compact => return Ok(acc),
            Tail::Power { gamma, coeff } => (gamma, coeff.abs()),
            Tail::Decay { alpha, coeff } => (-alpha, coeff.abs()),
        };
        let n = dim as f64;
        // integrand ~ coeff r^{growth} w(r) r^{N-1}; converges iff
        // growth + N - 1 - weight_decay < -1
        if growth + n - weight_decay >= 0.0 {
            return Err(Error::Inadmissible(format!(
                "tail integral diverges: growth {growth} against weight decay {weight_decay}"
            )));
        }
        let rule = gauss_legendre(16);
        let far = 40.0 * h.max(1.0);
        let numeric = integrate_geometric(
            |r| coeff * r.powf(growth) * weight(r) * r.powf(n - 1.0),
            h,
            far,
            0.1 * h,
            1.5,
            &rule,
        );
        // beyond `far`, replace w by its power law (relative error of the
        // weight there is negligible at these exponents)
        let w_far = weight(far) * far.powf(weight_decay);
        let remainder_expo = growth + n - weight_decay;
        let remainder = coeff * w_far * far.powf(remainder_expo) / (-remainder_expo);
        Ok(acc + sphere_area(dim) * (numeric + remainder))
    }

    /// Admissibility functional `∫ (1+|x|)^{-(N+2s)} d|μ|`.
    ///
    /// For grid densities with power-growth tag `γ`, admissible iff `γ < 2s`.
    pub fn check_admissibility(&self, params: &FracParams) -> (bool, f64) {
        if let Tail::Power { gamma, .. } = self.tail {
            if self.density.is_some() && gamma >= 2.0 * params.s() {
                return (false, f64::INFINITY);
            }
        }
        let e = params.growth_exponent();
        match self.integrate_weight(params, &|r: f64| (1.0 + r).powf(-e), e) {
            Ok(v) if v.is_finite() => (true, v),
            _ => (false, f64::INFINITY),
        }
    }

    // ------------------------------------------------------------------
    // JSON interchange
    // ------------------------------------------------------------------

    /// Serialize to the measure-file JSON shape. The density, when present,
    /// is written as a field CSV next to the measure file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let density_ref = match &self.density {
            Some(d) => {
                let mut ref_path = path.to_path_buf();
                ref_path.set_extension("density.csv");
                d.write_csv_file(&ref_path)?;
                Some(
                    ref_path
                        .file_name()
                        .unwrap()
                        .to_string_lossy()
                        .into_owned(),
                )
            }
            None => None,
        };
        let doc = MeasureDoc {
            atoms: self
                .atoms
                .iter()
                .map(|a| (a.position.clone(), a.mass))
                .collect(),
            density_ref,
            tail: self.tail,
        };
        let json = serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path, params: &FracParams) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let doc: MeasureDoc =
            serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        let density = match doc.density_ref {
            Some(ref name) => {
                let ref_path = path
                    .parent()
                    .unwrap_or_else(|| Path::new("."))
                    .join(name);
                Some(Field::read_csv_file(&ref_path, *params)?)
            }
            None => None,
        };
        let measure = Self {
            atoms: doc
                .atoms
                .into_iter()
                .map(|(position, mass)| Atom { position, mass })
                .collect(),
            density,
            tail: doc.tail,
        };
        measure.validate(params)?;
        Ok(measure)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc {
    atoms: Vec<(Vec<f64>, f64)>,
    density_ref: Option<String>,
    tail: Tail,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    #[test]
    fn compact_density_is_admissible() {
        let params = FracParams::new(0.5, 1).unwrap();
        let grid = GridSpec::new(10.0, 64).unwrap();
        let f = Field::from_fn(params, &grid, |x| if x[0].abs() < 2.0 { 1.0 } else { 0.0 });
        let mu = RadonMeasure::from_density(f, Tail::Compact);
        let (ok, value) = mu.check_admissibility(&params);
        assert!(ok);
        assert!(value > 0.0 && value.is_finite());
    }

    #[test]
    fn critical_growth_is_inadmissible() {
        let params = FracParams::new(0.5, 1).unwrap();
        let grid = GridSpec::new(10.0, 64).unwrap();
        // γ = 2s = 1: the borderline growth blows up in zero time
        let f = Field::from_fn(params, &grid, |x| x[0].abs());
        let mu = RadonMeasure::from_density(
            f,
            Tail::Power {
                gamma: 1.0,
                coeff: 1.0,
            },
        );
        let (ok, value) = mu.check_admissibility(&params);
        assert!(!ok);
        assert!(value.is_infinite());
    }

    #[test]
    fn subcritical_growth_is_admissible() {
        let params = FracParams::new(0.5, 1).unwrap();
        let grid = GridSpec::new(10.0, 64).unwrap();
        // γ = s < 2s
        let f = Field::from_fn(params, &grid, |x| x[0].abs().powf(0.5));
        let mu = RadonMeasure::from_density(
            f,
            Tail::Power {
                gamma: 0.5,
                coeff: 1.0,
            },
        );
        let (ok, _) = mu.check_admissibility(&params);
        assert!(ok);
    }

    #[test]
    fn json_roundtrip() {
        let params = FracParams::new(0.5, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("measure.json");
        let mu = RadonMeasure::from_atoms(vec![
            Atom {
                position: vec![0.0, 1.0],
                mass: 2.0,
            },
            Atom {
                position: vec![-1.0, 0.5],
                mass: -0.5,
            },
        ]);
        mu.save(&path).unwrap();
        let back = RadonMeasure::load(&path, &params).unwrap();
        assert_eq!(back.atoms, mu.atoms);
        assert!(back.density.is_none());
    }
}
