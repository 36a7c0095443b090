//! Numerics for the fractional heat equation `∂_t u + (-Δ)^s u = 0` on `R^N`.
//!
//! The crate builds the 2s-stable heat kernel by Fourier inversion, applies
//! the fractional Laplacian through two independent discretizations, evolves
//! Radon-measure data by the representation formula, and certifies the
//! quantitative estimates the solution theory provides (two-sided kernel
//! bounds, smoothing, Harnack inequalities, weighted stability, traces,
//! self-similar structure, long-time asymptotics).

pub mod error;
pub mod estimates;
pub mod evolution;
pub mod fft;
pub mod field;
pub mod fraclap;
pub mod interp;
pub mod kernel;
pub mod measure;
pub mod params;
pub mod quad;
pub mod report;
pub mod weight;

pub use error::{Error, Result};
pub use estimates::EstimateReport;
pub use field::{Field, GridSpec};
pub use kernel::{BoundConstants, KernelProfile, ProfileResolution};
pub use measure::RadonMeasure;
pub use params::FracParams;
