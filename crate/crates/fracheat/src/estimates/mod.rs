//! One operation per quantitative theorem: each consumes solutions from the
//! evolution module and emits an [`EstimateReport`].

pub use crate::report::{render_table, EstimateReport};
