//! Structured outcome of one verification check.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Result of a single quantitative check: the fitted constants, the worst
/// violation observed, and the tolerance it was held against.
///
/// `passed` is equivalent to `max_violation <= tolerance` by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub check_name: String,
    pub fitted_constants: BTreeMap<String, f64>,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub window: String,
    pub provenance_log: Vec<String>,
}

impl EstimateReport {
    pub fn new(check_name: impl Into<String>, tolerance: f64, window: impl Into<String>) -> Self {
        Self {
            check_name: check_name.into(),
            fitted_constants: BTreeMap::new(),
            max_violation: 0.0,
            tolerance,
            passed: true,
            window: window.into(),
            provenance_log: Vec::new(),
        }
    }

    pub fn constant(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.fitted_constants.insert(name.into(), value);
        self
    }

    pub fn log(&mut self, line: impl Into<String>) -> &mut Self {
        self.provenance_log.push(line.into());
        self
    }

    /// Record a violation observation; keeps the running maximum.
    pub fn observe(&mut self, violation: f64) -> &mut Self {
        if violation > self.max_violation {
            self.max_violation = violation;
        }
        self.passed = self.max_violation <= self.tolerance;
        self
    }

    /// Finalize: recompute `passed` from the invariant.
    pub fn finish(mut self) -> Self {
        self.passed = self.max_violation <= self.tolerance;
        self
    }

    /// One aligned text row: `name  status  violation/tolerance`.
    pub fn render_row(&self) -> String {
        format!(
            "{:<28} {:>6}  max_violation {:>12.4e}  tolerance {:>10.3e}",
            self.check_name,
            if self.passed { "PASS" } else { "FAIL" },
            self.max_violation,
            self.tolerance
        )
    }
}

/// Render a set of reports as an aligned table with a trailing summary line.
pub fn render_table(reports: &[EstimateReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.render_row());
        out.push('\n');
        for (name, value) in &r.fitted_constants {
            out.push_str(&format!("    {name} = {value:.6e}\n"));
        }
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    out.push_str(&format!(
        "{} checks, {} passed, {} failed\n",
        reports.len(),
        reports.len() - failed,
        failed
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passed_tracks_violation_invariant() {
        let mut r = EstimateReport::new("demo", 1e-3, "unit window");
        r.observe(5e-4);
        assert!(r.passed);
        r.observe(2e-3);
        assert!(!r.passed);
        let r = r.finish();
        assert_eq!(r.passed, r.max_violation <= r.tolerance);
    }

    #[test]
    fn json_is_deterministic() {
        let mut r = EstimateReport::new("demo", 1e-3, "w");
        r.constant("b", 2.0).constant("a", 1.0);
        let a = serde_json::to_string(&r).unwrap();
        let b = serde_json::to_string(&r).unwrap();
        assert_eq!(a, b);
        assert!(a.find("\"a\"").unwrap() < a.find("\"b\"").unwrap());
    }
}
