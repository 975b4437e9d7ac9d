use serde::{Deserialize, Serialize};

/// One row of an estimate table: the empirical constant for a derivative
/// tuple, optionally restricted to a single shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub k: u32,
    pub shell: Option<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ReportRow {
    pub fn scalar(n: usize, c: f64, label: &str) -> Self {
        ReportRow {
            alpha: vec![0; n],
            beta: vec![0; n],
            k: 0,
            shell: None,
            c,
            label: Some(label.to_string()),
        }
    }
}

/// Outcome of a grid certification. `margin` is measured in the units of
/// the check and is positive exactly when the check passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate_id: String,
    pub grid: String,
    pub table: Vec<ReportRow>,
    pub pass: bool,
    pub margin: f64,
}

impl EstimateReport {
    /// Largest constant in the table.
    pub fn max_c(&self) -> f64 {
        self.table.iter().map(|r| r.c).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Growth factor per decade between the two outermost points `x`. Weights
/// such as `a_ε` or cut-offs act up to `‖ξ,τ‖ ≈ ε`, so the inner points may
/// still be pre-asymptotic; the outermost pair carries the trend. Vanishing
/// constants count as no growth.
pub fn trend_growth(xs: &[f64], cs: &[f64]) -> f64 {
    if cs.iter().any(|c| !c.is_finite()) {
        return f64::INFINITY;
    }
    let k = xs.len().min(cs.len());
    if k < 2 {
        return 1.0;
    }
    let (c0, c1) = (cs[k - 2], cs[k - 1]);
    if c1 <= 1e-300 {
        return 0.0;
    }
    if c0 <= 1e-300 {
        return f64::INFINITY;
    }
    let decades = (xs[k - 1] / xs[k - 2]).log10();
    (c1 / c0).powf(1.0 / decades)
}
