use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of a Monte-Carlo or sampled probe. `threshold` states the rule
/// that produced the verdict; `notes` carries flags such as
/// `boundary-limited`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe_name: String,
    pub parameters: serde_json::Value,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub samples: usize,
    pub verdict: Verdict,
    pub threshold: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ProbeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Binomial standard error of a proportion.
pub(crate) fn binomial_stderr(hits: usize, n: usize) -> f64 {
    let p = hits as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

/// `|estimate − reference| ≤ sigmas · stderr`, with exact agreement required
/// when the standard error vanishes.
pub(crate) fn within_sigmas(estimate: f64, reference: f64, stderr: f64, sigmas: f64) -> bool {
    (estimate - reference).abs() <= sigmas * stderr + 1e-12
}
