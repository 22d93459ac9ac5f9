use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::harmonic::{tension_residual, DiscreteMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HalfspaceOptions {
    /// Largest spread of `⟨a, u⟩` still read as a single level.
    pub tol_plane: f64,
    /// Tension residual allowed, relative to `max(1, max |u|)`.
    pub harmonic_tol: f64,
}

impl Default for HalfspaceOptions {
    fn default() -> Self {
        Self { tol_plane: 1e-8, harmonic_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalfspaceVerdict {
    ParallelHyperplane,
    NotParallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceReport {
    pub verdict: HalfspaceVerdict,
    /// `max − min` of `⟨a, u⟩` over the vertices.
    pub spread: f64,
    pub min_level: f64,
    pub max_level: f64,
    /// Range of the bounded harmonic candidate `1 / (⟨a, u⟩ − b + 1)`.
    pub f_min: f64,
    pub f_max: f64,
    pub max_tension: f64,
    pub annotation: Option<String>,
}

const BOUNDARY_ANNOTATION: &str = "parabolic hypothesis not testable on this domain — informational";

/// Whether a harmonic map into the halfspace `⟨a, x⟩ > b` lies in a
/// hyperplane parallel to its boundary.
pub fn halfspace_level_check(
    u: &DiscreteMap,
    normal: &DVector<f64>,
    offset: f64,
    options: &HalfspaceOptions,
) -> Result<HalfspaceReport, ProbeError> {
    if normal.len() != u.target_dim() {
        return Err(ProbeError::InvalidParameter(format!(
            "normal has {} entries, maps land in ℝ^{}",
            normal.len(),
            u.target_dim()
        )));
    }
    if normal.norm() == 0.0 {
        return Err(ProbeError::InvalidParameter("halfspace normal must be nonzero".into()));
    }
    let levels: Vec<f64> = u.values().iter().map(|x| normal.dot(x)).collect();
    if let Some((vertex, &value)) = levels.iter().enumerate().find(|(_, &l)| l <= offset) {
        return Err(ProbeError::NotInHalfspace { vertex, value });
    }
    let scale = u.values().iter().map(|x| x.amax()).fold(1.0, f64::max);
    let max_tension = tension_residual(u)?.into_iter().fold(0.0, f64::max);
    if max_tension > options.harmonic_tol * scale {
        let vertex = u.mesh().interior_vertices().into_iter().next().unwrap_or(0);
        return Err(ProbeError::HypothesisFailed {
            which: format!("u harmonic (tension {max_tension:.3e})"),
            witness: u.values()[vertex].iter().cloned().collect(),
        });
    }
    let min_level = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_level = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = max_level - min_level;
    let f = |l: f64| 1.0 / (l - offset + 1.0);
    Ok(HalfspaceReport {
        verdict: if spread <= options.tol_plane {
            HalfspaceVerdict::ParallelHyperplane
        } else {
            HalfspaceVerdict::NotParallel
        },
        spread,
        min_level,
        max_level,
        f_min: f(max_level),
        f_max: f(min_level),
        max_tension,
        annotation: u.mesh().has_boundary().then(|| BOUNDARY_ANNOTATION.to_string()),
    })
}

/// Runs the check on every member of an exhausting family; the family is
/// parallel only if every member is.
pub fn halfspace_family_check(
    members: &[DiscreteMap],
    normal: &DVector<f64>,
    offset: f64,
    options: &HalfspaceOptions,
) -> Result<(Vec<HalfspaceReport>, HalfspaceVerdict), ProbeError> {
    if members.is_empty() {
        return Err(ProbeError::EmptySampleSet);
    }
    let reports = members
        .iter()
        .map(|u| halfspace_level_check(u, normal, offset, options))
        .collect::<Result<Vec<_>, _>>()?;
    let verdict = if reports.iter().all(|r| r.verdict == HalfspaceVerdict::ParallelHyperplane) {
        HalfspaceVerdict::ParallelHyperplane
    } else {
        HalfspaceVerdict::NotParallel
    };
    Ok((reports, verdict))
}
