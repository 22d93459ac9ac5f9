use std::io::Write;

use serde::{Deserialize, Serialize};

use super::tomography::RANK_TOLERANCE;
use super::ProbeError;
use crate::geomcore::{jacobian, MapSample};
use crate::harmonic::{DiscreteMap, HarmonicError};

pub const DEFAULT_GROWTH_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub level: usize,
    pub parameter: f64,
    pub sup_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    /// `sup` grew by at least the growth factor from first to last level.
    UnboundedConsistent,
    /// The family does not exhaust; nothing follows for the theorem.
    Bounded,
}

/// `rk u + rk P − dim N`, required to be at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankCondition {
    pub rank_u: usize,
    pub rank_p: usize,
    pub target_dim: usize,
    pub value: i64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    /// `sup` is non-decreasing across levels.
    pub monotone: bool,
    pub growth_ratio: f64,
    pub growth_factor: f64,
    pub verdict: GrowthVerdict,
    pub rank_condition: RankCondition,
}

fn rank_of(singular_values: &[f64]) -> usize {
    let scale = singular_values.iter().cloned().fold(1.0, f64::max);
    singular_values.iter().filter(|&&s| s > RANK_TOLERANCE * scale).count()
}

fn rank_condition(u: &DiscreteMap, p: &MapSample) -> Result<(RankCondition, Vec<f64>), ProbeError> {
    let (_, diffs) = u.face_differentials()?;
    let rank_u = diffs.iter().map(|d| rank_of(d.clone().singular_values().as_slice())).max().unwrap_or(0);
    let mut rank_p = 0;
    for x in u.values() {
        rank_p = rank_p.max(rank_of(jacobian(p, x)?.singular_values().as_slice()));
    }
    let witness = u.values().first().map(|x| x.iter().cloned().collect()).unwrap_or_default();
    let target_dim = u.target_dim();
    let value = rank_u as i64 + rank_p as i64 - target_dim as i64;
    Ok((RankCondition { rank_u, rank_p, target_dim, value, holds: value >= 1 }, witness))
}

/// Growth of `sup ‖P∘u‖` over a family of discrete minimal maps indexed by
/// `parameters`. The rank condition is checked on the last member and its
/// failure is reported as a failed hypothesis.
pub fn calabi_growth(
    family: impl Fn(f64) -> Result<DiscreteMap, HarmonicError>,
    parameters: &[f64],
    p: &MapSample,
    growth_factor: f64,
) -> Result<GrowthTable, ProbeError> {
    if parameters.len() < 2 {
        return Err(ProbeError::FamilyExhausted(format!(
            "growth needs at least two family members, got {}",
            parameters.len()
        )));
    }
    if growth_factor <= 1.0 {
        return Err(ProbeError::InvalidParameter(format!("growth factor {growth_factor} must exceed 1")));
    }
    let mut rows = Vec::with_capacity(parameters.len());
    let mut last = None;
    for (level, &s) in parameters.iter().enumerate() {
        let u = family(s).map_err(|e| ProbeError::FamilyExhausted(format!("member at parameter {s}: {e}")))?;
        if u.target_dim() != p.domain_dim() {
            return Err(ProbeError::InvalidParameter(format!(
                "projection `{}` acts on ℝ^{}, maps land in ℝ^{}",
                p.label(),
                p.domain_dim(),
                u.target_dim()
            )));
        }
        let mut sup: f64 = 0.0;
        for x in u.values() {
            sup = sup.max(p.eval(x)?.norm());
        }
        rows.push(GrowthRow { level, parameter: s, sup_value: sup });
        last = Some(u);
    }
    let (condition, witness) = rank_condition(last.as_ref().expect("at least two members"), p)?;
    if !condition.holds {
        return Err(ProbeError::HypothesisFailed {
            which: format!(
                "rk u + rk P − n ≥ 1 ({} + {} − {} = {})",
                condition.rank_u, condition.rank_p, condition.target_dim, condition.value
            ),
            witness,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].sup_value >= w[0].sup_value);
    let first = rows[0].sup_value;
    let final_sup = rows[rows.len() - 1].sup_value;
    let growth_ratio = if first > 0.0 { final_sup / first } else if final_sup > 0.0 { f64::INFINITY } else { 1.0 };
    let verdict =
        if growth_ratio >= growth_factor { GrowthVerdict::UnboundedConsistent } else { GrowthVerdict::Bounded };
    Ok(GrowthTable { rows, monotone, growth_ratio, growth_factor, verdict, rank_condition: condition })
}

/// CSV with columns `level,parameter,sup_value`.
pub fn write_growth_csv(table: &GrowthTable, writer: impl Write) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(writer);
    for row in &table.rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}
