use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::convexity::pullvexity_value;
use crate::geomcore::linalg::{generalized_sym_eigen, metric_cholesky};
use crate::geomcore::{covariant_hessian, Chart, MapSample, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HadamardOptions {
    /// `K ≤ 0`; `K = 0` is the flat limit on ℝ².
    pub curvature: f64,
    /// Direction of the geodesic through the origin.
    pub angle: f64,
    /// Samples must satisfy `|p| < 1 − margin` in the disk model.
    pub margin: f64,
    /// Only samples with `d_S ≥ min_distance` enter the convexity constant.
    pub min_distance: f64,
}

impl Default for HadamardOptions {
    fn default() -> Self {
        Self { curvature: -1.0, angle: 0.0, margin: 1e-3, min_distance: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HadamardReport {
    pub curvature: f64,
    pub samples: usize,
    /// Infimum over all samples of the smallest eigenvalue of `Hess d_S²`
    /// relative to the metric.
    pub inf_eigenvalue: f64,
    pub witness: Vec<f64>,
    pub min_distance: f64,
    /// Infimum over samples with `d_S ≥ min_distance`, when positive.
    pub constant: Option<f64>,
    pub strongly_convex: bool,
    /// Infimum of `tr_g(u*Hess d_S²)` along the immersion, if one was given.
    pub inf_pullvexity_trace: Option<f64>,
}

/// Distance from `p` to the geodesic through the origin with direction
/// `angle`: `arcsinh(2|⟨p, ν⟩| / (1 − |p|²)) / √−K` in the disk model,
/// `|⟨p, ν⟩|` when `K = 0`.
pub fn distance_to_diameter(p: &Point, curvature: f64, angle: f64) -> f64 {
    let offset = (-angle.sin() * p[0] + angle.cos() * p[1]).abs();
    if curvature == 0.0 {
        return offset;
    }
    (2.0 * offset / (1.0 - p.norm_squared())).asinh() / (-curvature).sqrt()
}

fn model_chart(curvature: f64) -> Chart {
    if curvature == 0.0 {
        Chart::euclidean(2)
    } else {
        Chart::poincare_disk(curvature)
    }
}

/// `d_S²` as a scalar field on the model chart.
pub fn distance_squared_field(curvature: f64, angle: f64) -> MapSample {
    MapSample::scalar(format!("d_S^2(K={curvature})"), 2, move |p| distance_to_diameter(p, curvature, angle).powi(2))
}

/// Convexity of the squared distance to a geodesic through the origin of
/// the constant-curvature disk: smallest metric eigenvalue of the covariant
/// Hessian over `samples`, and optionally the pullvexity trace along an
/// immersion `(u, g, domain samples)` into the model.
pub fn hadamard_distance_probe(
    options: &HadamardOptions,
    samples: &[Point],
    immersion: Option<(&MapSample, &Chart, &[Point])>,
) -> Result<HadamardReport, ProbeError> {
    let HadamardOptions { curvature, angle, margin, min_distance } = *options;
    if curvature > 0.0 {
        return Err(ProbeError::InvalidParameter(format!("curvature {curvature} must be ≤ 0")));
    }
    if samples.is_empty() {
        return Err(ProbeError::EmptySampleSet);
    }
    let chart = model_chart(curvature);
    let check = |p: &Point| -> Result<(), ProbeError> {
        if p.len() != 2 {
            return Err(ProbeError::InvalidParameter(format!("sample {p:?} is not a point of the plane")));
        }
        if curvature < 0.0 && p.norm() >= 1.0 - margin {
            return Err(ProbeError::SampleTooCloseToIdealBoundary { point: p.iter().cloned().collect(), margin });
        }
        Ok(())
    };
    samples.iter().try_for_each(check)?;
    let field = distance_squared_field(curvature, angle);
    let eigen: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|p| {
            let hess = covariant_hessian(&field, p, &chart)?;
            let chol = metric_cholesky(&chart.metric_at(p))
                .ok_or_else(|| ProbeError::InvalidParameter(format!("metric degenerate at {p:?}")))?;
            let (values, _) = generalized_sym_eigen(&hess, &chol);
            Ok((values[0], distance_to_diameter(p, curvature, angle)))
        })
        .collect::<Result<_, ProbeError>>()?;
    let (witness_index, inf_eigenvalue) = eigen
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &(v, _))| if v < bv { (i, v) } else { (bi, bv) });
    let away = eigen.iter().filter(|(_, d)| *d >= min_distance).map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
    let constant = (away.is_finite() && away > 0.0).then_some(away);
    let inf_pullvexity_trace = match immersion {
        None => None,
        Some((u, g, points)) => {
            if points.is_empty() {
                return Err(ProbeError::EmptySampleSet);
            }
            let traces = points
                .par_iter()
                .map(|q| {
                    let image: DVector<f64> = u.eval(q)?;
                    check(&image)?;
                    Ok(pullvexity_value(&field, u, q, g, &chart)?)
                })
                .collect::<Result<Vec<f64>, ProbeError>>()?;
            Some(traces.into_iter().fold(f64::INFINITY, f64::min))
        }
    };
    Ok(HadamardReport {
        curvature,
        samples: samples.len(),
        inf_eigenvalue,
        witness: samples[witness_index].iter().cloned().collect(),
        min_distance,
        constant,
        strongly_convex: constant.is_some(),
        inf_pullvexity_trace,
    })
}
