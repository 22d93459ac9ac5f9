//! Spectral classification against the convexity notions (convex, mean
//! convex, `k`-convex, `k`-mean convex), pullvexity of a function along a
//! map, wideness constants, and second fundamental forms of level sets.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomcore::linalg::{
    generalized_sym_eigen, ky_fan_min, metric_cholesky, metric_orthonormalize, orthogonal_complement,
    sym_eigen_ascending,
};
use crate::geomcore::{
    covariant_hessian, gradient, hessian, jacobian, singular_triples, Chart, GeomError, MapSample, Point,
};

/// Gradient norm below which a level-set point is treated as singular.
pub const TOL_REG: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvexityError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("k = {k} exceeds the available dimension {max}")]
    KTooLarge { k: usize, max: usize },
    #[error("level set is singular at {point:?}: ‖grad f‖ = {grad_norm:e}")]
    SingularLevelPoint { point: Vec<f64>, grad_norm: f64 },
    #[error("certificate needs at least one sample point")]
    EmptySampleSet,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Realized sums and minima backing a [`ConvexityVerdict`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityMargins {
    pub min_eigenvalue: f64,
    pub trace: f64,
    /// Sum of the `k` smallest eigenvalues for the queried `k`.
    pub k_smallest_sum: f64,
    /// The `k`-th largest eigenvalue; `k`-convexity holds iff it is ≥ 0.
    pub kth_largest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityVerdict {
    pub point: Vec<f64>,
    pub k: usize,
    /// Hessian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub is_convex: bool,
    pub is_mean_convex: bool,
    pub is_k_convex: bool,
    pub is_k_mean_convex: bool,
    /// Number of non-negative eigenvalues (largest `k` for which `f` is `k`-convex).
    pub k_convex_max: usize,
    /// Smallest `k` for which `f` is `k`-mean convex; `None` if not even mean
    /// convex. `k`-mean convexity is inherited by every larger `k`.
    pub k_mean_convex_min: Option<usize>,
    pub margins: ConvexityMargins,
}

fn nonneg(x: f64, scale: f64) -> bool {
    x >= -1e-12 * scale
}

/// Classify a symmetric Hessian. Sign tests allow a relative slack of
/// `1e-12 · max(1, ‖H‖_max)` so exactly-zero sums are not lost to rounding.
pub fn classify_hessian(hess: &DMatrix<f64>, point: &Point, k: usize) -> Result<ConvexityVerdict, ConvexityError> {
    let n = hess.nrows();
    if k == 0 || k > n {
        return Err(ConvexityError::KTooLarge { k, max: n });
    }
    let (eigenvalues, _) = sym_eigen_ascending(hess);
    let scale = hess.amax().max(1.0);
    let k_convex_max = eigenvalues.iter().filter(|&&l| nonneg(l, scale)).count();
    let k_mean_convex_min = (1..=n).find(|&j| nonneg(ky_fan_min(&eigenvalues, j), scale));
    let margins = ConvexityMargins {
        min_eigenvalue: eigenvalues[0],
        trace: eigenvalues.iter().sum(),
        k_smallest_sum: ky_fan_min(&eigenvalues, k),
        kth_largest: eigenvalues[n - k],
    };
    Ok(ConvexityVerdict {
        point: point.iter().cloned().collect(),
        k,
        is_convex: k_convex_max == n,
        is_mean_convex: nonneg(margins.trace, scale),
        is_k_convex: k_convex_max >= k,
        is_k_mean_convex: nonneg(margins.k_smallest_sum, scale),
        k_convex_max,
        k_mean_convex_min,
        eigenvalues,
        margins,
    })
}

/// Convexity verdict of the scalar `f` at `p` (flat ambient coordinates).
pub fn classify_convexity(f: &MapSample, p: &Point, k: usize) -> Result<ConvexityVerdict, ConvexityError> {
    let hess = hessian(f, p)?;
    classify_hessian(&hess, p, k)
}

fn check_composable(f: &MapSample, u: &MapSample) -> Result<(), ConvexityError> {
    if f.domain_dim() != u.target_dim() {
        return Err(ConvexityError::DimensionMismatch(format!(
            "`{}` maps into ℝ^{} but `{}` is defined on ℝ^{}",
            u.label(),
            u.target_dim(),
            f.label(),
            f.domain_dim()
        )));
    }
    Ok(())
}

fn metric_inverse(chart: &Chart, p: &Point) -> Result<DMatrix<f64>, ConvexityError> {
    let g = chart.metric_at(p);
    metric_cholesky(&g).map(|c| c.inverse()).ok_or_else(|| {
        GeomError::MetricNotPositiveDefinite { chart: chart.name().to_string(), point: p.iter().cloned().collect() }
            .into()
    })
}

/// `u*Hess f` at `p`, as a symmetric form on the domain tangent space.
pub fn pulled_back_hessian(
    f: &MapSample,
    u: &MapSample,
    p: &Point,
    h: &Chart,
) -> Result<DMatrix<f64>, ConvexityError> {
    check_composable(f, u)?;
    let up = u.eval(p)?;
    let hess = covariant_hessian(f, &up, h)?;
    let jac = jacobian(u, p)?;
    Ok(jac.transpose() * hess * jac)
}

/// `tr_g(u*Hess f)(p)`.
pub fn pullvexity_value(
    f: &MapSample,
    u: &MapSample,
    p: &Point,
    g: &Chart,
    h: &Chart,
) -> Result<f64, ConvexityError> {
    let pulled = pulled_back_hessian(f, u, p, h)?;
    Ok((metric_inverse(g, p)? * pulled).trace())
}

/// The same trace through the singular-value expansion
/// `Σ λᵢ² Hess f(wᵢ, wᵢ)`.
pub fn pullvexity_expansion(
    f: &MapSample,
    u: &MapSample,
    p: &Point,
    g: &Chart,
    h: &Chart,
) -> Result<f64, ConvexityError> {
    check_composable(f, u)?;
    let triples = singular_triples(u, p, g, h)?;
    let hess = covariant_hessian(f, &u.eval(p)?, h)?;
    Ok(triples.iter().map(|t| t.lambda * t.lambda * t.w.dot(&(&hess * &t.w))).sum())
}

/// Minimum over `g`-orthonormal `k`-frames of `Σ Hess f(du eᵢ, du eᵢ)`:
/// the sum of the `k` smallest eigenvalues of `u*Hess f` relative to `g`.
pub fn k_mean_pullvexity_min(
    f: &MapSample,
    u: &MapSample,
    p: &Point,
    k: usize,
    g: &Chart,
    h: &Chart,
) -> Result<f64, ConvexityError> {
    let m = u.domain_dim();
    if k == 0 || k > m {
        return Err(ConvexityError::KTooLarge { k, max: m });
    }
    let pulled = pulled_back_hessian(f, u, p, h)?;
    let chol = metric_cholesky(&g.metric_at(p)).ok_or_else(|| GeomError::MetricNotPositiveDefinite {
        chart: g.name().to_string(),
        point: p.iter().cloned().collect(),
    })?;
    let (values, _) = generalized_sym_eigen(&pulled, &chol);
    Ok(ky_fan_min(&values, k))
}

/// Minimum over `h`-orthonormal `k`-frames `{wᵢ}` at `p` of
/// `Σ ⟨dP wᵢ, dP wᵢ⟩_b`. With `restrict_to`, frames are taken inside the
/// column span of that matrix (e.g. the tangent space of an image).
pub fn wideness_constant(
    proj: &MapSample,
    p: &Point,
    k: usize,
    h: &Chart,
    b: &Chart,
    restrict_to: Option<&DMatrix<f64>>,
) -> Result<f64, ConvexityError> {
    let dp = jacobian(proj, p)?;
    let bm = b.metric_at(&proj.eval(p)?);
    let form = dp.transpose() * bm * &dp;
    let hm = h.metric_at(p);
    let values = match restrict_to {
        None => {
            let n = proj.domain_dim();
            if k == 0 || k > n {
                return Err(ConvexityError::KTooLarge { k, max: n });
            }
            let chol = metric_cholesky(&hm).ok_or_else(|| GeomError::MetricNotPositiveDefinite {
                chart: h.name().to_string(),
                point: p.iter().cloned().collect(),
            })?;
            generalized_sym_eigen(&form, &chol).0
        }
        Some(basis) => {
            let q = metric_orthonormalize(basis, &hm);
            if k == 0 || k > q.ncols() {
                return Err(ConvexityError::KTooLarge { k, max: q.ncols() });
            }
            sym_eigen_ascending(&(q.transpose() * form * q)).0
        }
    };
    Ok(ky_fan_min(&values, k))
}

/// Choice of unit normal for a level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `+grad f / ‖grad f‖`, the sublevel (pullvex) side's outward normal.
    #[default]
    AlongGradient,
    AgainstGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetShape {
    /// Matrix of `A` in `tangent_basis`.
    pub shape: DMatrix<f64>,
    /// Orthonormal basis (columns) of `ker df(p)`.
    pub tangent_basis: DMatrix<f64>,
    pub normal: DVector<f64>,
    pub grad_norm: f64,
}

impl LevelSetShape {
    pub fn principal_curvatures(&self) -> Vec<f64> {
        sym_eigen_ascending(&self.shape).0
    }
}

/// Second fundamental form of the level set of `f` through `p` in flat
/// ambient coordinates: `A = ±(1/‖grad f‖) Hess f` restricted to `ker df`.
pub fn second_fundamental_form(
    f: &MapSample,
    p: &Point,
    orientation: Orientation,
) -> Result<LevelSetShape, ConvexityError> {
    let grad = gradient(f, p)?;
    let grad_norm = grad.norm();
    if grad_norm <= TOL_REG {
        return Err(ConvexityError::SingularLevelPoint { point: p.iter().cloned().collect(), grad_norm });
    }
    let hess = hessian(f, p)?;
    let basis = orthogonal_complement(&grad);
    let sign = match orientation {
        Orientation::AlongGradient => 1.0,
        Orientation::AgainstGradient => -1.0,
    };
    let shape = basis.transpose() * hess * &basis * (sign / grad_norm);
    Ok(LevelSetShape { shape, tangent_basis: basis, normal: grad * (sign / grad_norm), grad_norm })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullvexCertificate {
    pub map_label: String,
    pub function_label: String,
    pub sample_points: Vec<Vec<f64>>,
    /// Infimum of `tr_g(u*Hess f)` over the samples.
    pub min_trace: f64,
    pub declared_c: Option<f64>,
    /// Certified strong-pullvexity constant (valid on the samples only).
    pub constant_c: Option<f64>,
    pub witness: Vec<f64>,
    pub witness_index: usize,
    pub scope: String,
}

/// Sampled strong-pullvexity certificate for `f` along `u`. With a declared
/// `C`, the constant is certified iff `min_trace ≥ C > 0`; otherwise the
/// sampled infimum is reported as the constant when positive.
pub fn strong_pullvexity_certificate(
    f: &MapSample,
    u: &MapSample,
    samples: &[Point],
    g: &Chart,
    h: &Chart,
    declared_c: Option<f64>,
) -> Result<PullvexCertificate, ConvexityError> {
    if samples.is_empty() {
        return Err(ConvexityError::EmptySampleSet);
    }
    let traces: Vec<f64> = samples
        .par_iter()
        .map(|p| pullvexity_value(f, u, p, g, h))
        .collect::<Result<_, _>>()?;
    let (witness_index, min_trace) = traces
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let constant_c = match declared_c {
        Some(c) => (c > 0.0 && min_trace >= c).then_some(c),
        None => (min_trace > 0.0).then_some(min_trace),
    };
    Ok(PullvexCertificate {
        map_label: u.label().to_string(),
        function_label: f.label().to_string(),
        sample_points: samples.iter().map(|p| p.iter().cloned().collect()).collect(),
        min_trace,
        declared_c,
        constant_c,
        witness: samples[witness_index].iter().cloned().collect(),
        witness_index,
        scope: format!("certified over {} sampled points only", samples.len()),
    })
}
