//! Numeric kernel: charts with metric fields, smooth maps with derivative
//! access, and metric-aware singular value analysis of differentials.

pub mod chart;
pub mod linalg;
pub mod map;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use chart::{Chart, MetricField};
pub use map::{
    covariant_hessian, gradient, gradient_norm, hessian, jacobian, laplace_beltrami, DerivativeMode,
    MapSample,
};

pub type Point = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point {point:?} lies outside the domain of `{label}`")]
    PointOutOfDomain { label: String, point: Vec<f64> },
    #[error("finite-difference step {step} exceeds the margin {margin} of {point:?} to the domain boundary")]
    StepTooLargeForMargin { step: f64, margin: f64, point: Vec<f64> },
    #[error("metric of `{chart}` is not positive definite at {point:?}")]
    MetricNotPositiveDefinite { chart: String, point: Vec<f64> },
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("`{label}` is not scalar-valued")]
    NotScalar { label: String },
}

/// One principal axis of `Du(p)`: `Du v = λ w`, `(Du)* w = λ v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriple {
    pub lambda: f64,
    /// Unit vector of the domain tangent space (w.r.t. `g`).
    pub v: DVector<f64>,
    /// Unit vector of the target tangent space (w.r.t. `h`).
    pub w: DVector<f64>,
}

fn metric_factor(chart: &Chart, p: &Point) -> Result<DMatrix<f64>, GeomError> {
    let g = chart.metric_at(p);
    linalg::metric_cholesky(&g)
        .map(|c| c.l())
        .ok_or_else(|| GeomError::MetricNotPositiveDefinite {
            chart: chart.name().to_string(),
            point: p.iter().cloned().collect(),
        })
}

fn check_dims(u: &MapSample, g: &Chart, h: &Chart) -> Result<(), GeomError> {
    if g.dim() != u.domain_dim() {
        return Err(GeomError::DimensionMismatch {
            what: "domain chart",
            expected: u.domain_dim(),
            found: g.dim(),
        });
    }
    if h.dim() != u.target_dim() {
        return Err(GeomError::DimensionMismatch {
            what: "target chart",
            expected: u.target_dim(),
            found: h.dim(),
        });
    }
    Ok(())
}

/// Singular triples of `Du(p)` measured with `g` on the domain and `h` on the
/// target, in non-increasing order of `λ`. Exactly `min(m, n)` triples.
///
/// Both metrics are whitened by their Cholesky factors (`g = L Lᵀ`,
/// `h = K Kᵀ`) and the Euclidean SVD of `Kᵀ Du L⁻ᵀ` is mapped back.
/// At repeated singular values the vectors are an arbitrary orthonormal
/// basis of the singular subspace.
pub fn singular_triples(
    u: &MapSample,
    p: &Point,
    g: &Chart,
    h: &Chart,
) -> Result<Vec<SingularTriple>, GeomError> {
    check_dims(u, g, h)?;
    let jac = jacobian(u, p)?;
    let up = u.eval(p)?;
    let l = metric_factor(g, p)?;
    let k = metric_factor(h, &up)?;
    Ok(whitened_triples(&jac, &l, &k))
}

pub(crate) fn whitened_triples(jac: &DMatrix<f64>, l: &DMatrix<f64>, k: &DMatrix<f64>) -> Vec<SingularTriple> {
    let l_inv_t = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(l.nrows(), l.ncols()))
        .expect("invertible factor")
        .transpose();
    let k_inv_t = k
        .clone()
        .solve_lower_triangular(&DMatrix::identity(k.nrows(), k.ncols()))
        .expect("invertible factor")
        .transpose();
    let whitened = k.transpose() * jac * &l_inv_t;
    let svd = whitened.svd(true, true);
    let u_mat = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order
        .into_iter()
        .map(|i| SingularTriple {
            lambda: svd.singular_values[i].max(0.0),
            v: &l_inv_t * v_t.row(i).transpose(),
            w: &k_inv_t * u_mat.column(i),
        })
        .collect()
}

/// `u*h` at `p`: `Duᵀ h(u(p)) Du`.
pub fn pullback_metric(u: &MapSample, p: &Point, h: &Chart) -> Result<DMatrix<f64>, GeomError> {
    if h.dim() != u.target_dim() {
        return Err(GeomError::DimensionMismatch {
            what: "target chart",
            expected: u.target_dim(),
            found: h.dim(),
        });
    }
    let jac = jacobian(u, p)?;
    let hm = h.metric_at(&u.eval(p)?);
    Ok(linalg::symmetrize(&(jac.transpose() * hm * &jac)))
}

/// Energy density `e(u) = tr_g(u*h) = Σ λᵢ²`.
pub fn energy_density_at(u: &MapSample, p: &Point, g: &Chart, h: &Chart) -> Result<f64, GeomError> {
    check_dims(u, g, h)?;
    let pull = pullback_metric(u, p, h)?;
    let g_inv = g.metric_at(p).try_inverse().ok_or_else(|| GeomError::MetricNotPositiveDefinite {
        chart: g.name().to_string(),
        point: p.iter().cloned().collect(),
    })?;
    Ok((g_inv * pull).trace())
}

/// Best-fit conformal factor of `u` at `p`: `e^{2φ} = tr_g(u*h) / m` and the
/// relative deviation `‖u*h − e^{2φ} g‖ / ‖e^{2φ} g‖` (norms taken in `g`).
/// Returns `(e^{2φ}, deviation)`; the deviation is 0 for conformal maps.
pub fn conformal_factor(u: &MapSample, p: &Point, g: &Chart, h: &Chart) -> Result<(f64, f64), GeomError> {
    check_dims(u, g, h)?;
    let triples = singular_triples(u, p, g, h)?;
    let m = u.domain_dim();
    // in a g-orthonormal frame u*h is diagonal with entries λᵢ² (zero beyond min(m, n))
    let mut squares: Vec<f64> = triples.iter().map(|t| t.lambda * t.lambda).collect();
    squares.resize(m, 0.0);
    Ok(conformal_fit(&squares))
}

/// Conformal fit of a form given by its eigenvalues relative to the domain
/// metric.
pub(crate) fn conformal_fit(eigenvalues: &[f64]) -> (f64, f64) {
    let m = eigenvalues.len() as f64;
    let factor = eigenvalues.iter().sum::<f64>() / m;
    if factor <= 0.0 {
        return (0.0, if eigenvalues.iter().all(|&l| l == 0.0) { 0.0 } else { f64::INFINITY });
    }
    let off: f64 = eigenvalues.iter().map(|l| (l - factor).powi(2)).sum::<f64>().sqrt();
    (factor, off / (factor * m.sqrt()))
}

/// Number of singular values above `tol · max(1, λ_max)`.
pub fn numerical_rank(triples: &[SingularTriple], tol: f64) -> usize {
    let scale = triples.first().map_or(1.0, |t| t.lambda.max(1.0));
    triples.iter().filter(|t| t.lambda > tol * scale).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Point {
        DVector::from_column_slice(x)
    }

    #[test]
    fn identity_singular_values() {
        let u = MapSample::identity(3);
        let r3 = Chart::euclidean(3);
        let t = singular_triples(&u, &v(&[1.0, 2.0, 3.0]), &r3, &r3).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.iter().all(|t| (t.lambda - 1.0).abs() < 1e-12));
    }

    #[test]
    fn diagonal_singular_values_sorted() {
        let u = MapSample::linear("s", DMatrix::from_diagonal(&v(&[3.0, 4.0])));
        let r2 = Chart::euclidean(2);
        let t = singular_triples(&u, &v(&[0.0, 0.0]), &r2, &r2).unwrap();
        assert!((t[0].lambda - 4.0).abs() < 1e-12);
        assert!((t[1].lambda - 3.0).abs() < 1e-12);
        for tr in &t {
            let jac = jacobian(&u, &v(&[0.0, 0.0])).unwrap();
            assert!((jac * &tr.v - &tr.w * tr.lambda).norm() < 1e-12);
        }
    }

    #[test]
    fn rectangular_maps_give_min_dim_triples() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 1.0, 3.0, -1.0]);
        let u = MapSample::linear("a", a.clone());
        let t = singular_triples(&u, &v(&[0.0, 0.0]), &Chart::euclidean(2), &Chart::euclidean(3)).unwrap();
        assert_eq!(t.len(), 2);
        let classic = a.singular_values();
        let mut classic: Vec<f64> = classic.iter().cloned().collect();
        classic.sort_by(|a, b| b.total_cmp(a));
        for (t, s) in t.iter().zip(classic) {
            assert!((t.lambda - s).abs() < 1e-9);
        }
    }

    #[test]
    fn curved_metric_triples_are_orthonormal() {
        let u = MapSample::new("m", 2, 2, |p| v(&[p[0] + 0.2 * p[1] * p[1], 0.5 * p[1] - 0.1 * p[0]]));
        let disk = Chart::poincare_disk(-1.0);
        let p = v(&[0.2, 0.1]);
        let t = singular_triples(&u, &p, &disk, &disk).unwrap();
        let g = disk.metric_at(&p);
        let h = disk.metric_at(&u.eval(&p).unwrap());
        let jac = jacobian(&u, &p).unwrap();
        for (i, a) in t.iter().enumerate() {
            assert!((&jac * &a.v - &a.w * a.lambda).dot(&(&h * (&jac * &a.v - &a.w * a.lambda))).sqrt() < 1e-9);
            for (j, b) in t.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.v.dot(&(&g * &b.v)) - want).abs() < 1e-9);
                assert!((a.w.dot(&(&h * &b.w)) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn indefinite_metric_is_rejected() {
        let bad = Chart::new(
            "bad",
            vec![(-1.0, 1.0); 2],
            MetricField::Constant(DMatrix::from_diagonal(&v(&[1.0, -1.0]))),
        );
        let u = MapSample::identity(2);
        let err = singular_triples(&u, &v(&[0.0, 0.0]), &bad, &Chart::euclidean(2)).unwrap_err();
        assert!(matches!(err, GeomError::MetricNotPositiveDefinite { .. }));
    }

    #[test]
    fn pullback_of_identity_is_target_metric() {
        let disk = Chart::poincare_disk(-1.0);
        let p = v(&[0.1, 0.3]);
        let pb = pullback_metric(&MapSample::identity(2), &p, &disk).unwrap();
        assert!((pb - disk.metric_at(&p)).amax() < 1e-12);
    }

    #[test]
    fn conformal_fit_of_stretch() {
        let u = MapSample::linear("s", DMatrix::from_diagonal(&v(&[2.0, 1.0])));
        let r2 = Chart::euclidean(2);
        let (factor, dev) = conformal_factor(&u, &v(&[0.0, 0.0]), &r2, &r2).unwrap();
        assert!((factor - 2.5).abs() < 1e-12);
        assert!((dev - 0.6).abs() < 1e-12);
        let (factor, dev) = conformal_factor(&MapSample::identity(2), &v(&[0.1, 0.2]), &r2, &r2).unwrap();
        assert!((factor - 1.0).abs() < 1e-12 && dev < 1e-12);
    }

    #[test]
    fn pullback_of_diagonal_map() {
        let u = MapSample::linear("s", DMatrix::from_diagonal(&v(&[3.0, 4.0])));
        let pb = pullback_metric(&u, &v(&[0.5, 0.5]), &Chart::euclidean(2)).unwrap();
        assert_eq!(pb, DMatrix::from_diagonal(&v(&[9.0, 16.0])));
    }
}
