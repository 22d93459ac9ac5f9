//! Nearest-point projections onto simplices and convex hulls of point sets.

use nalgebra::{DMatrix, DVector};

/// Largest vertex count handled by exhaustive face enumeration.
pub const FACE_ENUMERATION_LIMIT: usize = 7;

const BARYCENTRIC_SLACK: f64 = 1e-12;

/// Nearest point of a convex set together with the derivative of the
/// projection map at the query point.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: DVector<f64>,
    pub distance: f64,
    /// Orthogonal projector onto the directions of the exposed face that
    /// contains `point`; this is `Dπ(x)` for a polytope away from the
    /// boundaries of its normal cones.
    pub tangent: DMatrix<f64>,
}

/// Orthogonal projector onto the span of `vectors` (numerical rank cut at
/// `tol`).
pub fn span_projector(vectors: &[DVector<f64>], dim: usize, tol: f64) -> DMatrix<f64> {
    if vectors.is_empty() {
        return DMatrix::zeros(dim, dim);
    }
    let m = DMatrix::from_columns(vectors);
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut proj = DMatrix::zeros(dim, dim);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let c = u.column(i);
            proj += &c * c.transpose();
        }
    }
    proj
}

fn diameter(points: &[DVector<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Tangent projector of the face of `conv(points)` exposed by the normal
/// `x − π`.
fn exposed_face_tangent(points: &[DVector<f64>], x: &DVector<f64>, pi: &DVector<f64>) -> DMatrix<f64> {
    let dim = x.len();
    let scale = diameter(points).max(x.norm()).max(1.0);
    let normal = x - pi;
    let len = normal.norm();
    let on_face: Vec<&DVector<f64>> = if len <= 1e-12 * scale {
        points.iter().collect()
    } else {
        let n = normal / len;
        points.iter().filter(|p| (*p - pi).dot(&n) >= -1e-9 * scale).collect()
    };
    let dirs: Vec<DVector<f64>> = on_face.iter().skip(1).map(|p| *p - on_face[0]).collect();
    span_projector(&dirs, dim, 1e-10 * scale)
}

/// Barycentric least-squares projection of `x` onto the affine hull of
/// `face`; `None` if the face is degenerate.
fn affine_projection(face: &[&DVector<f64>], x: &DVector<f64>) -> Option<(DVector<f64>, Vec<f64>)> {
    let p0 = face[0];
    if face.len() == 1 {
        return Some((p0.clone(), vec![1.0]));
    }
    let e = DMatrix::from_columns(&face[1..].iter().map(|p| *p - p0).collect::<Vec<_>>());
    let gram = e.transpose() * &e;
    let a = gram.cholesky()?.solve(&(e.transpose() * (x - p0)));
    let mut bary = Vec::with_capacity(face.len());
    bary.push(1.0 - a.sum());
    bary.extend(a.iter().cloned());
    Some((p0 + &e * a, bary))
}

/// Exact projection onto a simplex by enumerating its faces.
fn project_simplex_enumerate(vertices: &[DVector<f64>], x: &DVector<f64>) -> DVector<f64> {
    let n = vertices.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 1usize..(1 << n) {
        let face: Vec<&DVector<f64>> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &vertices[i]).collect();
        let Some((point, bary)) = affine_projection(&face, x) else { continue };
        if bary.iter().any(|&b| b < -BARYCENTRIC_SLACK) {
            continue;
        }
        let d = (x - &point).norm();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, point));
        }
    }
    best.expect("every vertex is a valid face").1
}

/// Nearest point of a simplex given by affinely independent vertices:
/// face enumeration up to `FACE_ENUMERATION_LIMIT` vertices, Wolfe's
/// algorithm beyond.
pub fn project_simplex(vertices: &[DVector<f64>], x: &DVector<f64>) -> Projection {
    assert!(!vertices.is_empty(), "simplex needs at least one vertex");
    let point = if vertices.len() <= FACE_ENUMERATION_LIMIT {
        project_simplex_enumerate(vertices, x)
    } else {
        min_norm_point(vertices, x)
    };
    finish(vertices, x, point)
}

/// Nearest point of the convex hull of `points`.
pub fn project_hull(points: &[DVector<f64>], x: &DVector<f64>) -> Projection {
    assert!(!points.is_empty(), "hull needs at least one point");
    let point = min_norm_point(points, x);
    finish(points, x, point)
}

fn finish(points: &[DVector<f64>], x: &DVector<f64>, point: DVector<f64>) -> Projection {
    let tangent = exposed_face_tangent(points, x, &point);
    let distance = (x - &point).norm();
    Projection { point, distance, tangent }
}

/// Affine minimizer of `‖Σ αᵢ pᵢ‖` subject to `Σ αᵢ = 1` over the corral.
fn affine_minimizer(pts: &[DVector<f64>], corral: &[usize]) -> Option<DVector<f64>> {
    let m = corral.len();
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    for (a, &i) in corral.iter().enumerate() {
        for (b, &j) in corral.iter().enumerate() {
            kkt[(a, b)] = pts[i].dot(&pts[j]);
        }
        kkt[(a, m)] = 1.0;
        kkt[(m, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(m + 1);
    rhs[m] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    Some(sol.rows(0, m).into_owned())
}

/// Wolfe's minimum-norm-point algorithm on `conv(points) − x`; returns the
/// nearest hull point to `x`.
fn min_norm_point(points: &[DVector<f64>], x: &DVector<f64>) -> DVector<f64> {
    let pts: Vec<DVector<f64>> = points.iter().map(|p| p - x).collect();
    let scale = pts.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let start = (0..pts.len())
        .min_by(|&a, &b| pts[a].norm_squared().total_cmp(&pts[b].norm_squared()))
        .expect("non-empty");
    let mut corral = vec![start];
    let mut weights = vec![1.0];
    let mut y = pts[start].clone();
    let combine = |corral: &[usize], w: &[f64]| -> DVector<f64> {
        corral.iter().zip(w).fold(DVector::zeros(x.len()), |acc, (&i, &wi)| acc + &pts[i] * wi)
    };
    for _ in 0..(50 * pts.len() + 100) {
        let j = (0..pts.len())
            .min_by(|&a, &b| pts[a].dot(&y).total_cmp(&pts[b].dot(&y)))
            .expect("non-empty");
        if y.norm_squared() - pts[j].dot(&y) <= 1e-15 * scale || corral.contains(&j) {
            break;
        }
        corral.push(j);
        weights.push(0.0);
        loop {
            let Some(alpha) = affine_minimizer(&pts, &corral) else {
                corral.pop();
                weights.pop();
                return combine(&corral, &weights) + x;
            };
            if alpha.iter().all(|&a| a > 1e-14) {
                weights = alpha.iter().cloned().collect();
                y = combine(&corral, &weights);
                break;
            }
            let theta = weights
                .iter()
                .zip(alpha.iter())
                .filter(|(_, &a)| a <= 1e-14)
                .map(|(&w, &a)| w / (w - a))
                .fold(1.0, f64::min);
            for (w, &a) in weights.iter_mut().zip(alpha.iter()) {
                *w = theta * a + (1.0 - theta) * *w;
            }
            let keep: Vec<bool> = weights.iter().map(|&w| w > 1e-14).collect();
            if keep.iter().all(|&k| k) {
                // numerical stall: drop the smallest weight
                let min = (0..weights.len()).min_by(|&a, &b| weights[a].total_cmp(&weights[b])).expect("non-empty");
                corral.remove(min);
                weights.remove(min);
            } else {
                let (c, w): (Vec<usize>, Vec<f64>) =
                    corral.iter().zip(&weights).zip(&keep).filter(|(_, &k)| k).map(|((&c, &w), _)| (c, w)).unzip();
                corral = c;
                weights = w;
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
    }
    y + x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn segment_projection_clamps() {
        let seg = [v(&[0.0, 0.0]), v(&[1.0, 0.0])];
        let p = project_simplex(&seg, &v(&[2.0, 1.0]));
        assert!((p.point - v(&[1.0, 0.0])).norm() < 1e-14);
        assert!(p.tangent.norm() < 1e-12);
        let p = project_simplex(&seg, &v(&[0.5, 1.0]));
        assert!((p.distance - 1.0).abs() < 1e-14);
        assert!((p.tangent[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wolfe_matches_enumeration_on_triangle() {
        let tri = [v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])];
        for x in [v(&[0.2, 0.2, 1.0]), v(&[2.0, 2.0, 0.5]), v(&[-1.0, 0.3, -0.2])] {
            let a = project_simplex(&tri, &x);
            let b = project_hull(&tri, &x);
            assert!((a.point - b.point).norm() < 1e-12);
        }
    }

    #[test]
    fn hull_of_square_interior_is_identity() {
        let sq = [v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[1.0, 1.0]), v(&[0.0, 1.0])];
        let p = project_hull(&sq, &v(&[0.3, 0.6]));
        assert!(p.distance < 1e-14);
        assert!((p.tangent - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
