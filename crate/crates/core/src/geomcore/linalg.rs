//! Small dense linear-algebra helpers shared by every module: symmetric
//! eigenproblems (plain and metric-weighted), Ky Fan sums and orthonormal
//! complements.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn sym_eigen_ascending(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = symmetrize(a).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Cholesky factor of a metric, `None` unless it is symmetric positive definite.
pub fn metric_cholesky(g: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if !g.is_square() || g.nrows() == 0 {
        return None;
    }
    let scale = g.amax().max(1.0);
    if (g - g.transpose()).amax() > 1e-12 * scale {
        return None;
    }
    let chol = Cholesky::new(symmetrize(g))?;
    // Cholesky accepts matrices that are numerically semidefinite; reject those.
    let l = chol.l();
    let min_diag = l.diagonal().iter().cloned().fold(f64::INFINITY, f64::min);
    if min_diag <= 1e-150 {
        return None;
    }
    Some(chol)
}

/// Eigen-decomposition of the symmetric form `a` relative to the metric `g`:
/// solves `a x = μ g x` by whitening with the Cholesky factor of `g`.
/// Returns ascending eigenvalues and `g`-orthonormal eigenvector columns.
pub fn generalized_sym_eigen(
    a: &DMatrix<f64>,
    chol_g: &Cholesky<f64, Dyn>,
) -> (Vec<f64>, DMatrix<f64>) {
    let l = chol_g.l();
    let l_inv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(l.nrows(), l.ncols()))
        .expect("cholesky factor is invertible");
    let whitened = &l_inv * symmetrize(a) * l_inv.transpose();
    let (values, y) = sym_eigen_ascending(&whitened);
    let x = l_inv.transpose() * y;
    (values, x)
}

/// Sum of the `k` smallest entries of an ascending list (the Ky Fan minimum
/// over orthonormal `k`-frames).
pub fn ky_fan_min(ascending: &[f64], k: usize) -> f64 {
    ascending.iter().take(k).sum()
}

/// Orthonormal basis (columns) of the orthogonal complement of `v` in ℝⁿ.
pub fn orthogonal_complement(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    let unit = v.normalize();
    basis.push(unit);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        for b in &basis {
            let c = b.dot(&e);
            e -= b * c;
        }
        // second pass for numerical orthogonality
        for b in &basis {
            let c = b.dot(&e);
            e -= b * c;
        }
        let norm = e.norm();
        if norm > 1e-8 {
            basis.push(e / norm);
        }
        if basis.len() == n {
            break;
        }
    }
    DMatrix::from_columns(&basis[1..])
}

/// Gram–Schmidt orthonormalization of the columns of `a` with respect to
/// the metric `g`; columns that are (numerically) dependent are dropped.
pub fn metric_orthonormalize(a: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for j in 0..a.ncols() {
        let mut v: DVector<f64> = a.column(j).into_owned();
        let scale = (v.dot(&(g * &v))).sqrt();
        for _ in 0..2 {
            for b in &out {
                let c = b.dot(&(g * &v));
                v -= b * c;
            }
        }
        let norm = v.dot(&(g * &v)).sqrt();
        if norm > 1e-10 * scale.max(1e-300) {
            out.push(v / norm);
        }
    }
    if out.is_empty() {
        DMatrix::zeros(a.nrows(), 0)
    } else {
        DMatrix::from_columns(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_ascending() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let (vals, vecs) = sym_eigen_ascending(&a);
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_eigen_is_metric_orthonormal() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
        let chol = metric_cholesky(&g).unwrap();
        let (vals, x) = generalized_sym_eigen(&a, &chol);
        let gram = x.transpose() * &g * &x;
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-12);
        for (i, mu) in vals.iter().enumerate() {
            let xi = x.column(i);
            let r = &a * xi - (&g * xi) * *mu;
            assert!(r.amax() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite_metric() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(metric_cholesky(&g).is_none());
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(metric_cholesky(&g).is_none());
    }

    #[test]
    fn complement_is_orthonormal() {
        let v = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let q = orthogonal_complement(&v);
        assert_eq!(q.ncols(), 2);
        assert!((q.transpose() * &q - DMatrix::identity(2, 2)).amax() < 1e-14);
        assert!((q.transpose() * v).amax() < 1e-14);
    }
}
