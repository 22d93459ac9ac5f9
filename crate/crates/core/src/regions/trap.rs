//! Simplex traps: `T = (⋃_{s,t∈[0,R]} Δ_{s,t}) \ (Δ_{R,R})_R` with
//! `Δ_{s,t} = Δ + sν + t eₙ`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::convex::{project_simplex, Projection};
use super::RegionError;

/// Rigid motion `x ↦ rotation·x + translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub rotation: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl Frame {
    pub fn identity(dim: usize) -> Self {
        Self { rotation: DMatrix::identity(dim, dim), translation: DVector::zeros(dim) }
    }

    pub fn new(rotation: DMatrix<f64>, translation: DVector<f64>) -> Result<Self, RegionError> {
        let n = rotation.nrows();
        if rotation.ncols() != n || translation.len() != n {
            return Err(RegionError::InvalidTrap("frame rotation must be square and match the translation".into()));
        }
        let defect = (rotation.transpose() * &rotation - DMatrix::identity(n, n)).amax();
        if defect > 1e-9 {
            return Err(RegionError::InvalidTrap(format!("frame rotation is not orthogonal (defect {defect:e})")));
        }
        Ok(Self { rotation, translation })
    }

    pub fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.rotation * y + &self.translation
    }

    pub fn apply_inverse(&self, x: &DVector<f64>) -> DVector<f64> {
        self.rotation.tr_mul(&(x - &self.translation))
    }
}

/// Membership of a point in a trap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapMembership {
    Inside,
    /// Within `eps` of `∂T` away from the removed neighbourhood.
    OnBoundary,
    Outside,
}

/// Simplex trap with base simplex `Δ` in `{xₙ = 0}`, placed by `frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexTrap {
    vertices: Vec<DVector<f64>>,
    r: f64,
    nu: DVector<f64>,
    frame: Frame,
    /// Pseudo-inverse rows of the edge matrix of `Δ`, for barycentrics.
    edge_pinv: DMatrix<f64>,
    /// Norms of the barycentric gradients inside the span of `Δ`.
    facet_scale: Vec<f64>,
}

impl SimplexTrap {
    /// `vertices` are the `n−1` base points in ℝⁿ (last coordinate 0). A
    /// missing `nu` is taken as the unit normal of `Δ` inside `{xₙ = 0}`.
    pub fn new(
        vertices: Vec<DVector<f64>>,
        r: f64,
        nu: Option<DVector<f64>>,
        frame: Option<Frame>,
    ) -> Result<Self, RegionError> {
        let n = vertices.len() + 1;
        if n < 2 {
            return Err(RegionError::InvalidTrap("a trap needs at least one base vertex".into()));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(RegionError::InvalidTrap(format!("R must be positive, got {r}")));
        }
        for (i, p) in vertices.iter().enumerate() {
            if p.len() != n {
                return Err(RegionError::DimensionMismatch { what: "trap vertex", expected: n, found: p.len() });
            }
            if p[n - 1].abs() > 1e-12 * p.amax().max(1.0) {
                return Err(RegionError::InvalidTrap(format!("vertex {i} is not in the base hyperplane xₙ = 0")));
            }
        }
        let p0 = &vertices[0];
        let edges: Vec<DVector<f64>> = vertices[1..].iter().map(|p| p - p0).collect();
        let scale = vertices.iter().map(|p| p.norm()).fold(1.0, f64::max);
        let (edge_pinv, span) = if edges.is_empty() {
            (DMatrix::zeros(0, n), DMatrix::zeros(n, n))
        } else {
            let e = DMatrix::from_columns(&edges);
            let svd = e.clone().svd(false, false);
            let smallest = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
            if smallest <= 1e-10 * scale {
                return Err(RegionError::InvalidTrap("base vertices are not affinely independent".into()));
            }
            let gram = e.transpose() * &e;
            let pinv = gram.try_inverse().expect("independent edges") * e.transpose();
            let span = &e * &pinv;
            (pinv, span)
        };
        let mut e_n = DVector::zeros(n);
        e_n[n - 1] = 1.0;
        let nu = match nu {
            Some(nu) => {
                if nu.len() != n {
                    return Err(RegionError::DimensionMismatch { what: "trap normal ν", expected: n, found: nu.len() });
                }
                if (nu.norm() - 1.0).abs() > 1e-9 {
                    return Err(RegionError::InvalidTrap(format!("ν must be a unit vector, ‖ν‖ = {}", nu.norm())));
                }
                if nu[n - 1].abs() > 1e-9 || (&span * &nu).norm() > 1e-9 {
                    return Err(RegionError::InvalidTrap("ν must lie in xₙ = 0 and be orthogonal to Δ".into()));
                }
                nu
            }
            None => {
                let rest = DMatrix::identity(n, n) - &span - &e_n * e_n.transpose();
                let eig = rest.symmetric_eigen();
                let i = eig.eigenvalues.imax();
                let mut nu = eig.eigenvectors.column(i).into_owned();
                if nu.iter().find(|c| c.abs() > 1e-12).is_some_and(|&c| c < 0.0) {
                    nu = -nu;
                }
                nu
            }
        };
        let frame = frame.unwrap_or_else(|| Frame::identity(n));
        if frame.rotation.nrows() != n {
            return Err(RegionError::DimensionMismatch { what: "trap frame", expected: n, found: frame.rotation.nrows() });
        }
        let facet_scale = if edges.is_empty() {
            Vec::new()
        } else {
            let mut scales = vec![edge_pinv.row_sum().norm()];
            scales.extend((0..edge_pinv.nrows()).map(|i| edge_pinv.row(i).norm()));
            scales
        };
        Ok(Self { vertices, r, nu, frame, edge_pinv, facet_scale })
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() + 1
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn base_vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn nu(&self) -> &DVector<f64> {
        &self.nu
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// The same trap with its base in `{xₙ = 0}` (identity frame).
    pub fn base_trap(&self) -> Self {
        Self { frame: Frame::identity(self.dim()), ..self.clone() }
    }

    fn e_n(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim());
        e[self.dim() - 1] = 1.0;
        e
    }

    /// Splits base coordinates `y` into `(y', s, t)` with `y = y' + sν + t eₙ`
    /// and `y'` in the affine hull of `Δ` shifted along `ν, eₙ`.
    fn split(&self, y: &DVector<f64>) -> (DVector<f64>, f64, f64) {
        let t = y[self.dim() - 1];
        let s = (y - &self.vertices[0]).dot(&self.nu);
        let yp = y - &self.nu * s - self.e_n() * t;
        (yp, s, t)
    }

    /// `Δ_{s,t}` in base coordinates.
    pub fn base_layer(&self, s: f64, t: f64) -> Vec<DVector<f64>> {
        let shift = &self.nu * s + self.e_n() * t;
        self.vertices.iter().map(|p| p + &shift).collect()
    }

    /// `Δ_{s,t}` in world coordinates.
    pub fn layer(&self, s: f64, t: f64) -> Vec<DVector<f64>> {
        self.base_layer(s, t).iter().map(|p| self.frame.apply(p)).collect()
    }

    /// Barycentric coordinates of the in-plane part of `y` with respect to
    /// `Δ`, scaled to distances from the facets of `Δ` within its span.
    fn facet_depths(&self, yp: &DVector<f64>) -> Vec<f64> {
        if self.facet_scale.is_empty() {
            return Vec::new();
        }
        let a = &self.edge_pinv * (yp - &self.vertices[0]);
        let mut bary = vec![1.0 - a.sum()];
        bary.extend(a.iter().cloned());
        bary.iter().zip(&self.facet_scale).map(|(b, s)| b / s).collect()
    }

    /// Distance from base point `y` to `Δ_{R,R}`.
    pub fn base_excluded_distance(&self, y: &DVector<f64>) -> f64 {
        let (yp, s, t) = self.split(y);
        let d = project_simplex(&self.vertices, &yp).distance;
        (d * d + (s - self.r).powi(2) + (t - self.r).powi(2)).sqrt()
    }

    /// Depth of base point `y` in `B = ⋃ Δ_{s,t}`: the minimum signed
    /// distance to the facet hyperplanes of `B` (positive inside; equal to
    /// the distance to `∂B` there).
    pub fn base_body_depth(&self, y: &DVector<f64>) -> f64 {
        let (yp, s, t) = self.split(y);
        self.facet_depths(&yp).into_iter().fold(s.min(self.r - s).min(t).min(self.r - t), f64::min)
    }

    /// Nearest point of `B` to the base point `y` with the derivative of the
    /// projection.
    pub fn base_body_projection(&self, y: &DVector<f64>) -> Projection {
        let (yp, s, t) = self.split(y);
        let inner = project_simplex(&self.vertices, &yp);
        let (sc, tc) = (s.clamp(0.0, self.r), t.clamp(0.0, self.r));
        let point = &inner.point + &self.nu * sc + self.e_n() * tc;
        let mut tangent = inner.tangent;
        if (0.0..=self.r).contains(&s) {
            tangent += &self.nu * self.nu.transpose();
        }
        if (0.0..=self.r).contains(&t) {
            let e = self.e_n();
            tangent += &e * e.transpose();
        }
        Projection { distance: (y - &point).norm(), point, tangent }
    }

    /// Classification of a base-coordinate point.
    pub fn base_contains(&self, y: &DVector<f64>, eps: f64) -> TrapMembership {
        if self.base_excluded_distance(y) <= self.r {
            return TrapMembership::Outside;
        }
        let depth = self.base_body_depth(y);
        if depth.abs() <= eps {
            TrapMembership::OnBoundary
        } else if depth > 0.0 {
            TrapMembership::Inside
        } else {
            TrapMembership::Outside
        }
    }

    /// Corner points of `B` in world coordinates.
    pub fn body_corners(&self) -> Vec<DVector<f64>> {
        let mut out = Vec::new();
        for s in [0.0, self.r] {
            for t in [0.0, self.r] {
                out.extend(self.layer(s, t));
            }
        }
        out
    }

    /// Rejection sample of `count` points of `T` (world coordinates).
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count && attempts < 1000 * count.max(1) {
            attempts += 1;
            let w: Vec<f64> = (0..self.vertices.len()).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = w.iter().sum();
            let base = self.vertices.iter().zip(&w).fold(DVector::zeros(self.dim()), |acc, (p, wi)| acc + p * (wi / total));
            let s = rng.random_range(0.0..self.r);
            let t = rng.random_range(0.0..self.r);
            let y = base + &self.nu * s + self.e_n() * t;
            if self.base_excluded_distance(&y) > self.r {
                out.push(self.frame.apply(&y));
            }
        }
        out
    }
}

/// Classification of world point `x`; defined as the base classification of
/// `frame⁻¹ x`.
pub fn trap_contains(trap: &SimplexTrap, x: &DVector<f64>, eps: f64) -> Result<TrapMembership, RegionError> {
    if x.len() != trap.dim() {
        return Err(RegionError::DimensionMismatch { what: "query point", expected: trap.dim(), found: x.len() });
    }
    Ok(trap.base_contains(&trap.frame.apply_inverse(x), eps))
}

/// `sup_{x∈T} d(Δ_{R,R}, x)²`. The squared distance is convex, so the sup
/// over the closure of `B` is attained at a corner of `B`; the corners in
/// `Δ_{0,0}` lie in the closure of `T` and realise `2R²`.
pub fn trap_excluded_max(trap: &SimplexTrap) -> f64 {
    let mut best: f64 = 0.0;
    for s in [0.0, trap.r] {
        for t in [0.0, trap.r] {
            for y in trap.base_layer(s, t) {
                let d = trap.base_excluded_distance(&y);
                if d > trap.r {
                    best = best.max(d * d);
                }
            }
        }
    }
    best
}
