use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{GeomError, Point};

/// Step used for finite differences of the metric (Christoffel symbols,
/// diffusion drift).
pub const CHRISTOFFEL_STEP: f64 = 1e-4;

pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;

/// How the metric tensor of a chart is represented.
#[derive(Clone)]
pub enum MetricField {
    Euclidean,
    Constant(DMatrix<f64>),
    /// `g = factor(p) · I`.
    Conformal(ScalarFn),
    General(MatrixFn),
}

/// A coordinate patch of a Riemannian manifold: a box in ℝⁿ (optionally
/// cut down to an open ball around the origin) carrying a metric field.
#[derive(Clone)]
pub struct Chart {
    name: String,
    dim: usize,
    domain_box: Vec<(f64, f64)>,
    max_radius: Option<f64>,
    metric: MetricField,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("domain_box", &self.domain_box)
            .field("max_radius", &self.max_radius)
            .field("flat", &self.is_flat())
            .finish()
    }
}

impl Chart {
    pub fn new(name: impl Into<String>, domain_box: Vec<(f64, f64)>, metric: MetricField) -> Self {
        let dim = domain_box.len();
        assert!(dim > 0, "chart dimension must be positive");
        Self { name: name.into(), dim, domain_box, max_radius: None, metric }
    }

    /// Euclidean ℝⁿ with an unbounded domain.
    pub fn euclidean(dim: usize) -> Self {
        Self::new(
            format!("R{dim}"),
            vec![(f64::NEG_INFINITY, f64::INFINITY); dim],
            MetricField::Euclidean,
        )
    }

    /// Euclidean metric on a box.
    pub fn euclidean_box(domain_box: Vec<(f64, f64)>) -> Self {
        let dim = domain_box.len();
        Self::new(format!("R{dim}-box"), domain_box, MetricField::Euclidean)
    }

    /// Poincaré disk model of the hyperbolic plane with constant curvature
    /// `curvature < 0`: `g = 4 / (−K (1 − |x|²)²) · I` on the open unit disk.
    pub fn poincare_disk(curvature: f64) -> Self {
        assert!(curvature < 0.0, "Poincaré disk needs negative curvature");
        let scale = -1.0 / curvature;
        let metric = MetricField::Conformal(Arc::new(move |p: &Point| {
            let r2 = p.norm_squared();
            4.0 * scale / ((1.0 - r2) * (1.0 - r2))
        }));
        let mut chart = Self::new(format!("poincare-disk(K={curvature})"), vec![(-1.0, 1.0); 2], metric);
        chart.max_radius = Some(1.0);
        chart
    }

    /// Restrict the domain to the open ball `|x| < radius`.
    pub fn with_max_radius(mut self, radius: f64) -> Self {
        self.max_radius = Some(match self.max_radius {
            Some(r) => r.min(radius),
            None => radius,
        });
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_box(&self) -> &[(f64, f64)] {
        &self.domain_box
    }

    pub fn max_radius(&self) -> Option<f64> {
        self.max_radius
    }

    /// Constant metric (Christoffel symbols vanish identically).
    pub fn is_flat(&self) -> bool {
        matches!(self.metric, MetricField::Euclidean | MetricField::Constant(_))
    }

    pub fn metric_at(&self, p: &Point) -> DMatrix<f64> {
        match &self.metric {
            MetricField::Euclidean => DMatrix::identity(self.dim, self.dim),
            MetricField::Constant(g) => g.clone(),
            MetricField::Conformal(factor) => DMatrix::identity(self.dim, self.dim) * factor(p),
            MetricField::General(g) => g(p),
        }
    }

    /// Open-domain membership (box interior or closure, ball strictly inside).
    pub fn contains(&self, p: &Point) -> bool {
        if p.len() != self.dim {
            return false;
        }
        let in_box = p
            .iter()
            .zip(&self.domain_box)
            .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi && x.is_finite());
        in_box && self.max_radius.is_none_or(|r| p.norm() < r)
    }

    /// Euclidean (coordinate) distance from `p` to the edge of the domain.
    pub fn margin(&self, p: &Point) -> f64 {
        let mut m = f64::INFINITY;
        for (x, (lo, hi)) in p.iter().zip(&self.domain_box) {
            m = m.min(x - lo).min(hi - x);
        }
        if let Some(r) = self.max_radius {
            m = m.min(r - p.norm());
        }
        m
    }

    pub fn check_point(&self, p: &Point) -> Result<(), GeomError> {
        if p.len() != self.dim {
            return Err(GeomError::DimensionMismatch {
                what: "chart point",
                expected: self.dim,
                found: p.len(),
            });
        }
        if !self.contains(p) {
            return Err(GeomError::PointOutOfDomain {
                label: self.name.clone(),
                point: p.iter().cloned().collect(),
            });
        }
        Ok(())
    }

    /// `∂_k g` for every coordinate `k` (central differences, step
    /// [`CHRISTOFFEL_STEP`]); zero on flat charts.
    pub fn metric_derivatives(&self, p: &Point) -> Vec<DMatrix<f64>> {
        let n = self.dim;
        if self.is_flat() {
            return vec![DMatrix::zeros(n, n); n];
        }
        let h = CHRISTOFFEL_STEP;
        (0..n)
            .map(|k| {
                let mut plus = p.clone();
                let mut minus = p.clone();
                plus[k] += h;
                minus[k] -= h;
                (self.metric_at(&plus) - self.metric_at(&minus)) / (2.0 * h)
            })
            .collect()
    }

    /// Christoffel symbols of the second kind: entry `k` is the matrix
    /// `Γᵏ_ij`.
    pub fn christoffel(&self, p: &Point) -> Vec<DMatrix<f64>> {
        let n = self.dim;
        if self.is_flat() {
            return vec![DMatrix::zeros(n, n); n];
        }
        let dg = self.metric_derivatives(p);
        let g_inv = self
            .metric_at(p)
            .try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
        // first kind: Γ_lij = ½ (∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let first = |l: usize, i: usize, j: usize| 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
        (0..n)
            .map(|k| {
                DMatrix::from_fn(n, n, |i, j| (0..n).map(|l| g_inv[(k, l)] * first(l, i, j)).sum())
            })
            .collect()
    }

    /// Drift of the diffusion generated by `½ Δ_g`:
    /// `bⁱ = (1 / (2√det g)) ∂_j(√det g · gⁱʲ)`.
    pub fn half_laplacian_drift(&self, p: &Point) -> DVector<f64> {
        let n = self.dim;
        if self.is_flat() {
            return DVector::zeros(n);
        }
        let h = CHRISTOFFEL_STEP;
        let weighted_inverse = |q: &Point| -> Option<(f64, DMatrix<f64>)> {
            let g = self.metric_at(q);
            let det = g.determinant();
            if det <= 0.0 || !det.is_finite() {
                return None;
            }
            Some((det.sqrt(), g.try_inverse()? * det.sqrt()))
        };
        let Some((sqrt_det, _)) = weighted_inverse(p) else {
            return DVector::from_element(n, f64::NAN);
        };
        let mut b = DVector::zeros(n);
        for j in 0..n {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus[j] += h;
            minus[j] -= h;
            match (weighted_inverse(&plus), weighted_inverse(&minus)) {
                (Some((_, wp)), Some((_, wm))) => {
                    for i in 0..n {
                        b[i] += (wp[(i, j)] - wm[(i, j)]) / (2.0 * h);
                    }
                }
                _ => return DVector::from_element(n, f64::NAN),
            }
        }
        b / (2.0 * sqrt_det)
    }
}
