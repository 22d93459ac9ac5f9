use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::chart::Chart;
use super::linalg::symmetrize;
use super::{GeomError, Point};

/// Default central-difference step for first derivatives.
pub const DEFAULT_STEP: f64 = 1e-5;
/// Default central-difference step for second derivatives.
pub const DEFAULT_SECOND_STEP: f64 = 1e-4;

pub type EvalFn = Arc<dyn Fn(&Point) -> DVector<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub enum DerivativeMode {
    /// Analytic Jacobian; the Hessian callback is only meaningful for scalar
    /// maps and falls back to differencing the Jacobian when absent.
    Analytic { jacobian: JacobianFn, hessian: Option<JacobianFn> },
    FiniteDifference { step: f64, second_step: f64 },
}

/// A smooth map `ℝᵐ ⊇ domain → ℝⁿ` with derivative access.
#[derive(Clone)]
pub struct MapSample {
    label: String,
    domain_dim: usize,
    target_dim: usize,
    eval: EvalFn,
    mode: DerivativeMode,
    domain: Option<Vec<(f64, f64)>>,
}

impl fmt::Debug for MapSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match &self.mode {
            DerivativeMode::Analytic { hessian, .. } => {
                format!("analytic(hessian={})", hessian.is_some())
            }
            DerivativeMode::FiniteDifference { step, second_step } => {
                format!("finite-difference(h={step}, h2={second_step})")
            }
        };
        f.debug_struct("MapSample")
            .field("label", &self.label)
            .field("domain_dim", &self.domain_dim)
            .field("target_dim", &self.target_dim)
            .field("mode", &mode)
            .finish()
    }
}

impl MapSample {
    /// A map with finite-difference derivatives at the default steps.
    pub fn new(
        label: impl Into<String>,
        domain_dim: usize,
        target_dim: usize,
        eval: impl Fn(&Point) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        assert!(domain_dim > 0 && target_dim > 0, "map dimensions must be positive");
        Self {
            label: label.into(),
            domain_dim,
            target_dim,
            eval: Arc::new(eval),
            mode: DerivativeMode::FiniteDifference {
                step: DEFAULT_STEP,
                second_step: DEFAULT_SECOND_STEP,
            },
            domain: None,
        }
    }

    /// A scalar field `ℝᵐ → ℝ`.
    pub fn scalar(
        label: impl Into<String>,
        dim: usize,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, dim, 1, move |p| DVector::from_element(1, f(p)))
    }

    /// `x ↦ A x + b` with its exact Jacobian.
    pub fn affine(label: impl Into<String>, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(a.nrows(), b.len());
        let (n, m) = a.shape();
        let a_eval = a.clone();
        Self::new(label, m, n, move |p| &a_eval * p + &b).with_jacobian(move |_| a.clone())
    }

    pub fn linear(label: impl Into<String>, a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        Self::affine(label, a, DVector::zeros(n))
    }

    pub fn identity(dim: usize) -> Self {
        Self::linear(format!("id_R{dim}"), DMatrix::identity(dim, dim))
            .with_hessian(move |_| DMatrix::zeros(dim, dim))
    }

    /// Orthogonal projection of ℝⁿ onto the coordinate axes `axes`
    /// (as an endomorphism of ℝⁿ).
    pub fn coordinate_projection(dim: usize, axes: &[usize]) -> Self {
        let mut a = DMatrix::zeros(dim, dim);
        for &i in axes {
            a[(i, i)] = 1.0;
        }
        Self::linear(format!("proj{axes:?}_R{dim}"), a)
    }

    /// Quadratic form `f(x) = xᵀ A x` with exact gradient and Hessian.
    pub fn quadratic_form(label: impl Into<String>, a: DMatrix<f64>) -> Self {
        let a = symmetrize(&a);
        let n = a.nrows();
        let (a1, a2, a3) = (a.clone(), a.clone(), a);
        Self::new(label, n, 1, move |p| DVector::from_element(1, p.dot(&(&a1 * p))))
            .with_jacobian(move |p| DMatrix::from_iterator(1, n, (&a2 * p * 2.0).iter().cloned()))
            .with_hessian(move |_| &a3 * 2.0)
    }

    pub fn with_jacobian(
        mut self,
        jacobian: impl Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        let hessian = match self.mode {
            DerivativeMode::Analytic { hessian, .. } => hessian,
            DerivativeMode::FiniteDifference { .. } => None,
        };
        self.mode = DerivativeMode::Analytic { jacobian: Arc::new(jacobian), hessian };
        self
    }

    /// Attach an analytic Hessian (scalar maps only). Requires an analytic
    /// Jacobian to have been attached first.
    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        match &mut self.mode {
            DerivativeMode::Analytic { hessian: slot, .. } => *slot = Some(Arc::new(hessian)),
            DerivativeMode::FiniteDifference { .. } => {
                panic!("attach an analytic jacobian before the hessian")
            }
        }
        self
    }

    /// Switch to finite differences with the given steps (both must be > 0).
    pub fn with_steps(mut self, step: f64, second_step: f64) -> Self {
        assert!(step > 0.0 && second_step > 0.0, "finite-difference steps must be positive");
        self.mode = DerivativeMode::FiniteDifference { step, second_step };
        self
    }

    /// Drop analytic derivatives in favour of finite differences.
    pub fn finite_difference(self) -> Self {
        self.with_steps(DEFAULT_STEP, DEFAULT_SECOND_STEP)
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Self {
        assert_eq!(domain.len(), self.domain_dim);
        self.domain = Some(domain);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn mode(&self) -> &DerivativeMode {
        &self.mode
    }

    pub fn domain(&self) -> Option<&[(f64, f64)]> {
        self.domain.as_deref()
    }

    fn check_point(&self, p: &Point) -> Result<(), GeomError> {
        if p.len() != self.domain_dim {
            return Err(GeomError::DimensionMismatch {
                what: "map argument",
                expected: self.domain_dim,
                found: p.len(),
            });
        }
        let inside = p.iter().all(|x| x.is_finite())
            && self
                .domain
                .as_ref()
                .is_none_or(|d| p.iter().zip(d).all(|(x, (lo, hi))| x >= lo && x <= hi));
        if inside {
            Ok(())
        } else {
            Err(GeomError::PointOutOfDomain { label: self.label.clone(), point: p.iter().cloned().collect() })
        }
    }

    fn check_margin(&self, p: &Point, step: f64) -> Result<(), GeomError> {
        if let Some(d) = &self.domain {
            let margin = p
                .iter()
                .zip(d)
                .map(|(x, (lo, hi))| (x - lo).min(hi - x))
                .fold(f64::INFINITY, f64::min);
            if margin < step {
                return Err(GeomError::StepTooLargeForMargin {
                    step,
                    margin,
                    point: p.iter().cloned().collect(),
                });
            }
        }
        Ok(())
    }

    pub fn eval(&self, p: &Point) -> Result<DVector<f64>, GeomError> {
        self.check_point(p)?;
        Ok((self.eval)(p))
    }

    /// Value of a scalar map.
    pub fn value(&self, p: &Point) -> Result<f64, GeomError> {
        self.require_scalar()?;
        Ok(self.eval(p)?[0])
    }

    fn require_scalar(&self) -> Result<(), GeomError> {
        if self.target_dim == 1 {
            Ok(())
        } else {
            Err(GeomError::NotScalar { label: self.label.clone() })
        }
    }
}

/// `Du(p)` as a `target_dim × domain_dim` matrix.
pub fn jacobian(u: &MapSample, p: &Point) -> Result<DMatrix<f64>, GeomError> {
    u.check_point(p)?;
    match &u.mode {
        DerivativeMode::Analytic { jacobian, .. } => Ok(jacobian(p)),
        DerivativeMode::FiniteDifference { step, .. } => {
            u.check_margin(p, *step)?;
            Ok(central_jacobian(&u.eval, p, *step, u.target_dim))
        }
    }
}

fn central_jacobian(eval: &EvalFn, p: &Point, h: f64, target_dim: usize) -> DMatrix<f64> {
    let m = p.len();
    let mut jac = DMatrix::zeros(target_dim, m);
    for j in 0..m {
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus[j] += h;
        minus[j] -= h;
        let diff = (eval(&plus) - eval(&minus)) / (2.0 * h);
        jac.set_column(j, &diff);
    }
    jac
}

/// Euclidean gradient of a scalar map.
pub fn gradient(f: &MapSample, p: &Point) -> Result<DVector<f64>, GeomError> {
    f.require_scalar()?;
    Ok(jacobian(f, p)?.row(0).transpose())
}

/// Coordinate Hessian of a scalar map, symmetrized.
pub fn hessian(f: &MapSample, p: &Point) -> Result<DMatrix<f64>, GeomError> {
    f.require_scalar()?;
    f.check_point(p)?;
    let m = f.domain_dim;
    let raw = match &f.mode {
        DerivativeMode::Analytic { hessian: Some(hess), .. } => hess(p),
        DerivativeMode::Analytic { jacobian, hessian: None } => {
            let h = DEFAULT_SECOND_STEP;
            f.check_margin(p, h)?;
            let mut out = DMatrix::zeros(m, m);
            for j in 0..m {
                let mut plus = p.clone();
                let mut minus = p.clone();
                plus[j] += h;
                minus[j] -= h;
                let diff = (jacobian(&plus) - jacobian(&minus)).row(0).transpose() / (2.0 * h);
                out.set_column(j, &diff);
            }
            out
        }
        DerivativeMode::FiniteDifference { second_step, .. } => {
            let h = *second_step;
            f.check_margin(p, h)?;
            let val = |q: &Point| (f.eval)(q)[0];
            let f0 = val(p);
            let mut out = DMatrix::zeros(m, m);
            for i in 0..m {
                let mut plus = p.clone();
                let mut minus = p.clone();
                plus[i] += h;
                minus[i] -= h;
                out[(i, i)] = (val(&plus) - 2.0 * f0 + val(&minus)) / (h * h);
                for j in 0..i {
                    let shifted = |si: f64, sj: f64| {
                        let mut q = p.clone();
                        q[i] += si * h;
                        q[j] += sj * h;
                        val(&q)
                    };
                    let v = (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0)
                        + shifted(-1.0, -1.0))
                        / (4.0 * h * h);
                    out[(i, j)] = v;
                    out[(j, i)] = v;
                }
            }
            out
        }
    };
    Ok(symmetrize(&raw))
}

/// Covariant Hessian `∇df = ∂²f − Γᵏ ∂_k f` in the coordinates of `chart`.
/// Identical to [`hessian`] on flat charts.
pub fn covariant_hessian(f: &MapSample, p: &Point, chart: &Chart) -> Result<DMatrix<f64>, GeomError> {
    if chart.dim() != f.domain_dim {
        return Err(GeomError::DimensionMismatch {
            what: "chart vs function domain",
            expected: chart.dim(),
            found: f.domain_dim,
        });
    }
    let mut hess = hessian(f, p)?;
    if !chart.is_flat() {
        let grad = gradient(f, p)?;
        for (k, gamma) in chart.christoffel(p).iter().enumerate() {
            hess -= gamma * grad[k];
        }
    }
    Ok(symmetrize(&hess))
}

/// Laplace–Beltrami operator `Δ_g f = tr_g(Hess f)`.
pub fn laplace_beltrami(f: &MapSample, p: &Point, chart: &Chart) -> Result<f64, GeomError> {
    let hess = covariant_hessian(f, p, chart)?;
    let g = chart.metric_at(p);
    let g_inv = g.try_inverse().ok_or_else(|| GeomError::MetricNotPositiveDefinite {
        chart: chart.name().to_string(),
        point: p.iter().cloned().collect(),
    })?;
    Ok((g_inv * hess).trace())
}

/// `‖grad_g f‖_g = sqrt(df · g⁻¹ · df)`.
pub fn gradient_norm(f: &MapSample, p: &Point, chart: &Chart) -> Result<f64, GeomError> {
    let grad = gradient(f, p)?;
    let g_inv = chart.metric_at(p).try_inverse().ok_or_else(|| GeomError::MetricNotPositiveDefinite {
        chart: chart.name().to_string(),
        point: p.iter().cloned().collect(),
    })?;
    Ok(grad.dot(&(g_inv * &grad)).max(0.0).sqrt())
}
