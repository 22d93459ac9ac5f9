//! Localized distance-squared fields `χ·d_A²` with a smooth plateau bump.

use nalgebra::{DMatrix, DVector};

use super::convex::{project_hull, project_simplex, Projection};
use super::trap::SimplexTrap;
use super::RegionError;
use crate::geomcore::MapSample;

/// Set whose squared distance is localized.
#[derive(Debug, Clone, PartialEq)]
pub enum Anchor {
    Point(DVector<f64>),
    /// Affinely independent vertices of a simplex.
    Simplex(Vec<DVector<f64>>),
}

/// Set on which the bump equals 1.
#[derive(Debug, Clone, PartialEq)]
pub enum Plateau {
    Ball { center: DVector<f64>, radius: f64 },
    /// Convex hull of the points.
    Hull(Vec<DVector<f64>>),
    /// The body `⋃_{s,t∈[0,R]} Δ_{s,t}` of a trap.
    TrapBody(SimplexTrap),
}

impl Anchor {
    fn dim(&self) -> usize {
        match self {
            Anchor::Point(q) => q.len(),
            Anchor::Simplex(v) => v.first().map_or(0, |p| p.len()),
        }
    }

    fn project(&self, x: &DVector<f64>) -> Projection {
        match self {
            Anchor::Point(q) => Projection {
                point: q.clone(),
                distance: (x - q).norm(),
                tangent: DMatrix::zeros(x.len(), x.len()),
            },
            Anchor::Simplex(v) => project_simplex(v, x),
        }
    }
}

impl Plateau {
    fn dim(&self) -> usize {
        match self {
            Plateau::Ball { center, .. } => center.len(),
            Plateau::Hull(p) => p.first().map_or(0, |p| p.len()),
            Plateau::TrapBody(t) => t.dim(),
        }
    }

    fn project(&self, x: &DVector<f64>) -> Projection {
        match self {
            Plateau::Ball { center, radius } => {
                let off = x - center;
                let len = off.norm();
                if len <= *radius {
                    return Projection { point: x.clone(), distance: 0.0, tangent: DMatrix::identity(x.len(), x.len()) };
                }
                let n = &off / len;
                let tangent = (DMatrix::identity(x.len(), x.len()) - &n * n.transpose()) * (radius / len);
                Projection { point: center + &n * *radius, distance: len - radius, tangent }
            }
            Plateau::Hull(points) => project_hull(points, x),
            Plateau::TrapBody(trap) => {
                let frame = trap.frame();
                let base = trap.base_body_projection(&frame.apply_inverse(x));
                let r = &frame.rotation;
                Projection {
                    point: frame.apply(&base.point),
                    distance: base.distance,
                    tangent: r * base.tangent * r.transpose(),
                }
            }
        }
    }
}

/// `S(t) = h(t)/(h(t)+h(1−t))` with `h(t) = e^{−1/t}`, and its first two
/// derivatives.
pub fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let u = 1.0 - t;
    let phi = 1.0 / t - 1.0 / u;
    if phi.abs() > 700.0 {
        return if phi > 0.0 { (0.0, 0.0, 0.0) } else { (1.0, 0.0, 0.0) };
    }
    // S = σ(−φ) with σ the logistic function
    let s = if phi > 0.0 {
        let e = (-phi).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + phi.exp())
    };
    let ds = s * (1.0 - s);
    let dds = ds * (1.0 - 2.0 * s);
    let dphi = -1.0 / (t * t) - 1.0 / (u * u);
    let ddphi = 2.0 / (t * t * t) - 2.0 / (u * u * u);
    (s, -ds * dphi, dds * dphi * dphi - ds * ddphi)
}

/// Value, gradient and Hessian of a scalar field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldJet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub bump: f64,
}

/// `χ·d_A²` with `χ = S(1 − dist(·, B)/ε)`: 1 on the plateau `B`, 0 outside
/// its `ε`-neighbourhood. Inside `B` the Hessian is exactly `Hess d_A²`.
/// The distance to a polytope plateau is only `C^{1,1}` across the normal
/// cones of its faces, so in the transition annulus the Hessian may jump
/// there.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedDistanceSquared {
    anchor: Anchor,
    plateau: Plateau,
    eps: f64,
}

impl LocalizedDistanceSquared {
    pub fn new(anchor: Anchor, plateau: Plateau, eps: f64) -> Result<Self, RegionError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(RegionError::InvalidField(format!("eps must be positive, got {eps}")));
        }
        let (a, b) = (anchor.dim(), plateau.dim());
        if a == 0 || a != b {
            return Err(RegionError::DimensionMismatch { what: "plateau", expected: a, found: b });
        }
        if let Plateau::Ball { radius, .. } = plateau {
            if !(radius >= 0.0) {
                return Err(RegionError::InvalidField(format!("plateau radius must be non-negative, got {radius}")));
            }
        }
        Ok(Self { anchor, plateau, eps })
    }

    /// `χ d²` for a trap: anchor `Δ_{R,R}`, plateau the trap body.
    pub fn for_trap(trap: &SimplexTrap, eps: f64) -> Result<Self, RegionError> {
        Self::new(Anchor::Simplex(trap.layer(trap.radius(), trap.radius())), Plateau::TrapBody(trap.clone()), eps)
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn jet(&self, x: &DVector<f64>) -> FieldJet {
        let n = x.len();
        let a = self.anchor.project(x);
        let offset = x - &a.point;
        let dist2 = offset.norm_squared();
        let grad_d2 = &offset * 2.0;
        let hess_d2 = (DMatrix::identity(n, n) - &a.tangent) * 2.0;
        let b = self.plateau.project(x);
        let (s, ds, dds) = smoothstep(1.0 - b.distance / self.eps);
        if b.distance <= 0.0 || (s == 1.0 && ds == 0.0) {
            return FieldJet { value: dist2, gradient: grad_d2, hessian: hess_d2, bump: 1.0 };
        }
        if s == 0.0 && ds == 0.0 && dds == 0.0 {
            return FieldJet { value: 0.0, gradient: DVector::zeros(n), hessian: DMatrix::zeros(n, n), bump: 0.0 };
        }
        let normal = (x - &b.point) / b.distance;
        let hess_delta = (DMatrix::identity(n, n) - &b.tangent - &normal * normal.transpose()) / b.distance;
        let grad_chi = &normal * (-ds / self.eps);
        let hess_chi = &normal * normal.transpose() * (dds / (self.eps * self.eps)) - hess_delta * (ds / self.eps);
        let gradient = &grad_chi * dist2 + &grad_d2 * s;
        let hessian = hess_chi * dist2 + &grad_chi * grad_d2.transpose() + &grad_d2 * grad_chi.transpose() + hess_d2 * s;
        FieldJet { value: s * dist2, gradient, hessian, bump: s }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.jet(x).value
    }

    /// The field as a scalar map with analytic gradient and Hessian.
    pub fn to_map_sample(&self, label: impl Into<String>) -> MapSample {
        let n = self.dim();
        let (f1, f2, f3) = (self.clone(), self.clone(), self.clone());
        MapSample::scalar(label, n, move |x| f1.value(x))
            .with_jacobian(move |x| DMatrix::from_iterator(1, n, f2.jet(x).gradient.iter().cloned()))
            .with_hessian(move |x| f3.jet(x).hessian)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints_and_symmetry() {
        assert_eq!(smoothstep(0.0), (0.0, 0.0, 0.0));
        assert_eq!(smoothstep(1.0), (1.0, 0.0, 0.0));
        let (a, da, _) = smoothstep(0.3);
        let (b, db, _) = smoothstep(0.7);
        assert!((a + b - 1.0).abs() < 1e-14);
        assert!((da - db).abs() < 1e-12);
        let h = 1e-6;
        let (_, d, dd) = smoothstep(0.4);
        assert!(((smoothstep(0.4 + h).0 - smoothstep(0.4 - h).0) / (2.0 * h) - d).abs() < 1e-8);
        assert!(((smoothstep(0.4 + h).1 - smoothstep(0.4 - h).1) / (2.0 * h) - dd).abs() < 1e-6);
    }
}
