use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::laplacian::{face_geometries, CotanLaplacian, FaceGeometry, LengthSource};
use super::mesh::TriMesh;
use super::HarmonicError;
use crate::geomcore::{conformal_fit, gradient, hessian, Chart, MapSample};

/// Deviation below which a map is flagged numerically conformal.
pub const CONFORMAL_THRESHOLD: f64 = 0.05;

/// Which metric the domain mesh carries.
#[derive(Debug, Clone)]
pub enum MetricSource {
    /// The metric induced by the map's own values (isometric-immersion mode).
    Embedding,
    /// A prescribed chart metric on the mesh coordinates.
    Chart(Chart),
}

impl MetricSource {
    pub fn flat(dim: usize) -> Self {
        Self::Chart(Chart::euclidean(dim))
    }
}

/// Vertex values of a map from a triangulated domain into ℝⁿ.
#[derive(Debug, Clone)]
pub struct DiscreteMap {
    mesh: TriMesh,
    values: Vec<DVector<f64>>,
    metric: MetricSource,
}

impl DiscreteMap {
    pub fn new(mesh: TriMesh, values: Vec<DVector<f64>>, metric: MetricSource) -> Result<Self, HarmonicError> {
        if values.len() != mesh.vertex_count() {
            return Err(HarmonicError::DomainMismatch(format!(
                "{} values for {} vertices",
                values.len(),
                mesh.vertex_count()
            )));
        }
        let n = values[0].len();
        if n == 0 || values.iter().any(|v| v.len() != n) {
            return Err(HarmonicError::DomainMismatch("values have inconsistent dimensions".into()));
        }
        if let MetricSource::Chart(chart) = &metric {
            if chart.dim() != mesh.dim() {
                return Err(HarmonicError::DomainMismatch(format!(
                    "chart `{}` has dimension {} but mesh vertices have {}",
                    chart.name(),
                    chart.dim(),
                    mesh.dim()
                )));
            }
        }
        Ok(Self { mesh, values, metric })
    }

    /// Sample a smooth map at the mesh vertices.
    pub fn from_map(mesh: TriMesh, u: &MapSample, metric: MetricSource) -> Result<Self, HarmonicError> {
        if u.domain_dim() != mesh.dim() {
            return Err(HarmonicError::DomainMismatch(format!(
                "`{}` is defined on ℝ^{} but mesh vertices have dimension {}",
                u.label(),
                u.domain_dim(),
                mesh.dim()
            )));
        }
        let values = mesh.vertices().iter().map(|p| u.eval(p)).collect::<Result<Vec<_>, _>>()?;
        Self::new(mesh, values, metric)
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn metric_source(&self) -> &MetricSource {
        &self.metric
    }

    pub fn target_dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn into_values(self) -> Vec<DVector<f64>> {
        self.values
    }

    fn length_source(&self) -> LengthSource<'_> {
        match &self.metric {
            MetricSource::Embedding => LengthSource::Embedding(&self.values),
            MetricSource::Chart(chart) => LengthSource::Chart(chart),
        }
    }

    pub fn laplacian(&self) -> Result<CotanLaplacian, HarmonicError> {
        CotanLaplacian::assemble(&self.mesh, self.length_source())
    }

    /// Per-face differential `Du` (n × 2) in an isometric frame of the
    /// domain triangle.
    pub fn face_differentials(&self) -> Result<(Vec<FaceGeometry>, Vec<DMatrix<f64>>), HarmonicError> {
        let geoms = face_geometries(&self.mesh, self.length_source())?;
        let diffs = self
            .mesh
            .faces()
            .par_iter()
            .zip(&geoms)
            .map(|(&[a, b, c], geom)| {
                let p = geom.local_frame();
                let frame = Matrix2::new(p[1][0] - p[0][0], p[2][0] - p[0][0], p[1][1] - p[0][1], p[2][1] - p[0][1]);
                let inv = frame.try_inverse().expect("non-degenerate face");
                let du1 = &self.values[b] - &self.values[a];
                let du2 = &self.values[c] - &self.values[a];
                let spans = DMatrix::from_columns(&[du1, du2]);
                spans * DMatrix::from_row_slice(2, 2, &[inv[(0, 0)], inv[(0, 1)], inv[(1, 0)], inv[(1, 1)]])
            })
            .collect();
        Ok((geoms, diffs))
    }

    /// Area-weighted average of a per-face quantity over the faces around
    /// each vertex.
    pub fn vertex_average(&self, geoms: &[FaceGeometry], per_face: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.mesh.vertex_count()];
        let mut weight = vec![0.0; self.mesh.vertex_count()];
        for ((f, g), &val) in self.mesh.faces().iter().zip(geoms).zip(per_face) {
            for &v in f {
                acc[v] += g.area * val;
                weight[v] += g.area;
            }
        }
        acc.iter().zip(&weight).map(|(a, w)| a / w).collect()
    }
}

/// Discrete tension field `Δu` per vertex.
pub fn tension_field(u: &DiscreteMap) -> Result<Vec<DVector<f64>>, HarmonicError> {
    Ok(u.laplacian()?.apply_points(u.values()))
}

/// `‖Δu‖` at interior vertices; boundary vertices carry 0.
pub fn tension_residual(u: &DiscreteMap) -> Result<Vec<f64>, HarmonicError> {
    let tension = tension_field(u)?;
    Ok(tension
        .iter()
        .enumerate()
        .map(|(i, t)| if u.mesh().is_boundary(i) { 0.0 } else { t.norm() })
        .collect())
}

/// Energy density `e(u) = ‖du‖²` per vertex (area-weighted over faces).
pub fn energy_density(u: &DiscreteMap) -> Result<Vec<f64>, HarmonicError> {
    let (geoms, diffs) = u.face_differentials()?;
    let per_face: Vec<f64> = diffs.iter().map(|d| d.norm_squared()).collect();
    Ok(u.vertex_average(&geoms, &per_face))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalEstimate {
    /// Best-fit `e^{2φ}`.
    pub factor: f64,
    /// `‖u*h − e^{2φ} g‖ / ‖e^{2φ} g‖`.
    pub deviation: f64,
    pub numerically_conformal: bool,
}

/// Per-vertex conformal factor estimate of a map from a surface mesh.
pub fn conformal_factor_estimate(u: &DiscreteMap) -> Result<Vec<ConformalEstimate>, HarmonicError> {
    let estimate = |(factor, deviation): (f64, f64)| ConformalEstimate {
        factor,
        deviation,
        numerically_conformal: deviation <= CONFORMAL_THRESHOLD,
    };
    if let (MetricSource::Chart(chart), 2) = (&u.metric, u.mesh.dim()) {
        return chart_frame_estimate(u, chart).map(|fits| fits.into_iter().map(estimate).collect());
    }
    let (geoms, diffs) = u.face_differentials()?;
    let (factors, deviations): (Vec<f64>, Vec<f64>) = diffs
        .iter()
        .map(|d| {
            let eig = (d.transpose() * d).symmetric_eigen();
            conformal_fit(eig.eigenvalues.as_slice())
        })
        .unzip();
    let factor = u.vertex_average(&geoms, &factors);
    let deviation = u.vertex_average(&geoms, &deviations);
    Ok(factor.into_iter().zip(deviation).map(estimate).collect())
}

/// Averages the pulled-back metric `P` and the domain metric `G` in chart
/// coordinates over the faces around each vertex, then fits `G⁻¹P`.
/// Per-face fits carry first-order errors that do not cancel.
fn chart_frame_estimate(u: &DiscreteMap, chart: &Chart) -> Result<Vec<(f64, f64)>, HarmonicError> {
    let mesh = &u.mesh;
    let n = mesh.vertex_count();
    let mut pull = vec![Matrix2::zeros(); n];
    let mut metric = vec![Matrix2::zeros(); n];
    for (face, &[a, b, c]) in mesh.faces().iter().enumerate() {
        let (e1, e2) = (mesh.edge_vector(a, b), mesh.edge_vector(a, c));
        let chart_area = 0.5 * (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        let inv = Matrix2::new(e1[0], e2[0], e1[1], e2[1])
            .try_inverse()
            .ok_or(HarmonicError::DegenerateFace { face, area: chart_area })?;
        let spans = DMatrix::from_columns(&[&u.values[b] - &u.values[a], &u.values[c] - &u.values[a]]);
        let du = spans * DMatrix::from_row_slice(2, 2, &[inv[(0, 0)], inv[(0, 1)], inv[(1, 0)], inv[(1, 1)]]);
        let p = du.transpose() * du;
        let centroid = &mesh.vertices()[a] + (&e1 + &e2) / 3.0;
        let g = chart.metric_at(&centroid);
        for v in [a, b, c] {
            pull[v] += Matrix2::new(p[(0, 0)], p[(0, 1)], p[(1, 0)], p[(1, 1)]) * chart_area;
            metric[v] += Matrix2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]) * chart_area;
        }
    }
    (0..n)
        .map(|i| {
            let l = metric[i]
                .cholesky()
                .ok_or_else(|| HarmonicError::InvalidMesh(format!("metric not positive definite at vertex {i}")))?
                .l();
            let l_inv = l.try_inverse().expect("cholesky factor is invertible");
            let whitened = l_inv * pull[i] * l_inv.transpose();
            Ok(conformal_fit(whitened.symmetric_eigen().eigenvalues.as_slice()))
        })
        .collect()
}

/// Terms of the composition formula `Δ(f∘u) = df(Δu) + tr_g(u*Hess f)` at a
/// vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositionTerms {
    pub laplacian_of_composite: f64,
    pub df_of_tension: f64,
    pub pullback_trace: f64,
    /// `|Δ(f∘u) − df(Δu) − tr_g(u*Hess f)|`.
    pub residual: f64,
}

/// Composition-formula terms at every interior vertex (`None` on the
/// boundary).
pub fn composition_residual(u: &DiscreteMap, f: &MapSample) -> Result<Vec<Option<CompositionTerms>>, HarmonicError> {
    if f.target_dim() != 1 || f.domain_dim() != u.target_dim() {
        return Err(HarmonicError::DomainMismatch(format!(
            "`{}` maps ℝ^{} → ℝ^{}; expected a scalar function on ℝ^{}",
            f.label(),
            f.domain_dim(),
            f.target_dim(),
            u.target_dim()
        )));
    }
    let lap = u.laplacian()?;
    let composite = u.values().par_iter().map(|x| f.value(x)).collect::<Result<Vec<f64>, _>>()?;
    let lap_composite = lap.apply(&composite);
    let tension = lap.apply_points(u.values());
    let (geoms, diffs) = u.face_differentials()?;
    let mesh = u.mesh();
    let vertex_faces = mesh.vertex_faces();
    (0..mesh.vertex_count())
        .into_par_iter()
        .map(|i| {
            if mesh.is_boundary(i) {
                return Ok(None);
            }
            let x = &u.values()[i];
            let grad = gradient(f, x)?;
            let hess = hessian(f, x)?;
            let (mut acc, mut weight) = (0.0, 0.0);
            for &fi in &vertex_faces[i] {
                let d = &diffs[fi];
                acc += geoms[fi].area * (d.transpose() * &hess * d).trace();
                weight += geoms[fi].area;
            }
            let pullback_trace = acc / weight;
            let df_of_tension = grad.dot(&tension[i]);
            let laplacian_of_composite = lap_composite[i];
            Ok(Some(CompositionTerms {
                laplacian_of_composite,
                df_of_tension,
                pullback_trace,
                residual: (laplacian_of_composite - df_of_tension - pullback_trace).abs(),
            }))
        })
        .collect()
}

/// Where the maximum of `f∘u` sits on the mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxLocation {
    pub max_boundary: f64,
    pub max_interior: Option<f64>,
    pub argmax: usize,
    /// `max_interior ≤ max_boundary + tol`.
    pub attained_on_boundary: bool,
}

/// Locate the maximum of `f∘u`, allowing the interior maximum to exceed the
/// boundary maximum by at most `tol`.
pub fn max_location(u: &DiscreteMap, f: &MapSample, tol: f64) -> Result<MaxLocation, HarmonicError> {
    let composite = u.values().iter().map(|x| f.value(x)).collect::<Result<Vec<f64>, _>>()?;
    let mesh = u.mesh();
    let mut max_boundary = f64::NEG_INFINITY;
    let mut max_interior: Option<f64> = None;
    let mut argmax = 0;
    for (i, &v) in composite.iter().enumerate() {
        if v > composite[argmax] {
            argmax = i;
        }
        if mesh.is_boundary(i) {
            max_boundary = max_boundary.max(v);
        } else {
            max_interior = Some(max_interior.map_or(v, |m| m.max(v)));
        }
    }
    if !mesh.has_boundary() {
        return Err(HarmonicError::NoBoundary);
    }
    Ok(MaxLocation {
        max_boundary,
        max_interior,
        argmax,
        attained_on_boundary: max_interior.is_none_or(|m| m <= max_boundary + tol),
    })
}
