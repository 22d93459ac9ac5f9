use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CscMatrix};
use rayon::prelude::*;

use super::mesh::{TriMesh, MIN_FACE_AREA};
use super::HarmonicError;
use crate::geomcore::Chart;

/// Where edge lengths come from.
#[derive(Debug, Clone, Copy)]
pub enum LengthSource<'a> {
    /// Chart metric evaluated at edge midpoints.
    Chart(&'a Chart),
    /// Euclidean distances between per-vertex values (induced metric).
    Embedding(&'a [DVector<f64>]),
}

/// Edge lengths and area of one triangle; `lengths[i]` is opposite vertex `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceGeometry {
    pub lengths: [f64; 3],
    pub area: f64,
}

impl FaceGeometry {
    /// Heron's formula in the cancellation-safe ordering.
    pub fn from_lengths(lengths: [f64; 3]) -> Self {
        let mut s = lengths;
        s.sort_by(|a, b| b.total_cmp(a));
        let [a, b, c] = s;
        let prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
        Self { lengths, area: 0.25 * prod.max(0.0).sqrt() }
    }

    /// Cotangent of the interior angle at vertex `i`.
    pub fn cot(&self, i: usize) -> f64 {
        let l = self.lengths;
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        (l[j] * l[j] + l[k] * l[k] - l[i] * l[i]) / (4.0 * self.area)
    }

    /// Planar positions of the three vertices in an isometric frame:
    /// vertex 0 at the origin, vertex 1 on the positive first axis.
    pub fn local_frame(&self) -> [[f64; 2]; 3] {
        let [l0, l1, l2] = self.lengths;
        let x = (l2 * l2 + l1 * l1 - l0 * l0) / (2.0 * l2);
        let y = 2.0 * self.area / l2;
        [[0.0, 0.0], [l2, 0.0], [x, y]]
    }
}

pub fn face_geometries(mesh: &TriMesh, source: LengthSource<'_>) -> Result<Vec<FaceGeometry>, HarmonicError> {
    let edge_len = |a: usize, b: usize| -> f64 {
        match source {
            LengthSource::Chart(chart) => {
                let e = mesh.edge_vector(a, b);
                if chart.is_flat() {
                    let g = chart.metric_at(&mesh.vertices()[a]);
                    e.dot(&(g * &e)).sqrt()
                } else {
                    let g = chart.metric_at(&mesh.edge_midpoint(a, b));
                    e.dot(&(g * &e)).sqrt()
                }
            }
            LengthSource::Embedding(values) => (&values[b] - &values[a]).norm(),
        }
    };
    let geoms: Vec<FaceGeometry> = mesh
        .faces()
        .par_iter()
        .map(|&[a, b, c]| FaceGeometry::from_lengths([edge_len(b, c), edge_len(c, a), edge_len(a, b)]))
        .collect();
    for (fi, g) in geoms.iter().enumerate() {
        if g.area.is_nan() || g.area <= MIN_FACE_AREA {
            return Err(HarmonicError::DegenerateFace { face: fi, area: g.area });
        }
    }
    Ok(geoms)
}

/// Cotangent Laplacian with barycentric mass lumping: `Δ = −M⁻¹ L`, where
/// `L` is the symmetric positive semidefinite stiffness matrix with
/// off-diagonal entries `−½(cot α + cot β)`.
#[derive(Debug, Clone)]
pub struct CotanLaplacian {
    stiffness: CscMatrix<f64>,
    mass: Vec<f64>,
    faces: Vec<FaceGeometry>,
    negative_weights: usize,
}

impl CotanLaplacian {
    pub fn assemble(mesh: &TriMesh, source: LengthSource<'_>) -> Result<Self, HarmonicError> {
        if let LengthSource::Embedding(values) = source {
            if values.len() != mesh.vertex_count() {
                return Err(HarmonicError::DomainMismatch(format!(
                    "{} values for {} vertices",
                    values.len(),
                    mesh.vertex_count()
                )));
            }
        }
        let faces = face_geometries(mesh, source)?;
        let n = mesh.vertex_count();
        let mut coo = CooMatrix::new(n, n);
        let mut mass = vec![0.0; n];
        let mut edge_weight = std::collections::BTreeMap::new();
        for (f, geom) in mesh.faces().iter().zip(&faces) {
            for i in 0..3 {
                mass[f[i]] += geom.area / 3.0;
                let (a, b) = (f[(i + 1) % 3], f[(i + 2) % 3]);
                let w = 0.5 * geom.cot(i);
                *edge_weight.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
                coo.push(a, b, -w);
                coo.push(b, a, -w);
                coo.push(a, a, w);
                coo.push(b, b, w);
            }
        }
        let negative_weights = edge_weight.values().filter(|&&w| w < 0.0).count();
        if negative_weights > 0 {
            log::debug!("cotan Laplacian has {negative_weights} negative edge weights");
        }
        Ok(Self { stiffness: CscMatrix::from(&coo), mass, faces, negative_weights })
    }

    pub fn for_chart(mesh: &TriMesh, chart: &Chart) -> Result<Self, HarmonicError> {
        if chart.dim() != mesh.dim() {
            return Err(HarmonicError::DomainMismatch(format!(
                "chart `{}` has dimension {} but mesh vertices have {}",
                chart.name(),
                chart.dim(),
                mesh.dim()
            )));
        }
        Self::assemble(mesh, LengthSource::Chart(chart))
    }

    pub fn stiffness(&self) -> &CscMatrix<f64> {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn face_geometry(&self) -> &[FaceGeometry] {
        &self.faces
    }

    /// Edges whose combined cotangent weight is negative (non-Delaunay).
    pub fn negative_weight_count(&self) -> usize {
        self.negative_weights
    }

    pub fn vertex_count(&self) -> usize {
        self.mass.len()
    }

    /// `L x`.
    pub fn stiffness_times(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (j, col) in self.stiffness.col_iter().enumerate() {
            let xj = x[j];
            for (&i, &v) in col.row_indices().iter().zip(col.values()) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `Δx = −M⁻¹ L x` for a scalar field.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.stiffness_times(x).iter().zip(&self.mass).map(|(l, m)| -l / m).collect()
    }

    /// `Δ` applied coordinate-wise to a vector-valued field.
    pub fn apply_points(&self, values: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let dim = values.first().map_or(0, |v| v.len());
        let mut out = vec![DVector::zeros(dim); values.len()];
        for k in 0..dim {
            let coord: Vec<f64> = values.iter().map(|v| v[k]).collect();
            for (o, l) in out.iter_mut().zip(self.apply(&coord)) {
                o[k] = l;
            }
        }
        out
    }

    pub fn dense_stiffness(&self) -> DMatrix<f64> {
        let n = self.vertex_count();
        let mut m = DMatrix::zeros(n, n);
        for (i, j, v) in self.stiffness.triplet_iter() {
            m[(i, j)] += *v;
        }
        m
    }
}
