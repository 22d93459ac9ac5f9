use std::collections::HashMap;

use nalgebra::DVector;

use super::HarmonicError;

/// Face area below which a triangle counts as degenerate.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// A triangulated domain in chart coordinates.
///
/// Coordinates may be periodic (e.g. the angle of a catenoid band); edge
/// vectors are then taken modulo the period so faces may straddle the seam.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<DVector<f64>>,
    faces: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    periods: Vec<Option<f64>>,
}

impl TriMesh {
    pub fn new(vertices: Vec<DVector<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, HarmonicError> {
        let dim = vertices.first().map_or(0, |v| v.len());
        Self::with_periods(vertices, faces, vec![None; dim])
    }

    /// Like [`TriMesh::new`] with per-coordinate periods.
    pub fn with_periods(
        vertices: Vec<DVector<f64>>,
        faces: Vec<[usize; 3]>,
        periods: Vec<Option<f64>>,
    ) -> Result<Self, HarmonicError> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(HarmonicError::InvalidMesh("mesh needs at least one vertex and one face".into()));
        }
        let dim = vertices[0].len();
        if dim == 0 || vertices.iter().any(|v| v.len() != dim) {
            return Err(HarmonicError::InvalidMesh("vertices have inconsistent dimensions".into()));
        }
        if periods.len() != dim {
            return Err(HarmonicError::InvalidMesh(format!(
                "{} periods given for {dim}-dimensional vertices",
                periods.len()
            )));
        }
        let n = vertices.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i >= n) {
                return Err(HarmonicError::InvalidMesh(format!("face {fi} references a missing vertex: {f:?}")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(HarmonicError::DegenerateFace { face: fi, area: 0.0 });
            }
            for e in 0..3 {
                let key = (f[e], f[(e + 1) % 3]);
                if let Some(other) = directed.insert(key, fi) {
                    return Err(HarmonicError::InvalidMesh(format!(
                        "faces {other} and {fi} traverse edge {key:?} in the same direction \
                         (inconsistent orientation or non-manifold edge)"
                    )));
                }
            }
        }
        let mut boundary = vec![false; n];
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                boundary[a] = true;
                boundary[b] = true;
            }
        }
        let mesh = Self { vertices, faces, boundary, periods };
        for fi in 0..mesh.faces.len() {
            let area = mesh.coordinate_face_area(fi);
            if area.is_nan() || area <= MIN_FACE_AREA {
                return Err(HarmonicError::DegenerateFace { face: fi, area });
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary.iter().any(|&b| b)
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&i| !self.boundary[i]).collect()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&i| self.boundary[i]).collect()
    }

    /// Coordinate vector from vertex `a` to vertex `b`, wrapped into
    /// `[−period/2, period/2)` on periodic coordinates.
    pub fn edge_vector(&self, a: usize, b: usize) -> DVector<f64> {
        let mut d = &self.vertices[b] - &self.vertices[a];
        for (k, period) in self.periods.iter().enumerate() {
            if let Some(p) = period {
                d[k] -= p * (d[k] / p).round();
            }
        }
        d
    }

    /// Midpoint of edge `(a, b)` consistent with [`TriMesh::edge_vector`].
    pub fn edge_midpoint(&self, a: usize, b: usize) -> DVector<f64> {
        &self.vertices[a] + self.edge_vector(a, b) * 0.5
    }

    /// Face area with the coordinate (Euclidean) metric.
    pub fn coordinate_face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face];
        let e1 = self.edge_vector(a, b);
        let e2 = self.edge_vector(a, c);
        let gram = e1.norm_squared() * e2.norm_squared() - e1.dot(&e2).powi(2);
        0.5 * gram.max(0.0).sqrt()
    }

    /// Faces incident to every vertex.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertex_count()];
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                out[v].push(fi);
            }
        }
        out
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |e| (f[e].min(f[(e + 1) % 3]), f[e].max(f[(e + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn square() -> TriMesh {
        let verts = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[1.0, 1.0]), v(&[0.0, 1.0]), v(&[0.5, 0.5])];
        let faces = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
        TriMesh::new(verts, faces).unwrap()
    }

    #[test]
    fn boundary_flags_from_incidence() {
        let m = square();
        assert_eq!(m.boundary_flags(), &[true, true, true, true, false]);
        assert_eq!(m.interior_vertices(), vec![4]);
        assert_eq!(m.edges().len(), 8);
    }

    #[test]
    fn rejects_bad_meshes() {
        let verts = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[2.0, 0.0])];
        assert!(matches!(
            TriMesh::new(verts.clone(), vec![[0, 1, 2]]),
            Err(HarmonicError::DegenerateFace { face: 0, .. })
        ));
        assert!(matches!(TriMesh::new(verts, vec![[0, 1, 5]]), Err(HarmonicError::InvalidMesh(_))));
        let verts = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 1.0])];
        assert!(matches!(
            TriMesh::new(verts, vec![[0, 1, 2], [0, 1, 3]]),
            Err(HarmonicError::InvalidMesh(_))
        ));
    }

    #[test]
    fn periodic_edge_vectors_wrap() {
        let tau = std::f64::consts::TAU;
        let verts = vec![v(&[tau - 0.1, 0.0]), v(&[0.1, 0.0]), v(&[0.0, 0.2])];
        let m = TriMesh::with_periods(verts, vec![[0, 1, 2]], vec![Some(tau), None]).unwrap();
        assert!((m.edge_vector(0, 1)[0] - 0.2).abs() < 1e-12);
        assert!((m.coordinate_face_area(0) - 0.02).abs() < 1e-12);
    }
}
