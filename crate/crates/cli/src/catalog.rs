//! Named functions, maps, charts, meshes and sample sets that a scenario
//! config can refer to.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use pullvexlab::geomcore::{Chart, MapSample, MetricField, Point};
use pullvexlab::harmonic::generators::{
    catenoid_band, catenoid_map, conformal_helicoid_map, enneper_map, flat_annulus, flat_disk, flat_rectangle,
    helicoid_map,
};
use pullvexlab::harmonic::{DiscreteMap, HarmonicError, MetricSource, TriMesh};
use serde::{Deserialize, Serialize};

use crate::output::read_mesh;
use crate::CliError;

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::ConfigInvalid(format!("{what}: matrix rows must be non-empty and of equal length")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn point(xs: &[f64]) -> Point {
    DVector::from_column_slice(xs)
}

/// Scalar fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `x² + y² − α z²` on ℝ³.
    Beta { alpha: f64 },
    NormSquared { dim: usize },
    /// `xᵀ A x`.
    QuadraticForm { matrix: Vec<Vec<f64>> },
    /// `arctan x` on ℝ.
    Arctan,
    /// `x_index` on ℝ^dim.
    Coordinate { dim: usize, index: usize },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<MapSample, CliError> {
        Ok(match self {
            FunctionSpec::Beta { alpha } => MapSample::quadratic_form(
                format!("beta_{alpha}"),
                DMatrix::from_diagonal(&point(&[1.0, 1.0, -alpha])),
            ),
            FunctionSpec::NormSquared { dim } => {
                if *dim == 0 {
                    return Err(CliError::ConfigInvalid("norm_squared: dim must be positive".into()));
                }
                MapSample::quadratic_form(format!("|x|^2_R{dim}"), DMatrix::identity(*dim, *dim))
            }
            FunctionSpec::QuadraticForm { matrix: rows } => {
                let a = matrix(rows, "quadratic_form")?;
                if !a.is_square() {
                    return Err(CliError::ConfigInvalid("quadratic_form: matrix must be square".into()));
                }
                MapSample::quadratic_form("quadratic_form", a)
            }
            FunctionSpec::Arctan => MapSample::scalar("arctan", 1, |p| p[0].atan())
                .with_jacobian(|p| DMatrix::from_element(1, 1, 1.0 / (1.0 + p[0] * p[0])))
                .with_hessian(|p| DMatrix::from_element(1, 1, -2.0 * p[0] / (1.0 + p[0] * p[0]).powi(2))),
            FunctionSpec::Coordinate { dim, index } => {
                if index >= dim {
                    return Err(CliError::ConfigInvalid(format!("coordinate: index {index} out of range for dim {dim}")));
                }
                let (dim, index) = (*dim, *index);
                MapSample::scalar(format!("x{}", index + 1), dim, move |p| p[index])
                    .with_jacobian(move |_| DMatrix::from_fn(1, dim, |_, j| if j == index { 1.0 } else { 0.0 }))
                    .with_hessian(move |_| DMatrix::zeros(dim, dim))
            }
        })
    }
}

/// Maps between coordinate spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Identity { dim: usize },
    Linear { matrix: Vec<Vec<f64>> },
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// Orthogonal projection of ℝ^dim onto the listed axes, as an
    /// endomorphism.
    Projection { dim: usize, axes: Vec<usize> },
    /// `(θ, v) ↦ (cosh v cos θ, cosh v sin θ, v)`.
    Catenoid,
    /// `(s, t) ↦ (s cos t, s sin t, pitch · t)`.
    Helicoid { pitch: f64 },
    /// `(v, t) ↦ (sinh v cos t, sinh v sin t, t)`.
    ConformalHelicoid,
    Enneper,
    /// `(s, t) ↦ (s, t, s² − t², 1, 1)`.
    Saddle,
}

impl MapSpec {
    pub fn build(&self) -> Result<MapSample, CliError> {
        Ok(match self {
            MapSpec::Identity { dim } => MapSample::identity(*dim),
            MapSpec::Linear { matrix: rows } => MapSample::linear("linear", matrix(rows, "linear")?),
            MapSpec::Affine { matrix: rows, offset } => {
                let a = matrix(rows, "affine")?;
                if a.nrows() != offset.len() {
                    return Err(CliError::ConfigInvalid("affine: offset length must match the matrix rows".into()));
                }
                MapSample::affine("affine", a, point(offset))
            }
            MapSpec::Projection { dim, axes } => {
                if let Some(bad) = axes.iter().find(|&&a| a >= *dim) {
                    return Err(CliError::ConfigInvalid(format!("projection: axis {bad} out of range for dim {dim}")));
                }
                MapSample::coordinate_projection(*dim, axes)
            }
            MapSpec::Catenoid => catenoid_map(),
            MapSpec::Helicoid { pitch } => helicoid_map(*pitch),
            MapSpec::ConformalHelicoid => conformal_helicoid_map(),
            MapSpec::Enneper => enneper_map(),
            MapSpec::Saddle => MapSample::new("saddle", 2, 5, |p| {
                DVector::from_vec(vec![p[0], p[1], p[0] * p[0] - p[1] * p[1], 1.0, 1.0])
            }),
        })
    }
}

/// Coordinate charts with their metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    Euclidean { dim: usize },
    EuclideanBox { bounds: Vec<(f64, f64)> },
    PoincareDisk {
        curvature: f64,
        #[serde(default)]
        max_radius: Option<f64>,
    },
    /// `(θ, v)` with the catenoid's induced metric `cosh²v · I`,
    /// `|v| ≤ half_height`.
    CatenoidInduced { half_height: f64 },
}

impl ChartSpec {
    pub fn build(&self) -> Result<Chart, CliError> {
        Ok(match self {
            ChartSpec::Euclidean { dim } => {
                if *dim == 0 {
                    return Err(CliError::ConfigInvalid("euclidean chart: dim must be positive".into()));
                }
                Chart::euclidean(*dim)
            }
            ChartSpec::EuclideanBox { bounds } => {
                if bounds.is_empty() || bounds.iter().any(|(lo, hi)| !(lo < hi)) {
                    return Err(CliError::ConfigInvalid("euclidean_box: bounds must be non-empty with lo < hi".into()));
                }
                Chart::euclidean_box(bounds.clone())
            }
            ChartSpec::PoincareDisk { curvature, max_radius } => {
                if !(*curvature < 0.0) {
                    return Err(CliError::ConfigInvalid("poincare_disk: curvature must be negative".into()));
                }
                let chart = Chart::poincare_disk(*curvature);
                match max_radius {
                    Some(r) => chart.with_max_radius(*r),
                    None => chart,
                }
            }
            ChartSpec::CatenoidInduced { half_height } => Chart::new(
                "catenoid-induced",
                vec![(f64::NEG_INFINITY, f64::INFINITY), (-half_height, *half_height)],
                MetricField::Conformal(Arc::new(|p: &Point| p[1].cosh().powi(2))),
            ),
        })
    }
}

/// Triangulated domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    /// OFF or OBJ file, relative to the config file.
    File { path: PathBuf },
    FlatRectangle { nx: usize, ny: usize, x: (f64, f64), y: (f64, f64) },
    FlatDisk { rings: usize, radius: f64 },
    FlatAnnulus { r_in: f64, r_out: f64, radial: usize, angular: usize },
    /// `(θ, v)` band, periodic in `θ`, `|v| ≤ half_height`.
    CatenoidBand { half_height: f64, level: u32 },
}

impl MeshSpec {
    pub fn build(&self, base_dir: &Path) -> Result<TriMesh, CliError> {
        let generated = match self {
            MeshSpec::File { path } => return read_mesh(&base_dir.join(path)),
            MeshSpec::FlatRectangle { nx, ny, x, y } => flat_rectangle(*nx, *ny, *x, *y),
            MeshSpec::FlatDisk { rings, radius } => flat_disk(*rings, *radius),
            MeshSpec::FlatAnnulus { r_in, r_out, radial, angular } => flat_annulus(*r_in, *r_out, *radial, *angular),
            MeshSpec::CatenoidBand { half_height, level } => catenoid_band(*half_height, *level),
        };
        generated.map_err(|e| CliError::ConfigInvalid(format!("mesh {self:?}: {e}")))
    }
}

/// Which metric a discrete map's domain carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshMetric {
    /// Induced by the map values.
    #[default]
    Embedding,
    /// Flat metric of the mesh coordinates.
    Flat,
}

pub fn discrete_map(mesh: TriMesh, map: &MapSample, metric: MeshMetric) -> Result<DiscreteMap, HarmonicError> {
    let source = match metric {
        MeshMetric::Embedding => MetricSource::Embedding,
        MeshMetric::Flat => MetricSource::flat(mesh.dim()),
    };
    DiscreteMap::from_map(mesh, map, source)
}

/// Point sets in a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSpec {
    Points { points: Vec<Vec<f64>> },
    /// Tensor grid with `per_axis` points per axis including the ends.
    Grid { bounds: Vec<(f64, f64)>, per_axis: usize },
}

impl SampleSpec {
    pub fn build(&self) -> Result<Vec<Point>, CliError> {
        match self {
            SampleSpec::Points { points } => Ok(points.iter().map(|p| point(p)).collect()),
            SampleSpec::Grid { bounds, per_axis } => {
                if bounds.is_empty() || *per_axis < 2 {
                    return Err(CliError::ConfigInvalid("grid samples need bounds and per_axis ≥ 2".into()));
                }
                let dim = bounds.len();
                let n = *per_axis;
                Ok((0..n.pow(dim as u32))
                    .map(|idx| {
                        let mut rem = idx;
                        DVector::from_iterator(
                            dim,
                            bounds.iter().map(|&(lo, hi)| {
                                let i = rem % n;
                                rem /= n;
                                lo + (hi - lo) * i as f64 / (n - 1) as f64
                            }),
                        )
                    })
                    .collect())
            }
        }
    }
}

/// One-parameter families of discrete minimal maps indexed by `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Catenoid bands `|v| ≤ s`.
    Catenoid { level: u32 },
    /// The unit-radius flat disk with `rings_per_unit · s` rings.
    FlatDisk { radius: f64, rings_per_unit: usize },
}

impl FamilySpec {
    pub fn member(&self, s: f64) -> Result<DiscreteMap, HarmonicError> {
        match self {
            FamilySpec::Catenoid { level } => {
                DiscreteMap::from_map(catenoid_band(s, *level)?, &catenoid_map(), MetricSource::Embedding)
            }
            FamilySpec::FlatDisk { radius, rings_per_unit } => {
                let rings = (*rings_per_unit as f64 * s).round().max(1.0) as usize;
                DiscreteMap::from_map(flat_disk(rings, *radius)?, &MapSample::identity(2), MetricSource::flat(2))
            }
        }
    }
}
