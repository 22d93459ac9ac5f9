//! JSON region definitions and CSV field grids.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::trap::{Frame, SimplexTrap};
use super::wedge::{ConeRegion, GraphRegion, PerturbedWedge, PolyhedralCone, Profile};
use super::RegionError;

fn default_cut_offset() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    /// Rows of the rotation matrix.
    pub rotation: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConeSpec {
    Polyhedral {
        apex: Vec<f64>,
        normals: Vec<Vec<f64>>,
        #[serde(default = "default_cut_offset")]
        cut_offset: f64,
    },
    Graph {
        k: usize,
        profile: Profile,
        #[serde(default = "default_cut_offset")]
        cut_offset: f64,
    },
}

/// A region definition as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    SimplexTrap {
        vertices: Vec<Vec<f64>>,
        #[serde(rename = "R")]
        r: f64,
        #[serde(default)]
        nu: Option<Vec<f64>>,
        #[serde(default)]
        frame: Option<FrameSpec>,
    },
    Wedge {
        n: usize,
        cone: ConeSpec,
    },
}

#[derive(Debug, Clone)]
pub enum Region {
    Trap(SimplexTrap),
    Wedge(PerturbedWedge),
}

fn vector(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

impl FrameSpec {
    pub fn build(&self) -> Result<Frame, RegionError> {
        let n = self.rotation.len();
        if self.rotation.iter().any(|row| row.len() != n) {
            return Err(RegionError::InvalidTrap("frame rotation must be square".into()));
        }
        let rot = DMatrix::from_fn(n, n, |i, j| self.rotation[i][j]);
        Frame::new(rot, vector(&self.translation))
    }
}

impl ConeSpec {
    pub fn build(&self) -> Result<Arc<dyn ConeRegion>, RegionError> {
        Ok(match self {
            ConeSpec::Polyhedral { apex, normals, cut_offset } => {
                Arc::new(PolyhedralCone::new(vector(apex), normals.iter().map(|a| vector(a)).collect(), *cut_offset)?)
            }
            ConeSpec::Graph { k, profile, cut_offset } => Arc::new(GraphRegion::new(*k, *profile, *cut_offset)?),
        })
    }
}

impl RegionSpec {
    pub fn build(&self) -> Result<Region, RegionError> {
        match self {
            RegionSpec::SimplexTrap { vertices, r, nu, frame } => {
                let frame = frame.as_ref().map(FrameSpec::build).transpose()?;
                let trap = SimplexTrap::new(
                    vertices.iter().map(|p| vector(p)).collect(),
                    *r,
                    nu.as_deref().map(vector),
                    frame,
                )?;
                Ok(Region::Trap(trap))
            }
            RegionSpec::Wedge { n, cone } => Ok(Region::Wedge(PerturbedWedge::new(*n, cone.build()?)?)),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, RegionError> {
        serde_json::from_str(text).map_err(|e| RegionError::Json(e.to_string()))
    }
}

/// Planar grid `origin + a·u + b·v` for field exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGrid {
    pub origin: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub resolution: usize,
}

impl FieldGrid {
    pub fn points(&self) -> Result<Vec<(f64, f64, DVector<f64>)>, RegionError> {
        let n = self.origin.len();
        if self.u.len() != n || self.v.len() != n {
            return Err(RegionError::DimensionMismatch { what: "grid axis", expected: n, found: self.u.len().min(self.v.len()) });
        }
        if self.resolution < 2 {
            return Err(RegionError::InvalidField("grid resolution must be at least 2".into()));
        }
        let (o, u, v) = (vector(&self.origin), vector(&self.u), vector(&self.v));
        let step = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (self.resolution - 1) as f64;
        let mut out = Vec::with_capacity(self.resolution * self.resolution);
        for j in 0..self.resolution {
            for i in 0..self.resolution {
                let (a, b) = (step(self.u_range, i), step(self.v_range, j));
                out.push((a, b, &o + &u * a + &v * b));
            }
        }
        Ok(out)
    }
}

/// Writes `a,b,x1..xn,value` rows of `field` over the grid.
pub fn write_field_grid<W: Write>(
    grid: &FieldGrid,
    field: impl Fn(&DVector<f64>) -> f64,
    out: W,
) -> Result<(), RegionError> {
    let mut w = csv::Writer::from_writer(out);
    let n = grid.origin.len();
    let mut header = vec!["a".to_string(), "b".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.push("value".into());
    w.write_record(&header).map_err(|e| RegionError::Io(e.to_string()))?;
    for (a, b, x) in grid.points()? {
        let mut row = vec![a.to_string(), b.to_string()];
        row.extend(x.iter().map(|c| c.to_string()));
        row.push(field(&x).to_string());
        w.write_record(&row).map_err(|e| RegionError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| RegionError::Io(e.to_string()))
}
