//! Containment geometry: simplex traps, perturbed cones and wedges with
//! enclosing hyperplanes, and localized distance-squared fields.

pub mod convex;
pub mod field;
pub mod io;
pub mod trap;
pub mod wedge;

use thiserror::Error;

pub use convex::{project_hull, project_simplex, Projection};
pub use field::{smoothstep, Anchor, FieldJet, LocalizedDistanceSquared, Plateau};
pub use io::{write_field_grid, ConeSpec, FieldGrid, FrameSpec, Region, RegionSpec};
pub use trap::{trap_contains, trap_excluded_max, Frame, SimplexTrap, TrapMembership};
pub use wedge::{
    enclosing_data, ConeRegion, Enclosure, EnclosingData, GraphRegion, Hyperplane, PerturbedWedge, PolyhedralCone,
    Profile,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("invalid simplex trap: {0}")]
    InvalidTrap(String),
    #[error("invalid cone region: {0}")]
    InvalidCone(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("point {point:?} is not in the region")]
    NotInRegion { point: Vec<f64> },
    #[error("enclosing property violated: {0}")]
    EnclosingPropertyViolated(String),
    #[error("no valid d: {0}")]
    NoValidD(String),
    #[error("invalid region JSON: {0}")]
    Json(String),
    #[error("i/o error: {0}")]
    Io(String),
}
