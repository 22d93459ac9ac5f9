//! Discrete harmonic and minimal maps on triangle meshes: cotan Laplacian,
//! Dirichlet solves, area descent, tension and energy densities, conformal
//! factor estimates and the composition-formula residual.

pub mod generators;
pub mod io;
pub mod laplacian;
pub mod maps;
pub mod mesh;
pub mod solve;

use thiserror::Error;

use crate::geomcore::GeomError;

pub use laplacian::{CotanLaplacian, FaceGeometry, LengthSource};
pub use maps::{
    composition_residual, conformal_factor_estimate, energy_density, max_location, tension_field, tension_residual,
    CompositionTerms, ConformalEstimate, DiscreteMap, MaxLocation, MetricSource, CONFORMAL_THRESHOLD,
};
pub use mesh::TriMesh;
pub use solve::{boundary_from_map, minimal_surface_descent, solve_harmonic, DescentOptions, DescentReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarmonicError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("face {face} is degenerate (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },
    #[error("mesh has no boundary")]
    NoBoundary,
    #[error("no boundary value for boundary vertex {vertex}")]
    MissingBoundaryValue { vertex: usize },
    #[error("linear solve failed: {0}")]
    SolverFailure(String),
    #[error("line search rejected every trial after {step} accepted steps (residual {residual:e})")]
    StepRejectedRepeatedly { step: usize, residual: f64 },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}
