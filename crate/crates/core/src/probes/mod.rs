//! Experiments around maximum principles: Omori-Yau witness search,
//! hypothesis checks for the tomography and Calabi-type theorems, Brownian
//! motion probes, distance-to-geodesic convexity and halfspace confinement.

pub mod brownian;
pub mod calabi;
pub mod hadamard;
pub mod halfspace;
pub mod oy;
pub mod recurrence;
pub mod report;
pub mod tomography;

use thiserror::Error;

use crate::convexity::ConvexityError;
use crate::geomcore::GeomError;
use crate::harmonic::HarmonicError;

pub use brownian::{brownian_mass, simulate_brownian, BrownianOptions, BrownianOutcome};
pub use calabi::{calabi_growth, write_growth_csv, GrowthRow, GrowthTable, GrowthVerdict, RankCondition};
pub use hadamard::{distance_squared_field, distance_to_diameter, hadamard_distance_probe, HadamardOptions, HadamardReport};
pub use halfspace::{halfspace_family_check, halfspace_level_check, HalfspaceOptions, HalfspaceReport, HalfspaceVerdict};
pub use oy::{
    maximizing_sequence, maximizing_sequence_mesh, OYMode, OYOptions, OYResult, OYVerdict, OYWitness,
};
pub use recurrence::{annulus_potential, recurrence_probe, RecurrenceOptions};
pub use report::{ProbeReport, Verdict};
pub use tomography::{tomography_check, LaplacianCheck, TomographyCase, TomographyCertificate, TomographyInput};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("hypothesis failed: {which} (witness {witness:?})")]
    HypothesisFailed { which: String, witness: Vec<f64> },
    #[error("family exhausted: {0}")]
    FamilyExhausted(String),
    #[error("sample {point:?} is within {margin} of the ideal boundary")]
    SampleTooCloseToIdealBoundary { point: Vec<f64>, margin: f64 },
    #[error("vertex {vertex} with value {value} is not inside the halfspace")]
    NotInHalfspace { vertex: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty sample set")]
    EmptySampleSet,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Convexity(#[from] ConvexityError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
}
