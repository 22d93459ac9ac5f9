//! Pullback-convexity calculus and desk-scale experiments around maximum
//! principles for harmonic maps.

pub mod convexity;
pub mod geomcore;
pub mod harmonic;
pub mod probes;
pub mod regions;
