use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{binomial_stderr, within_sigmas, ProbeReport, Verdict};
use super::ProbeError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecurrenceOptions {
    pub n_paths: usize,
    pub seed: u64,
    /// A walk stops once it is this close to either sphere.
    pub shell: f64,
    pub max_steps: usize,
}

impl Default for RecurrenceOptions {
    fn default() -> Self {
        Self { n_paths: 100_000, seed: 0, shell: 1e-6, max_steps: 1_000_000 }
    }
}

/// Probability that Brownian motion in ℝ^dim started at radius `rho` hits
/// the unit sphere before the sphere of radius `r_out`.
pub fn annulus_potential(dim: usize, rho: f64, r_out: f64) -> f64 {
    if dim == 2 {
        (r_out / rho).ln() / r_out.ln()
    } else {
        let e = dim as f64 - 2.0;
        (rho.powf(-e) - r_out.powf(-e)) / (1.0 - r_out.powf(-e))
    }
}

enum WalkEnd {
    Inner,
    Outer,
    Undecided,
}

fn walk(dim: usize, rho: f64, r_out: f64, options: &RecurrenceOptions, index: usize) -> WalkEnd {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(index as u64);
    let mut x = DVector::zeros(dim);
    x[0] = rho;
    for _ in 0..options.max_steps {
        let r = x.norm();
        let (to_inner, to_outer) = (r - 1.0, r_out - r);
        if to_inner <= options.shell {
            return WalkEnd::Inner;
        }
        if to_outer <= options.shell {
            return WalkEnd::Outer;
        }
        let dir: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        x += dir.normalize() * to_inner.min(to_outer);
    }
    WalkEnd::Undecided
}

/// Hitting probability of the unit ball before radius `r_out` in flat ℝ²
/// or ℝ³, by walk-on-spheres, compared with the exact annulus potential.
pub fn recurrence_probe(dim: usize, rho: f64, r_out: f64, options: &RecurrenceOptions) -> Result<ProbeReport, ProbeError> {
    if !(dim == 2 || dim == 3) {
        return Err(ProbeError::InvalidParameter(format!("recurrence probe supports dim 2 or 3, got {dim}")));
    }
    if !(1.0 <= rho && rho < r_out) {
        return Err(ProbeError::InvalidParameter(format!("need 1 ≤ ρ < R_out (ρ = {rho}, R_out = {r_out})")));
    }
    if options.n_paths == 0 || options.shell <= 0.0 {
        return Err(ProbeError::InvalidParameter("need at least one path and a positive shell".into()));
    }
    let ends: Vec<WalkEnd> = (0..options.n_paths).into_par_iter().map(|i| walk(dim, rho, r_out, options, i)).collect();
    let hits = ends.iter().filter(|e| matches!(e, WalkEnd::Inner)).count();
    let undecided = ends.iter().filter(|e| matches!(e, WalkEnd::Undecided)).count();
    let n = options.n_paths;
    let estimate = hits as f64 / n as f64;
    let stderr = binomial_stderr(hits, n);
    let exact = annulus_potential(dim, rho, r_out);
    let verdict = if within_sigmas(estimate, exact, stderr, 3.0) { Verdict::Pass } else { Verdict::Fail };
    let mut notes = Vec::new();
    if undecided > 0 {
        notes.push(format!("{undecided} walks hit the step limit and count as misses"));
    }
    Ok(ProbeReport {
        probe_name: "recurrence_probe".into(),
        parameters: json!({
            "dim": dim,
            "start_radius": rho,
            "target_radius": 1.0,
            "outer_radius": r_out,
            "n_paths": n,
            "seed": options.seed,
            "shell": options.shell,
            "exact": exact,
        }),
        estimate,
        stderr: Some(stderr),
        samples: n,
        verdict,
        threshold: "pass iff |estimate - exact annulus potential| <= 3 * stderr".into(),
        notes,
    })
}
