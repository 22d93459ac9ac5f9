use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{binomial_stderr, within_sigmas, ProbeReport, Verdict};
use super::ProbeError;
use crate::geomcore::{Chart, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BrownianOptions {
    pub t: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
}

impl Default for BrownianOptions {
    fn default() -> Self {
        Self { t: 1.0, n_paths: 10_000, dt: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrownianOutcome {
    pub alive: usize,
    /// Paths absorbed at the edge of the chart.
    pub escaped: usize,
    /// Paths stopped because the metric could not be evaluated; they are
    /// also counted in `escaped`.
    pub step_rejected: usize,
    pub steps: usize,
    /// Final positions of the surviving paths, in path order.
    pub endpoints: Vec<Point>,
}

enum PathEnd {
    Alive(Point),
    Escaped,
    Rejected,
}

/// A factor `σ` with `σσᵀ = g⁻¹`.
fn diffusion_factor(chart: &Chart, x: &Point) -> Option<DMatrix<f64>> {
    let g_inv = chart.metric_at(x).try_inverse()?;
    let l = g_inv.cholesky()?.l();
    l.iter().all(|v| v.is_finite()).then_some(l)
}

fn run_path(chart: &Chart, start: &Point, steps: usize, h: f64, seed: u64, index: usize, flat: Option<&DMatrix<f64>>) -> PathEnd {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let n = start.len();
    let sqrt_h = h.sqrt();
    let mut x = start.clone();
    for _ in 0..steps {
        let xi = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let step = match flat {
            Some(sigma) => sigma * xi * sqrt_h,
            None => {
                let (Some(sigma), drift) = (diffusion_factor(chart, &x), chart.half_laplacian_drift(&x)) else {
                    return PathEnd::Rejected;
                };
                if drift.iter().any(|v| !v.is_finite()) {
                    return PathEnd::Rejected;
                }
                drift * h + sigma * xi * sqrt_h
            }
        };
        x += step;
        if !chart.contains(&x) {
            return PathEnd::Escaped;
        }
    }
    PathEnd::Alive(x)
}

/// Euler–Maruyama paths of the diffusion generated by `½Δ_g` started at
/// `start`, absorbed when they leave the chart. Path `i` draws from its own
/// stream of a seeded counter-based generator, so the outcome does not
/// depend on scheduling.
pub fn simulate_brownian(chart: &Chart, start: &Point, options: &BrownianOptions) -> Result<BrownianOutcome, ProbeError> {
    let BrownianOptions { t, n_paths, dt, seed } = *options;
    if !(t > 0.0 && dt > 0.0) || n_paths == 0 {
        return Err(ProbeError::InvalidParameter(format!(
            "need t > 0, dt > 0 and at least one path (t = {t}, dt = {dt}, paths = {n_paths})"
        )));
    }
    chart.check_point(start)?;
    let steps = (t / dt).ceil() as usize;
    let h = t / steps as f64;
    let flat = if chart.is_flat() {
        Some(diffusion_factor(chart, start).ok_or_else(|| ProbeError::InvalidParameter("metric not positive definite".into()))?)
    } else {
        None
    };
    let ends: Vec<PathEnd> =
        (0..n_paths).into_par_iter().map(|i| run_path(chart, start, steps, h, seed, i, flat.as_ref())).collect();
    let mut outcome = BrownianOutcome { alive: 0, escaped: 0, step_rejected: 0, steps, endpoints: Vec::new() };
    for end in ends {
        match end {
            PathEnd::Alive(x) => {
                outcome.alive += 1;
                outcome.endpoints.push(x);
            }
            PathEnd::Escaped => outcome.escaped += 1,
            PathEnd::Rejected => {
                outcome.escaped += 1;
                outcome.step_rejected += 1;
            }
        }
    }
    Ok(outcome)
}

/// Fraction of Brownian paths still inside the chart at time `t`. Passes
/// when the mass is 1 within three binomial standard errors; a shortfall
/// caused by absorption at the chart edge is inconclusive and flagged
/// `boundary-limited`.
pub fn brownian_mass(chart: &Chart, start: &Point, options: &BrownianOptions) -> Result<ProbeReport, ProbeError> {
    let outcome = simulate_brownian(chart, start, options)?;
    let n = options.n_paths;
    let estimate = outcome.alive as f64 / n as f64;
    let stderr = binomial_stderr(outcome.alive, n);
    let mut notes = Vec::new();
    let verdict = if within_sigmas(estimate, 1.0, stderr, 3.0) {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    if outcome.escaped > 0 {
        notes.push(format!(
            "boundary-limited: {} of {n} paths absorbed at the chart edge (truncation, not incompleteness)",
            outcome.escaped
        ));
    }
    if outcome.step_rejected > 0 {
        notes.push(format!("step-rejected: metric evaluation failed on {} paths, counted as escaped", outcome.step_rejected));
    }
    Ok(ProbeReport {
        probe_name: "brownian_mass".into(),
        parameters: json!({
            "chart": chart.name(),
            "start": start.iter().collect::<Vec<_>>(),
            "t": options.t,
            "dt": options.dt,
            "steps": outcome.steps,
            "n_paths": n,
            "seed": options.seed,
        }),
        estimate,
        stderr: Some(stderr),
        samples: n,
        verdict,
        threshold: "pass iff |mass - 1| <= 3 * stderr; otherwise inconclusive (absorbing chart edge)".into(),
        notes,
    })
}
