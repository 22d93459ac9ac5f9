use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::geomcore::{gradient, laplace_beltrami, Chart, MapSample, Point};
use crate::harmonic::DiscreteMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OYMode {
    /// `f(p) > sup f − 1/k` and `Δf(p) < 1/k`.
    Weak,
    /// Additionally `‖grad f(p)‖ < 1/k`.
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OYWitness {
    pub k: usize,
    pub point: Vec<f64>,
    /// `sup f − f(p)` against the estimated supremum.
    pub value_gap: f64,
    pub grad_norm: f64,
    pub laplacian: f64,
}

impl OYWitness {
    fn satisfies(&self, k: usize, mode: OYMode) -> bool {
        let bound = 1.0 / k as f64;
        self.value_gap < bound && self.laplacian < bound && (mode == OYMode::Weak || self.grad_norm < bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OYVerdict {
    /// A witness was found for every `k ≤ k_max`.
    Witnessed,
    /// Some `k` have no witness; see `failures`.
    Partial,
    /// Ascent left the search region with values still growing.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OYOptions {
    /// Random ascent starts.
    pub starts: usize,
    /// Grid seeds per axis (charts of dimension ≤ 3 only).
    pub grid_per_axis: usize,
    /// A start terminates after this many consecutive non-improving trials.
    pub stall_iterations: usize,
    pub max_iterations: usize,
    /// Starts are drawn from the domain box clipped to `[-w, w]ⁿ`.
    pub search_half_width: f64,
    /// Ascent that passes this coordinate radius is treated as escaping.
    pub escape_radius: f64,
    /// Best visited points kept as witness candidates.
    pub candidates: usize,
    pub seed: u64,
}

impl Default for OYOptions {
    fn default() -> Self {
        Self {
            starts: 1000,
            grid_per_axis: 11,
            stall_iterations: 50,
            max_iterations: 5000,
            search_half_width: 10.0,
            escape_radius: 1e8,
            candidates: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OYResult {
    pub mode: OYMode,
    pub k_max: usize,
    pub sup_estimate: f64,
    pub witnesses: Vec<OYWitness>,
    /// Values of `k` for which no candidate met the conditions.
    pub failures: Vec<usize>,
    pub verdict: OYVerdict,
    pub starts: usize,
    pub escaped_starts: usize,
}

struct Ascent {
    visited: Vec<(Point, f64)>,
    escaped: bool,
    unbounded: bool,
}

/// Riemannian gradient direction `g⁻¹ df`.
fn ascent_direction(f: &MapSample, chart: &Chart, x: &Point) -> Option<DVector<f64>> {
    let df = gradient(f, x).ok()?;
    let dir = chart.metric_at(x).try_inverse()? * df;
    (dir.iter().all(|v| v.is_finite()) && dir.norm() > 0.0).then_some(dir)
}

fn value(f: &MapSample, chart: &Chart, x: &Point) -> Option<f64> {
    if !chart.contains(x) {
        return None;
    }
    f.value(x).ok().filter(|v| v.is_finite())
}

/// Growth test along the escape ray: increments over successive doublings
/// of the radius decay geometrically for bounded fields.
fn grows_along_ray(f: &MapSample, chart: &Chart, origin: &Point, through: &Point) -> bool {
    let offset = through - origin;
    let r = offset.norm();
    if r == 0.0 {
        return false;
    }
    let dir = offset / r;
    let at = |s: f64| value(f, chart, &(origin + &dir * s));
    match (at(r), at(r / 2.0), at(r / 4.0)) {
        (Some(a), Some(b), Some(c)) => {
            let (d1, d2) = (a - b, b - c);
            d1 > 0.0 && d1 > 0.75 * d2
        }
        _ => false,
    }
}

fn ascend(f: &MapSample, chart: &Chart, start: Point, options: &OYOptions) -> Ascent {
    let mut visited = Vec::new();
    let Some(mut fx) = value(f, chart, &start) else {
        return Ascent { visited, escaped: false, unbounded: false };
    };
    let mut x = start.clone();
    visited.push((x.clone(), fx));
    let mut step = 0.1;
    let mut stall = 0;
    for _ in 0..options.max_iterations {
        let Some(dir) = ascent_direction(f, chart, &x) else { break };
        let trial = &x + &dir * (step / dir.norm());
        match value(f, chart, &trial) {
            Some(ft) if ft > fx => {
                x = trial;
                fx = ft;
                visited.push((x.clone(), fx));
                step *= 2.0;
                stall = 0;
            }
            _ => {
                step *= 0.5;
                stall += 1;
            }
        }
        if stall >= options.stall_iterations {
            break;
        }
        if x.norm() > options.escape_radius {
            let unbounded = grows_along_ray(f, chart, &start, &x);
            return Ascent { visited, escaped: true, unbounded };
        }
    }
    Ascent { visited, escaped: false, unbounded: false }
}

fn start_points(chart: &Chart, options: &OYOptions) -> Vec<Point> {
    let w = options.search_half_width;
    let bounds: Vec<(f64, f64)> = chart.domain_box().iter().map(|&(lo, hi)| (lo.max(-w), hi.min(w))).collect();
    let dim = bounds.len();
    let mut points = Vec::new();
    if dim <= 3 && options.grid_per_axis > 0 {
        let n = options.grid_per_axis;
        for idx in 0..n.pow(dim as u32) {
            let mut rem = idx;
            let p = DVector::from_iterator(
                dim,
                bounds.iter().map(|&(lo, hi)| {
                    let i = rem % n;
                    rem /= n;
                    lo + (hi - lo) * (i as f64 + 0.5) / n as f64
                }),
            );
            if chart.contains(&p) {
                points.push(p);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < options.starts && attempts < 100 * options.starts.max(1) {
        attempts += 1;
        let p = DVector::from_iterator(dim, bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)));
        if chart.contains(&p) {
            points.push(p);
            drawn += 1;
        }
    }
    points
}

fn pick_witnesses(candidates: &[OYWitness], k_max: usize, mode: OYMode) -> (Vec<OYWitness>, Vec<usize>) {
    let mut witnesses = Vec::new();
    let mut failures = Vec::new();
    for k in 1..=k_max {
        match candidates.iter().find(|c| c.satisfies(k, mode)) {
            Some(c) => witnesses.push(OYWitness { k, ..c.clone() }),
            None => failures.push(k),
        }
    }
    (witnesses, failures)
}

/// Omori-Yau maximizing sequence for a scalar field on a chart: estimates
/// `sup f` by multistart Riemannian gradient ascent, then for each
/// `k ≤ k_max` picks the visited point of smallest value gap that meets the
/// mode's conditions.
pub fn maximizing_sequence(
    f: &MapSample,
    chart: &Chart,
    k_max: usize,
    mode: OYMode,
    options: &OYOptions,
) -> Result<OYResult, ProbeError> {
    if f.target_dim() != 1 || f.domain_dim() != chart.dim() {
        return Err(ProbeError::InvalidParameter(format!(
            "`{}` must be a scalar field on the {}-dimensional chart",
            f.label(),
            chart.dim()
        )));
    }
    let starts = start_points(chart, options);
    if starts.is_empty() {
        return Err(ProbeError::EmptySampleSet);
    }
    let ascents: Vec<Ascent> = starts.par_iter().map(|s| ascend(f, chart, s.clone(), options)).collect();
    let escaped_starts = ascents.iter().filter(|a| a.escaped).count();
    let mut visited: Vec<&(Point, f64)> = ascents.iter().flat_map(|a| &a.visited).collect();
    let base = OYResult {
        mode,
        k_max,
        sup_estimate: f64::INFINITY,
        witnesses: Vec::new(),
        failures: Vec::new(),
        verdict: OYVerdict::Unbounded,
        starts: starts.len(),
        escaped_starts,
    };
    if ascents.iter().any(|a| a.unbounded) {
        return Ok(base);
    }
    if visited.is_empty() {
        return Err(ProbeError::EmptySampleSet);
    }
    visited.sort_by(|a, b| b.1.total_cmp(&a.1));
    let sup = visited[0].1;
    // ascent endpoints plus the best visited points
    let mut pool: Vec<&(Point, f64)> = ascents.iter().filter_map(|a| a.visited.last()).collect();
    pool.extend(visited.iter().take(options.candidates));
    pool.sort_by(|a, b| b.1.total_cmp(&a.1));
    pool.dedup_by(|a, b| a.0 == b.0);
    let candidates: Vec<OYWitness> = pool
        .par_iter()
        .filter_map(|(p, v)| {
            let laplacian = laplace_beltrami(f, p, chart).ok()?;
            let df = gradient(f, p).ok()?;
            let g_inv = chart.metric_at(p).try_inverse()?;
            let grad_norm = df.dot(&(g_inv * &df)).max(0.0).sqrt();
            Some(OYWitness { k: 0, point: p.iter().cloned().collect(), value_gap: sup - v, grad_norm, laplacian })
        })
        .collect();
    let (witnesses, failures) = pick_witnesses(&candidates, k_max, mode);
    let verdict = if failures.is_empty() { OYVerdict::Witnessed } else { OYVerdict::Partial };
    Ok(OYResult { sup_estimate: sup, witnesses, failures, verdict, ..base })
}

/// Witness search over the vertices of a mesh for vertex values `values`
/// (typically `f∘u`). Gradients are area-weighted face gradient norms in the
/// metric of `u`, Laplacians come from the cotan operator. With
/// `interior_only` the boundary vertices are excluded from the search and
/// from the supremum.
pub fn maximizing_sequence_mesh(
    u: &DiscreteMap,
    values: &[f64],
    k_max: usize,
    mode: OYMode,
    interior_only: bool,
) -> Result<OYResult, ProbeError> {
    let mesh = u.mesh();
    if values.len() != mesh.vertex_count() {
        return Err(ProbeError::InvalidParameter(format!(
            "{} values for {} vertices",
            values.len(),
            mesh.vertex_count()
        )));
    }
    let laplacian = u.laplacian()?.apply(values);
    let (geoms, _) = u.face_differentials()?;
    let face_grad: Vec<f64> = mesh
        .faces()
        .iter()
        .zip(&geoms)
        .map(|(&[a, b, c], geom)| {
            let p = geom.local_frame();
            let (e1, e2) = ([p[1][0] - p[0][0], p[1][1] - p[0][1]], [p[2][0] - p[0][0], p[2][1] - p[0][1]]);
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            let (d1, d2) = (values[b] - values[a], values[c] - values[a]);
            // solve [e1 e2]ᵀ ∇ = (d1, d2)
            let gx = (d1 * e2[1] - d2 * e1[1]) / det;
            let gy = (e1[0] * d2 - e2[0] * d1) / det;
            gx.hypot(gy)
        })
        .collect();
    let grad = u.vertex_average(&geoms, &face_grad);
    let search: Vec<usize> =
        (0..mesh.vertex_count()).filter(|&i| !(interior_only && mesh.is_boundary(i))).collect();
    if search.is_empty() {
        return Err(ProbeError::EmptySampleSet);
    }
    let sup = search.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
    let mut candidates: Vec<OYWitness> = search
        .iter()
        .map(|&i| OYWitness {
            k: 0,
            point: mesh.vertices()[i].iter().cloned().collect(),
            value_gap: sup - values[i],
            grad_norm: grad[i],
            laplacian: laplacian[i],
        })
        .collect();
    candidates.sort_by(|a, b| a.value_gap.total_cmp(&b.value_gap));
    let (witnesses, failures) = pick_witnesses(&candidates, k_max, mode);
    let verdict = if failures.is_empty() { OYVerdict::Witnessed } else { OYVerdict::Partial };
    Ok(OYResult {
        mode,
        k_max,
        sup_estimate: sup,
        witnesses,
        failures,
        verdict,
        starts: search.len(),
        escaped_starts: 0,
    })
}
