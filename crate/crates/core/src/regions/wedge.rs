//! Perturbed cones and wedges with enclosing-hyperplane providers, and the
//! anchor construction `Q = q − dν` used by the wedge theorem.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::RegionError;

/// Samples per facet are capped at this count.
const MAX_FACET_SAMPLES: usize = 4096;

/// Affine hyperplane `{x : normal·x = offset}` with unit `normal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn signed_distance(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

/// Output of an enclosing-hyperplane provider: the cut `H` and a sampled
/// closure of the component `B` of `R \ H` containing the query point.
#[derive(Debug, Clone, PartialEq)]
pub struct Enclosure {
    pub cut: Hyperplane,
    /// Unit normal of `H` pointing into `B`.
    pub inward: DVector<f64>,
    /// Samples of `∂B`, including the cut face.
    pub boundary: Vec<DVector<f64>>,
    /// Samples of `H ∩ ∂B`.
    pub cut_face: Vec<DVector<f64>>,
}

/// A cone region `R_C ⊆ ℝᵏ` given as a predicate plus an enclosing
/// provider.
pub trait ConeRegion: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn contains(&self, q: &DVector<f64>) -> bool;
    /// `spacing` is the target sample spacing on `∂B`.
    fn enclose(&self, q: &DVector<f64>, spacing: f64) -> Result<Enclosure, RegionError>;
}

/// Open polyhedral cone `{x : aᵢ·(x − apex) > 0}`. The normals must span
/// ℝᵏ, which makes `w = Σ aᵢ` positive on the closed cone minus its apex,
/// so cuts orthogonal to `w` enclose bounded pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralCone {
    apex: DVector<f64>,
    normals: Vec<DVector<f64>>,
    axis: DVector<f64>,
    cut_offset: f64,
}

impl PolyhedralCone {
    pub fn new(apex: DVector<f64>, normals: Vec<DVector<f64>>, cut_offset: f64) -> Result<Self, RegionError> {
        let k = apex.len();
        if k == 0 || normals.is_empty() {
            return Err(RegionError::InvalidCone("polyhedral cone needs an apex and at least one normal".into()));
        }
        if !(cut_offset > 0.0) {
            return Err(RegionError::InvalidCone(format!("cut offset must be positive, got {cut_offset}")));
        }
        let mut unit = Vec::with_capacity(normals.len());
        for a in normals {
            if a.len() != k {
                return Err(RegionError::DimensionMismatch { what: "cone normal", expected: k, found: a.len() });
            }
            let len = a.norm();
            if len == 0.0 {
                return Err(RegionError::InvalidCone("zero cone normal".into()));
            }
            unit.push(a / len);
        }
        let rank = DMatrix::from_columns(&unit).rank(1e-10);
        if rank < k {
            return Err(RegionError::InvalidCone(format!("cone normals span only {rank} of {k} dimensions")));
        }
        let sum: DVector<f64> = unit.iter().sum();
        let axis = &sum / sum.norm();
        Ok(Self { apex, normals: unit, axis, cut_offset })
    }

    /// The planar cone `{y > |x|}`.
    pub fn upward_quadrant(cut_offset: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(
            DVector::zeros(2),
            vec![DVector::from_column_slice(&[-s, s]), DVector::from_column_slice(&[s, s])],
            cut_offset,
        )
        .expect("valid cone")
    }

    pub fn apex(&self) -> &DVector<f64> {
        &self.apex
    }

    pub fn axis(&self) -> &DVector<f64> {
        &self.axis
    }

    /// Vertices of `{aᵢ·(x−apex) ≥ 0, axis·(x−apex) ≤ level}`.
    fn truncated_vertices(&self, level: f64) -> Vec<DVector<f64>> {
        let k = self.apex.len();
        let mut rows: Vec<(DVector<f64>, f64)> = self.normals.iter().map(|a| (a.clone(), 0.0)).collect();
        rows.push((self.axis.clone(), level));
        let mut out: Vec<DVector<f64>> = Vec::new();
        for subset in combinations(rows.len(), k) {
            let a = DMatrix::from_fn(k, k, |r, c| rows[subset[r]].0[c]);
            let b = DVector::from_iterator(k, subset.iter().map(|&i| rows[i].1));
            let Some(y) = a.lu().solve(&b) else { continue };
            if !y.iter().all(|c| c.is_finite()) {
                continue;
            }
            let tol = 1e-10 * level.max(1.0);
            let feasible =
                self.normals.iter().all(|a| a.dot(&y) >= -tol) && self.axis.dot(&y) <= level + tol;
            if feasible && !out.iter().any(|p| (p - &y).norm() <= tol) {
                out.push(y);
            }
        }
        out.into_iter().map(|y| y + &self.apex).collect()
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Samples of the convex hull of `vertices` (a facet): the vertices, evenly
/// spaced points for segments and Dirichlet mixtures otherwise.
fn facet_samples(vertices: &[DVector<f64>], spacing: f64, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let mut out = vertices.to_vec();
    match vertices.len() {
        0 | 1 => {}
        2 => {
            let len = (&vertices[1] - &vertices[0]).norm();
            let steps = ((len / spacing).ceil() as usize).clamp(1, MAX_FACET_SAMPLES);
            for i in 1..steps {
                let t = i as f64 / steps as f64;
                out.push(&vertices[0] * (1.0 - t) + &vertices[1] * t);
            }
        }
        m => {
            let mut diam: f64 = 0.0;
            for a in vertices {
                for b in vertices {
                    diam = diam.max((a - b).norm());
                }
            }
            let dim = (m - 1) as i32;
            let count = ((diam / spacing).powi(dim).ceil() as usize).clamp(1, MAX_FACET_SAMPLES);
            for _ in 0..count {
                let w: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = w.iter().sum();
                out.push(vertices.iter().zip(&w).fold(DVector::zeros(vertices[0].len()), |acc, (p, wi)| {
                    acc + p * (wi / total)
                }));
            }
        }
    }
    out
}

impl ConeRegion for PolyhedralCone {
    fn dim(&self) -> usize {
        self.apex.len()
    }

    fn contains(&self, q: &DVector<f64>) -> bool {
        let y = q - &self.apex;
        self.normals.iter().all(|a| a.dot(&y) > 0.0)
    }

    fn enclose(&self, q: &DVector<f64>, spacing: f64) -> Result<Enclosure, RegionError> {
        if !self.contains(q) {
            return Err(RegionError::NotInRegion { point: q.iter().cloned().collect() });
        }
        let level = self.axis.dot(&(q - &self.apex)) + self.cut_offset;
        let vertices = self.truncated_vertices(level);
        let tol = 1e-9 * level.max(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut boundary = Vec::new();
        let mut cut_face = Vec::new();
        for a in &self.normals {
            let on: Vec<DVector<f64>> =
                vertices.iter().filter(|p| a.dot(&(*p - &self.apex)).abs() <= tol).cloned().collect();
            boundary.extend(facet_samples(&on, spacing, &mut rng));
        }
        let on_cut: Vec<DVector<f64>> =
            vertices.iter().filter(|p| (self.axis.dot(&(*p - &self.apex)) - level).abs() <= tol).cloned().collect();
        cut_face.extend(facet_samples(&on_cut, spacing, &mut rng));
        boundary.extend(cut_face.iter().cloned());
        Ok(Enclosure {
            cut: Hyperplane { normal: self.axis.clone(), offset: level + self.axis.dot(&self.apex) },
            inward: -&self.axis,
            boundary,
            cut_face,
        })
    }
}

/// Radial profile `ψ` of a graph region `{x : xₖ > ψ(|x'|)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `ψ ≡ level`; encloses only in ℝ¹.
    Constant { level: f64 },
    /// `ψ(r) = coefficient·ln(1 + r)`.
    Log { coefficient: f64 },
    /// `ψ(r) = coefficient·r^exponent`.
    Power { coefficient: f64, exponent: f64 },
}

impl Profile {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Profile::Constant { level } => level,
            Profile::Log { coefficient } => coefficient * r.ln_1p(),
            Profile::Power { coefficient, exponent } => coefficient * r.powf(exponent),
        }
    }

    /// Radius where `ψ` reaches `level`, `None` if it never does.
    fn reach(&self, level: f64) -> Option<f64> {
        match *self {
            Profile::Constant { level: c } => (level <= c).then_some(0.0),
            Profile::Log { coefficient } => Some((level / coefficient).exp_m1().max(0.0)),
            Profile::Power { coefficient, exponent } => Some((level.max(0.0) / coefficient).powf(1.0 / exponent)),
        }
    }
}

/// Region above a radial graph: `{x ∈ ℝᵏ : xₖ > ψ(|(x₁,…,x_{k−1})|)}` with
/// `ψ` nondecreasing. Horizontal cuts enclose bounded pieces when `ψ` is
/// unbounded (or `k = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphRegion {
    k: usize,
    profile: Profile,
    cut_offset: f64,
}

impl GraphRegion {
    pub fn new(k: usize, profile: Profile, cut_offset: f64) -> Result<Self, RegionError> {
        if k == 0 {
            return Err(RegionError::InvalidCone("graph region needs k ≥ 1".into()));
        }
        if !(cut_offset > 0.0) {
            return Err(RegionError::InvalidCone(format!("cut offset must be positive, got {cut_offset}")));
        }
        match profile {
            Profile::Log { coefficient } if !(coefficient > 0.0) => {
                return Err(RegionError::InvalidCone("log profile needs a positive coefficient".into()))
            }
            Profile::Power { coefficient, exponent } if !(coefficient > 0.0 && exponent > 0.0) => {
                return Err(RegionError::InvalidCone("power profile needs positive coefficient and exponent".into()))
            }
            _ => {}
        }
        Ok(Self { k, profile, cut_offset })
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    fn split(&self, q: &DVector<f64>) -> (DVector<f64>, f64) {
        (q.rows(0, self.k - 1).into_owned(), q[self.k - 1])
    }

    /// Lattice points of the closed `(k−1)`-ball of radius `r` plus its
    /// sphere.
    fn ball_samples(&self, r: f64, spacing: f64) -> Vec<DVector<f64>> {
        let m = self.k - 1;
        if m == 0 {
            return vec![DVector::zeros(0)];
        }
        let per_axis = ((2.0 * r / spacing).ceil() as usize).clamp(2, (MAX_FACET_SAMPLES as f64).powf(1.0 / m as f64) as usize);
        let h = 2.0 * r / per_axis as f64;
        let mut out = Vec::new();
        let mut idx = vec![0usize; m];
        'grid: loop {
            let p = DVector::from_iterator(m, idx.iter().map(|&i| -r + h * i as f64));
            if p.norm() <= r {
                out.push(p);
            }
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot <= per_axis {
                    continue 'grid;
                }
                *slot = 0;
            }
            break;
        }
        match m {
            1 => out.extend([DVector::from_element(1, -r), DVector::from_element(1, r)]),
            2 => {
                let steps = ((std::f64::consts::TAU * r / spacing).ceil() as usize).clamp(8, MAX_FACET_SAMPLES);
                for i in 0..steps {
                    let a = std::f64::consts::TAU * i as f64 / steps as f64;
                    out.push(DVector::from_column_slice(&[r * a.cos(), r * a.sin()]));
                }
            }
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                for _ in 0..MAX_FACET_SAMPLES {
                    let g: DVector<f64> = DVector::from_iterator(m, (0..m).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
                    out.push(&g * (r / g.norm()));
                }
            }
        }
        out
    }
}

fn join(base: &DVector<f64>, last: f64) -> DVector<f64> {
    DVector::from_iterator(base.len() + 1, base.iter().cloned().chain(std::iter::once(last)))
}

impl ConeRegion for GraphRegion {
    fn dim(&self) -> usize {
        self.k
    }

    fn contains(&self, q: &DVector<f64>) -> bool {
        let (x, y) = self.split(q);
        y > self.profile.eval(x.norm())
    }

    fn enclose(&self, q: &DVector<f64>, spacing: f64) -> Result<Enclosure, RegionError> {
        if !self.contains(q) {
            return Err(RegionError::NotInRegion { point: q.iter().cloned().collect() });
        }
        let level = q[self.k - 1] + self.cut_offset;
        let radius = match (self.k, self.profile.reach(level)) {
            (1, _) => 0.0,
            (_, Some(r)) if r.is_finite() => r,
            _ => {
                return Err(RegionError::EnclosingPropertyViolated(format!(
                    "profile {:?} never reaches the cut level {level}",
                    self.profile
                )))
            }
        };
        let disc = self.ball_samples(radius, spacing);
        let cut_face: Vec<DVector<f64>> = disc.iter().map(|x| join(x, level)).collect();
        let mut boundary: Vec<DVector<f64>> = disc.iter().map(|x| join(x, self.profile.eval(x.norm()))).collect();
        boundary.extend(cut_face.iter().cloned());
        let mut normal = DVector::zeros(self.k);
        normal[self.k - 1] = 1.0;
        Ok(Enclosure { cut: Hyperplane { normal: normal.clone(), offset: level }, inward: -normal, boundary, cut_face })
    }
}

/// `W = C × ℝ^{n−k}`; the region is `R_C × ℝ^{n−k}` on the first `k`
/// coordinates.
#[derive(Debug, Clone)]
pub struct PerturbedWedge {
    n: usize,
    cone: Arc<dyn ConeRegion>,
}

impl PerturbedWedge {
    pub fn new(n: usize, cone: Arc<dyn ConeRegion>) -> Result<Self, RegionError> {
        if cone.dim() >= n {
            return Err(RegionError::InvalidCone(format!("wedge of type (n,k) needs n > k, got n={n}, k={}", cone.dim())));
        }
        Ok(Self { n, cone })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.cone.dim()
    }

    pub fn flat_directions(&self) -> usize {
        self.n - self.k()
    }

    pub fn cone(&self) -> &Arc<dyn ConeRegion> {
        &self.cone
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(0, self.k()).into_owned()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.n && self.cone.contains(&self.project(x))
    }
}

/// Anchor `Q = q − dν` for a point of a wedge region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnclosingData {
    pub q: DVector<f64>,
    pub cut: Hyperplane,
    pub nu: DVector<f64>,
    pub anchor: DVector<f64>,
    pub d: f64,
    /// `max_{x ∈ H∩∂B} |x − Q|` on the samples (`< d`).
    pub cut_face_radius: f64,
    /// `max_{x ∈ ∂B} |x − Q|` on the samples (`> d`).
    pub farthest: f64,
    pub diameter: f64,
    pub sample_count: usize,
    #[serde(skip)]
    pub boundary: Vec<DVector<f64>>,
}

fn max_distance(points: &[DVector<f64>], q: &DVector<f64>) -> f64 {
    points.iter().map(|x| (x - q).norm()).fold(0.0, f64::max)
}

/// Finds `d` with `H∩∂B ⊆ B_d(Q)` and `B ⊄ B_d(Q)` for `Q = q − dν` by
/// bisection on the sampled boundary of `B`.
pub fn enclosing_data(wedge: &PerturbedWedge, p: &DVector<f64>, spacing: f64) -> Result<EnclosingData, RegionError> {
    if p.len() != wedge.n {
        return Err(RegionError::DimensionMismatch { what: "wedge point", expected: wedge.n, found: p.len() });
    }
    if !(spacing > 0.0) {
        return Err(RegionError::InvalidCone(format!("sample spacing must be positive, got {spacing}")));
    }
    let q = wedge.project(p);
    let enc = wedge.cone.enclose(&q, spacing)?;
    if enc.boundary.is_empty() || enc.cut_face.is_empty() {
        return Err(RegionError::EnclosingPropertyViolated("provider returned no boundary samples".into()));
    }
    if enc.boundary.iter().any(|x| !x.iter().all(|c| c.is_finite())) {
        return Err(RegionError::EnclosingPropertyViolated("non-finite boundary sample".into()));
    }
    let diameter = enc.boundary.iter().map(|x| max_distance(&enc.boundary, x)).fold(0.0, f64::max);
    if !(diameter > 0.0 && diameter < 1e12) {
        return Err(RegionError::EnclosingPropertyViolated(format!("sampled diameter {diameter:e} is not bounded")));
    }
    let depth = enc.cut.signed_distance(&q) * enc.cut.normal.dot(&enc.inward).signum();
    if !(depth > 0.0) {
        return Err(RegionError::EnclosingPropertyViolated("query point is not on the inward side of the cut".into()));
    }
    let nu = enc.inward.clone();
    let anchor = |d: f64| &q - &nu * d;
    let cut_ok = |d: f64| max_distance(&enc.cut_face, &anchor(d)) < d;
    let escapes = |d: f64| max_distance(&enc.boundary, &anchor(d)) > d;
    let limit = 1e6 * diameter;
    let mut hi = diameter;
    while !cut_ok(hi) {
        hi *= 2.0;
        if hi > limit {
            return Err(RegionError::NoValidD(format!("cut face not enclosed for d up to {limit:e}")));
        }
    }
    let mut lo = 0.0;
    let tol = 1e-9 * diameter;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if cut_ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let d1 = hi;
    if !escapes(d1) {
        return Err(RegionError::NoValidD(format!("B lies inside B_d(Q) already at the smallest admissible d = {d1}")));
    }
    // the escape condition fails beyond some d₂ only if B does not reach past q along ν
    let d = if escapes(limit) {
        d1
    } else {
        let (mut a, mut b) = (d1, limit);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if escapes(mid) {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (d1 + a)
    };
    if !(cut_ok(d) && escapes(d)) {
        return Err(RegionError::NoValidD(format!("no sampled d satisfies both conditions near {d}")));
    }
    let center = anchor(d);
    Ok(EnclosingData {
        cut_face_radius: max_distance(&enc.cut_face, &center),
        farthest: max_distance(&enc.boundary, &center),
        q,
        cut: enc.cut,
        nu,
        anchor: center,
        d,
        diameter,
        sample_count: enc.boundary.len(),
        boundary: enc.boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrant_truncation_is_a_triangle() {
        let cone = PolyhedralCone::upward_quadrant(1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let verts = cone.truncated_vertices(s);
        assert_eq!(verts.len(), 3);
        for expected in [[0.0, 0.0], [s, s], [-s, s]] {
            assert!(verts.iter().any(|p| (p - DVector::from_column_slice(&expected)).norm() < 1e-12));
        }
    }

    #[test]
    fn non_spanning_normals_rejected() {
        let r = PolyhedralCone::new(DVector::zeros(2), vec![DVector::from_column_slice(&[0.0, 1.0])], 1.0);
        assert!(matches!(r, Err(RegionError::InvalidCone(_))));
    }

    #[test]
    fn constant_profile_does_not_enclose_in_the_plane() {
        let g = GraphRegion::new(2, Profile::Constant { level: 0.0 }, 1.0).unwrap();
        let err = g.enclose(&DVector::from_column_slice(&[0.0, 1.0]), 0.1);
        assert!(matches!(err, Err(RegionError::EnclosingPropertyViolated(_))));
    }
}
