//! Built-in meshes (flat square/disk/annulus, catenoid and helicoid bands,
//! Enneper patch, round sphere) and the parametrizations that go with them.

use std::collections::HashMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use super::mesh::TriMesh;
use super::HarmonicError;
use crate::geomcore::MapSample;

fn v2(x: f64, y: f64) -> DVector<f64> {
    DVector::from_vec(vec![x, y])
}

fn grid_faces(nx: usize, ny: usize, wrap_x: bool) -> Vec<[usize; 3]> {
    let cols = if wrap_x { nx } else { nx + 1 };
    let idx = |i: usize, j: usize| j * cols + (i % cols);
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    faces
}

/// Regular `nx × ny` grid on a rectangle, each cell split along the same
/// diagonal.
pub fn flat_rectangle(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<TriMesh, HarmonicError> {
    if nx == 0 || ny == 0 {
        return Err(HarmonicError::InvalidMesh("grid needs at least one cell per side".into()));
    }
    let mut verts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            verts.push(v2(
                x.0 + (x.1 - x.0) * i as f64 / nx as f64,
                y.0 + (y.1 - y.0) * j as f64 / ny as f64,
            ));
        }
    }
    TriMesh::new(verts, grid_faces(nx, ny, false))
}

pub fn flat_square(n: usize, x: (f64, f64), y: (f64, f64)) -> Result<TriMesh, HarmonicError> {
    flat_rectangle(n, n, x, y)
}

/// A band periodic in the first coordinate: `x ∈ [0, period)` with `nx`
/// columns, `y ∈ [y.0, y.1]` with `ny` rows.
pub fn periodic_band(nx: usize, ny: usize, period: f64, y: (f64, f64)) -> Result<TriMesh, HarmonicError> {
    if nx < 3 || ny == 0 {
        return Err(HarmonicError::InvalidMesh("periodic band needs ≥ 3 columns and ≥ 1 row".into()));
    }
    let mut verts = Vec::with_capacity(nx * (ny + 1));
    for j in 0..=ny {
        for i in 0..nx {
            verts.push(v2(period * i as f64 / nx as f64, y.0 + (y.1 - y.0) * j as f64 / ny as f64));
        }
    }
    TriMesh::with_periods(verts, grid_faces(nx, ny, true), vec![Some(period), None])
}

/// Triangulate between two concentric rings by walking both in angle order.
fn zip_rings(inner: &[usize], outer: &[usize], faces: &mut Vec<[usize; 3]>) {
    let (a, b) = (inner.len(), outer.len());
    let (mut i, mut j) = (0, 0);
    while i < a || j < b {
        let advance_inner = j == b || (i < a && ((i + 1) as f64 / a as f64) < ((j + 1) as f64 / b as f64));
        if advance_inner {
            faces.push([inner[i % a], outer[j % b], inner[(i + 1) % a]]);
            i += 1;
        } else {
            faces.push([inner[i % a], outer[j % b], outer[(j + 1) % b]]);
            j += 1;
        }
    }
}

/// Disk of the given radius with `rings` concentric rings of `6k` vertices.
pub fn flat_disk(rings: usize, radius: f64) -> Result<TriMesh, HarmonicError> {
    if rings == 0 {
        return Err(HarmonicError::InvalidMesh("disk needs at least one ring".into()));
    }
    let mut verts = vec![v2(0.0, 0.0)];
    let mut faces = Vec::new();
    let mut prev: Vec<usize> = vec![0];
    for k in 1..=rings {
        let r = radius * k as f64 / rings as f64;
        let count = 6 * k;
        let ring: Vec<usize> = (0..count)
            .map(|j| {
                let t = TAU * j as f64 / count as f64;
                verts.push(v2(r * t.cos(), r * t.sin()));
                verts.len() - 1
            })
            .collect();
        if k == 1 {
            for j in 0..count {
                faces.push([0, ring[j], ring[(j + 1) % count]]);
            }
        } else {
            zip_rings(&prev, &ring, &mut faces);
        }
        prev = ring;
    }
    TriMesh::new(verts, faces)
}

/// Annulus `r_in ≤ |x| ≤ r_out` with `radial` rows of `angular` vertices.
pub fn flat_annulus(r_in: f64, r_out: f64, radial: usize, angular: usize) -> Result<TriMesh, HarmonicError> {
    if !(0.0 < r_in && r_in < r_out) || radial == 0 || angular < 3 {
        return Err(HarmonicError::InvalidMesh("annulus needs 0 < r_in < r_out, ≥ 1 row, ≥ 3 columns".into()));
    }
    let mut verts = Vec::with_capacity(angular * (radial + 1));
    for j in 0..=radial {
        let r = r_in + (r_out - r_in) * j as f64 / radial as f64;
        for i in 0..angular {
            let t = TAU * i as f64 / angular as f64;
            verts.push(v2(r * t.cos(), r * t.sin()));
        }
    }
    TriMesh::new(verts, grid_faces(angular, radial, true))
}

/// Grid size of the catenoid band at a refinement level: `8·2^level`
/// columns in `θ` and rows chosen for near-square cells.
pub fn catenoid_band_size(half_height: f64, level: u32) -> (usize, usize) {
    let n_theta = 8usize << level;
    let n_v = ((2.0 * half_height * n_theta as f64 / TAU).round() as usize).max(2);
    (n_theta, n_v)
}

/// Flat `(θ, v)` band `θ ∈ [0, 2π)`, `v ∈ [−V, V]` (periodic in `θ`).
pub fn catenoid_band(half_height: f64, level: u32) -> Result<TriMesh, HarmonicError> {
    let (nt, nv) = catenoid_band_size(half_height, level);
    periodic_band(nt, nv, TAU, (-half_height, half_height))
}

/// `(θ, v) ↦ (cosh v cos θ, cosh v sin θ, v)`, the conformal catenoid.
pub fn catenoid_map() -> MapSample {
    MapSample::new("catenoid", 2, 3, |p| {
        DVector::from_vec(vec![p[1].cosh() * p[0].cos(), p[1].cosh() * p[0].sin(), p[1]])
    })
    .with_jacobian(|p| {
        let (c, s) = (p[0].cos(), p[0].sin());
        let (ch, sh) = (p[1].cosh(), p[1].sinh());
        DMatrix::from_row_slice(3, 2, &[-ch * s, sh * c, ch * c, sh * s, 0.0, 1.0])
    })
}

/// Catenoid of waist `a` through the circles `r = a cosh(±V/a)`:
/// `(θ, z) ↦ (a cosh(z/a) cos θ, a cosh(z/a) sin θ, z)`.
pub fn catenoid_waist_map(waist: f64) -> MapSample {
    MapSample::new(format!("catenoid(a={waist})"), 2, 3, move |p| {
        let r = waist * (p[1] / waist).cosh();
        DVector::from_vec(vec![r * p[0].cos(), r * p[0].sin(), p[1]])
    })
}

/// Ruled helicoid `(s, t) ↦ (s cos t, s sin t, pitch · t)`.
pub fn helicoid_map(pitch: f64) -> MapSample {
    MapSample::new(format!("helicoid(pitch={pitch})"), 2, 3, move |p| {
        DVector::from_vec(vec![p[0] * p[1].cos(), p[0] * p[1].sin(), pitch * p[1]])
    })
}

/// Conformal helicoid `(v, t) ↦ (sinh v cos t, sinh v sin t, t)`.
pub fn conformal_helicoid_map() -> MapSample {
    MapSample::new("helicoid-conformal", 2, 3, |p| {
        DVector::from_vec(vec![p[0].sinh() * p[1].cos(), p[0].sinh() * p[1].sin(), p[1]])
    })
}

/// Enneper's surface `(u, v) ↦ (u − u³/3 + uv², v − v³/3 + vu², u² − v²)`.
pub fn enneper_map() -> MapSample {
    MapSample::new("enneper", 2, 3, |p| {
        let (u, v) = (p[0], p[1]);
        DVector::from_vec(vec![u - u * u * u / 3.0 + u * v * v, v - v * v * v / 3.0 + v * u * u, u * u - v * v])
    })
}

/// Flat disk of parameters for the Enneper patch.
pub fn enneper_patch(rings: usize, radius: f64) -> Result<TriMesh, HarmonicError> {
    flat_disk(rings, radius)
}

/// Ruled helicoid band `s ∈ [−S, S]`, `t ∈ [0, T]` in parameter space.
pub fn helicoid_band(half_width: f64, turn: f64, ns: usize, nt: usize) -> Result<TriMesh, HarmonicError> {
    flat_rectangle(ns, nt, (-half_width, half_width), (0.0, turn))
}

/// Icosphere of the given radius (vertices in ℝ³), `subdivisions` rounds of
/// midpoint refinement. Closed, so it has no boundary.
pub fn round_sphere(radius: f64, subdivisions: u32) -> Result<TriMesh, HarmonicError> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut verts: Vec<DVector<f64>> =
        raw.iter().map(|p| DVector::from_column_slice(p).normalize()).collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<DVector<f64>>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((&verts[a] + &verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut verts {
        *v *= radius;
    }
    TriMesh::new(verts, faces)
}

/// Height of the catenoid waist `a` spanning unit circles at `z = ±V`: the
/// larger root of `a cosh(V/a) = 1` (the stable branch). `None` once the
/// circles are too far apart for any catenoid (`V ≳ 0.6627`).
pub fn catenoid_waist(half_height: f64) -> Option<f64> {
    let g = |a: f64| a * (half_height / a).cosh() - 1.0;
    // a cosh(V/a) is convex in a; the stable branch is the root above its minimizer
    let a_star = {
        let (mut l, mut r) = (1e-6, 1.0);
        for _ in 0..200 {
            let m1 = l + (r - l) * 0.382;
            let m2 = l + (r - l) * 0.618;
            if g(m1) < g(m2) {
                r = m2;
            } else {
                l = m1;
            }
        }
        0.5 * (l + r)
    };
    if g(a_star) > 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (a_star, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
