use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::convexity::{k_mean_pullvexity_min, wideness_constant};
use crate::geomcore::{jacobian, numerical_rank, singular_triples, Chart, MapSample, Point, SingularTriple};
use crate::harmonic::{DiscreteMap, CONFORMAL_THRESHOLD};

/// Relative singular-value cutoff for numerical ranks.
pub const RANK_TOLERANCE: f64 = 1e-8;
/// Allowed `|∇dP| / (1 + |dP|)` for `P` to count as totally geodesic.
pub const GEODESIC_TOLERANCE: f64 = 1e-4;
/// The measured mesh Laplacian may fall below `C` by this fraction of `C`.
pub const LAPLACIAN_TOLERANCE_FRACTION: f64 = 0.05;

const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TomographyCase {
    /// Non-singular `u`, `k`-wide totally geodesic `P`, strongly convex `η`.
    #[serde(rename = "a")]
    A,
    /// As `A` with wideness replaced by horizontal conformality of `P` and
    /// `rk u + rk P − dim N ≥ 1`.
    #[serde(rename = "a'", alias = "a_prime")]
    APrime,
    /// Conformal `u`, totally geodesic `P`, `η` strongly `k`-mean pullvex
    /// with respect to `P`.
    #[serde(rename = "b")]
    B,
    /// Conformal `u`, conformal totally geodesic `P`,
    /// `rk u + rk P − dim N ≥ k`, `η` strongly `k`-mean convex.
    #[serde(rename = "c")]
    C,
}

/// `u: (M, g) → (N, h)`, `P: N → (B, b)`, `η: B → ℝ`, checked at `samples`
/// in the domain of `u`. `k` defaults to the numerical rank of `u`.
#[derive(Debug, Clone, Copy)]
pub struct TomographyInput<'a> {
    pub u: &'a MapSample,
    pub g: &'a Chart,
    pub h: &'a Chart,
    pub p: &'a MapSample,
    pub b: &'a Chart,
    pub eta: &'a MapSample,
    pub samples: &'a [Point],
    pub k: Option<usize>,
    /// Discrete `u` whose interior vertices get the subharmonicity check.
    pub mesh: Option<&'a DiscreteMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianCheck {
    pub min_interior_laplacian: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub interior_vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyCertificate {
    pub case: TomographyCase,
    pub k: usize,
    pub rank_u: usize,
    pub rank_p: usize,
    pub target_dim: usize,
    pub c1: f64,
    /// Absent in case (b), whose bound does not involve `P` separately.
    pub c2: Option<f64>,
    pub c3: f64,
    /// Certified lower bound for `Δ(η∘P∘u)`.
    pub constant: f64,
    pub samples: usize,
    pub laplacian_check: Option<LaplacianCheck>,
}

struct SampleData {
    point: Point,
    image: Point,
    u_triples: Vec<SingularTriple>,
    p_triples: Vec<SingularTriple>,
}

fn failed(which: impl Into<String>, witness: &Point) -> ProbeError {
    ProbeError::HypothesisFailed { which: which.into(), witness: witness.iter().cloned().collect() }
}

/// `(e^ψ, deviation)` from the nonzero singular values: their mean and the
/// relative spread `(λ_max² − λ_min²) / λ_max²`.
fn horizontal_conformality(triples: &[SingularTriple]) -> (f64, f64) {
    let rank = numerical_rank(triples, RANK_TOLERANCE);
    if rank == 0 {
        return (0.0, 0.0);
    }
    let nonzero = &triples[..rank];
    let (hi, lo) = (nonzero[0].lambda, nonzero[rank - 1].lambda);
    let mean = nonzero.iter().map(|t| t.lambda).sum::<f64>() / rank as f64;
    (mean, (hi * hi - lo * lo) / (hi * hi))
}

/// Largest entry of `∇dP` at `x` relative to `1 + |dP|`: second coordinate
/// derivatives plus the Christoffel corrections of both charts.
fn geodesic_defect(p: &MapSample, x: &Point, h: &Chart, b: &Chart) -> Result<f64, ProbeError> {
    let n = p.domain_dim();
    let dp = jacobian(p, x)?;
    let px = p.eval(x)?;
    let second: Vec<DMatrix<f64>> = (0..n)
        .map(|j| {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[j] += FD_STEP;
            minus[j] -= FD_STEP;
            Ok((jacobian(p, &plus)? - jacobian(p, &minus)?) / (2.0 * FD_STEP))
        })
        .collect::<Result<_, ProbeError>>()?;
    let gamma_n = h.christoffel(x);
    let gamma_b = b.christoffel(&px);
    let mut worst: f64 = 0.0;
    for c in 0..p.target_dim() {
        for i in 0..n {
            for j in 0..n {
                let mut v = second[j][(c, i)];
                for (k, gk) in gamma_n.iter().enumerate() {
                    v -= gk[(i, j)] * dp[(c, k)];
                }
                v += (dp.column(i).transpose() * &gamma_b[c] * dp.column(j))[(0, 0)];
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst / (1.0 + dp.norm()))
}

/// Numerical check of the hypotheses of one case of the tomography theorem
/// over the samples, with the constants `c₁, c₂, c₃` and the certified
/// bound `C` built from them: `c₁²c₂c₃` in (a) and (a'), `c₁²c₃` in (b),
/// `c₁²c₂²c₃` in (c). Fails with the first violated hypothesis and a
/// witness sample.
pub fn tomography_check(input: &TomographyInput<'_>, case: TomographyCase) -> Result<TomographyCertificate, ProbeError> {
    let TomographyInput { u, g, h, p, b, eta, samples, .. } = *input;
    if samples.is_empty() {
        return Err(ProbeError::EmptySampleSet);
    }
    let n = h.dim();
    let data: Vec<SampleData> = samples
        .par_iter()
        .map(|x| {
            let image = u.eval(x)?;
            Ok(SampleData {
                point: x.clone(),
                u_triples: singular_triples(u, x, g, h)?,
                p_triples: singular_triples(p, &image, h, b)?,
                image,
            })
        })
        .collect::<Result<_, ProbeError>>()?;
    let rank_u = data.iter().map(|d| numerical_rank(&d.u_triples, RANK_TOLERANCE)).max().unwrap_or(0);
    let rank_p = data.iter().map(|d| numerical_rank(&d.p_triples, RANK_TOLERANCE)).max().unwrap_or(0);
    let k = input.k.unwrap_or(rank_u);
    if k == 0 {
        return Err(failed("u has positive rank", &data[0].point));
    }
    if matches!(case, TomographyCase::A | TomographyCase::B) && k < rank_u {
        return Err(failed(format!("k ≥ rk u (k = {k}, rk u = {rank_u})"), &data[0].point));
    }

    // P totally geodesic (all cases)
    for d in &data {
        let defect = geodesic_defect(p, &d.image, h, b)?;
        if defect > GEODESIC_TOLERANCE {
            return Err(failed(format!("P totally geodesic (|∇dP| defect {defect:.3e})"), &d.point));
        }
    }

    // c₁: smallest singular value of u in (a), conformal factor e^φ otherwise
    let mut c1 = f64::INFINITY;
    for d in &data {
        let value = match case {
            TomographyCase::A | TomographyCase::APrime => d.u_triples.last().map_or(0.0, |t| t.lambda),
            TomographyCase::B | TomographyCase::C => {
                let (factor, deviation) = horizontal_conformality(&d.u_triples);
                if deviation > CONFORMAL_THRESHOLD {
                    return Err(failed(format!("u conformal (deviation {deviation:.3} > {CONFORMAL_THRESHOLD})"), &d.point));
                }
                factor
            }
        };
        if value <= RANK_TOLERANCE {
            return Err(failed("u non-singular at infinity (c₁ > 0)", &d.point));
        }
        c1 = c1.min(value);
    }

    let rank_condition = rank_u as i64 + rank_p as i64 - n as i64;
    let c2 = match case {
        TomographyCase::A => {
            let mut c2 = f64::INFINITY;
            for d in &data {
                let w = wideness_constant(p, &d.image, k, h, b, None)?;
                if w <= RANK_TOLERANCE {
                    return Err(failed(format!("P {k}-wide (wideness {w:.3e})"), &d.point));
                }
                c2 = c2.min(w);
            }
            Some(c2)
        }
        TomographyCase::APrime | TomographyCase::C => {
            let required = if case == TomographyCase::C { k as i64 } else { 1 };
            if rank_condition < required {
                return Err(failed(
                    format!("rk u + rk P − dim N ≥ {required} ({rank_u} + {rank_p} − {n} = {rank_condition})"),
                    &data[0].point,
                ));
            }
            let mut c2 = f64::INFINITY;
            for d in &data {
                let (factor, deviation) = horizontal_conformality(&d.p_triples);
                if deviation > CONFORMAL_THRESHOLD {
                    return Err(failed(
                        format!("P horizontally conformal (deviation {deviation:.3} > {CONFORMAL_THRESHOLD})"),
                        &d.point,
                    ));
                }
                // (a'): wideness bound e^{2ψ}(rk u + rk P − dim N); (c): e^ψ
                c2 = c2.min(if case == TomographyCase::C { factor } else { factor * factor * rank_condition as f64 });
            }
            Some(c2)
        }
        TomographyCase::B => None,
    };

    let identity_b = MapSample::identity(b.dim());
    let mut c3 = f64::INFINITY;
    for d in &data {
        let pimage = p.eval(&d.image)?;
        let (value, which) = match case {
            TomographyCase::A | TomographyCase::APrime => {
                (k_mean_pullvexity_min(eta, &identity_b, &pimage, 1, b, b)?, "η strongly convex".to_string())
            }
            TomographyCase::B => {
                (k_mean_pullvexity_min(eta, p, &d.image, k, h, b)?, format!("η strongly {k}-mean pullvex along P"))
            }
            TomographyCase::C => {
                (k_mean_pullvexity_min(eta, &identity_b, &pimage, k, b, b)?, format!("η strongly {k}-mean convex"))
            }
        };
        if value <= 0.0 {
            return Err(failed(format!("{which} (value {value:.3e})"), &d.point));
        }
        c3 = c3.min(value);
    }

    let constant = match (case, c2) {
        (TomographyCase::C, Some(c2)) => c1 * c1 * c2 * c2 * c3,
        (_, Some(c2)) => c1 * c1 * c2 * c3,
        (_, None) => c1 * c1 * c3,
    };
    let laplacian_check = input.mesh.map(|mesh| subharmonicity_check(mesh, p, eta, constant)).transpose()?;
    Ok(TomographyCertificate {
        case,
        k,
        rank_u,
        rank_p,
        target_dim: n,
        c1,
        c2,
        c3,
        constant,
        samples: samples.len(),
        laplacian_check,
    })
}

/// Minimum over interior vertices of the cotan Laplacian of `η∘P∘u`,
/// compared against `C − LAPLACIAN_TOLERANCE_FRACTION · C`.
fn subharmonicity_check(
    mesh: &DiscreteMap,
    p: &MapSample,
    eta: &MapSample,
    constant: f64,
) -> Result<LaplacianCheck, ProbeError> {
    let values = mesh
        .values()
        .iter()
        .map(|x| Ok(eta.value(&p.eval(x)?)?))
        .collect::<Result<Vec<f64>, ProbeError>>()?;
    let lap = mesh.laplacian()?.apply(&values);
    let interior = mesh.mesh().interior_vertices();
    if interior.is_empty() {
        return Err(ProbeError::EmptySampleSet);
    }
    let min_interior_laplacian = interior.iter().map(|&i| lap[i]).fold(f64::INFINITY, f64::min);
    let tolerance = LAPLACIAN_TOLERANCE_FRACTION * constant;
    Ok(LaplacianCheck {
        min_interior_laplacian,
        tolerance,
        passed: min_interior_laplacian >= constant - tolerance,
        interior_vertices: interior.len(),
    })
}
