use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::{Deserialize, Serialize};

use super::laplacian::{CotanLaplacian, LengthSource};
use super::maps::{DiscreteMap, MetricSource};
use super::mesh::TriMesh;
use super::HarmonicError;
use crate::geomcore::{Chart, MapSample};

/// Relative residual required of the interior Dirichlet solve.
pub const SOLVER_TOLERANCE: f64 = 1e-10;
const REFINEMENT_ROUNDS: usize = 3;

/// Boundary values sampled from a smooth map at the mesh boundary vertices.
pub fn boundary_from_map(mesh: &TriMesh, u: &MapSample) -> Result<BTreeMap<usize, DVector<f64>>, HarmonicError> {
    mesh.boundary_vertices()
        .into_iter()
        .map(|i| Ok((i, u.eval(&mesh.vertices()[i])?)))
        .collect()
}

/// Factorized interior block `L_II` of a cotan stiffness matrix.
struct InteriorSystem {
    interior: Vec<usize>,
    slot: Vec<usize>,
    l_ii: CscMatrix<f64>,
    chol: CscCholesky<f64>,
}

impl InteriorSystem {
    fn new(lap: &CotanLaplacian, mesh: &TriMesh) -> Result<Option<Self>, HarmonicError> {
        let interior = mesh.interior_vertices();
        if interior.is_empty() {
            return Ok(None);
        }
        let mut slot = vec![usize::MAX; mesh.vertex_count()];
        for (k, &i) in interior.iter().enumerate() {
            slot[i] = k;
        }
        let mut coo = CooMatrix::new(interior.len(), interior.len());
        for (i, j, &w) in lap.stiffness().triplet_iter() {
            if slot[i] != usize::MAX && slot[j] != usize::MAX {
                coo.push(slot[i], slot[j], w);
            }
        }
        let l_ii = CscMatrix::from(&coo);
        let chol = CscCholesky::factor(&l_ii)
            .map_err(|e| HarmonicError::SolverFailure(format!("interior stiffness not positive definite: {e:?}")))?;
        Ok(Some(Self { interior, slot, l_ii, chol }))
    }

    /// Solve `L_II x = rhs` with iterative refinement; the residual must
    /// stay below `SOLVER_TOLERANCE · scale`.
    fn solve(&self, rhs: &DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>, HarmonicError> {
        let mut x = self.chol.solve(rhs);
        let mut residual = f64::INFINITY;
        for _ in 0..=REFINEMENT_ROUNDS {
            let r = rhs - &self.l_ii * &x;
            residual = r.amax();
            if residual <= SOLVER_TOLERANCE * scale * 1e-3 {
                break;
            }
            x += self.chol.solve(&r);
        }
        residual = residual.min((rhs - &self.l_ii * &x).amax());
        if !residual.is_finite() || residual > SOLVER_TOLERANCE * scale {
            return Err(HarmonicError::SolverFailure(format!(
                "interior residual {residual:e} exceeds {:e}",
                SOLVER_TOLERANCE * scale
            )));
        }
        Ok(x)
    }

    /// Apply `L_II⁻¹` to the interior entries of a per-vertex field;
    /// boundary entries of the result are zero.
    fn apply_inverse(&self, field: &[DVector<f64>]) -> Result<Vec<DVector<f64>>, HarmonicError> {
        let dim = field[0].len();
        let rhs = DMatrix::from_fn(self.interior.len(), dim, |k, c| field[self.interior[k]][c]);
        let scale = rhs.amax().max(f64::MIN_POSITIVE);
        let x = self.solve(&rhs, scale)?;
        Ok((0..field.len())
            .map(|i| match self.slot[i] {
                usize::MAX => DVector::zeros(dim),
                k => x.row(k).transpose(),
            })
            .collect())
    }
}

/// Solve `L_II x_I = −L_IB x_B` in place for every coordinate of `values`.
fn dirichlet_solve(lap: &CotanLaplacian, mesh: &TriMesh, values: &mut [DVector<f64>]) -> Result<(), HarmonicError> {
    let Some(system) = InteriorSystem::new(lap, mesh)? else {
        return Ok(());
    };
    let dim = values[0].len();
    let mut rhs = DMatrix::zeros(system.interior.len(), dim);
    let mut scale: f64 = 1.0;
    for (i, j, &w) in lap.stiffness().triplet_iter() {
        if system.slot[i] != usize::MAX && system.slot[j] == usize::MAX {
            for k in 0..dim {
                rhs[(system.slot[i], k)] -= w * values[j][k];
            }
            scale = scale.max(values[j].amax());
        }
    }
    let x = system.solve(&rhs, scale)?;
    for (k, &i) in system.interior.iter().enumerate() {
        for c in 0..dim {
            values[i][c] = x[(k, c)];
        }
    }
    Ok(())
}

/// Discrete Dirichlet problem: the map with the given boundary values whose
/// interior rows of the cotan Laplacian (in the chart metric) vanish.
pub fn solve_harmonic(
    mesh: &TriMesh,
    chart: &Chart,
    boundary_values: &BTreeMap<usize, DVector<f64>>,
) -> Result<DiscreteMap, HarmonicError> {
    if !mesh.has_boundary() {
        return Err(HarmonicError::NoBoundary);
    }
    let dim = boundary_values
        .values()
        .next()
        .map(|v| v.len())
        .ok_or(HarmonicError::MissingBoundaryValue { vertex: mesh.boundary_vertices()[0] })?;
    let mut values = vec![DVector::zeros(dim); mesh.vertex_count()];
    for i in mesh.boundary_vertices() {
        let b = boundary_values.get(&i).ok_or(HarmonicError::MissingBoundaryValue { vertex: i })?;
        if b.len() != dim {
            return Err(HarmonicError::DomainMismatch(format!(
                "boundary value at vertex {i} has dimension {}, expected {dim}",
                b.len()
            )));
        }
        values[i] = b.clone();
    }
    let lap = CotanLaplacian::for_chart(mesh, chart)?;
    dirichlet_solve(&lap, mesh, &mut values)?;
    DiscreteMap::new(mesh.clone(), values, MetricSource::Chart(chart.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescentOptions {
    pub max_steps: usize,
    /// Initial step length along the descent direction (1 = full step).
    pub step_size: f64,
    /// Stop once the sup tension residual drops below this.
    pub tolerance: f64,
    pub armijo: f64,
    pub shrink: f64,
    pub max_shrinks: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { max_steps: 200, step_size: 1.0, tolerance: 1e-6, armijo: 1e-4, shrink: 0.5, max_shrinks: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentReport {
    pub accepted_steps: usize,
    pub rejected_trials: usize,
    pub converged: bool,
    pub area_history: Vec<f64>,
    /// Sup tension residual after each accepted step (index 0 = start).
    pub residual_history: Vec<f64>,
}

fn sup_interior_residual(lap: &CotanLaplacian, mesh: &TriMesh, values: &[DVector<f64>]) -> f64 {
    lap.apply_points(values)
        .iter()
        .enumerate()
        .filter(|(i, _)| !mesh.is_boundary(*i))
        .map(|(_, t)| t.norm())
        .fold(0.0, f64::max)
}

struct Trial {
    values: Vec<DVector<f64>>,
    lap: CotanLaplacian,
    area: f64,
    residual: f64,
}

/// Number of correction pairs kept by the quasi-Newton descent.
const HISTORY: usize = 10;

fn dot(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p.dot(q)).sum()
}

fn axpy(y: &mut [DVector<f64>], alpha: f64, x: &[DVector<f64>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi * alpha;
    }
}

type Pair = (Vec<DVector<f64>>, Vec<DVector<f64>>, f64);

fn two_loop(
    system: &InteriorSystem,
    grad: &[DVector<f64>],
    history: &std::collections::VecDeque<Pair>,
) -> Result<Vec<DVector<f64>>, HarmonicError> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        axpy(&mut q, -a, y);
        alphas.push(a);
    }
    let mut r = system.apply_inverse(&q)?;
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r);
        axpy(&mut r, a - b, s);
    }
    Ok(r.into_iter().map(|v| -v).collect())
}

/// Area-decreasing descent toward a minimal surface with the boundary of
/// `initial` held fixed.
///
/// Directions come from limited-memory BFGS whose initial inverse Hessian is
/// `L_II⁻¹` of the current induced metric, so a step without history moves
/// to the harmonic map of the current surface. Each step backtracks until
/// the area satisfies the Armijo condition.
pub fn minimal_surface_descent(
    mesh: &TriMesh,
    initial: Vec<DVector<f64>>,
    options: &DescentOptions,
) -> Result<(DiscreteMap, DescentReport), HarmonicError> {
    if !mesh.has_boundary() {
        return Err(HarmonicError::NoBoundary);
    }
    let x0 = DiscreteMap::new(mesh.clone(), initial, MetricSource::Embedding)?.into_values();
    let evaluate = |values: Vec<DVector<f64>>| -> Option<Trial> {
        let lap = CotanLaplacian::assemble(mesh, LengthSource::Embedding(&values)).ok()?;
        let area = lap.face_geometry().iter().map(|f| f.area).sum();
        let residual = sup_interior_residual(&lap, mesh, &values);
        Some(Trial { values, lap, area, residual })
    };
    let area_gradient = |trial: &Trial| -> Vec<DVector<f64>> {
        trial
            .lap
            .apply_points(&trial.values)
            .into_iter()
            .enumerate()
            .map(|(i, t)| if mesh.is_boundary(i) { t * 0.0 } else { -t * trial.lap.mass()[i] })
            .collect()
    };
    let mut cur = evaluate(x0)
        .ok_or_else(|| HarmonicError::InvalidMesh("initial surface has degenerate faces".into()))?;
    let mut report = DescentReport {
        accepted_steps: 0,
        rejected_trials: 0,
        converged: cur.residual <= options.tolerance,
        area_history: vec![cur.area],
        residual_history: vec![cur.residual],
    };
    let mut grad = area_gradient(&cur);
    // (s, y, 1/sᵀy) correction pairs, oldest first
    let mut history: std::collections::VecDeque<Pair> = std::collections::VecDeque::new();
    for _ in 0..options.max_steps {
        if report.converged {
            break;
        }
        let Some(system) = InteriorSystem::new(&cur.lap, mesh)? else {
            break;
        };
        let mut direction = two_loop(&system, &grad, &history)?;
        let mut slope = dot(&grad, &direction);
        if slope >= 0.0 {
            history.clear();
            direction = two_loop(&system, &grad, &history)?;
            slope = dot(&grad, &direction);
        }
        let step = |t: f64| -> Vec<DVector<f64>> {
            cur.values
                .iter()
                .zip(&direction)
                .enumerate()
                .map(|(i, (c, d))| if mesh.is_boundary(i) { c.clone() } else { c + d * t })
                .collect()
        };
        let mut t = options.step_size;
        let mut accepted = None;
        for _ in 0..=options.max_shrinks {
            if let Some(trial) = evaluate(step(t)) {
                if trial.area <= cur.area + options.armijo * t * slope + 1e-14 * cur.area {
                    accepted = Some(trial);
                    break;
                }
            }
            report.rejected_trials += 1;
            t *= options.shrink;
        }
        let Some(next) = accepted else {
            return Err(HarmonicError::StepRejectedRepeatedly { step: report.accepted_steps, residual: cur.residual });
        };
        let next_grad = area_gradient(&next);
        let s_vec: Vec<DVector<f64>> = next.values.iter().zip(&cur.values).map(|(a, b)| a - b).collect();
        let y_vec: Vec<DVector<f64>> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s_vec, &y_vec);
        if sy > 1e-12 * dot(&s_vec, &s_vec).sqrt() * dot(&y_vec, &y_vec).sqrt() {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s_vec, y_vec, 1.0 / sy));
        }
        cur = next;
        grad = next_grad;
        report.accepted_steps += 1;
        report.area_history.push(cur.area);
        report.residual_history.push(cur.residual);
        report.converged = cur.residual <= options.tolerance;
    }
    Ok((DiscreteMap::new(mesh.clone(), cur.values, MetricSource::Embedding)?, report))
}
