//! One function per scenario command. Each writes `report.json` plus any
//! tables or meshes into the output directory and returns the outcome.

use std::fs::File;
use std::path::Path;

use nalgebra::DVector;
use pullvexlab::convexity::{classify_convexity, pullvexity_expansion, pullvexity_value, strong_pullvexity_certificate};
use pullvexlab::geomcore::{Chart, MapSample};
use pullvexlab::harmonic::io::write_values_csv;
use pullvexlab::harmonic::{
    boundary_from_map, minimal_surface_descent, solve_harmonic, tension_residual, DiscreteMap, TriMesh,
};
use pullvexlab::probes::{
    brownian_mass, calabi_growth, halfspace_family_check, maximizing_sequence, maximizing_sequence_mesh,
    recurrence_probe, tomography_check, write_growth_csv, GrowthVerdict, HalfspaceOptions, OYResult, OYVerdict,
    ProbeError, ProbeReport, TomographyInput, Verdict,
};
use pullvexlab::regions::{
    enclosing_data, trap_contains, trap_excluded_max, write_field_grid, LocalizedDistanceSquared, Region, RegionError,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::catalog::{discrete_map, point, ChartSpec, FunctionSpec};
use crate::config::*;
use crate::output::{write_csv, write_mesh, write_report, write_text};
use crate::{CliError, Outcome};

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

/// Splits a probe result into a value and a failed hypothesis; every other
/// error aborts the run.
fn hypothesis<T>(result: Result<T, ProbeError>) -> Result<Result<T, (String, Vec<f64>)>, CliError> {
    match result {
        Ok(v) => Ok(Ok(v)),
        Err(ProbeError::HypothesisFailed { which, witness }) => Ok(Err((which, witness))),
        Err(e) => Err(compute(e)),
    }
}

fn hypothesis_failed(dir: &Path, command: Command, which: &str, witness: &[f64]) -> Result<Outcome, CliError> {
    log::warn!("{command}: hypothesis failed: {which}");
    write_report(
        &json!({ "command": command, "status": Outcome::HypothesisFailed, "hypothesis": which, "witness": witness }),
        &dir.join("report.json"),
    )?;
    Ok(Outcome::HypothesisFailed)
}

/// Writes `report.json` as `{command, status, result}`.
fn finish<T: Serialize>(dir: &Path, command: Command, outcome: Outcome, result: &T) -> Result<Outcome, CliError> {
    write_report(&json!({ "command": command, "status": outcome, "result": result }), &dir.join("report.json"))?;
    Ok(outcome)
}

pub fn execute(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let dir = config.output_dir.as_path();
    match &config.inputs {
        Inputs::Classify(i) => classify(dir, i),
        Inputs::Pullvex(i) => pullvex(dir, i),
        Inputs::Solve(i) => solve(dir, config, i),
        Inputs::Minimal(i) => minimal(dir, config, i),
        Inputs::Tomography(i) => tomography(dir, config, i),
        Inputs::Calabi(i) => calabi(dir, config, i),
        Inputs::Wedge(i) => wedge(dir, i),
        Inputs::Trap(i) => trap(dir, config, i),
        Inputs::Oy(i) => oy(dir, config, i),
        Inputs::Brownian(i) => {
            let start = point(&i.start);
            let report = brownian_mass(&i.chart.build()?, &start, &i.options).map_err(compute)?;
            probe_report(dir, Command::Brownian, report)
        }
        Inputs::Recurrence(i) => {
            let report =
                recurrence_probe(i.dim, i.start_radius, i.outer_radius, &i.options).map_err(compute)?;
            probe_report(dir, Command::Recurrence, report)
        }
        Inputs::Halfspace(i) => halfspace(dir, config, i),
    }
}

fn probe_report(dir: &Path, command: Command, report: ProbeReport) -> Result<Outcome, CliError> {
    let outcome = match report.verdict {
        Verdict::Pass => Outcome::Pass,
        Verdict::Inconclusive => Outcome::Informational,
        Verdict::Fail => Outcome::Fail,
    };
    finish(dir, command, outcome, &report)
}

fn classify(dir: &Path, inputs: &ClassifyInputs) -> Result<Outcome, CliError> {
    let specs: Vec<FunctionSpec> = inputs
        .alphas
        .iter()
        .map(|&alpha| FunctionSpec::Beta { alpha })
        .chain(inputs.functions.iter().cloned())
        .collect();
    if specs.is_empty() || inputs.points.is_empty() || inputs.ks.is_empty() {
        return Err(CliError::ConfigInvalid("classify needs functions, points and ks".into()));
    }
    let header = [
        "function", "point", "k", "convex", "mean_convex", "k_convex", "k_mean_convex", "k_convex_max",
        "k_mean_convex_min", "min_eigenvalue", "trace", "k_smallest_sum",
    ]
    .map(String::from);
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for spec in &specs {
        let f = spec.build()?;
        for p in &inputs.points {
            for &k in &inputs.ks {
                let v = classify_convexity(&f, &point(p), k).map_err(compute)?;
                rows.push(vec![
                    f.label().to_string(),
                    fmt_point(p),
                    k.to_string(),
                    v.is_convex.to_string(),
                    v.is_mean_convex.to_string(),
                    v.is_k_convex.to_string(),
                    v.is_k_mean_convex.to_string(),
                    v.k_convex_max.to_string(),
                    v.k_mean_convex_min.map_or(String::new(), |k| k.to_string()),
                    v.margins.min_eigenvalue.to_string(),
                    v.margins.trace.to_string(),
                    v.margins.k_smallest_sum.to_string(),
                ]);
                verdicts.push(json!({ "function": f.label(), "verdict": v }));
            }
        }
    }
    write_csv(&dir.join("classify.csv"), &header, &rows)?;
    finish(dir, Command::Classify, Outcome::Informational, &verdicts)
}

fn pullvex(dir: &Path, inputs: &PullvexInputs) -> Result<Outcome, CliError> {
    let f = inputs.function.build()?;
    let u = inputs.map.build()?;
    let (g, h) = (inputs.domain.build()?, inputs.target.build()?);
    let samples = inputs.samples.build()?;
    let cert = strong_pullvexity_certificate(&f, &u, &samples, &g, &h, inputs.declared_c).map_err(compute)?;
    let rows = samples
        .par_iter()
        .map(|p| {
            let trace = pullvexity_value(&f, &u, p, &g, &h).map_err(compute)?;
            let expansion = pullvexity_expansion(&f, &u, p, &g, &h).map_err(compute)?;
            let rel = (trace - expansion).abs() / trace.abs().max(expansion.abs()).max(1e-300);
            Ok(vec![fmt_point(p.as_slice()), trace.to_string(), expansion.to_string(), rel.to_string()])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let header = ["point", "trace", "expansion", "relative_difference"].map(String::from);
    write_csv(&dir.join("pullvex.csv"), &header, &rows)?;
    let outcome = match (inputs.declared_c, cert.constant_c) {
        (Some(_), Some(_)) => Outcome::Pass,
        (Some(_), None) => Outcome::Fail,
        (None, _) => Outcome::Informational,
    };
    finish(dir, Command::Pullvex, outcome, &cert)
}

fn max_tension_ratio(u: &DiscreteMap) -> Result<f64, CliError> {
    let scale = u.values().iter().map(|x| x.amax()).fold(1.0, f64::max);
    let tension = tension_residual(u).map_err(compute)?;
    Ok(tension.into_iter().fold(0.0, f64::max) / scale)
}

fn solve(dir: &Path, config: &ScenarioConfig, inputs: &SolveInputs) -> Result<Outcome, CliError> {
    let mesh = inputs.mesh.build(&config.base_dir)?;
    let chart = inputs.domain.build()?;
    let boundary_map = inputs.boundary.build()?;
    let boundary = boundary_from_map(&mesh, &boundary_map).map_err(compute)?;
    let u = solve_harmonic(&mesh, &chart, &boundary).map_err(compute)?;
    let tension = max_tension_ratio(&u)?;
    write_text(&write_values_csv(u.values()), &dir.join("values.csv"))?;
    write_mesh(&mesh, &dir.join("domain.off"))?;
    let outcome = if tension <= config.tolerances.harmonic_tol { Outcome::Pass } else { Outcome::Fail };
    let result = json!({
        "vertices": mesh.vertex_count(),
        "faces": mesh.face_count(),
        "boundary_vertices": mesh.boundary_vertices().len(),
        "relative_max_tension": tension,
    });
    finish(dir, Command::Solve, outcome, &result)
}

fn minimal(dir: &Path, config: &ScenarioConfig, inputs: &MinimalInputs) -> Result<Outcome, CliError> {
    let mesh = inputs.mesh.build(&config.base_dir)?;
    let boundary_map = inputs.boundary.build()?;
    let boundary = boundary_from_map(&mesh, &boundary_map).map_err(compute)?;
    let start = solve_harmonic(&mesh, &Chart::euclidean(mesh.dim()), &boundary)
        .map_err(compute)?;
    let (surface, report) = minimal_surface_descent(&mesh, start.into_values(), &inputs.descent).map_err(compute)?;
    write_text(&write_values_csv(surface.values()), &dir.join("values.csv"))?;
    let embedded = TriMesh::new(surface.values().to_vec(), mesh.faces().to_vec()).map_err(compute)?;
    write_mesh(&embedded, &dir.join("surface.off"))?;
    let rows: Vec<Vec<String>> = report
        .area_history
        .iter()
        .zip(&report.residual_history)
        .enumerate()
        .map(|(i, (a, r))| vec![i.to_string(), a.to_string(), r.to_string()])
        .collect();
    write_csv(&dir.join("descent.csv"), &["step", "area", "residual"].map(String::from), &rows)?;
    let outcome = if report.converged { Outcome::Pass } else { Outcome::Fail };
    finish(dir, Command::Minimal, outcome, &report)
}

fn tomography(dir: &Path, config: &ScenarioConfig, inputs: &TomographyInputs) -> Result<Outcome, CliError> {
    let u = inputs.map.build()?;
    let (g, h, b) = (inputs.domain.build()?, inputs.target.build()?, inputs.base.build()?);
    let p = inputs.projection.build()?;
    let eta = inputs.eta.build()?;
    let samples = inputs.samples.build()?;
    let mesh = match &inputs.mesh {
        Some(m) => Some(discrete_map(m.mesh.build(&config.base_dir)?, &u, m.metric).map_err(compute)?),
        None => None,
    };
    let input = TomographyInput {
        u: &u,
        g: &g,
        h: &h,
        p: &p,
        b: &b,
        eta: &eta,
        samples: &samples,
        k: inputs.k,
        mesh: mesh.as_ref(),
    };
    let mut cert = match hypothesis(tomography_check(&input, inputs.case))? {
        Ok(cert) => cert,
        Err((which, witness)) => return hypothesis_failed(dir, Command::Tomography, &which, &witness),
    };
    if let Some(check) = cert.laplacian_check.as_mut() {
        check.tolerance = config.tolerances.subharmonic_fraction * cert.constant;
        check.passed = check.min_interior_laplacian >= cert.constant - check.tolerance;
    }
    let outcome = match &cert.laplacian_check {
        Some(check) if !check.passed => Outcome::Fail,
        _ => Outcome::Pass,
    };
    finish(dir, Command::Tomography, outcome, &cert)
}

fn calabi(dir: &Path, config: &ScenarioConfig, inputs: &CalabiInputs) -> Result<Outcome, CliError> {
    let p = inputs.projection.build()?;
    let family = |s: f64| inputs.family.member(s);
    let result = calabi_growth(family, &inputs.parameters, &p, config.tolerances.growth_factor);
    let table = match hypothesis(result)? {
        Ok(table) => table,
        Err((which, witness)) => return hypothesis_failed(dir, Command::Calabi, &which, &witness),
    };
    let path = dir.join("growth.csv");
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_growth_csv(&table, file).map_err(|e| CliError::io(&path, e.into()))?;
    let outcome = match table.verdict {
        GrowthVerdict::UnboundedConsistent => Outcome::Pass,
        GrowthVerdict::Bounded => Outcome::Informational,
    };
    finish(dir, Command::Calabi, outcome, &table)
}

fn wedge(dir: &Path, inputs: &WedgeInputs) -> Result<Outcome, CliError> {
    let Region::Wedge(wedge) = inputs.region.build().map_err(|e| CliError::ConfigInvalid(format!("region: {e}")))?
    else {
        return Err(CliError::ConfigInvalid("wedge needs a region of type `wedge`".into()));
    };
    let mut results = Vec::new();
    let mut outcome = Outcome::Pass;
    for p in &inputs.points {
        match enclosing_data(&wedge, &point(p), inputs.spacing) {
            Ok(data) => results.push(json!({ "point": p, "enclosing": data })),
            Err(e @ (RegionError::EnclosingPropertyViolated(_) | RegionError::NoValidD(_))) => {
                outcome = Outcome::Fail;
                results.push(json!({ "point": p, "error": e.to_string() }));
            }
            Err(e) => return Err(compute(e)),
        }
    }
    finish(dir, Command::Wedge, outcome, &results)
}

fn trap(dir: &Path, config: &ScenarioConfig, inputs: &TrapInputs) -> Result<Outcome, CliError> {
    let Region::Trap(trap) = inputs.region.build().map_err(|e| CliError::ConfigInvalid(format!("region: {e}")))?
    else {
        return Err(CliError::ConfigInvalid("trap needs a region of type `simplex_trap`".into()));
    };
    let n = trap.dim();
    let field = LocalizedDistanceSquared::for_trap(&trap, inputs.field_eps).map_err(compute)?;
    let samples = trap.sample_points(inputs.samples, config.seed);
    if samples.is_empty() {
        return Err(CliError::Compute("no points of the trap were sampled".into()));
    }
    let sums: Vec<f64> = samples
        .par_iter()
        .map(|x| {
            let mut eig: Vec<f64> = field.jet(x).hessian.symmetric_eigen().eigenvalues.iter().cloned().collect();
            eig.sort_by(f64::total_cmp);
            eig[..n - 1].iter().sum()
        })
        .collect();
    let constant = sums.iter().cloned().fold(f64::INFINITY, f64::min);
    let eps = config.tolerances.membership_eps;
    let membership = inputs
        .membership_points
        .iter()
        .map(|p| Ok(json!({ "point": p, "membership": trap_contains(&trap, &point(p), eps).map_err(compute)? })))
        .collect::<Result<Vec<_>, CliError>>()?;
    if let Some(grid) = &inputs.field_grid {
        let path = dir.join("field_grid.csv");
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_field_grid(grid, |x| field.value(x), file).map_err(compute)?;
    }
    let outcome = if constant > 0.0 { Outcome::Pass } else { Outcome::Fail };
    let result = json!({
        "dim": n,
        "radius": trap.radius(),
        "excluded_max": trap_excluded_max(&trap),
        "mean_convexity_order": n - 1,
        "mean_convexity_constant": constant,
        "samples": samples.len(),
        "membership": membership,
    });
    finish(dir, Command::Trap, outcome, &result)
}

fn write_witnesses(path: &Path, result: &OYResult) -> Result<(), CliError> {
    let dim = result.witnesses.first().map_or(0, |w| w.point.len());
    let mut header = vec!["k".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.extend(["value_gap", "grad_norm", "laplacian"].map(String::from));
    let rows: Vec<Vec<String>> = result
        .witnesses
        .iter()
        .map(|w| {
            let mut row = vec![w.k.to_string()];
            row.extend(w.point.iter().map(f64::to_string));
            row.extend([w.value_gap, w.grad_norm, w.laplacian].map(|x| x.to_string()));
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}

fn oy(dir: &Path, config: &ScenarioConfig, inputs: &OyInputs) -> Result<Outcome, CliError> {
    let f = inputs.function.build()?;
    let result = match &inputs.mesh {
        Some(m) => {
            let u = discrete_map(m.mesh.build(&config.base_dir)?, &m.map.build()?, m.metric).map_err(compute)?;
            let values = u.values().iter().map(|x| f.value(x)).collect::<Result<Vec<f64>, _>>().map_err(compute)?;
            maximizing_sequence_mesh(&u, &values, inputs.k_max, inputs.mode, m.interior_only)
        }
        None => {
            let chart = match &inputs.chart {
                Some(c) => c.build()?,
                None => ChartSpec::Euclidean { dim: f.domain_dim() }.build()?,
            };
            maximizing_sequence(&f, &chart, inputs.k_max, inputs.mode, &inputs.options)
        }
    }
    .map_err(compute)?;
    write_witnesses(&dir.join("witnesses.csv"), &result)?;
    let outcome = match result.verdict {
        OYVerdict::Witnessed => Outcome::Pass,
        OYVerdict::Partial => Outcome::Fail,
        OYVerdict::Unbounded => Outcome::Informational,
    };
    finish(dir, Command::Oy, outcome, &result)
}

fn halfspace(dir: &Path, config: &ScenarioConfig, inputs: &HalfspaceInputs) -> Result<Outcome, CliError> {
    let map: MapSample = inputs.map.build()?;
    let members = inputs
        .family
        .iter()
        .map(|m| discrete_map(m.build(&config.base_dir)?, &map, inputs.metric).map_err(compute))
        .collect::<Result<Vec<_>, CliError>>()?;
    let options = HalfspaceOptions { tol_plane: config.tolerances.tol_plane, harmonic_tol: config.tolerances.harmonic_tol };
    let header = ["halfspace", "member", "verdict", "spread", "min_level", "max_level", "f_min", "f_max", "max_tension"]
        .map(String::from);
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (index, hs) in inputs.halfspaces.iter().enumerate() {
        let normal = DVector::from_column_slice(&hs.normal);
        let (reports, verdict) = match halfspace_family_check(&members, &normal, hs.offset, &options) {
            Ok(r) => r,
            Err(ProbeError::HypothesisFailed { which, witness }) => {
                return hypothesis_failed(dir, Command::Halfspace, &which, &witness)
            }
            Err(ProbeError::NotInHalfspace { vertex, value }) => {
                let which = format!("u maps into halfspace {index} (vertex {vertex} has level {value})");
                return hypothesis_failed(dir, Command::Halfspace, &which, &[value]);
            }
            Err(e) => return Err(compute(e)),
        };
        for (member, r) in reports.iter().enumerate() {
            let verdict = serde_json::to_value(r.verdict).map_err(compute)?;
            rows.push(vec![
                index.to_string(),
                member.to_string(),
                verdict.as_str().unwrap_or_default().to_string(),
                r.spread.to_string(),
                r.min_level.to_string(),
                r.max_level.to_string(),
                r.f_min.to_string(),
                r.f_max.to_string(),
                r.max_tension.to_string(),
            ]);
        }
        results.push(json!({ "normal": hs.normal, "offset": hs.offset, "verdict": verdict, "members": reports }));
    }
    write_csv(&dir.join("halfspace.csv"), &header, &rows)?;
    finish(dir, Command::Halfspace, Outcome::Informational, &results)
}
