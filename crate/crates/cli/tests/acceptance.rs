//! Acceptance suite: every criterion at its stated tolerance and time limit,
//! one pass/fail line each. Scenario-level criteria go through the
//! `pullvexlab` binary with the bundled configs.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use pullvexlab::convexity::{
    pullvexity_expansion, pullvexity_value, second_fundamental_form, wideness_constant, Orientation,
};
use pullvexlab::geomcore::{Chart, MapSample, MetricField};
use pullvexlab::harmonic::generators::{catenoid_band, catenoid_map, enneper_map, flat_square};
use pullvexlab::harmonic::{composition_residual, max_location, DiscreteMap, MetricSource};
use pullvexlab::regions::{trap_contains, SimplexTrap, TrapMembership};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

struct Run {
    code: Option<i32>,
    dir: PathBuf,
}

fn run_scenario(work: &Path, name: &str) -> Result<Run, String> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"));
    let text = fs::read_to_string(&config).map_err(|e| e.to_string())?;
    let command: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let command = command["command"].as_str().ok_or("scenario without command")?.to_string();
    let dir = work.join(name);
    let out = Command::new(env!("CARGO_BIN_EXE_pullvexlab"))
        .args([command.as_str(), "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() == Some(1) {
        return Err(format!("{name}: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(Run { code: out.status.code(), dir })
}

fn report(run: &Run) -> Result<Value, String> {
    let text = fs::read_to_string(run.dir.join("report.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn csv_rows(path: &Path) -> Result<Vec<csv::StringRecord>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    reader.records().collect::<Result<_, _>>().map_err(|e| e.to_string())
}

fn num(v: &Value) -> Result<f64, String> {
    v.as_f64().ok_or_else(|| format!("expected a number, got {v}"))
}

// ---------- 1 ----------

fn convexity_table(work: &Path) -> Check {
    let alphas = [-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0];
    let run = run_scenario(work, "classify_beta")?;
    ensure(run.code == Some(0), || format!("exit {:?}", run.code))?;
    let rows = csv_rows(&run.dir.join("classify.csv"))?;
    let per_alpha = rows.len() / alphas.len();
    ensure(per_alpha >= 1 && rows.len() == per_alpha * alphas.len(), || format!("{} rows", rows.len()))?;
    for (i, row) in rows.iter().enumerate() {
        let alpha: f64 = alphas[i / per_alpha];
        // Hess β_α = diag(2, 2, −2α)
        let mut eig = [2.0, 2.0, -2.0 * alpha];
        eig.sort_by(f64::total_cmp);
        let expected = [eig[0] >= 0.0, eig.iter().sum::<f64>() >= 0.0, eig[1] >= 0.0, eig[0] + eig[1] >= 0.0];
        let paper = [alpha <= 0.0, alpha <= 2.0, true, alpha <= 1.0];
        ensure(expected == paper, || format!("oracle disagrees with the table at α = {alpha}"))?;
        let got: Vec<bool> = [3, 4, 5, 6].iter().map(|&c| &row[c] == "true").collect();
        ensure(got == expected, || format!("α = {alpha}: convex/mean/2-convex/2-mean {got:?}, want {expected:?}"))?;
    }
    Ok(format!("{} rows over α ∈ {alphas:?}", rows.len()))
}

// ---------- 2 ----------

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

fn singular_value_expansion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(m..=4);
        let a = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.5..1.5));
        let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = (&q + q.transpose()) * 0.5;
        let cubic = rng.random_range(-0.5..0.5);
        let (g, h) = (random_spd(&mut rng, m), random_spd(&mut rng, n));
        let p = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));

        // u(x) = A x + 0.3 sin(B x), f(y) = yᵀQy + c Σ yᵢ³
        let (a1, b1, a2, b2) = (a.clone(), b.clone(), a.clone(), b.clone());
        let u = MapSample::new("u", m, n, move |x| &a1 * x + (&b1 * x).map(|t| 0.3 * t.sin()))
            .with_jacobian(move |x| {
                let s = (&b2 * x).map(|t| 0.3 * t.cos());
                &a2 + DMatrix::from_diagonal(&s) * &b2
            });
        let (q1, q2, q3) = (q.clone(), q.clone(), q.clone());
        let f = MapSample::scalar("f", n, move |y| y.dot(&(&q1 * y)) + cubic * y.iter().map(|t| t.powi(3)).sum::<f64>())
            .with_jacobian(move |y| DMatrix::from_row_slice(1, n, (&q2 * y * 2.0 + y.map(|t| 3.0 * cubic * t * t)).as_slice()))
            .with_hessian(move |y| &q3 * 2.0 + DMatrix::from_diagonal(&y.map(|t| 6.0 * cubic * t)));
        let gc = Chart::new("g", vec![(f64::NEG_INFINITY, f64::INFINITY); m], MetricField::Constant(g.clone()));
        let hc = Chart::new("h", vec![(f64::NEG_INFINITY, f64::INFINITY); n], MetricField::Constant(h));

        let jac = &a + DMatrix::from_diagonal(&(&b * &p).map(|t| 0.3 * t.cos())) * &b;
        let y = &a * &p + (&b * &p).map(|t| 0.3 * t.sin());
        let hess = &q * 2.0 + DMatrix::from_diagonal(&y.map(|t| 6.0 * cubic * t));
        let oracle = (g.try_inverse().unwrap() * jac.transpose() * hess * jac).trace();

        let direct = pullvexity_value(&f, &u, &p, &gc, &hc).map_err(|e| e.to_string())?;
        let expansion = pullvexity_expansion(&f, &u, &p, &gc, &hc).map_err(|e| e.to_string())?;
        let scale = direct.abs().max(expansion.abs()).max(oracle.abs()).max(1e-12);
        let rel = (direct - expansion).abs().max((direct - oracle).abs()) / scale;
        ensure(rel <= 1e-6, || format!("m = {m}, n = {n}: trace {direct}, expansion {expansion}, oracle {oracle}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("100 instances, worst relative gap {worst:.2e}"))
}

// ---------- 3 ----------

fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

fn wideness_closed_form() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let frames_per_case = 10_000;
    let (mut cases, mut worst): (usize, f64) = (0, 0.0);
    let euclid = |n| Chart::euclidean(n);
    for n in 1..=6 {
        for r in 0..=n {
            let basis = random_orthonormal(&mut rng, n, n);
            let q = basis.columns(0, r).into_owned();
            let proj = &q * q.transpose();
            let p_map = MapSample::linear("P", proj.clone());
            let origin = DVector::zeros(n);
            for k in 1..=n {
                let expected = (k + r).saturating_sub(n) as f64;
                let got = wideness_constant(&p_map, &origin, k, &euclid(n), &euclid(n), None).map_err(|e| e.to_string())?;
                ensure((got - expected).abs() <= 1e-9, || format!("n = {n}, r = {r}, k = {k}: {got} vs {expected}"))?;
                for _ in 0..frames_per_case {
                    let w = random_orthonormal(&mut rng, n, k);
                    let value = (&proj * &w).norm_squared();
                    ensure(value >= got - 1e-9, || format!("frame beats the minimum: {value} < {got}"))?;
                    worst = worst.max(got - value);
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (n, r, k) cases, {frames_per_case} random frames each, largest frame deficit {worst:.1e}"))
}

// ---------- 4 ----------

fn sphere_shape_operator() -> Check {
    let square = MapSample::quadratic_form("|x|^2", DMatrix::identity(3, 3));
    let norm = MapSample::scalar("|x|", 3, |x| x.norm())
        .with_jacobian(|x| DMatrix::from_row_slice(1, 3, (x / x.norm()).as_slice()))
        .with_hessian(|x| {
            let r = x.norm();
            (DMatrix::identity(3, 3) - x * x.transpose() / (r * r)) / r
        });
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)).normalize();
        for f in [&square, &norm] {
            let shape = second_fundamental_form(f, &p, Orientation::AlongGradient).map_err(|e| e.to_string())?;
            let err = (&shape.shape - DMatrix::identity(2, 2)).amax();
            ensure(err <= 1e-6, || format!("{} at {p:?}: A = {}", f.label(), shape.shape))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("50 points, both defining functions, max |A − I| = {worst:.1e}"))
}

// ---------- 5 ----------

fn composition_formula() -> Check {
    let f = MapSample::quadratic_form("|x|^2", DMatrix::identity(3, 3));
    let mut sups = Vec::new();
    for level in 2..=4 {
        let mesh = catenoid_band(1.0, level).map_err(|e| e.to_string())?;
        let u = DiscreteMap::from_map(mesh, &catenoid_map(), MetricSource::flat(2)).map_err(|e| e.to_string())?;
        let terms = composition_residual(&u, &f).map_err(|e| e.to_string())?;
        // |du|² = 2 cosh² v in the flat (θ, v) chart
        let sup = terms
            .iter()
            .zip(u.mesh().vertices())
            .filter_map(|(t, x)| t.map(|t| t.residual / (2.0 * x[1].cosh().powi(2))))
            .fold(0.0, f64::max);
        sups.push(sup);
    }
    ensure(sups[2] <= 0.05, || format!("level-4 relative residual {:.4}", sups[2]))?;
    ensure(sups.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing: {sups:?}"))?;
    Ok(format!("sup residual / 2e(u) over levels 2..4: {:.4}, {:.4}, {:.4}", sups[0], sups[1], sups[2]))
}

// ---------- 6 ----------

struct Instance {
    name: &'static str,
    map: DiscreteMap,
    f: MapSample,
    /// Lower bound for `tr_g(u*Hess f)`, computed by hand.
    constant: f64,
}

fn subharmonic_instances() -> Result<Vec<Instance>, String> {
    let e = |x: pullvexlab::harmonic::HarmonicError| x.to_string();
    let norm3 = MapSample::quadratic_form("|x|^2", DMatrix::identity(3, 3));
    let norm2 = MapSample::quadratic_form("|x|^2", DMatrix::identity(2, 2));
    let square = |n, h: f64| flat_square(n, (-h, h), (-h, h));
    let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 2.0, 0.7, 0.1]);
    let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let enneper_mesh = square(16, 0.6).map_err(e)?;
    // |du|² = 2(1 + r²)² for Enneper, so tr = 4(1 + r²)²
    let enneper_c = enneper_mesh
        .interior_vertices()
        .iter()
        .map(|&i| 4.0 * (1.0 + enneper_mesh.vertices()[i].norm_squared()).powi(2))
        .fold(f64::INFINITY, f64::min);
    Ok(vec![
        Instance {
            name: "catenoid, |x|^2",
            map: DiscreteMap::from_map(catenoid_band(1.0, 3).map_err(e)?, &catenoid_map(), MetricSource::Embedding)
                .map_err(e)?,
            f: norm3.clone(),
            constant: 4.0,
        },
        Instance {
            name: "identity, |x|^2",
            map: DiscreteMap::from_map(square(8, 1.0).map_err(e)?, &MapSample::identity(2), MetricSource::flat(2))
                .map_err(e)?,
            f: norm2,
            constant: 4.0,
        },
        Instance {
            name: "linear into R3, |x|^2",
            map: DiscreteMap::from_map(square(8, 1.0).map_err(e)?, &MapSample::linear("A", a.clone()), MetricSource::flat(2))
                .map_err(e)?,
            f: norm3.clone(),
            constant: 2.0 * a.norm_squared(),
        },
        Instance {
            name: "enneper, |x|^2",
            map: DiscreteMap::from_map(enneper_mesh, &enneper_map(), MetricSource::flat(2)).map_err(e)?,
            f: norm3,
            constant: enneper_c,
        },
        Instance {
            name: "identity, quadratic form",
            map: DiscreteMap::from_map(square(10, 2.0).map_err(e)?, &MapSample::identity(2), MetricSource::flat(2))
                .map_err(e)?,
            f: MapSample::quadratic_form("xQx", q.clone()),
            constant: 2.0 * q.trace(),
        },
    ])
}

fn subharmonicity() -> Check {
    let mut lines = Vec::new();
    for inst in subharmonic_instances()? {
        let composite: Vec<f64> =
            inst.map.values().iter().map(|x| inst.f.value(x)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let lap = inst.map.laplacian().map_err(|e| e.to_string())?.apply(&composite);
        let min_interior = inst
            .map
            .mesh()
            .interior_vertices()
            .iter()
            .map(|&i| lap[i])
            .fold(f64::INFINITY, f64::min);
        let tol = 0.05 * inst.constant;
        ensure(min_interior >= inst.constant - tol, || {
            format!("{}: min Δ(f∘u) = {min_interior} < C − tol = {}", inst.name, inst.constant - tol)
        })?;
        let loc = max_location(&inst.map, &inst.f, 1e-12).map_err(|e| e.to_string())?;
        ensure(loc.attained_on_boundary, || format!("{}: interior max {:?} above {}", inst.name, loc.max_interior, loc.max_boundary))?;
        lines.push(format!("{} (C = {:.3}, min Δ = {:.3})", inst.name, inst.constant, min_interior));
    }
    Ok(lines.join("; "))
}

// ---------- 7 ----------

fn calabi_growth(work: &Path) -> Check {
    let run = run_scenario(work, "calabi_catenoid_xy")?;
    ensure(run.code == Some(0), || format!("xy exit {:?}", run.code))?;
    let rows = csv_rows(&run.dir.join("growth.csv"))?;
    let expected = [1.543, 3.762, 10.068];
    ensure(rows.len() == 3, || format!("{} rows", rows.len()))?;
    let mut sups = Vec::new();
    for (row, (want, s)) in rows.iter().zip(expected.iter().zip([1.0f64, 2.0, 3.0])) {
        let got: f64 = row[2].parse().map_err(|_| "bad sup".to_string())?;
        ensure((got / want - 1.0).abs() < 0.01, || format!("V = {s}: {got} vs {want}"))?;
        ensure((got - s.cosh()).abs() < 1e-6, || format!("V = {s}: {got} vs cosh {}", s.cosh()))?;
        sups.push(got);
    }
    let z = run_scenario(work, "calabi_catenoid_z")?;
    ensure(z.code == Some(2), || format!("z projection exit {:?}", z.code))?;
    ensure(report(&z)?["status"] == "hypothesis_failed", || "z report status".into())?;
    Ok(format!("sup radii {sups:.3?}; z projection exits 2"))
}

// ---------- 8 ----------

fn tomography_constant(work: &Path) -> Check {
    let run = run_scenario(work, "tomography_catenoid")?;
    ensure(run.code == Some(0), || format!("exit {:?}", run.code))?;
    let r = &report(&run)?["result"];
    let (c1, c2, c3, c) = (num(&r["c1"])?, num(&r["c2"])?, num(&r["c3"])?, num(&r["constant"])?);
    ensure((c1 - 1.0).abs() < 1e-9 && (c2 - 2.0).abs() < 1e-9 && (c3 - 2.0).abs() < 1e-9, || {
        format!("c1, c2, c3 = {c1}, {c2}, {c3}")
    })?;
    ensure((c - 4.0).abs() < 1e-9, || format!("C = {c}"))?;
    let lap = num(&r["laplacian_check"]["min_interior_laplacian"])?;
    ensure(lap >= 4.0 * 0.95, || format!("min interior Δ = {lap}"))?;
    Ok(format!("C = c₁²c₂c₃ = {c:.9}, min interior Δ(f∘u) = {lap:.5}"))
}

// ---------- 9 ----------

/// Distance from `x` to the segment `[a, b]`.
fn segment_distance(a: &DVector<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let d = b - a;
    let t = ((x - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (x - (a + d * t)).norm()
}

fn simplex_trap(work: &Path) -> Check {
    let run = run_scenario(work, "trap_3d")?;
    ensure(run.code == Some(0), || format!("exit {:?}", run.code))?;
    let r = &report(&run)?["result"];
    let excluded = num(&r["excluded_max"])?;
    ensure((excluded - 2.0).abs() <= 1e-9, || format!("excluded max {excluded}"))?;
    let constant = num(&r["mean_convexity_constant"])?;
    ensure(constant > 0.0, || format!("constant {constant}"))?;

    // Base Δ = [0, e₁], ν = e₂, R = 1: the body is [0,1]³ and the excluded
    // segment is [e₂ + e₃, e₁ + e₂ + e₃].
    let trap = SimplexTrap::new(vec![v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0])], 1.0, None, None).map_err(|e| e.to_string())?;
    let (a, b) = (v(&[0.0, 1.0, 1.0]), v(&[1.0, 1.0, 1.0]));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let shell = 1e-9;
    let (mut compared, mut inside) = (0, 0);
    for _ in 0..100_000 {
        let x = DVector::from_fn(3, |_, _| rng.random_range(-0.5..1.5));
        let d = segment_distance(&a, &b, &x);
        let margins = x.iter().flat_map(|&c| [c, 1.0 - c]).chain([d - 1.0]);
        if margins.clone().any(|m| m.abs() < shell) {
            continue;
        }
        let expected = margins.clone().all(|m| m > 0.0);
        let got = trap_contains(&trap, &x, shell).map_err(|e| e.to_string())?;
        ensure((got == TrapMembership::Inside) == expected && got != TrapMembership::OnBoundary, || {
            format!("{x:?}: {got:?}, oracle inside = {expected}")
        })?;
        compared += 1;
        inside += expected as usize;
    }
    ensure(compared >= 99_000 && inside > 1000, || format!("{compared} compared, {inside} inside"))?;
    Ok(format!("excluded max {excluded}, 2-mean-convexity constant {constant}, {compared} membership checks ({inside} inside)"))
}

// ---------- 10 ----------

fn recurrence(work: &Path) -> Check {
    let mut parts = Vec::new();
    for (name, exact) in [
        ("recurrence_3d", (0.5 - 1.0 / 50.0) / (1.0 - 1.0 / 50.0)),
        ("recurrence_2d", (50.0f64 / 2.0).ln() / 50.0f64.ln()),
    ] {
        let run = run_scenario(work, name)?;
        ensure(run.code == Some(0), || format!("{name} exit {:?}", run.code))?;
        let r = &report(&run)?["result"];
        let (est, se) = (num(&r["estimate"])?, num(&r["stderr"])?);
        ensure(num(&r["samples"])? == 1e5, || "path count".into())?;
        ensure((est - exact).abs() <= 3.0 * se, || format!("{name}: {est} vs {exact} (stderr {se})"))?;
        parts.push(format!("{name}: {est:.4} vs {exact:.4} ± 3·{se:.4}"));
    }
    Ok(parts.join("; "))
}

// ---------- 11 ----------

fn stochastic_completeness(work: &Path) -> Check {
    let run = run_scenario(work, "brownian_flat")?;
    ensure(run.code == Some(0), || format!("exit {:?}", run.code))?;
    let r = &report(&run)?["result"];
    let (est, se) = (num(&r["estimate"])?, num(&r["stderr"])?);
    ensure(num(&r["samples"])? == 1e4, || "path count".into())?;
    ensure((1.0 - est).abs() <= 3.0 * se + 1e-12, || format!("mass {est} (stderr {se})"))?;
    Ok(format!("retained mass {est} (stderr {se})"))
}

// ---------- 12 ----------

fn halfspace(work: &Path) -> Check {
    let run = run_scenario(work, "halfspace_saddle")?;
    ensure(run.code == Some(0), || format!("exit {:?}", run.code))?;
    let results = report(&run)?["result"].clone();
    let verdicts: Vec<&str> = results.as_array().ok_or("no results")?.iter().filter_map(|r| r["verdict"].as_str()).collect();
    let want = ["parallel-hyperplane", "parallel-hyperplane", "not-parallel"];
    ensure(verdicts == want, || format!("{verdicts:?}"))?;
    // x₃ = s² − t² spans [−h², h²] on the square of half-width h
    let spreads: Vec<f64> =
        results[2]["members"].as_array().ok_or("no members")?.iter().map(|m| num(&m["spread"])).collect::<Result<_, _>>()?;
    for (s, h) in spreads.iter().zip([1.0f64, 2.0, 4.0]) {
        ensure((s - 2.0 * h * h).abs() < 1e-9, || format!("spread {s} on half-width {h}"))?;
    }
    Ok(format!("verdicts {verdicts:?}, x₃ spreads {spreads:?}"))
}

// ---------- 13 ----------

fn omori_yau(work: &Path) -> Check {
    let mut parts = Vec::new();
    for (name, strong) in [("oy_arctan_weak", false), ("oy_arctan_strong", true)] {
        let run = run_scenario(work, name)?;
        ensure(run.code == Some(0), || format!("{name} exit {:?}", run.code))?;
        let rows = csv_rows(&run.dir.join("witnesses.csv"))?;
        let mut covered = vec![false; 1001];
        for row in &rows {
            let k: usize = row[0].parse().map_err(|_| "bad k".to_string())?;
            let x: f64 = row[1].parse().map_err(|_| "bad point".to_string())?;
            let eps = 1.0 / k as f64;
            let gap = FRAC_PI_2 - x.atan();
            let grad = 1.0 / (1.0 + x * x);
            let lap = -2.0 * x / (1.0 + x * x).powi(2);
            let ok = gap < eps && lap < eps && (!strong || grad < eps);
            ensure(ok, || format!("{name}: k = {k} at x = {x}: gap {gap:e}, |grad| {grad:e}, Δ {lap:e}"))?;
            if k <= 1000 {
                covered[k] = true;
            }
        }
        let missing = (1..=1000).filter(|&k| !covered[k]).count();
        ensure(missing == 0, || format!("{name}: {missing} values of k have no witness"))?;
        parts.push(format!("{name}: 1000/1000"));
    }
    Ok(parts.join(", "))
}

fn main() -> ExitCode {
    let work = TempDir::new().expect("temporary directory");
    let w = work.path();
    let criteria: Vec<(&str, Duration, Box<dyn Fn() -> Check + '_>)> = vec![
        ("convexity table", Duration::from_secs(1), Box::new(|| convexity_table(w))),
        ("singular-value expansion", Duration::from_secs(5), Box::new(singular_value_expansion)),
        ("wideness closed form", Duration::from_secs(10), Box::new(wideness_closed_form)),
        ("sphere second fundamental form", Duration::from_secs(1), Box::new(sphere_shape_operator)),
        ("composition formula", Duration::from_secs(60), Box::new(composition_formula)),
        ("subharmonicity", Duration::from_secs(60), Box::new(subharmonicity)),
        ("Calabi growth", Duration::from_secs(120), Box::new(|| calabi_growth(w))),
        ("tomography constants", Duration::from_secs(60), Box::new(|| tomography_constant(w))),
        ("simplex trap", Duration::from_secs(60), Box::new(|| simplex_trap(w))),
        ("recurrence/transience", Duration::from_secs(300), Box::new(|| recurrence(w))),
        ("stochastic completeness", Duration::from_secs(120), Box::new(|| stochastic_completeness(w))),
        ("halfspace", Duration::from_secs(10), Box::new(|| halfspace(w))),
        ("Omori-Yau witnesses", Duration::from_secs(10), Box::new(|| omori_yau(w))),
    ];
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > *limit => Err(format!("{detail}; took longer than {limit:?}")),
            other => other,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failures += result.is_err() as usize;
        println!("[{tag}] {:>2} {name} ({:.2}s): {detail}", i + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
