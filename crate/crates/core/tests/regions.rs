use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use pullvexlab::regions::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// Distance to a simplex by solving the KKT system of every face with LU.
fn oracle_simplex_distance(vertices: &[DVector<f64>], x: &DVector<f64>) -> f64 {
    let n = vertices.len();
    let mut best = f64::INFINITY;
    for mask in 1usize..(1 << n) {
        let face: Vec<&DVector<f64>> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &vertices[i]).collect();
        let m = face.len();
        // minimize ½‖Σ λᵢ fᵢ − x‖² subject to Σ λᵢ = 1
        let mut kkt = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for i in 0..m {
            for j in 0..m {
                kkt[(i, j)] = face[i].dot(face[j]);
            }
            kkt[(i, m)] = 1.0;
            kkt[(m, i)] = 1.0;
            rhs[i] = face[i].dot(x);
        }
        rhs[m] = 1.0;
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        if (0..m).any(|i| sol[i] < -1e-12) {
            continue;
        }
        let p = (0..m).fold(DVector::zeros(x.len()), |acc, i| acc + face[i] * sol[i]);
        best = best.min((x - p).norm());
    }
    best
}

/// `(λ, s, t)` with `y = Σ λᵢ pᵢ + sν + t eₙ`, `Σ λᵢ = 1`.
fn oracle_body_coordinates(trap: &SimplexTrap, y: &DVector<f64>) -> (Vec<f64>, f64, f64) {
    let n = trap.dim();
    let verts = trap.base_vertices();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for (j, p) in verts.iter().enumerate() {
        a.view_mut((0, j), (n, 1)).copy_from(p);
        a[(n, j)] = 1.0;
    }
    a.view_mut((0, n - 1), (n, 1)).copy_from(trap.nu());
    a[(n - 1, n)] = 1.0;
    let mut rhs = DVector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from(y);
    rhs[n] = 1.0;
    let sol = a.lu().solve(&rhs).unwrap();
    (sol.rows(0, n - 1).iter().cloned().collect(), sol[n - 1], sol[n])
}

/// Set-formula membership: `Some(inside)`, or `None` within `shell` of a
/// boundary of the formula.
fn oracle_membership(trap: &SimplexTrap, x: &DVector<f64>, shell: f64) -> Option<bool> {
    let frame = trap.frame();
    let y = frame.rotation.transpose() * (x - &frame.translation);
    let (lambda, s, t) = oracle_body_coordinates(trap, &y);
    let r = trap.radius();
    let excluded = trap.base_layer(r, r);
    let d = oracle_simplex_distance(&excluded, &y);
    let margins = lambda.iter().cloned().chain([s, r - s, t, r - t]);
    if (d - r).abs() < shell || margins.clone().any(|m| m.abs() < shell) {
        return None;
    }
    Some(margins.clone().all(|m| m > 0.0) && d > r)
}

fn trap_3d() -> SimplexTrap {
    SimplexTrap::new(vec![v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0])], 1.0, None, None).unwrap()
}

fn rotation(angle: f64, n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut r = DMatrix::identity(n, n);
    r[(i, i)] = angle.cos();
    r[(j, j)] = angle.cos();
    r[(i, j)] = -angle.sin();
    r[(j, i)] = angle.sin();
    r
}

fn moved_trap_4d() -> SimplexTrap {
    let frame = Frame::new(rotation(0.7, 4, 0, 3) * rotation(-0.4, 4, 1, 2), v(&[0.3, -1.0, 2.0, 0.5])).unwrap();
    SimplexTrap::new(
        vec![v(&[0.0, 0.0, 0.0, 0.0]), v(&[1.5, 0.2, 0.0, 0.0]), v(&[0.3, 1.1, 0.0, 0.0])],
        0.8,
        None,
        Some(frame),
    )
    .unwrap()
}

fn bounding_box(points: &[DVector<f64>], pad: f64) -> Vec<(f64, f64)> {
    (0..points[0].len())
        .map(|i| {
            let lo = points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
            (lo - pad, hi + pad)
        })
        .collect()
}

fn check_membership_against_oracle(trap: &SimplexTrap, count: usize) -> (usize, usize) {
    let eps = 1e-9;
    let bbox = bounding_box(&trap.body_corners(), 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut inside, mut compared) = (0, 0);
    for _ in 0..count {
        let x = DVector::from_iterator(bbox.len(), bbox.iter().map(|&(lo, hi)| rng.random_range(lo..hi)));
        let Some(expected) = oracle_membership(trap, &x, eps) else { continue };
        let got = trap_contains(trap, &x, eps).unwrap();
        assert_ne!(got, TrapMembership::OnBoundary, "{x}");
        assert_eq!(got == TrapMembership::Inside, expected, "{x}");
        compared += 1;
        inside += expected as usize;
    }
    (compared, inside)
}

#[test]
fn trap_membership_matches_set_formula() {
    let (compared, inside) = check_membership_against_oracle(&trap_3d(), 100_000);
    assert!(compared > 99_000 && inside > 1000, "{compared} {inside}");
    let (compared, inside) = check_membership_against_oracle(&moved_trap_4d(), 20_000);
    assert!(compared > 19_000 && inside > 50, "{compared} {inside}");
}

#[test]
fn trap_membership_examples() {
    let trap = trap_3d();
    let bary = v(&[0.5, 0.0, 0.0]);
    // d(Δ_{0,0}, Δ_{R,R}) = √2 R > R keeps the base barycenter in the closure of T
    let nudged = &bary + trap.nu() * 0.05 + v(&[0.0, 0.0, 0.05]);
    assert_eq!(trap_contains(&trap, &nudged, 1e-9).unwrap(), TrapMembership::Inside);
    assert_eq!(trap_contains(&trap, &bary, 1e-9).unwrap(), TrapMembership::OnBoundary);
    for p in trap.layer(1.0, 1.0) {
        assert_eq!(trap_contains(&trap, &p, 1e-9).unwrap(), TrapMembership::Outside);
    }
    assert_eq!(trap_contains(&trap, &v(&[10.0, 10.0, 10.0]), 1e-9).unwrap(), TrapMembership::Outside);
}

#[test]
fn rigid_motion_commutes_with_membership() {
    let trap = moved_trap_4d();
    let base = trap.base_trap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bbox = bounding_box(&trap.body_corners(), 0.5);
    for _ in 0..5000 {
        let x = DVector::from_iterator(4, bbox.iter().map(|&(lo, hi)| rng.random_range(lo..hi)));
        let pulled = trap.frame().apply_inverse(&x);
        assert_eq!(trap_contains(&trap, &x, 1e-9).unwrap(), trap_contains(&base, &pulled, 1e-9).unwrap());
    }
    for y in base.sample_points(2000, 5) {
        let a = trap_contains(&base, &y, 1e-6).unwrap();
        let b = trap_contains(&trap, &trap.frame().apply(&y), 1e-6).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn excluded_max_is_twice_r_squared() {
    for r in [1.0, 0.5, 2.5] {
        let trap = SimplexTrap::new(vec![v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0])], r, None, None).unwrap();
        assert!((trap_excluded_max(&trap) - 2.0 * r * r).abs() < 1e-9 * r * r);
    }
    assert!((trap_excluded_max(&moved_trap_4d()) - 2.0 * 0.64).abs() < 1e-9);
}

#[test]
fn excluded_max_against_grid() {
    let trap = trap_3d();
    let (p0, p1) = (&trap.base_vertices()[0], &trap.base_vertices()[1]);
    let steps = 100;
    let mut best: f64 = 0.0;
    for i in 0..=steps {
        let base = p0 + (p1 - p0) * (i as f64 / steps as f64);
        for j in 0..=steps {
            for k in 0..=steps {
                let (s, t) = (j as f64 / steps as f64, k as f64 / steps as f64);
                let y = &base + trap.nu() * s + v(&[0.0, 0.0, t]);
                // segment distance in closed form
                let seg = trap.base_layer(1.0, 1.0);
                let dir = &seg[1] - &seg[0];
                let lam = ((&y - &seg[0]).dot(&dir) / dir.norm_squared()).clamp(0.0, 1.0);
                let d2 = (&y - (&seg[0] + dir * lam)).norm_squared();
                if d2 > 1.0 {
                    best = best.max(d2);
                }
            }
        }
    }
    let sup = trap_excluded_max(&trap);
    assert!(best <= sup + 1e-12 && best >= 0.99 * sup, "{best} vs {sup}");
}

#[test]
fn trap_field_is_strongly_mean_convex_on_samples() {
    for trap in [trap_3d(), moved_trap_4d()] {
        let n = trap.dim();
        let field = LocalizedDistanceSquared::for_trap(&trap, 0.2).unwrap();
        let mut c = f64::INFINITY;
        for x in trap.sample_points(2000, 11) {
            let jet = field.jet(&x);
            assert_eq!(jet.bump, 1.0);
            let mut eig: Vec<f64> = jet.hessian.symmetric_eigen().eigenvalues.iter().cloned().collect();
            eig.sort_by(f64::total_cmp);
            c = c.min(eig[..n - 1].iter().sum());
        }
        assert!(c > 0.0, "constant {c}");
        assert!((c - 2.0).abs() < 1e-9, "constant {c}");
    }
}

#[test]
fn field_point_anchor_examples() {
    let q = v(&[0.0, 0.0, -2.0]);
    let field =
        LocalizedDistanceSquared::new(Anchor::Point(q.clone()), Plateau::Ball { center: v(&[0.0, 0.0, 0.0]), radius: 1.0 }, 0.5)
            .unwrap();
    let inside = v(&[0.3, -0.2, 0.4]);
    let jet = field.jet(&inside);
    assert!((jet.value - (&inside - &q).norm_squared()).abs() < 1e-14);
    assert!((jet.hessian - DMatrix::identity(3, 3) * 2.0).amax() < 1e-14);
    let far = v(&[0.0, 1.6, 0.0]);
    let jet = field.jet(&far);
    assert_eq!(jet.value, 0.0);
    assert_eq!(jet.hessian, DMatrix::zeros(3, 3));
}

fn fd_gradient(field: &LocalizedDistanceSquared, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            let mut e = DVector::zeros(x.len());
            e[i] = h;
            (field.value(&(x + &e)) - field.value(&(x - &e))) / (2.0 * h)
        }),
    )
}

#[test]
fn enclosing_data_for_quadrant_matches_circumscribed_cut() {
    let wedge = PerturbedWedge::new(3, Arc::new(PolyhedralCone::upward_quadrant(1.0))).unwrap();
    for (xq, yq) in [(0.0, 1.0), (0.3, 0.8), (-0.5, 2.0)] {
        let data = enclosing_data(&wedge, &v(&[xq, yq, 7.0]), 0.01).unwrap();
        let c: f64 = yq + 1.0;
        let expected = ((xq.abs() + c).powi(2) + 1.0) / 2.0;
        assert!((data.d - expected).abs() <= 1e-8 * data.diameter, "{} vs {expected}", data.d);
        assert!(data.cut_face_radius < data.d && data.farthest > data.d);
        assert!((data.nu - v(&[0.0, -1.0])).norm() < 1e-12);
    }
}

/// Open disk with a tangent cut: `B` is the whole disk.
#[derive(Debug)]
struct TangentDisk {
    radius: f64,
}

impl ConeRegion for TangentDisk {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, q: &DVector<f64>) -> bool {
        q.norm() < self.radius
    }

    fn enclose(&self, _q: &DVector<f64>, spacing: f64) -> Result<Enclosure, RegionError> {
        let steps = (std::f64::consts::TAU * self.radius / spacing).ceil() as usize;
        let boundary = (0..steps)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / steps as f64 - std::f64::consts::FRAC_PI_2;
                v(&[self.radius * a.cos(), self.radius * a.sin()])
            })
            .collect();
        Ok(Enclosure {
            cut: Hyperplane { normal: v(&[0.0, -1.0]), offset: self.radius },
            inward: v(&[0.0, 1.0]),
            boundary,
            cut_face: vec![v(&[0.0, -self.radius])],
        })
    }
}

#[test]
fn enclosing_data_for_disk_centre() {
    let rho = 1.5;
    let wedge = PerturbedWedge::new(3, Arc::new(TangentDisk { radius: rho })).unwrap();
    let data = enclosing_data(&wedge, &v(&[0.0, 0.0, 0.0]), 0.01).unwrap();
    // the tangent point is within d of Q = −dν exactly when d > ρ/2
    assert!((data.d - rho / 2.0).abs() < 1e-8);
    let cut_point = v(&[0.0, -rho]);
    assert!((&cut_point - &data.anchor).norm() < data.d);
    assert!(data.boundary.iter().any(|x| (x - &data.anchor).norm() > data.d));
}

#[test]
fn enclosing_data_on_an_interval() {
    let wedge = PerturbedWedge::new(2, Arc::new(GraphRegion::new(1, Profile::Constant { level: 0.0 }, 1.0).unwrap())).unwrap();
    let q = 0.7;
    let data = enclosing_data(&wedge, &v(&[q, -3.0]), 0.01).unwrap();
    let length = q + 1.0;
    // d = |B| satisfies both conditions
    let anchor = q + length;
    assert!((q + 1.0 - anchor).abs() < length && (0.0 - anchor).abs() > length);
    assert!((data.d - 0.5).abs() < 1e-8);
}

#[test]
fn enclosing_data_on_log_wedge() {
    let cone = GraphRegion::new(2, Profile::Log { coefficient: 1.0 }, 0.5).unwrap();
    let wedge = PerturbedWedge::new(4, Arc::new(cone)).unwrap();
    for p in [v(&[0.0, 0.5, 1.0, -2.0]), v(&[3.0, 2.0, 0.0, 0.0]), v(&[-1.0, 1.0, 5.0, 5.0])] {
        assert!(wedge.contains(&p));
        let data = enclosing_data(&wedge, &p, 0.01).unwrap();
        assert!(data.cut_face_radius < data.d && data.farthest > data.d);
        assert!(data.cut.signed_distance(&data.q) < 0.0);
    }
    let err = enclosing_data(&wedge, &v(&[0.0, -1.0, 0.0, 0.0]), 0.01);
    assert!(matches!(err, Err(RegionError::NotInRegion { .. })));
}

fn connected_components(inside: &[Vec<bool>]) -> usize {
    let (h, w) = (inside.len(), inside[0].len());
    let mut seen = vec![vec![false; w]; h];
    let mut count = 0;
    for i in 0..h {
        for j in 0..w {
            if !inside[i][j] || seen[i][j] {
                continue;
            }
            count += 1;
            let mut stack = vec![(i, j)];
            seen[i][j] = true;
            while let Some((a, b)) = stack.pop() {
                let nbrs = [(a.wrapping_sub(1), b), (a + 1, b), (a, b.wrapping_sub(1)), (a, b + 1)];
                for (x, y) in nbrs {
                    if x < h && y < w && inside[x][y] && !seen[x][y] {
                        seen[x][y] = true;
                        stack.push((x, y));
                    }
                }
            }
        }
    }
    count
}

#[test]
fn cone_regions_are_connected_on_a_grid() {
    let regions: Vec<Arc<dyn ConeRegion>> = vec![
        Arc::new(PolyhedralCone::upward_quadrant(1.0)),
        Arc::new(GraphRegion::new(2, Profile::Log { coefficient: 1.0 }, 1.0).unwrap()),
        Arc::new(GraphRegion::new(2, Profile::Power { coefficient: 0.5, exponent: 2.0 }, 1.0).unwrap()),
    ];
    for region in regions {
        let inside: Vec<Vec<bool>> = (0..201)
            .map(|i| (0..201).map(|j| region.contains(&v(&[-5.0 + 0.05 * j as f64, -5.0 + 0.05 * i as f64]))).collect())
            .collect();
        assert_eq!(connected_components(&inside), 1, "{region:?}");
    }
}

#[test]
fn region_json_builds_trap_and_wedge() {
    let trap = RegionSpec::from_json(r#"{"type":"simplex_trap","vertices":[[0,0,0],[1,0,0]],"R":1.0,"nu":[0,1,0]}"#)
        .unwrap()
        .build()
        .unwrap();
    let Region::Trap(trap) = trap else { panic!("expected a trap") };
    assert!((trap_excluded_max(&trap) - 2.0).abs() < 1e-12);
    let wedge = RegionSpec::from_json(
        r#"{"type":"wedge","n":3,"cone":{"kind":"polyhedral","apex":[0,0],"normals":[[-1,1],[1,1]]}}"#,
    )
    .unwrap()
    .build()
    .unwrap();
    let Region::Wedge(wedge) = wedge else { panic!("expected a wedge") };
    assert_eq!((wedge.n(), wedge.k(), wedge.flat_directions()), (3, 2, 1));
    let bad = RegionSpec::from_json(r#"{"type":"simplex_trap","vertices":[[0,0,0],[1,0,0]],"R":1.0,"nu":[0,0,1]}"#)
        .unwrap()
        .build();
    assert!(matches!(bad, Err(RegionError::InvalidTrap(_))));
}

fn simplex_strategy() -> impl Strategy<Value = (Vec<DVector<f64>>, DVector<f64>)> {
    (2usize..6, 1usize..6).prop_flat_map(|(dim, count)| {
        let count = count.min(dim + 1);
        (
            proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, dim), count),
            proptest::collection::vec(-4.0f64..4.0, dim),
        )
            .prop_map(|(verts, x)| (verts.into_iter().map(DVector::from_vec).collect(), DVector::from_vec(x)))
    })
}

fn affinely_independent(verts: &[DVector<f64>]) -> bool {
    if verts.len() < 2 {
        return true;
    }
    let e = DMatrix::from_columns(&verts[1..].iter().map(|p| p - &verts[0]).collect::<Vec<_>>());
    e.svd(false, false).singular_values.iter().all(|&s| s > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplex_distance_matches_qp_oracle((verts, x) in simplex_strategy()) {
        prop_assume!(affinely_independent(&verts));
        let got = project_simplex(&verts, &x);
        let expected = oracle_simplex_distance(&verts, &x);
        prop_assert!((got.distance - expected).abs() < 1e-10, "{} vs {}", got.distance, expected);
        let hull = project_hull(&verts, &x);
        prop_assert!((hull.distance - expected).abs() < 1e-10);
        // variational inequality of the projection
        for p in &verts {
            prop_assert!((&x - &got.point).dot(&(p - &got.point)) <= 1e-10);
        }
    }

    #[test]
    fn large_simplex_uses_iterative_projection(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 9;
        let verts: Vec<DVector<f64>> =
            (0..9).map(|_| DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(-1.0..1.0)))).collect();
        prop_assume!(affinely_independent(&verts));
        let x = DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(-3.0..3.0)));
        let got = project_simplex(&verts, &x);
        let expected = oracle_simplex_distance(&verts, &x);
        prop_assert!((got.distance - expected).abs() < 1e-10, "{} vs {}", got.distance, expected);
    }

    #[test]
    fn field_gradient_matches_finite_differences(
        x in proptest::collection::vec(-2.5f64..2.5, 3),
        eps in 0.2f64..1.0,
    ) {
        let x = DVector::from_vec(x);
        let ball = LocalizedDistanceSquared::new(
            Anchor::Point(v(&[0.5, -1.0, 3.0])),
            Plateau::Ball { center: v(&[0.0, 0.0, 0.0]), radius: 1.0 },
            eps,
        )
        .unwrap();
        let trap = LocalizedDistanceSquared::for_trap(&trap_3d(), eps).unwrap();
        for field in [ball, trap] {
            let jet = field.jet(&x);
            let fd = fd_gradient(&field, &x, 1e-6);
            prop_assert!((&jet.gradient - &fd).amax() < 1e-6, "{} vs {}", jet.gradient, fd);
        }
    }
}
