use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use surfwarp_core::geometry::*;

fn random_rotation(rng: &mut impl Rng) -> Rotation {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Ok(r) = Rotation::from_wxyz(q[0], q[1], q[2], q[3]) {
            return r;
        }
    }
}

fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    let v = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    v.normalize()
}

/// Rotation matrix of a unit quaternion, written out by hand.
fn quat_matrix(r: &Rotation) -> Matrix3<f64> {
    let [w, x, y, z] = r.wxyz();
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

fn trace_angle(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (((a.transpose() * b).trace() - 1.0) / 2.0)
        .clamp(-1.0, 1.0)
        .acos()
}

fn rodrigues(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = Matrix3::new(
        0.0, -axis.z, axis.y, //
        axis.z, 0.0, -axis.x, //
        -axis.y, axis.x, 0.0,
    );
    Matrix3::identity() + angle.sin() * k + (1.0 - angle.cos()) * k * k
}

#[test]
fn geodesic_matches_trace_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let (a, b) = (random_rotation(&mut rng), random_rotation(&mut rng));
        let oracle = trace_angle(&quat_matrix(&a), &quat_matrix(&b));
        let got = geodesic_angle(&a, &b);
        // acos loses precision near 0 and pi; compare there through sin/cos.
        assert!(
            (got.cos() - oracle.cos()).abs() < 1e-9 && (got.sin() - oracle.sin()).abs() < 1e-6,
            "{got} vs {oracle}"
        );
    }
}

#[test]
fn geodesic_small_angles_against_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let a = random_rotation(&mut rng);
        let angle = rng.random_range(0.01..3.1);
        let b = exp_rotation(&random_unit(&mut rng), angle) * a;
        let oracle = trace_angle(&quat_matrix(&a), &quat_matrix(&b));
        assert!((geodesic_angle(&a, &b) - oracle).abs() < 1e-6);
        assert!((geodesic_angle(&a, &b) - angle).abs() < 1e-9);
    }
}

#[test]
fn exp_rotation_matches_rodrigues() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let axis = random_unit(&mut rng);
        let angle = rng.random_range(-PI..PI);
        let r = exp_rotation(&axis, angle);
        let oracle = rodrigues(&axis, angle);
        for e in [Vector3::x(), Vector3::y(), Vector3::z()] {
            assert!((r.rotate(&e) - oracle * e).norm() < 1e-9);
        }
        let omega = axis * angle;
        assert!((exp_map(&omega).matrix() - oracle).norm() < 1e-9);
    }
}

#[test]
fn surface_normal_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-6;
    for i in 0..1000 {
        let family = SurfaceFamily::ALL[i % 5];
        let s = Surface::new(family, rng.random_range(-1.0..1.0))
            .with_frequency(rng.random_range(0.5..5.0))
            .with_scale(rng.random_range(0.1..5.0));
        let x = rng.random_range(-1.5..1.5);
        let slope = (s.height(x + h) - s.height(x - h)) / (2.0 * h);
        let oracle = Vector3::new(-slope, 0.0, 1.0).normalize();
        let n = surface_normal(&s, x);
        assert!(
            (n - oracle).norm() < 1e-6,
            "{family} x={x}: {n:?} vs {oracle:?}"
        );
    }
}

#[test]
fn sin_normal_at_origin() {
    let s = Surface::new(SurfaceFamily::Sin, 1.0);
    let expect = Vector3::new(-1.0, 0.0, 1.0) / 2f64.sqrt();
    assert!((surface_normal(&s, 0.0) - expect).norm() < 1e-12);
}

#[test]
fn sin_arclength_matches_simpson() {
    let s = Surface::new(SurfaceFamily::Sin, 1.0);
    let guide = build_guide(&s, 0.0, 2.0 * PI, 10001).unwrap();
    // Composite Simpson on the analytic integrand.
    let n = 2000;
    let h = 2.0 * PI / n as f64;
    let f = |x: f64| (1.0 + x.cos().powi(2)).sqrt();
    let simpson: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * f(i as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert!((simpson - 7.6404).abs() < 1e-3);
    assert!((guide.total_length() - simpson).abs() < 1e-3);
}

#[test]
fn antipodal_tie_break_about_z() {
    let r = rotation_between(&Vector3::x(), &-Vector3::x());
    assert!((r.rotate(&Vector3::x()) + Vector3::x()).norm() < 1e-12);
    assert!((r.rotate(&Vector3::z()) - Vector3::z()).norm() < 1e-12);
}

#[test]
fn tilted_pose_base_offset() {
    let tip = Vector3::new(0.2, 0.0, 0.1);
    let pose = Pose::new(exp_rotation(&Vector3::y(), 30f64.to_radians()), tip);
    let e_c = -Vector3::z();
    let base = pose.position - 0.1 * pose.axis(&e_c);
    let expect = tip + 0.1 * Vector3::new(0.5, 0.0, 3f64.sqrt() / 2.0);
    assert!((base - expect).norm() < 1e-12);
}

fn unit_vec() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 1e-3)
        .prop_map(|(x, y, z)| Vector3::new(x, y, z).normalize())
}

proptest! {
    #[test]
    fn rotation_between_is_minimal(u in unit_vec(), v in unit_vec()) {
        let r = rotation_between(&u, &v);
        prop_assert!((r.rotate(&u) - v).norm() < 1e-9);
        let angle = angle_between(&u, &v).unwrap();
        prop_assert!((geodesic_angle(&r, &Rotation::identity()) - angle).abs() < 1e-6);
    }

    #[test]
    fn geodesic_symmetric_and_sign_blind(
        a in unit_vec(), b in unit_vec(), t in -3.0..3.0f64, s in -3.0..3.0f64
    ) {
        let r1 = exp_rotation(&a, t);
        let r2 = exp_rotation(&b, s);
        let [w, x, y, z] = r2.wxyz();
        let flipped = Rotation::from_wxyz(-w, -x, -y, -z).unwrap();
        prop_assert_eq!(geodesic_angle(&r1, &r2), geodesic_angle(&r2, &r1));
        prop_assert!((geodesic_angle(&r1, &r2) - geodesic_angle(&r1, &flipped)).abs() < 1e-12);
        prop_assert!(geodesic_angle(&r1, &r2) <= PI);
    }

    #[test]
    fn normals_unit_and_upward(x in -2.0..2.0f64, a in -2.0..2.0f64, f in 0usize..5) {
        let s = Surface::new(SurfaceFamily::ALL[f], a);
        let n = s.normal(x);
        prop_assert!((n.norm() - 1.0).abs() < 1e-12);
        prop_assert!(n.z > 0.0);
        prop_assert_eq!(n.y, 0.0);
    }
}
