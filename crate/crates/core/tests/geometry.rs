mod common;

use common::*;
use mmhoi_geom::geometry::{centroid, v2v_points};
use mmhoi_geom::knn::{brute_force_nearest, NearestNeighbors};
use mmhoi_geom::{
    apply_transform, chamfer_distance, project, v2v_distance, CameraIntrinsics, Error, Mesh,
    RigidTransform, Vec3,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn pure_translation_moves_vertex() {
    let mesh = Mesh::new(vec![Vec3::new(2.0, 2.0, 2.0)]).unwrap();
    let t = RigidTransform::from_translation(Vec3::new(0.0, 0.0, 1.0));
    assert_eq!(
        apply_transform(&mesh, &t).vertices()[0],
        Vec3::new(2.0, 2.0, 3.0)
    );
}

#[test]
fn quarter_turn_about_z() {
    let mesh = Mesh::new(vec![Vec3::new(1.0, 0.0, 0.0)]).unwrap();
    let t = RigidTransform::new(rot_z(90.0), Vec3::zeros()).unwrap();
    let v = apply_transform(&mesh, &t).vertices()[0];
    assert!((v - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn transform_keeps_faces_and_labels() {
    let mesh = part_mesh(
        vec![Vec3::zeros(), Vec3::x(), Vec3::y()],
        mmhoi_geom::BodyPart::Torso,
    )
    .with_faces(vec![[0, 1, 2]])
    .unwrap();
    let moved = apply_transform(&mesh, &RigidTransform::from_translation(Vec3::z()));
    assert_eq!(moved.faces(), mesh.faces());
    assert_eq!(moved.labels(), mesh.labels());
}

#[test]
fn chamfer_single_points() {
    let d = chamfer_distance(&[Vec3::zeros()], &[Vec3::x()]).unwrap();
    assert_eq!(d, 1.0);
}

#[test]
fn chamfer_matches_linear_scan_seed_7() {
    let mut r = rng(7);
    let a = random_points(&mut r, 50, 1.0);
    let b = random_points(&mut r, 50, 1.0);
    assert_eq!(chamfer_distance(&a, &b).unwrap(), brute_chamfer(&a, &b));
}

#[test]
fn chamfer_tree_path_matches_linear_scan() {
    // Large enough for the k-d tree, with duplicated points to exercise ties.
    let mut r = rng(70);
    let mut a = random_points(&mut r, 1500, 2.0);
    let b = random_points(&mut r, 900, 2.0);
    a.extend_from_slice(&b[..100]);
    assert_eq!(chamfer_distance(&a, &b).unwrap(), brute_chamfer(&a, &b));
    let tree = NearestNeighbors::new(&b);
    for q in random_points(&mut r, 200, 2.5) {
        assert_eq!(tree.nearest(&q), Some(brute_force_nearest(&b, &q)));
    }
}

#[test]
fn chamfer_of_empty_set_is_an_error() {
    let err = chamfer_distance(&[], &[Vec3::zeros()]).unwrap_err();
    assert_eq!(err.to_string(), "empty point set");
}

#[test]
fn v2v_three_four_five() {
    let a = Mesh::new(vec![Vec3::zeros()]).unwrap();
    let b = Mesh::new(vec![Vec3::new(3.0, 4.0, 0.0)]).unwrap();
    assert_eq!(v2v_distance(&a, &b).unwrap(), 5.0);
    assert_eq!(v2v_distance(&a, &a).unwrap(), 0.0);
}

#[test]
fn v2v_matches_direct_loop_seed_3() {
    let mut r = rng(3);
    let a = random_points(&mut r, 200, 1.0);
    let b: Vec<Vec3> = a
        .iter()
        .map(|p| p + random_points(&mut r, 1, 0.05)[0])
        .collect();
    let got = v2v_points(&a, &b).unwrap();
    assert!((got - loop_v2v(&a, &b)).abs() <= 1e-15);
}

#[test]
fn v2v_count_mismatch_is_topology_error() {
    let a = Mesh::new(vec![Vec3::zeros()]).unwrap();
    let b = Mesh::new(vec![Vec3::zeros(), Vec3::x()]).unwrap();
    let err = v2v_distance(&a, &b).unwrap_err();
    assert!(err.to_string().starts_with("topology mismatch"), "{err}");
}

#[test]
fn projection_examples() {
    let unit = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0).unwrap();
    let p = project(&[Vec3::new(0.0, 0.0, 1.0)], &unit).unwrap();
    assert_eq!((p[0].x, p[0].y), (0.0, 0.0));
    let cam = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap();
    let p = project(&[Vec3::new(1.0, 0.0, 2.0)], &cam).unwrap();
    assert_eq!((p[0].x, p[0].y), (100.0, 50.0));
}

#[test]
fn projection_matches_scalar_formula() {
    let mut r = rng(20);
    let cam = CameraIntrinsics::new(612.5, 598.0, 320.2, 241.7).unwrap();
    let pts: Vec<Vec3> = (0..20)
        .map(|_| {
            Vec3::new(
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
                r.random_range(0.5..5.0),
            )
        })
        .collect();
    let uv = project(&pts, &cam).unwrap();
    for (p, q) in pts.iter().zip(&uv) {
        assert_eq!(q.x, 612.5 * p.x / p.z + 320.2);
        assert_eq!(q.y, 598.0 * p.y / p.z + 241.7);
    }
}

#[test]
fn projection_behind_camera_is_an_error() {
    let cam = camera();
    let err = project(&[Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 0.0)], &cam).unwrap_err();
    assert!(matches!(err, Error::BehindCamera { index: 1, .. }));
    assert!(err.to_string().starts_with("point behind camera"));
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(Mesh::new(vec![]).is_err());
    assert!(Mesh::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)]).is_err());
    assert!(Mesh::new(vec![Vec3::zeros()])
        .unwrap()
        .with_faces(vec![[0, 0, 1]])
        .is_err());
    assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0).is_err());
    let mut bad = rot_z(10.0);
    bad[(0, 0)] += 1e-6;
    assert!(RigidTransform::new(bad, Vec3::zeros()).is_err());
    assert!(RigidTransform::new(-rot_z(0.0), Vec3::zeros()).is_err());
}

fn point() -> impl Strategy<Value = Vec3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn cloud(max: usize) -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(point(), 1..max)
}

fn rigid() -> impl Strategy<Value = RigidTransform> {
    (
        point(),
        -std::f64::consts::PI..std::f64::consts::PI,
        point(),
    )
        .prop_map(|(axis, angle, t)| {
            let axis = if axis.norm() < 1e-3 { Vec3::z() } else { axis };
            RigidTransform::new(rotation(axis, angle), t).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transforms_compose(pts in cloud(30), t1 in rigid(), t2 in rigid()) {
        let mesh = Mesh::new(pts).unwrap();
        let twice = apply_transform(&apply_transform(&mesh, &t1), &t2);
        let once = apply_transform(&mesh, &t2.compose(&t1));
        for (a, b) in twice.vertices().iter().zip(once.vertices()) {
            prop_assert!((a - b).amax() <= 1e-9);
        }
    }

    #[test]
    fn chamfer_is_exactly_symmetric(a in cloud(120), b in cloud(120)) {
        prop_assert_eq!(chamfer_distance(&a, &b).unwrap(), chamfer_distance(&b, &a).unwrap());
    }

    #[test]
    fn chamfer_equals_linear_scan(a in cloud(150), b in cloud(150)) {
        prop_assert_eq!(chamfer_distance(&a, &b).unwrap(), brute_chamfer(&a, &b));
    }

    #[test]
    fn chamfer_is_rigid_invariant(a in cloud(80), b in cloud(80), t in rigid()) {
        let ta: Vec<Vec3> = a.iter().map(|p| t.apply(p)).collect();
        let tb: Vec<Vec3> = b.iter().map(|p| t.apply(p)).collect();
        let before = chamfer_distance(&a, &b).unwrap();
        let after = chamfer_distance(&ta, &tb).unwrap();
        prop_assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn chamfer_is_non_negative_and_zero_on_self(a in cloud(80), b in cloud(80)) {
        prop_assert!(chamfer_distance(&a, &b).unwrap() >= 0.0);
        prop_assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn zero_v2v_implies_zero_chamfer(a in cloud(60)) {
        let b = a.clone();
        prop_assert_eq!(v2v_points(&a, &b).unwrap(), 0.0);
        prop_assert_eq!(chamfer_distance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn projection_ignores_depth_scaling(x in -1.0..1.0f64, y in -1.0..1.0f64, z in 0.1..5.0f64, s in 0.1..10.0f64) {
        let cam = CameraIntrinsics::new(500.0, 480.0, 320.0, 240.0).unwrap();
        let p = Vec3::new(x, y, z);
        let a = project(&[p], &cam).unwrap()[0];
        let b = project(&[p * s], &cam).unwrap()[0];
        prop_assert!((a - b).amax() <= 1e-9);
    }

    #[test]
    fn centroid_is_the_mean(a in cloud(40)) {
        let c = centroid(&a);
        let sum: Vec3 = a.iter().sum();
        prop_assert!((c - sum / a.len() as f64).amax() <= 1e-12);
    }
}
