mod common;

use common::*;
use mmhoi_geom::alignment::{
    fit_global, mean_squared_residual, pair_residual, procrustes_weighted,
};
use mmhoi_geom::{
    align_multi_hoi, align_single_hoi, average_rotations, average_translations, icp, procrustes,
    AlignOptions, Error, IcpParams, Mat3, RigidTransform, Scene, SimilarityTransform, Vec3,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn assert_mat_close(a: &Mat3, b: &Mat3, tol: f64) {
    assert!((a - b).amax() <= tol, "{a} vs {b}");
}

fn random_scene(r: &mut ChaCha8Rng, humans: usize, objects: usize) -> Scene {
    let mut scene = Scene::new(640, 480, camera());
    for h in 0..humans {
        let offset = Vec3::new(h as f64 - 0.5, 0.0, 3.0);
        let pts = random_points(r, 120, 0.4)
            .into_iter()
            .map(|p| p + offset)
            .collect();
        scene.push_human(part_mesh(pts, mmhoi_geom::BodyPart::Torso));
    }
    for o in 0..objects {
        let offset = Vec3::new(o as f64 * 0.3, 0.4, 3.2);
        let pts = random_points(r, 30, 0.1)
            .into_iter()
            .map(|p| p + offset)
            .collect();
        scene.push_object(object_at(pts, o as u32));
    }
    for h in 0..humans {
        for o in 0..objects {
            annotate(&mut scene, h, o, &[mmhoi_geom::BodyPart::Torso]);
        }
    }
    scene
}

fn jitter(scene: &Scene, r: &mut ChaCha8Rng, sigma: f64) -> Scene {
    let mut out = scene.clone();
    for h in &mut out.humans {
        let vs = h
            .vertices()
            .iter()
            .map(|v| v + random_points(r, 1, sigma)[0])
            .collect();
        *h = h.with_vertices(vs).unwrap();
    }
    for o in &mut out.objects {
        let vs = o
            .mesh
            .vertices()
            .iter()
            .map(|v| v + random_points(r, 1, sigma)[0])
            .collect();
        o.mesh = o.mesh.with_vertices(vs).unwrap();
    }
    out
}

fn transform_scene(scene: &Scene, t: &SimilarityTransform) -> Scene {
    let mut out = scene.clone();
    for h in &mut out.humans {
        *h = t.apply_mesh(h);
    }
    for o in &mut out.objects {
        // Bake the pose into the canonical mesh so the similarity applies cleanly.
        let posed = o.posed_mesh();
        o.mesh = t.apply_mesh(&posed);
        o.pose = RigidTransform::identity();
    }
    out
}

#[test]
fn procrustes_self_alignment_is_identity() {
    let pts = random_points(&mut rng(1), 40, 1.0);
    let t = procrustes(&pts, &pts, true).unwrap();
    assert_eq!(t, SimilarityTransform::identity());
    assert_eq!(mean_squared_residual(&t, &pts, &pts), 0.0);
}

#[test]
fn procrustes_recovers_similarity_seed_11() {
    let mut r = rng(11);
    let src = random_points(&mut r, 50, 1.0);
    let r0 = random_rotation(&mut r);
    let t0 = random_points(&mut r, 1, 2.0)[0];
    let dst: Vec<Vec3> = src.iter().map(|p| 2.0 * (r0 * p) + t0).collect();
    let fit = procrustes(&src, &dst, true).unwrap();
    assert!((fit.scale - 2.0).abs() <= 1e-9);
    assert_mat_close(&fit.rotation, &r0, 1e-9);
    assert!((fit.translation - t0).amax() <= 1e-9);
}

#[test]
fn procrustes_rigid_mode_keeps_unit_scale() {
    let mut r = rng(12);
    let src = random_points(&mut r, 30, 1.0);
    let dst: Vec<Vec3> = src.iter().map(|p| 3.0 * p).collect();
    assert_eq!(procrustes(&src, &dst, false).unwrap().scale, 1.0);
}

#[test]
fn procrustes_never_returns_a_reflection() {
    let mut r = rng(13);
    for _ in 0..20 {
        let planar: Vec<Vec3> = (0..20)
            .map(|_| Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), 0.0))
            .collect();
        let mirrored: Vec<Vec3> = planar.iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
        for scale in [true, false] {
            let fit = procrustes(&planar, &mirrored, scale).unwrap();
            assert!((fit.rotation.determinant() - 1.0).abs() < 1e-12);
        }
    }
    let cloud = random_points(&mut r, 30, 1.0);
    let mirrored: Vec<Vec3> = cloud.iter().map(|p| Vec3::new(p.x, p.y, -p.z)).collect();
    let fit = procrustes(&cloud, &mirrored, true).unwrap();
    assert!((fit.rotation.determinant() - 1.0).abs() < 1e-12);
}

#[test]
fn procrustes_beats_random_transforms() {
    let mut r = rng(14);
    let src = random_points(&mut r, 40, 1.0);
    let r0 = random_rotation(&mut r);
    let dst: Vec<Vec3> = src
        .iter()
        .map(|p| 1.3 * (r0 * p) + Vec3::new(0.2, -0.1, 0.5) + random_points(&mut r, 1, 0.05)[0])
        .collect();
    for with_scale in [true, false] {
        let fit = procrustes(&src, &dst, with_scale).unwrap();
        let best = mean_squared_residual(&fit, &src, &dst);
        for _ in 0..100 {
            let scale = if with_scale {
                r.random_range(0.5..2.0)
            } else {
                1.0
            };
            let other = SimilarityTransform::new(
                scale,
                random_rotation(&mut r),
                random_points(&mut r, 1, 1.0)[0],
            )
            .unwrap();
            assert!(best <= mean_squared_residual(&other, &src, &dst));
        }
        // Small perturbations of the optimum must not help either.
        for _ in 0..100 {
            let nudge = rotation(random_unit(&mut r), 1e-3);
            let other = SimilarityTransform {
                scale: fit.scale,
                rotation: nudge * fit.rotation,
                translation: fit.translation + random_points(&mut r, 1, 1e-3)[0],
            };
            assert!(best <= mean_squared_residual(&other, &src, &dst) + 1e-15);
        }
    }
}

#[test]
fn procrustes_errors() {
    let pts = random_points(&mut rng(15), 5, 1.0);
    assert!(matches!(
        procrustes(&pts, &pts[..4], true),
        Err(Error::CountMismatch { .. })
    ));
    let collinear: Vec<Vec3> = (0..6).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
    let err = procrustes(&collinear, &collinear, true).unwrap_err();
    assert_eq!(err.to_string(), "degenerate point set");
    assert!(matches!(
        procrustes(&pts[..2], &pts[..2], true),
        Err(Error::DegeneratePointSet)
    ));
    let bad_w = [1.0, 1.0, -1.0, 1.0, 1.0];
    assert!(procrustes_weighted(&pts, &pts, Some(&bad_w), true).is_err());
}

#[test]
fn weighted_procrustes_ignores_zero_weight_outliers() {
    let mut r = rng(16);
    let src = random_points(&mut r, 20, 1.0);
    let r0 = rot_z(30.0);
    let mut dst: Vec<Vec3> = src.iter().map(|p| r0 * p).collect();
    dst[0] += Vec3::new(10.0, 0.0, 0.0);
    let mut w = vec![1.0; 20];
    w[0] = 0.0;
    let fit = procrustes_weighted(&src, &dst, Some(&w), false).unwrap();
    assert_mat_close(&fit.rotation, &r0, 1e-9);
}

#[test]
fn icp_self_alignment() {
    let pts = random_points(&mut rng(21), 200, 1.0);
    let res = icp(
        &pts,
        &pts,
        &RigidTransform::identity(),
        &IcpParams::default(),
    )
    .unwrap();
    assert_eq!(res.iterations, 1);
    assert_eq!(res.rmse, 0.0);
    assert_mat_close(&res.transform.rotation, &Mat3::identity(), 1e-12);
    assert!(res.transform.translation.amax() <= 1e-12);
}

fn icp_case(seed: u64) -> (Vec<Vec3>, Vec<Vec3>, RigidTransform) {
    let mut r = rng(seed);
    let src = random_points(&mut r, 500, 0.5);
    let truth = RigidTransform::new(rot_z(10.0), Vec3::new(0.05, 0.0, 0.0)).unwrap();
    let dst = src.iter().map(|p| truth.apply(p)).collect();
    (src, dst, truth)
}

#[test]
fn icp_recovers_ten_degrees_five_centimetres() {
    let (src, dst, truth) = icp_case(22);
    let res = icp(
        &src,
        &dst,
        &RigidTransform::identity(),
        &IcpParams::default(),
    )
    .unwrap();
    assert!(res.rmse < 1e-4, "rmse {}", res.rmse);
    assert!(res.iterations <= 50);
    assert_mat_close(&res.transform.rotation, &truth.rotation, 1e-6);
    for w in res.rmse_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{:?}", res.rmse_trace);
    }
}

#[test]
fn icp_iteration_budget_is_respected() {
    let (src, dst, _) = icp_case(22);
    let params = IcpParams {
        max_iterations: 1,
        ..IcpParams::default()
    };
    let one = icp(&src, &dst, &RigidTransform::identity(), &params).unwrap();
    let full = icp(
        &src,
        &dst,
        &RigidTransform::identity(),
        &IcpParams::default(),
    )
    .unwrap();
    assert_eq!(one.iterations, 1);
    assert_eq!(one.rmse_trace.len(), 2);
    assert!(one.rmse > full.rmse);
}

#[test]
fn icp_errors() {
    let pts = random_points(&mut rng(23), 2, 1.0);
    let err = icp(
        &pts,
        &pts,
        &RigidTransform::identity(),
        &IcpParams::default(),
    )
    .unwrap_err();
    assert!(err.to_string().starts_with("icp degenerate"));
    let bad = IcpParams {
        max_iterations: 0,
        convergence_tol: 1e-6,
    };
    let many = random_points(&mut rng(23), 10, 1.0);
    assert!(icp(&many, &many, &RigidTransform::identity(), &bad).is_err());
}

#[test]
fn rotation_average_examples() {
    let r = random_rotation(&mut rng(31));
    assert_mat_close(&average_rotations(&[r]).unwrap(), &r, 1e-12);
    assert_mat_close(&average_rotations(&[r, r]).unwrap(), &r, 1e-12);
    let mean = average_rotations(&[Mat3::identity(), rot_z(20.0)]).unwrap();
    assert_mat_close(&mean, &rot_z(10.0), 1e-9);
    assert!(matches!(average_rotations(&[]), Err(Error::EmptyInput(_))));
}

#[test]
fn rotation_average_is_orthonormal() {
    let mut r = rng(32);
    let set: Vec<Mat3> = (0..7).map(|_| random_rotation(&mut r)).collect();
    let mean = average_rotations(&set).unwrap();
    assert!((mean.transpose() * mean - Mat3::identity()).amax() < 1e-12);
    assert!((mean.determinant() - 1.0).abs() < 1e-12);
}

#[test]
fn rotation_average_order_and_sign_invariance() {
    let mut r = rng(33);
    for _ in 0..50 {
        // Clustered rotations keep the mean well defined.
        let base = random_rotation(&mut r);
        let n = r.random_range(2..8);
        let set: Vec<Mat3> = (0..n)
            .map(|_| rotation(random_unit(&mut r), r.random_range(-0.6..0.6)) * base)
            .collect();
        let mean = average_rotations(&set).unwrap();
        let mut reversed = set.clone();
        reversed.reverse();
        assert_mat_close(&average_rotations(&reversed).unwrap(), &mean, 1e-9);
        // A rotation by 2π about any axis is the same matrix with a negated
        // quaternion; rebuild through nalgebra to flip the sign explicitly.
        let flipped: Vec<Mat3> = set
            .iter()
            .map(|m| {
                let q = nalgebra::UnitQuaternion::from_matrix(m);
                let neg = nalgebra::UnitQuaternion::new_unchecked(-q.into_inner());
                *neg.to_rotation_matrix().matrix()
            })
            .collect();
        assert_mat_close(&average_rotations(&flipped).unwrap(), &mean, 1e-9);
    }
}

#[test]
fn translation_average_examples() {
    assert_eq!(average_translations(&[Vec3::x()]).unwrap(), Vec3::x());
    assert_eq!(
        average_translations(&[Vec3::zeros(), Vec3::new(2.0, 2.0, 2.0)]).unwrap(),
        Vec3::new(1.0, 1.0, 1.0)
    );
    let ts = random_points(&mut rng(5), 10, 3.0);
    let mut sum = [0.0; 3];
    for t in &ts {
        sum[0] += t.x;
        sum[1] += t.y;
        sum[2] += t.z;
    }
    let got = average_translations(&ts).unwrap();
    assert!((got - Vec3::new(sum[0], sum[1], sum[2]) / 10.0).amax() <= 1e-15);
    assert!(average_translations(&[]).is_err());
}

#[test]
fn single_alignment_perfect_and_displaced_pair() {
    let mut r = rng(41);
    let gt = random_scene(&mut r, 1, 1);
    let opts = AlignOptions::default();
    let rep = align_single_hoi(&gt, &gt, (0, 0), &opts).unwrap();
    assert!(rep
        .per_human_cd
        .iter()
        .chain(&rep.per_object_cd)
        .all(|&d| d == 0.0));
    assert!(rep
        .per_human_v2v
        .iter()
        .chain(&rep.per_object_v2v)
        .all(|&d| d == 0.0));

    let moved = SimilarityTransform::new(1.0, rot_z(25.0), Vec3::new(0.3, -0.2, 0.1)).unwrap();
    let pred = transform_scene(&gt, &moved);
    let rep = align_single_hoi(&pred, &gt, (0, 0), &opts).unwrap();
    for d in rep
        .per_human_cd
        .iter()
        .chain(&rep.per_object_cd)
        .chain(&rep.per_human_v2v)
    {
        assert!(*d < 1e-9, "{d}");
    }
}

#[test]
fn single_alignment_object_only_offset() {
    let mut r = rng(42);
    let mut gt = Scene::new(640, 480, camera());
    let human: Vec<Vec3> = random_points(&mut r, 6890, 0.5)
        .into_iter()
        .map(|p| p + Vec3::new(0.0, 0.0, 3.0))
        .collect();
    gt.push_human(part_mesh(human, mmhoi_geom::BodyPart::Torso));
    let obj = random_points(&mut r, 50, 0.1)
        .into_iter()
        .map(|p| p + Vec3::new(0.6, 0.0, 3.0))
        .collect();
    gt.push_object(object_at(obj, 0));
    let mut pred = gt.clone();
    pred.objects[0].pose = RigidTransform::from_translation(Vec3::new(0.1, 0.0, 0.0));
    let rep = align_single_hoi(&pred, &gt, (0, 0), &AlignOptions::default()).unwrap();
    assert!(rep.per_object_cd[0] > 0.0 && rep.per_object_cd[0] < 0.1);
    assert!(rep.per_human_cd[0] > 0.0 && rep.per_human_cd[0] < 0.1);
    assert!(rep.per_object_cd[0] > rep.per_human_cd[0]);
}

#[test]
fn single_alignment_errors() {
    let mut r = rng(43);
    let gt = random_scene(&mut r, 1, 1);
    let err = align_single_hoi(&gt, &gt, (3, 0), &AlignOptions::default()).unwrap_err();
    assert!(matches!(err, Error::IndexOutOfRange { what: "human", .. }));
    let mut pred = gt.clone();
    let fewer = pred.humans[0].vertices()[..50].to_vec();
    pred.humans[0] = part_mesh(fewer, mmhoi_geom::BodyPart::Torso);
    let err = align_single_hoi(&pred, &gt, (0, 0), &AlignOptions::default()).unwrap_err();
    assert!(matches!(err, Error::TopologyMismatch { .. }));
}

#[test]
fn multi_alignment_global_invariance() {
    let mut r = rng(44);
    let gt = random_scene(&mut r, 2, 3);
    let opts = AlignOptions::default();
    let rep = align_multi_hoi(&gt, &gt, &opts).unwrap();
    assert!(rep
        .per_human_cd
        .iter()
        .chain(&rep.per_object_v2v)
        .all(|&d| d == 0.0));
    assert_eq!(rep.per_human_cd.len(), 2);
    assert_eq!(rep.per_object_cd.len(), 3);

    let t =
        SimilarityTransform::new(0.7, random_rotation(&mut r), Vec3::new(1.0, 2.0, -0.5)).unwrap();
    let pred = transform_scene(&gt, &t);
    let rep = align_multi_hoi(&pred, &gt, &opts).unwrap();
    for d in rep
        .per_human_cd
        .iter()
        .chain(&rep.per_human_v2v)
        .chain(&rep.per_object_cd)
        .chain(&rep.per_object_v2v)
    {
        assert!(*d <= 1e-9, "{d}");
    }
}

#[test]
fn multi_alignment_isolates_one_displaced_human() {
    let mut r = rng(45);
    let gt = random_scene(&mut r, 3, 2);
    let mut pred = gt.clone();
    pred.humans[1] = pred.humans[1]
        .with_vertices(
            pred.humans[1]
                .vertices()
                .iter()
                .map(|v| v + Vec3::new(0.0, 0.5, 0.0))
                .collect(),
        )
        .unwrap();
    let rep = align_multi_hoi(&pred, &gt, &AlignOptions::default()).unwrap();
    let worst = rep.per_human_cd.iter().cloned().fold(0.0, f64::max);
    assert_eq!(worst, rep.per_human_cd[1]);
    for (i, d) in rep.per_human_cd.iter().enumerate() {
        if i != 1 {
            assert!(*d < rep.per_human_cd[1], "{:?}", rep.per_human_cd);
        }
    }
}

#[test]
fn multi_alignment_entity_count_mismatch() {
    let mut r = rng(46);
    let gt = random_scene(&mut r, 2, 2);
    let mut pred = gt.clone();
    pred.objects.pop();
    pred.object_masks.pop();
    pred.interactions.retain(|a| a.object < 1);
    assert!(matches!(
        align_multi_hoi(&pred, &gt, &AlignOptions::default()),
        Err(Error::EntityCountMismatch { .. })
    ));
}

fn entity_centroids(scene: &Scene, t: &SimilarityTransform) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = scene
        .humans
        .iter()
        .map(|h| mmhoi_geom::geometry::centroid(&t.apply_all(h.vertices())))
        .collect();
    for o in 0..scene.objects.len() {
        out.push(mmhoi_geom::geometry::centroid(
            &t.apply_all(&scene.object_vertices(o)),
        ));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multi_alignment_preserves_relative_placement(seed in any::<u64>()) {
        let mut r = rng(seed);
        let gt = random_scene(&mut r, 2, 2);
        let pred = jitter(&gt, &mut r, 0.05);
        let t = fit_global(&pred, &gt, &AlignOptions::default()).unwrap();
        let before = entity_centroids(&pred, &SimilarityTransform::identity());
        let after = entity_centroids(&pred, &t);
        for i in 0..before.len() {
            for j in 0..before.len() {
                let d0 = (before[i] - before[j]).norm() * t.scale;
                let d1 = (after[i] - after[j]).norm();
                prop_assert!((d0 - d1).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn single_fit_is_pair_optimal(seed in any::<u64>()) {
        let mut r = rng(seed);
        let gt = random_scene(&mut r, 2, 2);
        let pred = jitter(&gt, &mut r, 0.08);
        let opts = AlignOptions::default();
        let global = fit_global(&pred, &gt, &opts).unwrap();
        for pair in gt.interaction_pairs() {
            let s = align_single_hoi(&pred, &gt, pair, &opts).unwrap();
            prop_assert!(pair_residual(&pred, &gt, pair, &s.transform) <= pair_residual(&pred, &gt, pair, &global) + 1e-12);
        }
    }

    #[test]
    fn procrustes_recovers_random_similarity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let src = random_points(&mut r, 50, 1.0);
        let s0 = r.random_range(0.2..5.0);
        let r0 = random_rotation(&mut r);
        let t0 = random_points(&mut r, 1, 3.0)[0];
        let dst: Vec<Vec3> = src.iter().map(|p| s0 * (r0 * p) + t0).collect();
        let fit = procrustes(&src, &dst, true).unwrap();
        prop_assert!((fit.scale - s0).abs() <= 1e-9);
        prop_assert!((fit.rotation - r0).amax() <= 1e-9);
        prop_assert!((fit.translation - t0).amax() <= 1e-9);
    }
}
