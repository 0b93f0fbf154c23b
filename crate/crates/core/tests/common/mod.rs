//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use mmhoi_geom::scene::{InteractionAnnotation, Scene, SceneObject};
use mmhoi_geom::synth::{generate, SynthConfig};
use mmhoi_geom::{
    procrustes, BodyPart, CameraIntrinsics, Mat3, Mesh, RigidTransform, SimilarityTransform, Vec3,
};
use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, half_extent: f64) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.random_range(-half_extent..half_extent),
                rng.random_range(-half_extent..half_extent),
                rng.random_range(-half_extent..half_extent),
            )
        })
        .collect()
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn rotation(axis: Vec3, angle: f64) -> Mat3 {
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner()
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let axis = random_unit(rng);
    rotation(
        axis,
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
}

pub fn rot_z(deg: f64) -> Mat3 {
    rotation(Vec3::z(), deg.to_radians())
}

/// O(N·M) Chamfer: nearest distances by linear scan with the
/// `dx² + dy² + dz²` formula, summed in input order.
pub fn brute_chamfer(a: &[Vec3], b: &[Vec3]) -> f64 {
    fn directed(from: &[Vec3], to: &[Vec3]) -> f64 {
        let mut sum = 0.0;
        for p in from {
            let mut best = f64::INFINITY;
            for q in to {
                let (dx, dy, dz) = (p.x - q.x, p.y - q.y, p.z - q.z);
                let d2 = dx * dx + dy * dy + dz * dz;
                if d2 < best {
                    best = d2;
                }
            }
            sum += best.sqrt();
        }
        sum / from.len() as f64
    }
    (directed(a, b) + directed(b, a)) / 2.0
}

pub fn loop_v2v(a: &[Vec3], b: &[Vec3]) -> f64 {
    let mut sum = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        sum += (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
    }
    sum / a.len() as f64
}

pub fn camera() -> CameraIntrinsics {
    CameraIntrinsics::new(500.0, 500.0, 48.0, 48.0).unwrap()
}

/// Human whose vertices are all labeled with `part`.
pub fn part_mesh(points: Vec<Vec3>, part: BodyPart) -> Mesh {
    let n = points.len();
    Mesh::new(points)
        .unwrap()
        .with_labels(vec![Some(part); n])
        .unwrap()
}

/// Human made of clusters, one per `(part, points)` entry.
pub fn labeled_human(clusters: &[(BodyPart, Vec<Vec3>)]) -> Mesh {
    let mut vertices = Vec::new();
    let mut labels = Vec::new();
    for (part, pts) in clusters {
        vertices.extend(pts.iter().copied());
        labels.extend(std::iter::repeat_n(Some(*part), pts.len()));
    }
    Mesh::new(vertices).unwrap().with_labels(labels).unwrap()
}

pub fn object_at(points: Vec<Vec3>, category: u32) -> SceneObject {
    SceneObject {
        category,
        mesh: Mesh::new(points).unwrap(),
        pose: RigidTransform::identity(),
    }
}

pub fn annotate(scene: &mut Scene, human: usize, object: usize, parts: &[BodyPart]) {
    scene.interactions.push(InteractionAnnotation {
        human,
        object,
        action: 0,
        body_parts: parts.iter().copied().collect(),
    });
}

/// Grid of `n × n` points in the plane `z = z0`, spacing `step`, centred at
/// `(cx, cy)`.
pub fn grid_points(n: usize, step: f64, cx: f64, cy: f64, z0: f64) -> Vec<Vec3> {
    let half = (n as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(Vec3::new(
                cx + (i as f64 - half) * step,
                cy + (j as f64 - half) * step,
                z0,
            ));
        }
    }
    out
}

/// First-order prediction of per-entity V2V after one global similarity
/// (or rigid) fit, for predictions that differ from `gt` by a pure
/// translation per entity. Returns (humans, objects) in meters.
///
/// The fitted map is `p + t + w x p + s p`; minimizing the stacked residual
/// over (t, w, s) is a 7-unknown linear least-squares problem.
pub fn linearized_global_v2v(gt: &Scene, pred: &Scene, with_scale: bool) -> (Vec<f64>, Vec<f64>) {
    let mut entities: Vec<(Vec<Vec3>, Vec3)> = Vec::new();
    for (g, p) in gt.humans.iter().zip(&pred.humans) {
        let d = p.centroid() - g.centroid();
        entities.push((g.vertices().to_vec(), d));
    }
    for j in 0..gt.objects.len() {
        let (g, p) = (gt.object_vertices(j), pred.object_vertices(j));
        let d = mmhoi_geom::geometry::centroid(&p) - mmhoi_geom::geometry::centroid(&g);
        entities.push((g, d));
    }
    let all: Vec<Vec3> = entities
        .iter()
        .flat_map(|(v, _)| v.iter().copied())
        .collect();
    let origin = mmhoi_geom::geometry::centroid(&all);
    let unknowns = if with_scale { 7 } else { 6 };
    let jacobian = |x: &Vec3| -> nalgebra::DMatrix<f64> {
        let x = x - origin;
        let mut a = nalgebra::DMatrix::zeros(3, unknowns);
        for i in 0..3 {
            a[(i, i)] = 1.0;
        }
        let skew = -x.cross_matrix();
        for r in 0..3 {
            for c in 0..3 {
                a[(r, 3 + c)] = skew[(r, c)];
            }
            if with_scale {
                a[(r, 6)] = x[r];
            }
        }
        a
    };
    let mut normal = nalgebra::DMatrix::<f64>::zeros(unknowns, unknowns);
    let mut rhs = nalgebra::DVector::<f64>::zeros(unknowns);
    for (verts, d) in &entities {
        let dv = nalgebra::DVector::from_column_slice(d.as_slice());
        for x in verts {
            let a = jacobian(x);
            normal += a.transpose() * &a;
            rhs -= a.transpose() * &dv;
        }
    }
    let u = normal.lu().solve(&rhs).expect("well-posed fit");
    let per_entity: Vec<f64> = entities
        .iter()
        .map(|(verts, d)| {
            let dv = nalgebra::DVector::from_column_slice(d.as_slice());
            verts
                .iter()
                .map(|x| (&dv + jacobian(x) * &u).norm())
                .sum::<f64>()
                / verts.len() as f64
        })
        .collect();
    let (h, o) = per_entity.split_at(gt.humans.len());
    (h.to_vec(), o.to_vec())
}

// Exhaustive curve-protocol oracles.

/// Synthetic noisy batch; seeds offset from `base`.
pub fn batch(base: u64, n: usize) -> Vec<(Scene, Scene)> {
    (0..n as u64)
        .map(|k| {
            let cfg = SynthConfig {
                translation_noise_m: 0.02,
                rotation_noise_deg: 3.0,
                vertex_noise_m: 0.003,
                contact_fraction: 0.9,
                object_contact_fraction: 0.9,
                ..SynthConfig::default()
            }
            .with_seed(base + k);
            let (gt, pred) = generate(&cfg).unwrap();
            (pred, gt)
        })
        .collect()
}

pub fn stacked(scene: &Scene, humans: &[usize], objects: &[usize]) -> Vec<Vec3> {
    let mut out = Vec::new();
    for &i in humans {
        out.extend_from_slice(scene.humans[i].vertices());
    }
    for &o in objects {
        out.extend(scene.object_vertices(o));
    }
    out
}

pub fn fraction_within(values: &[f64], thresholds: &[f64]) -> Vec<f64> {
    thresholds
        .iter()
        .map(|t| values.iter().filter(|v| **v <= *t).count() as f64 / values.len() as f64)
        .collect()
}

pub fn hinge(pred_part: &[Vec3], gt_part: &[Vec3], partner: &[Vec3]) -> f64 {
    (brute_chamfer(pred_part, partner) - brute_chamfer(gt_part, partner)).max(0.0)
}

pub fn labeled_indices(mesh: &Mesh, part: BodyPart) -> Vec<usize> {
    (0..mesh.len())
        .filter(|&i| mesh.labels().unwrap()[i] == Some(part))
        .collect()
}

pub fn contact_oracle(
    pred: &Scene,
    gt: &Scene,
    human: usize,
    part: BodyPart,
    object: usize,
    t: &SimilarityTransform,
) -> f64 {
    let idx = labeled_indices(&gt.humans[human], part);
    let pp: Vec<Vec3> = idx
        .iter()
        .map(|&i| t.apply(&pred.humans[human].vertices()[i]))
        .collect();
    let gp: Vec<Vec3> = idx
        .iter()
        .map(|&i| gt.humans[human].vertices()[i])
        .collect();
    hinge(&pp, &gp, &gt.object_vertices(object))
}

pub fn distinct_contacts(gt: &Scene) -> Vec<(usize, BodyPart, usize)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in &gt.interactions {
        for &p in &a.body_parts {
            if seen.insert((a.human, p, a.object)) {
                out.push((a.human, p, a.object));
            }
        }
    }
    out
}

pub fn global_fit(pred: &Scene, gt: &Scene) -> SimilarityTransform {
    let humans: Vec<usize> = (0..gt.humans.len()).collect();
    let objects: Vec<usize> = (0..gt.objects.len()).collect();
    procrustes(
        &stacked(pred, &humans, &objects),
        &stacked(gt, &humans, &objects),
        true,
    )
    .unwrap()
}
