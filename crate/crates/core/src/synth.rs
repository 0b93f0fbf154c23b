//! Deterministic synthetic scenes with known prediction error.
//!
//! Randomness comes from ChaCha8 seeded with `seed`. Every entity draws from
//! its own stream (`set_stream`), so adding a human or object never changes
//! the geometry of the others.
//!
//! Humans are stick figures: 14 clusters of points, one per body part,
//! sampled in balls of radius 4 cm around fixed joint offsets. Objects are
//! point samples of ellipsoid surfaces. A contact places an object at a body
//! part and rebuilds that part's cluster from jittered copies of the object's
//! vertices (at most δ/4 per axis), so its part-object Chamfer distance stays
//! below δ. The prediction applies, per entity, a translation of exactly
//! `translation_noise_m` in a random direction, a rotation of
//! `rotation_noise_deg` about a random axis through the entity centroid, and
//! independent uniform per-axis vertex jitter in `±vertex_noise_m`.

use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body::BodyPart;
use crate::error::{Error, Result};
use crate::geometry::{
    centroid, chamfer_distance, project, CameraIntrinsics, Mat3, Mesh, RigidTransform, Vec3,
};
use crate::interaction::{part_indices, DEFAULT_DELTA};
use crate::mask::{InstanceMask, HUMAN_CATEGORY};
use crate::patches::PatchGrid;
use crate::scene::{InteractionAnnotation, Scene, SceneObject, ACTION_CLASSES};

const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
const PART_RADIUS: f64 = 0.04;

/// Joint offsets from the pelvis, camera frame (y down).
const PART_OFFSETS: [[f64; 3]; 14] = [
    [0.0, -0.75, 0.0],
    [0.0, -0.40, 0.0],
    [-0.20, -0.50, 0.0],
    [0.20, -0.50, 0.0],
    [-0.30, -0.30, 0.0],
    [0.30, -0.30, 0.0],
    [-0.35, -0.10, -0.05],
    [0.35, -0.10, -0.05],
    [-0.10, 0.05, 0.0],
    [0.10, 0.05, 0.0],
    [-0.10, 0.35, 0.0],
    [0.10, 0.35, 0.0],
    [-0.10, 0.60, -0.05],
    [0.10, 0.60, -0.05],
];

// Stream ids: the high word names the purpose, the low word the entity.
const STREAM_HUMAN: u64 = 1 << 32;
const STREAM_OBJECT: u64 = 2 << 32;
const STREAM_CONTACT: u64 = 3 << 32;
const STREAM_PRED_HUMAN: u64 = 4 << 32;
const STREAM_PRED_OBJECT: u64 = 5 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_humans: usize,
    pub n_objects: usize,
    /// At least one vertex per body part.
    pub human_vertex_count: usize,
    pub object_vertex_count: usize,
    pub rotation_noise_deg: f64,
    pub translation_noise_m: f64,
    pub vertex_noise_m: f64,
    /// Probability that an object is placed in contact with a human.
    pub contact_fraction: f64,
    /// Probability that an object not touching a human rests against the
    /// previous object.
    pub object_contact_fraction: f64,
    pub image_size: u32,
    pub focal_length: f64,
    pub delta: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_humans: 2,
            n_objects: 3,
            human_vertex_count: 14 * 40,
            object_vertex_count: 40,
            rotation_noise_deg: 0.0,
            translation_noise_m: 0.0,
            vertex_noise_m: 0.0,
            contact_fraction: 0.7,
            object_contact_fraction: 0.5,
            image_size: 672,
            focal_length: 600.0,
            delta: DEFAULT_DELTA,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_humans + self.n_objects == 0 {
            return bad("need at least one human or object".into());
        }
        if self.n_humans > 0 && self.human_vertex_count < BodyPart::COUNT {
            return bad(format!(
                "human_vertex_count must be >= {}, got {}",
                BodyPart::COUNT,
                self.human_vertex_count
            ));
        }
        if self.n_objects > 0 && self.object_vertex_count < 4 {
            return bad(format!(
                "object_vertex_count must be >= 4, got {}",
                self.object_vertex_count
            ));
        }
        for (name, v) in [
            ("rotation_noise_deg", self.rotation_noise_deg),
            ("translation_noise_m", self.translation_noise_m),
            ("vertex_noise_m", self.vertex_noise_m),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        for (name, v) in [
            ("contact_fraction", self.contact_fraction),
            ("object_contact_fraction", self.object_contact_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.image_size == 0 || !(self.focal_length > 0.0) || !(self.delta > 0.0) {
            return bad("image_size, focal_length and delta must be positive".into());
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SynthConfig {
            seed,
            ..self.clone()
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
        );
        let n = v.norm();
        if n > 1e-6 && n <= 1.0 {
            return v / n;
        }
    }
}

fn in_ball(rng: &mut ChaCha8Rng, radius: f64) -> Vec3 {
    loop {
        let v = Vec3::new(
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
        );
        if v.norm_squared() <= 1.0 {
            return v * radius;
        }
    }
}

fn rotation_about(axis: Vec3, angle: f64) -> Mat3 {
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner()
}

fn stick_figure(cfg: &SynthConfig, index: usize) -> Result<Mesh> {
    let mut rng = stream(cfg.seed, STREAM_HUMAN | index as u64);
    let spacing = 1.0;
    let root = Vec3::new(
        (index as f64 - (cfg.n_humans as f64 - 1.0) / 2.0) * spacing + uniform(&mut rng, -0.1, 0.1),
        uniform(&mut rng, -0.1, 0.1),
        4.0 + uniform(&mut rng, -0.3, 0.3),
    );
    let yaw = rotation_about(Vec3::y(), uniform(&mut rng, -0.5, 0.5));
    let mut vertices = Vec::with_capacity(cfg.human_vertex_count);
    let mut labels = Vec::with_capacity(cfg.human_vertex_count);
    for k in 0..cfg.human_vertex_count {
        let part = BodyPart::ALL[k % BodyPart::COUNT];
        let offset = Vec3::from(PART_OFFSETS[part.id() as usize]);
        vertices.push(root + yaw * offset + in_ball(&mut rng, PART_RADIUS));
        labels.push(Some(part));
    }
    Mesh::new(vertices)?.with_labels(labels)
}

struct Ellipsoid {
    mesh: Mesh,
    axes: Vec3,
}

fn ellipsoid(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Ellipsoid> {
    let axes = Vec3::new(
        uniform(rng, 0.08, 0.2),
        uniform(rng, 0.08, 0.2),
        uniform(rng, 0.08, 0.2),
    );
    let vertices = (0..cfg.object_vertex_count)
        .map(|_| unit_vector(rng).component_mul(&axes))
        .collect();
    Ok(Ellipsoid {
        mesh: Mesh::new(vertices)?,
        axes,
    })
}

/// Half-width of the posed ellipsoid along unit direction `d`.
fn support(axes: &Vec3, rotation: &Mat3, d: &Vec3) -> f64 {
    let local = rotation.transpose() * d;
    local.component_mul(axes).norm()
}

fn random_pose_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let yaw = rotation_about(Vec3::y(), uniform(rng, 0.0, std::f64::consts::TAU));
    let tilt = rotation_about(Vec3::x(), uniform(rng, -0.25, 0.25));
    tilt * yaw
}

/// Rebuilds `part` of `human` from jittered copies of `object_points`.
fn place_part_on_object(
    human: &Mesh,
    part: BodyPart,
    object_points: &[Vec3],
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Mesh> {
    let idx = part_indices(human, part)?;
    let jitter = delta / 4.0;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let offset = rng.random_range(0..object_points.len());
        let mut vertices = human.vertices().to_vec();
        let mut cluster = Vec::with_capacity(idx.len());
        for (k, &vi) in idx.iter().enumerate() {
            let src = object_points[(offset + k) % object_points.len()];
            let p = src
                + Vec3::new(
                    uniform(rng, -jitter, jitter),
                    uniform(rng, -jitter, jitter),
                    uniform(rng, -jitter, jitter),
                );
            vertices[vi] = p;
            cluster.push(p);
        }
        if chamfer_distance(&cluster, object_points)? < delta {
            return human.with_vertices(vertices);
        }
    }
    Err(Error::ContactPlacementFailed)
}

/// Ground-truth scene and its perturbed prediction.
pub fn generate(cfg: &SynthConfig) -> Result<(Scene, Scene)> {
    cfg.validate()?;
    let half = cfg.image_size as f64 / 2.0;
    let camera = CameraIntrinsics::new(cfg.focal_length, cfg.focal_length, half, half)?;
    let mut gt = Scene::new(cfg.image_size, cfg.image_size, camera);

    for i in 0..cfg.n_humans {
        gt.push_human(stick_figure(cfg, i)?);
    }

    let mut contact_rng = stream(cfg.seed, STREAM_CONTACT);
    let mut used_parts: Vec<Vec<BodyPart>> = vec![Vec::new(); cfg.n_humans];
    let mut placed: Vec<(Vec3, Mat3, Vec3)> = Vec::new();
    for j in 0..cfg.n_objects {
        let mut rng = stream(cfg.seed, STREAM_OBJECT | j as u64);
        let shape = ellipsoid(cfg, &mut rng)?;
        let rotation = random_pose_rotation(&mut rng);
        let free_position = Vec3::new(
            uniform(&mut rng, -1.5, 1.5),
            uniform(&mut rng, -0.3, 0.5),
            uniform(&mut rng, 3.5, 5.0),
        );
        let category = rng.random_range(0..4u32);
        let action = rng.random_range(0..ACTION_CLASSES);

        let touch_human = cfg.n_humans > 0 && contact_rng.random::<f64>() < cfg.contact_fraction;
        let touch_prev = j > 0 && contact_rng.random::<f64>() < cfg.object_contact_fraction;
        let human = contact_rng.random_range(0..cfg.n_humans.max(1));
        let n_parts = 1 + usize::from(contact_rng.random::<f64>() < 0.5);

        let mut translation = free_position;
        let mut contact_parts = Vec::new();
        if touch_human {
            let free: Vec<BodyPart> = BodyPart::ALL
                .into_iter()
                .filter(|p| !used_parts[human].contains(p))
                .collect();
            for _ in 0..n_parts.min(free.len()) {
                let remaining: Vec<BodyPart> = free
                    .iter()
                    .copied()
                    .filter(|p| !contact_parts.contains(p))
                    .collect();
                contact_parts.push(remaining[contact_rng.random_range(0..remaining.len())]);
            }
            if let Some(&first) = contact_parts.first() {
                let pts = crate::interaction::body_part_points(&gt.humans[human], first)?;
                translation = centroid(&pts);
            }
        } else if touch_prev {
            let (t_prev, r_prev, a_prev) = placed[j - 1];
            let d = Vec3::x();
            translation =
                t_prev + d * (support(&a_prev, &r_prev, &d) + support(&shape.axes, &rotation, &d));
            gt.object_contacts.push((j - 1, j));
        }

        let pose = RigidTransform::new(rotation, translation)?;
        let object = SceneObject {
            category,
            mesh: shape.mesh,
            pose,
        };
        let posed = object.posed_vertices();
        for &part in &contact_parts {
            gt.humans[human] =
                place_part_on_object(&gt.humans[human], part, &posed, cfg.delta, &mut contact_rng)?;
            used_parts[human].push(part);
        }
        if !contact_parts.is_empty() {
            gt.interactions.push(InteractionAnnotation {
                human,
                object: j,
                action,
                body_parts: contact_parts.into_iter().collect(),
            });
        }
        placed.push((translation, rotation, shape.axes));
        gt.push_object(object);
    }

    let grid = PatchGrid::new(
        cfg.image_size,
        cfg.image_size,
        crate::patches::DEFAULT_PATCH_SIZE,
    )?;
    let (hm, om) = render_masks(&gt, &grid)?;
    gt.human_masks = hm.into_iter().map(Some).collect();
    gt.object_masks = om.into_iter().map(Some).collect();
    gt.validate()?;

    let mut pred = perturb(cfg, &gt)?;
    let (hm, om) = render_masks(&pred, &grid)?;
    pred.human_masks = hm.into_iter().map(Some).collect();
    pred.object_masks = om.into_iter().map(Some).collect();
    Ok((gt, pred))
}

struct Noise {
    rotation: Option<Mat3>,
    translation: Option<Vec3>,
}

fn draw_noise(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Noise {
    let translation =
        (cfg.translation_noise_m > 0.0).then(|| unit_vector(rng) * cfg.translation_noise_m);
    let rotation = (cfg.rotation_noise_deg > 0.0)
        .then(|| rotation_about(unit_vector(rng), cfg.rotation_noise_deg.to_radians()));
    Noise {
        rotation,
        translation,
    }
}

fn jitter(cfg: &SynthConfig, rng: &mut ChaCha8Rng, points: &mut [Vec3]) {
    if cfg.vertex_noise_m > 0.0 {
        let s = cfg.vertex_noise_m;
        for p in points {
            *p += Vec3::new(
                uniform(rng, -s, s),
                uniform(rng, -s, s),
                uniform(rng, -s, s),
            );
        }
    }
}

fn perturb(cfg: &SynthConfig, gt: &Scene) -> Result<Scene> {
    let mut pred = Scene::new(gt.image_width, gt.image_height, gt.camera);
    for (i, h) in gt.humans.iter().enumerate() {
        let mut rng = stream(cfg.seed, STREAM_PRED_HUMAN | i as u64);
        let noise = draw_noise(cfg, &mut rng);
        let c = h.centroid();
        let mut vertices: Vec<Vec3> = h
            .vertices()
            .iter()
            .map(|v| {
                let mut p = *v;
                if let Some(r) = noise.rotation {
                    p = r * (p - c) + c;
                }
                if let Some(t) = noise.translation {
                    p += t;
                }
                p
            })
            .collect();
        jitter(cfg, &mut rng, &mut vertices);
        pred.push_human(h.with_vertices(vertices)?);
    }
    for (j, o) in gt.objects.iter().enumerate() {
        let mut rng = stream(cfg.seed, STREAM_PRED_OBJECT | j as u64);
        let noise = draw_noise(cfg, &mut rng);
        let c = centroid(&o.posed_vertices());
        let mut pose = o.pose;
        if let Some(r) = noise.rotation {
            pose = RigidTransform {
                rotation: r * pose.rotation,
                translation: r * (pose.translation - c) + c,
            };
        }
        if let Some(t) = noise.translation {
            pose.translation += t;
        }
        let mut canonical = o.mesh.vertices().to_vec();
        jitter(cfg, &mut rng, &mut canonical);
        pred.push_object(SceneObject {
            category: o.category,
            mesh: o.mesh.with_vertices(canonical)?,
            pose,
        });
    }
    pred.interactions = gt.interactions.clone();
    pred.object_contacts = gt.object_contacts.clone();
    Ok(pred)
}

fn splat(points: &[Vec3], scene: &Scene, grid: &PatchGrid) -> Result<InstanceMask> {
    let uv = project(points, &scene.camera)?;
    let (w, h) = (grid.image_width, grid.image_height);
    let pixels = uv.iter().filter_map(|p| {
        let (u, v) = (p.x.round(), p.y.round());
        (u >= 0.0 && v >= 0.0 && u < w as f64 && v < h as f64).then_some((u as u32, v as u32))
    });
    InstanceMask::from_pixels(w, h, pixels)
}

/// One mask per human and per object: every vertex is projected with the
/// scene camera and sets the single pixel `(round(u), round(v))`. Pixels
/// outside the image are dropped.
pub fn render_masks(
    scene: &Scene,
    grid: &PatchGrid,
) -> Result<(Vec<InstanceMask>, Vec<InstanceMask>)> {
    if scene.humans.is_empty() && scene.objects.is_empty() {
        return Err(Error::EmptyInput("scene has no entities to render"));
    }
    let humans = scene
        .humans
        .iter()
        .enumerate()
        .map(|(i, h)| Ok(splat(h.vertices(), scene, grid)?.with_identity(i as u32, HUMAN_CATEGORY)))
        .collect::<Result<Vec<_>>>()?;
    let objects = scene
        .objects
        .iter()
        .enumerate()
        .map(|(j, o)| {
            Ok(splat(&o.posed_vertices(), scene, grid)
                .map_err(|e| e.for_object(j))?
                .with_identity(j as u32, o.category))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((humans, objects))
}
