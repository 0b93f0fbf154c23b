//! Core 3D types, transforms, distance metrics and pinhole projection.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::body::BodyPart;
use crate::error::{Error, Result};
use crate::knn::NearestNeighbors;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec2 = Vector2<f64>;

/// Tolerance on `RᵀR − I` and `det R − 1` for a valid rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Vertex set with optional triangles and per-vertex body-part labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Option<Vec<[usize; 3]>>,
    labels: Option<Vec<Option<BodyPart>>>,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidMesh("mesh has no vertices".into()));
        }
        check_finite(&vertices)?;
        Ok(Mesh {
            vertices,
            faces: None,
            labels: None,
        })
    }

    pub fn with_faces(mut self, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = self.vertices.len();
        if let Some((i, f)) = faces
            .iter()
            .enumerate()
            .find(|(_, f)| f.iter().any(|&v| v >= n))
        {
            return Err(Error::InvalidMesh(format!(
                "face {i} {f:?} references a vertex beyond {n}"
            )));
        }
        self.faces = Some(faces);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<Option<BodyPart>>) -> Result<Self> {
        if labels.len() != self.vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.vertices.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> Option<&[[usize; 3]]> {
        self.faces.as_deref()
    }

    pub fn labels(&self) -> Option<&[Option<BodyPart>]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        centroid(&self.vertices)
    }

    /// Same faces and labels, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::TopologyMismatch {
                left: self.vertices.len(),
                right: vertices.len(),
            });
        }
        check_finite(&vertices)?;
        Ok(Mesh {
            vertices,
            faces: self.faces.clone(),
            labels: self.labels.clone(),
        })
    }

    pub(crate) fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
            labels: self.labels.clone(),
        }
    }
}

fn check_finite(points: &[Vec3]) -> Result<()> {
    match points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

pub fn centroid(points: &[Vec3]) -> Vec3 {
    let sum = points.iter().fold(Vec3::zeros(), |acc, p| acc + p);
    sum / points.len() as f64
}

pub fn validate_rotation(r: &Mat3) -> Result<()> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidTransform("non-finite rotation entry".into()));
    }
    let ortho = (r.transpose() * r - Mat3::identity()).amax();
    let det = r.determinant();
    if ortho > ROTATION_TOLERANCE || (det - 1.0).abs() > ROTATION_TOLERANCE {
        return Err(Error::InvalidTransform(format!(
            "not a rotation (|RᵀR−I| = {ortho:e}, det = {det})"
        )));
    }
    Ok(())
}

/// Rotation followed by translation: `x ↦ R·x + T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        validate_rotation(&rotation)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidTransform("non-finite translation".into()));
        }
        Ok(RigidTransform {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        RigidTransform {
            rotation: Mat3::identity(),
            translation,
        }
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// `self ∘ inner`: apply `inner` first, then `self`.
    pub fn compose(&self, inner: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * inner.rotation,
            translation: self.rotation * inner.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

/// `x ↦ s·R·x + T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl SimilarityTransform {
    pub fn new(scale: f64, rotation: Mat3, translation: Vec3) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidTransform(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let rigid = RigidTransform::new(rotation, translation)?;
        Ok(SimilarityTransform {
            scale,
            rotation: rigid.rotation,
            translation: rigid.translation,
        })
    }

    pub fn identity() -> Self {
        SimilarityTransform {
            scale: 1.0,
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.scale * (self.rotation * p) + self.translation
    }

    pub fn apply_all(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.iter().map(|p| self.apply(p)).collect()
    }

    pub fn apply_mesh(&self, mesh: &Mesh) -> Mesh {
        mesh.map_vertices(|v| self.apply(v))
    }

    /// Drops the scale.
    pub fn rigid_part(&self) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation,
            translation: self.translation,
        }
    }
}

impl From<RigidTransform> for SimilarityTransform {
    fn from(t: RigidTransform) -> Self {
        SimilarityTransform {
            scale: 1.0,
            rotation: t.rotation,
            translation: t.translation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let cam = CameraIntrinsics { fx, fy, cx, cy };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "camera intrinsics need positive focal lengths, got {self:?}"
            )));
        }
        Ok(())
    }
}

pub fn apply_transform(mesh: &Mesh, t: &RigidTransform) -> Mesh {
    mesh.map_vertices(|v| t.apply(v))
}

/// Mean nearest-neighbor distance from each point of `from` to `to`.
pub fn directed_mean_distance(from: &[Vec3], to: &NearestNeighbors<'_>) -> f64 {
    let mut sum = 0.0;
    for p in from {
        // `to` is non-empty, checked by callers.
        sum += to.nearest(p).map(|n| n.distance()).unwrap_or(f64::INFINITY);
    }
    sum / from.len() as f64
}

/// Symmetric Chamfer distance in meters:
/// `(mean_a NN(a, B) + mean_b NN(b, A)) / 2` with Euclidean (not squared)
/// nearest-neighbor distances.
pub fn chamfer_distance(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    check_finite(a)?;
    check_finite(b)?;
    let index_a = NearestNeighbors::new(a);
    let index_b = NearestNeighbors::new(b);
    let ab = directed_mean_distance(a, &index_b);
    let ba = directed_mean_distance(b, &index_a);
    Ok((ab + ba) / 2.0)
}

/// Mean Euclidean distance between corresponding vertices.
pub fn v2v_distance(a: &Mesh, b: &Mesh) -> Result<f64> {
    v2v_points(a.vertices(), b.vertices())
}

pub fn v2v_points(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::TopologyMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let sum: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm()).sum();
    Ok(sum / a.len() as f64)
}

/// Pinhole projection `u = fx·x/z + cx`, `v = fy·y/z + cy`.
pub fn project(points: &[Vec3], cam: &CameraIntrinsics) -> Result<Vec<Vec2>> {
    points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            if !(p.z > 0.0) {
                return Err(Error::BehindCamera { index, z: p.z });
            }
            Ok(Vec2::new(
                cam.fx * p.x / p.z + cam.cx,
                cam.fy * p.y / p.z + cam.cy,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use std::f64::consts::FRAC_PI_2;

    fn approx(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn identity_transform_keeps_vertices() {
        let mesh = Mesh::new(vec![Vec3::new(1.0, -2.0, 3.5), Vec3::new(0.1, 0.2, 0.3)]).unwrap();
        assert_eq!(apply_transform(&mesh, &RigidTransform::identity()), mesh);
    }

    #[test]
    fn pure_translation() {
        let mesh = Mesh::new(vec![Vec3::new(2.0, 2.0, 2.0)]).unwrap();
        let t = RigidTransform::from_translation(Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(
            apply_transform(&mesh, &t).vertices()[0],
            Vec3::new(2.0, 2.0, 3.0)
        );
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = *Rotation3::from_axis_angle(&Vec3::z_axis(), FRAC_PI_2).matrix();
        let t = RigidTransform::new(r, Vec3::zeros()).unwrap();
        let out = t.apply(&Vec3::new(1.0, 0.0, 0.0));
        assert!(approx(&out, &Vec3::new(0.0, 1.0, 0.0), 1e-15));
    }

    #[test]
    fn transform_preserves_faces_and_labels() {
        let mesh = Mesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()])
            .unwrap()
            .with_faces(vec![[0, 1, 2]])
            .unwrap()
            .with_labels(vec![Some(BodyPart::Head), None, Some(BodyPart::LeftFoot)])
            .unwrap();
        let out = apply_transform(&mesh, &RigidTransform::from_translation(Vec3::x()));
        assert_eq!(out.faces(), mesh.faces());
        assert_eq!(out.labels(), mesh.labels());
    }

    #[test]
    fn mesh_invariants() {
        assert!(Mesh::new(vec![]).is_err());
        let mesh = Mesh::new(vec![Vec3::zeros(); 3]).unwrap();
        assert!(mesh.clone().with_faces(vec![[0, 1, 3]]).is_err());
        assert!(mesh.clone().with_labels(vec![None; 2]).is_err());
        assert!(Mesh::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn rotation_validation() {
        assert!(RigidTransform::new(Mat3::identity() * 2.0, Vec3::zeros()).is_err());
        let reflection = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(RigidTransform::new(reflection, Vec3::zeros()).is_err());
        assert!(SimilarityTransform::new(0.0, Mat3::identity(), Vec3::zeros()).is_err());
    }

    #[test]
    fn chamfer_basics() {
        let a = vec![Vec3::new(0.0, 0.0, 0.0)];
        let b = vec![Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(chamfer_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
        assert!(matches!(
            chamfer_distance(&a, &[]),
            Err(Error::EmptyPointSet)
        ));
        assert_eq!(
            chamfer_distance(&[], &b).unwrap_err().to_string(),
            "empty point set"
        );
    }

    #[test]
    fn v2v_basics() {
        let a = Mesh::new(vec![Vec3::zeros(), Vec3::x()]).unwrap();
        let b = Mesh::new(vec![Vec3::new(3.0, 4.0, 0.0), Vec3::x()]).unwrap();
        assert_eq!(v2v_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(v2v_distance(&a, &b).unwrap(), 2.5);
        let single_a = Mesh::new(vec![Vec3::zeros()]).unwrap();
        let single_b = Mesh::new(vec![Vec3::new(3.0, 4.0, 0.0)]).unwrap();
        assert_eq!(v2v_distance(&single_a, &single_b).unwrap(), 5.0);
        let c = Mesh::new(vec![Vec3::zeros()]).unwrap();
        assert!(v2v_distance(&a, &c)
            .unwrap_err()
            .to_string()
            .starts_with("topology mismatch"));
    }

    #[test]
    fn projection_examples() {
        let unit = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(
            project(&[Vec3::new(0.0, 0.0, 1.0)], &unit).unwrap()[0],
            Vec2::new(0.0, 0.0)
        );
        let cam = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap();
        assert_eq!(
            project(&[Vec3::new(1.0, 0.0, 2.0)], &cam).unwrap()[0],
            Vec2::new(100.0, 50.0)
        );
        let err = project(&[Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 0.0)], &cam);
        assert!(matches!(err, Err(Error::BehindCamera { index: 1, .. })));
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0).is_err());
    }
}
