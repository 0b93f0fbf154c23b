//! The scene: humans, posed objects, annotations, camera and masks.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::body::BodyPart;
use crate::error::{Error, Result};
use crate::geometry::{apply_transform, CameraIntrinsics, Mesh, RigidTransform, Vec3};
use crate::mask::InstanceMask;

/// Number of action classes.
pub const ACTION_CLASSES: u32 = 78;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub category: u32,
    /// Canonical (CAD) mesh in object coordinates.
    pub mesh: Mesh,
    pub pose: RigidTransform,
}

impl SceneObject {
    pub fn posed_mesh(&self) -> Mesh {
        apply_transform(&self.mesh, &self.pose)
    }

    pub fn posed_vertices(&self) -> Vec<Vec3> {
        self.mesh
            .vertices()
            .iter()
            .map(|v| self.pose.apply(v))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionAnnotation {
    pub human: usize,
    pub object: usize,
    pub action: u32,
    pub body_parts: BTreeSet<BodyPart>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub image_width: u32,
    pub image_height: u32,
    pub camera: CameraIntrinsics,
    pub humans: Vec<Mesh>,
    pub objects: Vec<SceneObject>,
    pub interactions: Vec<InteractionAnnotation>,
    pub object_contacts: Vec<(usize, usize)>,
    /// One slot per human; `None` when no mask is available.
    pub human_masks: Vec<Option<InstanceMask>>,
    /// One slot per object; `None` when no mask is available.
    pub object_masks: Vec<Option<InstanceMask>>,
}

/// A single (human, body part, object) contact taken from the annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Contact {
    pub human: usize,
    pub part: BodyPart,
    pub object: usize,
}

impl Scene {
    /// Empty scene with no entities; fill in and call [`Scene::validate`].
    pub fn new(image_width: u32, image_height: u32, camera: CameraIntrinsics) -> Self {
        Scene {
            image_width,
            image_height,
            camera,
            humans: Vec::new(),
            objects: Vec::new(),
            interactions: Vec::new(),
            object_contacts: Vec::new(),
            human_masks: Vec::new(),
            object_masks: Vec::new(),
        }
    }

    pub fn push_human(&mut self, mesh: Mesh) -> usize {
        self.humans.push(mesh);
        self.human_masks.push(None);
        self.humans.len() - 1
    }

    pub fn push_object(&mut self, object: SceneObject) -> usize {
        self.objects.push(object);
        self.object_masks.push(None);
        self.objects.len() - 1
    }

    pub fn object_vertices(&self, object: usize) -> Vec<Vec3> {
        self.objects[object].posed_vertices()
    }

    /// All annotated contacts in annotation order, deduplicated.
    pub fn contacts(&self) -> Vec<Contact> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for ann in &self.interactions {
            for &part in &ann.body_parts {
                let c = Contact {
                    human: ann.human,
                    part,
                    object: ann.object,
                };
                if seen.insert(c) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Distinct annotated (human, object) pairs, sorted.
    pub fn interaction_pairs(&self) -> Vec<(usize, usize)> {
        self.interactions
            .iter()
            .map(|a| (a.human, a.object))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Checks index references, mask sizes and the entity count.
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        if self.humans.is_empty() && self.objects.is_empty() {
            return Err(Error::InvalidConfig(
                "scene needs at least one human or object".into(),
            ));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::InvalidConfig("image size must be positive".into()));
        }
        let (nh, no) = (self.humans.len(), self.objects.len());
        if self.human_masks.len() != nh || self.object_masks.len() != no {
            return Err(Error::InvalidConfig(format!(
                "mask slots ({}, {}) do not match entity counts ({nh}, {no})",
                self.human_masks.len(),
                self.object_masks.len()
            )));
        }
        for ann in &self.interactions {
            check_index("human", ann.human, nh)?;
            check_index("object", ann.object, no)?;
            if ann.action >= ACTION_CLASSES {
                return Err(Error::LabelOutOfRange {
                    label: ann.action as usize,
                    classes: ACTION_CLASSES as usize,
                });
            }
        }
        for &(a, b) in &self.object_contacts {
            check_index("object", a, no)?;
            check_index("object", b, no)?;
        }
        for mask in self.human_masks.iter().chain(&self.object_masks).flatten() {
            if (mask.width(), mask.height()) != (self.image_width, self.image_height) {
                return Err(Error::InvalidMask(format!(
                    "mask is {}x{} but image is {}x{}",
                    mask.width(),
                    mask.height(),
                    self.image_width,
                    self.image_height
                )));
            }
        }
        Ok(())
    }

    /// Same entity counts and vertex counts as `other`.
    pub fn check_compatible(&self, other: &Scene) -> Result<()> {
        if self.humans.len() != other.humans.len() {
            return Err(Error::EntityCountMismatch {
                what: "humans",
                left: self.humans.len(),
                right: other.humans.len(),
            });
        }
        if self.objects.len() != other.objects.len() {
            return Err(Error::EntityCountMismatch {
                what: "objects",
                left: self.objects.len(),
                right: other.objects.len(),
            });
        }
        let meshes = self.humans.iter().zip(&other.humans).chain(
            self.objects
                .iter()
                .map(|o| &o.mesh)
                .zip(other.objects.iter().map(|o| &o.mesh)),
        );
        for (a, b) in meshes {
            if a.len() != b.len() {
                return Err(Error::TopologyMismatch {
                    left: a.len(),
                    right: b.len(),
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index >= len {
        return Err(Error::IndexOutOfRange { what, index, len });
    }
    Ok(())
}
