//! Scene JSON.
//!
//! ```json
//! {
//!   "image": {"width": 96, "height": 96},
//!   "camera": {"fx": 500.0, "fy": 500.0, "cx": 48.0, "cy": 48.0},
//!   "humans": [{"mesh": "a.human0.obj", "mask": "a.human0.pgm"}],
//!   "objects": [{"category": 0, "mesh": "a.object0.obj",
//!                "rotation": [[1,0,0],[0,1,0],[0,0,1]], "translation": [0,0,4],
//!                "mask": {"width": 96, "height": 96, "runs": [0, 2]}}],
//!   "interactions": [{"human": 0, "object": 0, "action": 3, "body_parts": ["left_hand"]}],
//!   "object_contacts": [[0, 1]]
//! }
//! ```
//!
//! Mesh and mask paths are relative to the scene file. A mask is either a
//! path (PGM or RLE JSON) or an inline RLE object.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Mat3, RigidTransform, Vec3};
use crate::mask::{InstanceMask, HUMAN_CATEGORY};
use crate::scene::{InteractionAnnotation, Scene, SceneObject, ACTION_CLASSES};

use super::mask::{load_mask, RleDoc};
use super::obj::{load_mesh, save_mesh};
use super::{read_text, write_file};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageDoc {
    width: u32,
    height: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MaskDoc {
    Path(String),
    Rle(RleDoc),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HumanDoc {
    mesh: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask: Option<MaskDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    category: u32,
    mesh: String,
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask: Option<MaskDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    image: ImageDoc,
    camera: CameraIntrinsics,
    #[serde(default)]
    humans: Vec<HumanDoc>,
    #[serde(default)]
    objects: Vec<ObjectDoc>,
    #[serde(default)]
    interactions: Vec<InteractionAnnotation>,
    #[serde(default)]
    object_contacts: Vec<(usize, usize)>,
}

fn schema(file: &Path, field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        file: file.to_path_buf(),
        field: field.into(),
        message: message.into(),
    }
}

fn check_ref(file: &Path, field: String, index: usize, len: usize, what: &str) -> Result<()> {
    if index >= len {
        return Err(schema(
            file,
            field,
            format!("{what} index {index} out of range (scene has {len})"),
        ));
    }
    Ok(())
}

fn load_mask_doc(
    doc: &MaskDoc,
    base: &Path,
    file: &Path,
    field: &str,
    image: &ImageDoc,
) -> Result<InstanceMask> {
    let mask = match doc {
        MaskDoc::Path(p) => load_mask(base.join(p))?,
        MaskDoc::Rle(rle) => rle
            .to_mask()
            .map_err(|e| schema(file, field, e.to_string()))?,
    };
    if (mask.width(), mask.height()) != (image.width, image.height) {
        return Err(schema(
            file,
            field,
            format!(
                "mask is {}x{} but image is {}x{}",
                mask.width(),
                mask.height(),
                image.width,
                image.height
            ),
        ));
    }
    Ok(mask)
}

/// Parses scene JSON; relative paths resolve against `base`.
pub fn parse_scene(text: &str, base: &Path, file: &Path) -> Result<Scene> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: SceneDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        schema(file, field, e.into_inner().to_string())
    })?;

    let camera = doc.camera;
    camera
        .validate()
        .map_err(|e| schema(file, "camera", e.to_string()))?;
    if doc.image.width == 0 || doc.image.height == 0 {
        return Err(schema(file, "image", "image size must be positive"));
    }
    if doc.humans.is_empty() && doc.objects.is_empty() {
        return Err(schema(
            file,
            "humans",
            "scene needs at least one human or object",
        ));
    }

    let mut scene = Scene::new(doc.image.width, doc.image.height, camera);
    for (i, h) in doc.humans.iter().enumerate() {
        let mesh = load_mesh(base.join(&h.mesh))?;
        scene.push_human(mesh);
        if let Some(m) = &h.mask {
            let mask = load_mask_doc(m, base, file, &format!("humans[{i}].mask"), &doc.image)?;
            scene.human_masks[i] = Some(mask.with_identity(i as u32, HUMAN_CATEGORY));
        }
    }
    for (j, o) in doc.objects.iter().enumerate() {
        let mesh = load_mesh(base.join(&o.mesh))?;
        let rotation = Mat3::from_fn(|r, c| o.rotation[r][c]);
        let translation = Vec3::from(o.translation);
        let pose = RigidTransform::new(rotation, translation)
            .map_err(|e| schema(file, format!("objects[{j}].rotation"), e.to_string()))?;
        scene.push_object(SceneObject {
            category: o.category,
            mesh,
            pose,
        });
        if let Some(m) = &o.mask {
            let mask = load_mask_doc(m, base, file, &format!("objects[{j}].mask"), &doc.image)?;
            scene.object_masks[j] = Some(mask.with_identity(j as u32, o.category));
        }
    }

    let (nh, no) = (scene.humans.len(), scene.objects.len());
    for (k, ann) in doc.interactions.iter().enumerate() {
        check_ref(
            file,
            format!("interactions[{k}].human"),
            ann.human,
            nh,
            "human",
        )?;
        check_ref(
            file,
            format!("interactions[{k}].object"),
            ann.object,
            no,
            "object",
        )?;
        if ann.action >= ACTION_CLASSES {
            return Err(schema(
                file,
                format!("interactions[{k}].action"),
                format!("action {} out of range (0..{ACTION_CLASSES})", ann.action),
            ));
        }
    }
    for (k, &(a, b)) in doc.object_contacts.iter().enumerate() {
        check_ref(file, format!("object_contacts[{k}][0]"), a, no, "object")?;
        check_ref(file, format!("object_contacts[{k}][1]"), b, no, "object")?;
    }
    scene.interactions = doc.interactions;
    scene.object_contacts = doc.object_contacts;
    scene.validate()?;
    Ok(scene)
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_scene(&text, base, path)
}

fn mesh_file_name(stem: &str, kind: &str, index: usize) -> String {
    format!("{stem}.{kind}{index}.obj")
}

/// Writes `path` plus one OBJ per entity (`{stem}.human{i}.obj` with its
/// `.labels` sidecar, `{stem}.object{j}.obj`) in the same directory. Masks
/// are stored inline as RLE.
pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    scene.validate()?;
    let dir: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidConfig(format!("bad scene file name {}", path.display())))?;

    let mut humans = Vec::with_capacity(scene.humans.len());
    for (i, mesh) in scene.humans.iter().enumerate() {
        let name = mesh_file_name(stem, "human", i);
        save_mesh(mesh, dir.join(&name))?;
        humans.push(HumanDoc {
            mesh: name,
            mask: scene.human_masks[i]
                .as_ref()
                .map(|m| MaskDoc::Rle(RleDoc::from_mask(m))),
        });
    }
    let mut objects = Vec::with_capacity(scene.objects.len());
    for (j, obj) in scene.objects.iter().enumerate() {
        let name = mesh_file_name(stem, "object", j);
        save_mesh(&obj.mesh, dir.join(&name))?;
        let r = &obj.pose.rotation;
        objects.push(ObjectDoc {
            category: obj.category,
            mesh: name,
            rotation: [0, 1, 2].map(|row| [0, 1, 2].map(|col| r[(row, col)])),
            translation: [
                obj.pose.translation.x,
                obj.pose.translation.y,
                obj.pose.translation.z,
            ],
            mask: scene.object_masks[j]
                .as_ref()
                .map(|m| MaskDoc::Rle(RleDoc::from_mask(m))),
        });
    }
    let doc = SceneDoc {
        image: ImageDoc {
            width: scene.image_width,
            height: scene.image_height,
        },
        camera: scene.camera,
        humans,
        objects,
        interactions: scene.interactions.clone(),
        object_contacts: scene.object_contacts.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::InvalidConfig(format!("cannot serialize scene: {e}")))?;
    text.push('\n');
    write_file(path, text)
}
