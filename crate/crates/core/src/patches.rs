//! Dual-patch object targets extracted from instance masks.
//!
//! For each object the image grid yields a *main* patch (the one holding the
//! mask's bounding-box center) and a *sub* patch among its eight neighbors
//! (preferably one where the object touches a human). Offsets point from
//! nominal patch centers to the bbox center (main) and to the in-patch mask
//! centroid (sub). Together they give an in-image orientation ray.
//!
//! Pixel centers sit at integer coordinates; patch `(r, c)` has its center at
//! `((c + 0.5)·P − 0.5, (r + 0.5)·P − 0.5)` even when clipped by the image
//! border.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::InstanceMask;
use crate::scene::Scene;

/// Default model input side length, pixels.
pub const DEFAULT_IMAGE_SIZE: u32 = 672;
/// Default patch side length, pixels.
pub const DEFAULT_PATCH_SIZE: u32 = 24;

/// Object category ids with default shrink rules.
pub mod category {
    pub const CHAIR: u32 = 0;
    pub const TABLE: u32 = 1;
    pub const MONITOR: u32 = 2;
    pub const FLOWER: u32 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub image_width: u32,
    pub image_height: u32,
    pub patch_size: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PatchIndex {
    pub row: usize,
    pub col: usize,
}

impl PatchGrid {
    pub fn new(image_width: u32, image_height: u32, patch_size: u32) -> Result<Self> {
        if patch_size == 0 || image_width == 0 || image_height == 0 {
            return Err(Error::InvalidConfig(format!(
                "bad patch grid {image_width}x{image_height} / {patch_size}"
            )));
        }
        Ok(PatchGrid {
            image_width,
            image_height,
            patch_size,
        })
    }

    pub fn for_scene(scene: &Scene, patch_size: u32) -> Result<Self> {
        Self::new(scene.image_width, scene.image_height, patch_size)
    }

    pub fn rows(&self) -> usize {
        self.image_height.div_ceil(self.patch_size) as usize
    }

    pub fn cols(&self) -> usize {
        self.image_width.div_ceil(self.patch_size) as usize
    }

    pub fn center(&self, p: PatchIndex) -> [f64; 2] {
        let size = self.patch_size as f64;
        [
            (p.col as f64 + 0.5) * size - 0.5,
            (p.row as f64 + 0.5) * size - 0.5,
        ]
    }

    /// Patch containing a continuous image point, clamped to the grid.
    pub fn patch_at(&self, x: f64, y: f64) -> PatchIndex {
        let size = self.patch_size as f64;
        let col = ((x + 0.5) / size).floor().max(0.0) as usize;
        let row = ((y + 0.5) / size).floor().max(0.0) as usize;
        PatchIndex {
            row: row.min(self.rows() - 1),
            col: col.min(self.cols() - 1),
        }
    }

    pub fn patch_of_pixel(&self, x: u32, y: u32) -> PatchIndex {
        PatchIndex {
            row: (y / self.patch_size) as usize,
            col: (x / self.patch_size) as usize,
        }
    }

    /// In-grid 8-neighborhood of `p`, row-major.
    pub fn neighbors(&self, p: PatchIndex) -> Vec<PatchIndex> {
        let mut out = Vec::with_capacity(8);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let r = p.row as i64 + dr;
                let c = p.col as i64 + dc;
                if r >= 0 && c >= 0 && (r as usize) < self.rows() && (c as usize) < self.cols() {
                    out.push(PatchIndex {
                        row: r as usize,
                        col: c as usize,
                    });
                }
            }
        }
        out
    }

    fn check_mask(&self, mask: &InstanceMask) -> Result<()> {
        if (mask.width(), mask.height()) != (self.image_width, self.image_height) {
            return Err(Error::InvalidMask(format!(
                "mask is {}x{} but grid covers {}x{}",
                mask.width(),
                mask.height(),
                self.image_width,
                self.image_height
            )));
        }
        Ok(())
    }

    /// Foreground pixel count per patch, row-major.
    fn counts(&self, mask: &InstanceMask) -> Vec<usize> {
        let mut counts = vec![0; self.rows() * self.cols()];
        for (x, y) in mask.pixels() {
            let p = self.patch_of_pixel(x, y);
            counts[p.row * self.cols() + p.col] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualPatch {
    pub main_patch: PatchIndex,
    pub sub_patch: PatchIndex,
    /// Pixels, `(u, v)`.
    pub main_offset: [f64; 2],
    /// Pixels, `(u, v)`.
    pub sub_offset: [f64; 2],
    pub sub_has_interaction: bool,
}

/// Vertical band of the bounding box kept for a category, as fractions of
/// the bbox height measured from the top.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct ShrinkRule {
    pub top: f64,
    pub bottom: f64,
}

impl ShrinkRule {
    pub fn new(top: f64, bottom: f64) -> Result<Self> {
        if !(0.0 <= top && top < bottom && bottom <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "shrink rule needs 0 <= top < bottom <= 1, got [{top}, {bottom}]"
            )));
        }
        Ok(ShrinkRule { top, bottom })
    }
}

impl TryFrom<[f64; 2]> for ShrinkRule {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        ShrinkRule::new(v[0], v[1])
    }
}

impl From<ShrinkRule> for [f64; 2] {
    fn from(r: ShrinkRule) -> Self {
        [r.top, r.bottom]
    }
}

/// Per-category shrink rules, serialized as `{"<category id>": [top, bottom]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShrinkRules(pub BTreeMap<u32, ShrinkRule>);

impl Default for ShrinkRules {
    fn default() -> Self {
        let rules = [
            (category::CHAIR, 0.20, 0.55),
            (category::TABLE, 0.0, 0.15),
            (category::MONITOR, 0.0, 0.60),
            (category::FLOWER, 0.40, 1.0),
        ];
        ShrinkRules(
            rules
                .into_iter()
                .map(|(c, t, b)| (c, ShrinkRule { top: t, bottom: b }))
                .collect(),
        )
    }
}

impl ShrinkRules {
    pub fn none() -> Self {
        ShrinkRules(BTreeMap::new())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("shrink rules: {e}")))
    }

    pub fn get(&self, category: u32) -> Option<&ShrinkRule> {
        self.0.get(&category)
    }
}

/// Restricts the mask to its category's bbox band. Rows kept are
/// `y0 + round(top·H) ≤ y < y0 + round(bottom·H)` with `H` the bbox height.
pub fn shrink_mask(mask: &InstanceMask, rules: &ShrinkRules) -> Result<InstanceMask> {
    let Some(rule) = rules.get(mask.category) else {
        return Ok(mask.clone());
    };
    let (_, y0, _, y1) = mask.bbox().ok_or(Error::EmptyMask)?;
    let height = (y1 - y0 + 1) as f64;
    let lo = y0 + (rule.top * height).round() as u32;
    let hi = y0 + (rule.bottom * height).round() as u32;
    let out = mask.retain_rows(lo, hi);
    if out.is_empty() {
        return Err(Error::MaskVanished {
            category: mask.category,
        });
    }
    Ok(out)
}

/// Main patch and offset (bbox center minus patch center).
///
/// The patch holding the bbox center wins; if that patch has no mask pixels
/// the patch with the most mask pixels is used (ties go to the smallest
/// `(row, col)`).
pub fn select_main_patch(mask: &InstanceMask, grid: &PatchGrid) -> Result<(PatchIndex, [f64; 2])> {
    grid.check_mask(mask)?;
    let (x0, y0, x1, y1) = mask.bbox().ok_or(Error::EmptyMask)?;
    let cx = (x0 as f64 + x1 as f64) / 2.0;
    let cy = (y0 as f64 + y1 as f64) / 2.0;
    let counts = grid.counts(mask);
    let mut main = grid.patch_at(cx, cy);
    if counts[main.row * grid.cols() + main.col] == 0 {
        let mut best = 0;
        for (i, &n) in counts.iter().enumerate() {
            if n > best {
                best = n;
                main = PatchIndex {
                    row: i / grid.cols(),
                    col: i % grid.cols(),
                };
            }
        }
    }
    let center = grid.center(main);
    Ok((main, [cx - center[0], cy - center[1]]))
}

/// Sub patch among the 8 neighbors of `main`.
///
/// Neighbors holding both object and interaction pixels are preferred, by
/// object pixel count; without any, the neighbor with the most object pixels
/// is used and the interaction flag is false. The offset points from the
/// patch center to the centroid of the object pixels inside it.
pub fn select_sub_patch(
    mask: &InstanceMask,
    interaction: Option<&InstanceMask>,
    main: PatchIndex,
    grid: &PatchGrid,
) -> Result<(PatchIndex, [f64; 2], bool)> {
    grid.check_mask(mask)?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    if main.row >= grid.rows() || main.col >= grid.cols() {
        return Err(Error::IndexOutOfRange {
            what: "patch",
            index: main.row * grid.cols() + main.col,
            len: grid.rows() * grid.cols(),
        });
    }
    let counts = grid.counts(mask);
    let contact_counts = match interaction {
        Some(m) => {
            grid.check_mask(m)?;
            grid.counts(m)
        }
        None => vec![0; counts.len()],
    };
    let at = |p: PatchIndex| p.row * grid.cols() + p.col;

    // Neighbors come in row-major order, so strict `>` keeps the smallest
    // (row, col) on ties.
    let pick = |require_contact: bool| {
        let mut best: Option<(PatchIndex, usize)> = None;
        for p in grid.neighbors(main) {
            let n = counts[at(p)];
            if n == 0 || (require_contact && contact_counts[at(p)] == 0) {
                continue;
            }
            if best.is_none_or(|(_, b)| n > b) {
                best = Some((p, n));
            }
        }
        best.map(|(p, _)| p)
    };
    let (sub, has_contact) = match pick(true) {
        Some(p) => (p, true),
        None => (pick(false).ok_or(Error::NoSubPatchCandidate)?, false),
    };

    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (x, y) in mask.pixels() {
        if grid.patch_of_pixel(x, y) == sub {
            sx += x as f64;
            sy += y as f64;
            n += 1;
        }
    }
    let center = grid.center(sub);
    let offset = [sx / n as f64 - center[0], sy / n as f64 - center[1]];
    Ok((sub, offset, has_contact))
}

/// Unit vector from the main anchor (patch center + offset) to the sub
/// anchor.
pub fn orientation_ray(dp: &DualPatch, grid: &PatchGrid) -> Result<[f64; 2]> {
    let m = grid.center(dp.main_patch);
    let s = grid.center(dp.sub_patch);
    let dx = (s[0] + dp.sub_offset[0]) - (m[0] + dp.main_offset[0]);
    let dy = (s[1] + dp.sub_offset[1]) - (m[1] + dp.main_offset[1]);
    let norm = dx.hypot(dy);
    if !(norm > 0.0) {
        return Err(Error::DegenerateRay);
    }
    Ok([dx / norm, dy / norm])
}

/// Human pixels within a one-pixel (8-connected) dilation of the object mask.
pub fn interaction_pixels(object: &InstanceMask, humans: &[&InstanceMask]) -> Result<InstanceMask> {
    let grown = object.dilate(1);
    let mut out = InstanceMask::empty(object.width(), object.height());
    for h in humans {
        out = out.union(&grown.intersect(h)?)?;
    }
    Ok(out)
}

/// Dual patch for one object of a scene.
pub fn extract_object_patch(
    scene: &Scene,
    object: usize,
    grid: &PatchGrid,
    rules: &ShrinkRules,
) -> Result<DualPatch> {
    let run = || -> Result<DualPatch> {
        let mask = scene
            .object_masks
            .get(object)
            .and_then(|m| m.as_ref())
            .ok_or(Error::MissingMask {
                what: "object",
                index: object,
            })?;
        if mask.is_empty() {
            return Err(Error::EmptyMask);
        }
        let mut mask = mask.clone();
        mask.category = scene.objects[object].category;
        let humans: Vec<&InstanceMask> = scene.human_masks.iter().flatten().collect();
        let contact = interaction_pixels(&mask, &humans)?;
        let shrunk = shrink_mask(&mask, rules)?;
        let (main_patch, main_offset) = select_main_patch(&shrunk, grid)?;
        let (sub_patch, sub_offset, sub_has_interaction) =
            select_sub_patch(&shrunk, Some(&contact), main_patch, grid)?;
        Ok(DualPatch {
            main_patch,
            sub_patch,
            main_offset,
            sub_offset,
            sub_has_interaction,
        })
    };
    run().map_err(|e| e.for_object(object))
}

/// Per-object results, errors kept in place.
pub fn extract_dual_patches_each(
    scene: &Scene,
    grid: &PatchGrid,
    rules: &ShrinkRules,
) -> Vec<Result<DualPatch>> {
    (0..scene.objects.len())
        .map(|o| extract_object_patch(scene, o, grid, rules))
        .collect()
}

/// One dual patch per object; the first failure is returned with its object
/// index attached.
pub fn extract_dual_patches(
    scene: &Scene,
    grid: &PatchGrid,
    rules: &ShrinkRules,
) -> Result<Vec<DualPatch>> {
    extract_dual_patches_each(scene, grid, rules)
        .into_iter()
        .collect()
}
