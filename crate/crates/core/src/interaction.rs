//! Body-part/object interaction machinery: the consistency hinge, contact
//! detection, and threshold-accuracy curves for three protocols.
//!
//! A contact's *misalignment* is how much further the (aligned) predicted
//! geometry sits from the ground-truth partner than the ground truth itself
//! does: `max(CD(pred_part, gt_object) − CD(gt_part, gt_object), 0)`. It is
//! zero for a perfect prediction and grows as the predicted body part drifts
//! away from the true contact.
//!
//! * single: every annotated (human, part, object) contact is scored under
//!   its own pair fit; accuracy is the fraction of contacts within the
//!   threshold.
//! * multi: one global fit per scene; a scene passes when the sum of its
//!   contact misalignments is within the threshold; accuracy is the fraction
//!   of scenes passing.
//! * object-object: like multi, over annotated object pairs, scoring both
//!   directions of each pair.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{fit_entities, fit_global, AlignOptions};
use crate::body::BodyPart;
use crate::error::{Error, Result};
use crate::geometry::{chamfer_distance, Mesh, SimilarityTransform, Vec3};
use crate::scene::{Contact, Scene};

/// Contact threshold for the consistency hinge and contact detection (m).
pub const DEFAULT_DELTA: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub delta: f64,
    /// Strictly increasing thresholds in meters.
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub align: AlignOptions,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            delta: DEFAULT_DELTA,
            thresholds: (0..=30).map(|i| i as f64 / 100.0).collect(),
            align: AlignOptions::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must be > 0, got {}",
                self.delta
            )));
        }
        if self.thresholds.is_empty() {
            return Err(Error::InvalidConfig("no thresholds".into()));
        }
        if self.thresholds.iter().any(|t| !t.is_finite())
            || self.thresholds.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidConfig(
                "thresholds must be finite and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Thresholds from a `start:stop:step` range given in centimeters,
    /// inclusive of `stop` when it falls on the grid.
    pub fn thresholds_from_cm(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "bad threshold range {start}:{stop}:{step}"
            )));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| (start + k as f64 * step) / 100.0).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionCurve {
    /// Meters.
    pub thresholds: Vec<f64>,
    /// Fraction in `[0, 1]` per threshold.
    pub accuracy: Vec<f64>,
}

impl InteractionCurve {
    /// Fraction of `values` that are `<= τ`, for each threshold τ.
    pub fn from_values(values: &[f64], thresholds: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NoInteractions);
        }
        let n = values.len() as f64;
        let accuracy = thresholds
            .iter()
            .map(|&t| values.iter().filter(|&&v| v <= t).count() as f64 / n)
            .collect();
        Ok(InteractionCurve {
            thresholds: thresholds.to_vec(),
            accuracy,
        })
    }

    pub fn is_monotone(&self) -> bool {
        self.thresholds.len() == self.accuracy.len()
            && self.accuracy.windows(2).all(|w| w[1] >= w[0])
            && self.accuracy.iter().all(|a| (0.0..=1.0).contains(a))
    }

    /// `threshold_cm,accuracy` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold_cm,accuracy\n");
        for (t, a) in self.thresholds.iter().zip(&self.accuracy) {
            out.push_str(&format!("{},{}\n", t * 100.0, a));
        }
        out
    }
}

/// Vertices labeled `part`, in mesh order.
pub fn body_part_points(human: &Mesh, part: BodyPart) -> Result<Vec<Vec3>> {
    let idx = part_indices(human, part)?;
    Ok(idx.iter().map(|&i| human.vertices()[i]).collect())
}

pub(crate) fn part_indices(human: &Mesh, part: BodyPart) -> Result<Vec<usize>> {
    let labels = human.labels().ok_or(Error::UnlabeledPart(part))?;
    let idx: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == Some(part))
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(Error::UnlabeledPart(part));
    }
    Ok(idx)
}

/// `Σ_parts max(CD(part, object) − δ, 0)`.
pub fn consistency_loss(
    human: &Mesh,
    object_points: &[Vec3],
    parts: &BTreeSet<BodyPart>,
    delta: f64,
) -> Result<f64> {
    if parts.is_empty() {
        return Err(Error::EmptyInput("body part set"));
    }
    let mut loss = 0.0;
    for &part in parts {
        let pts = body_part_points(human, part)?;
        loss += (chamfer_distance(&pts, object_points)? - delta).max(0.0);
    }
    Ok(loss)
}

/// Parts whose Chamfer distance to the object is strictly below `delta`.
/// Parts with no labeled vertices are skipped.
pub fn detect_interactions(human: &Mesh, object_points: &[Vec3], delta: f64) -> BTreeSet<BodyPart> {
    let mut found = BTreeSet::new();
    if object_points.is_empty() {
        return found;
    }
    for part in BodyPart::ALL {
        let Ok(pts) = body_part_points(human, part) else {
            continue;
        };
        if let Ok(d) = chamfer_distance(&pts, object_points) {
            if d < delta {
                found.insert(part);
            }
        }
    }
    found
}

/// All `n × m` (human, object) index pairs in row-major order.
pub fn enumerate_pairs(n_humans: usize, m_objects: usize) -> Vec<(usize, usize)> {
    (0..n_humans)
        .flat_map(|h| (0..m_objects).map(move |o| (h, o)))
        .collect()
}

fn excess(pred: &[Vec3], gt_self: &[Vec3], gt_partner: &[Vec3]) -> Result<f64> {
    let predicted = chamfer_distance(pred, gt_partner)?;
    let truth = chamfer_distance(gt_self, gt_partner)?;
    Ok((predicted - truth).max(0.0))
}

fn contact_misalignment(
    pred: &Scene,
    gt: &Scene,
    contact: &Contact,
    transform: &SimilarityTransform,
) -> Result<f64> {
    let idx = part_indices(&gt.humans[contact.human], contact.part)?;
    let pred_human = pred.humans[contact.human].vertices();
    let gt_human = gt.humans[contact.human].vertices();
    let pred_part: Vec<Vec3> = idx
        .iter()
        .map(|&i| transform.apply(&pred_human[i]))
        .collect();
    let gt_part: Vec<Vec3> = idx.iter().map(|&i| gt_human[i]).collect();
    excess(&pred_part, &gt_part, &gt.object_vertices(contact.object))
}

fn check_contacts(pred: &Scene, gt: &Scene) -> Result<Vec<Contact>> {
    pred.check_compatible(gt)?;
    gt.validate()?;
    Ok(gt.contacts())
}

/// Misalignment of every annotated contact, each under its own pair fit.
pub fn single_contact_misalignments(
    pred: &Scene,
    gt: &Scene,
    opts: &AlignOptions,
) -> Result<Vec<(Contact, f64)>> {
    let contacts = check_contacts(pred, gt)?;
    let mut fits: BTreeMap<(usize, usize), SimilarityTransform> = BTreeMap::new();
    let mut out = Vec::with_capacity(contacts.len());
    for c in contacts {
        let key = (c.human, c.object);
        let t = match fits.get(&key) {
            Some(t) => *t,
            None => {
                let t = fit_entities(pred, gt, &[c.human], &[c.object], opts)?;
                fits.insert(key, t);
                t
            }
        };
        out.push((c, contact_misalignment(pred, gt, &c, &t)?));
    }
    Ok(out)
}

/// Summed contact misalignment under the global fit. `None` when the scene
/// has no annotated contacts.
pub fn multi_scene_misalignment(
    pred: &Scene,
    gt: &Scene,
    opts: &AlignOptions,
) -> Result<Option<f64>> {
    let contacts = check_contacts(pred, gt)?;
    if contacts.is_empty() {
        return Ok(None);
    }
    let t = fit_global(pred, gt, opts)?;
    let mut total = 0.0;
    for c in &contacts {
        total += contact_misalignment(pred, gt, c, &t)?;
    }
    Ok(Some(total))
}

/// Summed object-object misalignment under the global fit, both directions
/// of each annotated pair. `None` when no pairs are annotated.
pub fn object_object_misalignment(
    pred: &Scene,
    gt: &Scene,
    opts: &AlignOptions,
) -> Result<Option<f64>> {
    pred.check_compatible(gt)?;
    gt.validate()?;
    if gt.object_contacts.is_empty() {
        return Ok(None);
    }
    let t = fit_global(pred, gt, opts)?;
    let mut total = 0.0;
    for &(a, b) in &gt.object_contacts {
        let pa = t.apply_all(&pred.object_vertices(a));
        let pb = t.apply_all(&pred.object_vertices(b));
        let ga = gt.object_vertices(a);
        let gb = gt.object_vertices(b);
        total += excess(&pa, &ga, &gb)? + excess(&pb, &gb, &ga)?;
    }
    Ok(Some(total))
}

/// Per-contact accuracy over a batch of `(pred, gt)` scenes.
pub fn single_interaction_curve(
    scenes: &[(&Scene, &Scene)],
    cfg: &EvalConfig,
) -> Result<InteractionCurve> {
    cfg.validate()?;
    let per_scene = scenes
        .par_iter()
        .map(|(pred, gt)| single_contact_misalignments(pred, gt, &cfg.align))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = per_scene.into_iter().flatten().map(|(_, m)| m).collect();
    if values.is_empty() {
        return Err(Error::NoInteractions);
    }
    InteractionCurve::from_values(&values, &cfg.thresholds)
}

/// Per-scene accuracy of summed contact misalignment. Scenes without
/// annotated contacts are not counted.
pub fn multi_interaction_curve(
    scenes: &[(&Scene, &Scene)],
    cfg: &EvalConfig,
) -> Result<InteractionCurve> {
    cfg.validate()?;
    let totals: Vec<f64> = scenes
        .par_iter()
        .map(|(pred, gt)| multi_scene_misalignment(pred, gt, &cfg.align))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if totals.is_empty() {
        return Err(Error::NoInteractions);
    }
    InteractionCurve::from_values(&totals, &cfg.thresholds)
}

/// Per-scene accuracy of summed object-object misalignment. Scenes without
/// annotated object pairs are not counted.
pub fn object_object_curve(
    scenes: &[(&Scene, &Scene)],
    cfg: &EvalConfig,
) -> Result<InteractionCurve> {
    cfg.validate()?;
    let totals: Vec<f64> = scenes
        .par_iter()
        .map(|(pred, gt)| object_object_misalignment(pred, gt, &cfg.align))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if totals.is_empty() {
        return Err(Error::NoObjectContacts);
    }
    InteractionCurve::from_values(&totals, &cfg.thresholds)
}
