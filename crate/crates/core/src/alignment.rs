//! Procrustes and ICP registration, rotation/translation averaging, and the
//! single-pair ("S") and global ("M") scene alignment protocols.

use nalgebra::{Matrix4, Rotation3, SymmetricEigen, UnitQuaternion, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    centroid, chamfer_distance, v2v_points, validate_rotation, Mat3, RigidTransform,
    SimilarityTransform, Vec3,
};
use crate::interaction::enumerate_pairs;
use crate::knn::NearestNeighbors;
use crate::scene::{check_index, Scene};

/// Relative singular-value floor below which a configuration counts as
/// rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

pub fn procrustes(
    source: &[Vec3],
    target: &[Vec3],
    with_scale: bool,
) -> Result<SimilarityTransform> {
    procrustes_weighted(source, target, None, with_scale)
}

/// Weighted least-squares similarity (or rigid) fit of `source` onto
/// `target`: minimizes `Σ wᵢ |s·R·srcᵢ + t − tgtᵢ|²`.
///
/// When the unconstrained optimum is a reflection the sign of the weakest
/// singular direction is flipped so `det R = +1`.
pub fn procrustes_weighted(
    source: &[Vec3],
    target: &[Vec3],
    weights: Option<&[f64]>,
    with_scale: bool,
) -> Result<SimilarityTransform> {
    if source.len() != target.len() {
        return Err(Error::CountMismatch {
            left: source.len(),
            right: target.len(),
        });
    }
    if let Some(w) = weights {
        if w.len() != source.len() {
            return Err(Error::LengthMismatch {
                left: w.len(),
                right: source.len(),
            });
        }
        if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidConfig(
                "weights must be finite and non-negative".into(),
            ));
        }
    }
    if source.len() < 3 {
        return Err(Error::DegeneratePointSet);
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    let total: f64 = (0..source.len()).map(weight).sum();
    if !(total > 0.0) {
        return Err(Error::DegeneratePointSet);
    }

    let mut mu_s = Vec3::zeros();
    let mut mu_t = Vec3::zeros();
    for (i, (s, t)) in source.iter().zip(target).enumerate() {
        mu_s += weight(i) * s;
        mu_t += weight(i) * t;
    }
    mu_s /= total;
    mu_t /= total;

    let mut cov = Mat3::zeros();
    let mut var_s = 0.0;
    for (i, (s, t)) in source.iter().zip(target).enumerate() {
        let ds = s - mu_s;
        let dt = t - mu_t;
        cov += weight(i) * dt * ds.transpose();
        var_s += weight(i) * ds.norm_squared();
    }
    cov /= total;
    var_s /= total;

    // Singular values come back sorted in descending order.
    let svd = cov.svd(true, true);
    let sv = svd.singular_values;
    if !(sv[0] > 0.0) || sv[1] <= RANK_TOLERANCE * sv[0] || !(var_s > 0.0) {
        return Err(Error::DegeneratePointSet);
    }
    // Exact identity instead of an SVD round-off approximation of it.
    if source == target {
        return Ok(SimilarityTransform::identity());
    }
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegeneratePointSet),
    };
    let d = if (u * v_t).determinant() < 0.0 {
        -1.0
    } else {
        1.0
    };
    let signs = Vec3::new(1.0, 1.0, d);
    let rotation = u * Mat3::from_diagonal(&signs) * v_t;
    let scale = if with_scale {
        (sv[0] + sv[1] + d * sv[2]) / var_s
    } else {
        1.0
    };
    if !(scale > 0.0) {
        return Err(Error::DegeneratePointSet);
    }
    let translation = mu_t - scale * (rotation * mu_s);
    Ok(SimilarityTransform {
        scale,
        rotation,
        translation,
    })
}

/// Mean squared distance between `transform(source)` and `target`.
pub fn mean_squared_residual(
    transform: &SimilarityTransform,
    source: &[Vec3],
    target: &[Vec3],
) -> f64 {
    let sum: f64 = source
        .iter()
        .zip(target)
        .map(|(s, t)| (transform.apply(s) - t).norm_squared())
        .sum();
    sum / source.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop once the RMSE changes by less than this between iterations (m).
    pub convergence_tol: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams {
            max_iterations: 50,
            convergence_tol: 1e-6,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "icp needs max_iterations >= 1 and convergence_tol > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Lowest-RMSE transform seen.
    pub transform: RigidTransform,
    pub rmse: f64,
    /// Procrustes updates performed.
    pub iterations: usize,
    /// RMSE of the initial guess followed by the RMSE after each update.
    pub rmse_trace: Vec<f64>,
}

/// Point-to-point ICP of `source` onto `target`, starting from `init`.
pub fn icp(
    source: &[Vec3],
    target: &[Vec3],
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpResult> {
    params.validate()?;
    if source.len() < 3 || target.len() < 3 {
        return Err(Error::IcpDegenerate(format!(
            "need at least 3 points, got {} and {}",
            source.len(),
            target.len()
        )));
    }
    let index = NearestNeighbors::new(target);
    let correspond = |t: &RigidTransform| -> (Vec<Vec3>, f64) {
        let mut matched = Vec::with_capacity(source.len());
        let mut sq = 0.0;
        for s in source {
            let n = index.nearest(&t.apply(s)).expect("target is non-empty");
            sq += n.squared_distance;
            matched.push(target[n.index]);
        }
        (matched, (sq / source.len() as f64).sqrt())
    };

    let mut current = *init;
    let (mut matched, mut rmse) = correspond(&current);
    let mut trace = vec![rmse];
    let mut best = (current, rmse);
    let mut iterations = 0;

    while iterations < params.max_iterations {
        let fit = procrustes(source, &matched, false).map_err(|e| match e {
            Error::DegeneratePointSet => Error::IcpDegenerate(format!(
                "correspondences collapsed at iteration {}",
                iterations + 1
            )),
            other => other,
        })?;
        current = fit.rigid_part();
        iterations += 1;
        let (next_matched, next_rmse) = correspond(&current);
        trace.push(next_rmse);
        if next_rmse < best.1 {
            best = (current, next_rmse);
        }
        let change = (rmse - next_rmse).abs();
        matched = next_matched;
        rmse = next_rmse;
        if change < params.convergence_tol {
            break;
        }
    }

    Ok(IcpResult {
        transform: best.0,
        rmse: best.1,
        iterations,
        rmse_trace: trace,
    })
}

/// Quaternion L2 mean: the dominant eigenvector of `Σ qqᵀ`. Insensitive to
/// input order and to the sign of each quaternion.
pub fn average_rotations(rotations: &[Mat3]) -> Result<Mat3> {
    if rotations.is_empty() {
        return Err(Error::EmptyInput("rotation list"));
    }
    let mut accum = Matrix4::<f64>::zeros();
    for r in rotations {
        validate_rotation(r)?;
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
        let v = Vector4::new(q.w, q.i, q.j, q.k);
        accum += v * v.transpose();
    }
    let eigen = SymmetricEigen::new(accum);
    let best = eigen.eigenvalues.imax();
    let v = eigen.eigenvectors.column(best);
    let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(v[0], v[1], v[2], v[3]));
    Ok(*q.to_rotation_matrix().matrix())
}

pub fn average_translations(translations: &[Vec3]) -> Result<Vec3> {
    if translations.is_empty() {
        return Err(Error::EmptyInput("translation list"));
    }
    Ok(centroid(translations))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlignMode {
    /// One fit per human-object pair.
    #[serde(rename = "S")]
    Single,
    /// One global fit per scene.
    #[serde(rename = "M")]
    Multi,
}

impl AlignMode {
    pub fn letter(self) -> &'static str {
        match self {
            AlignMode::Single => "S",
            AlignMode::Multi => "M",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexWeighting {
    /// Every vertex counts once; entities with more vertices weigh more.
    #[default]
    PerVertex,
    /// Every entity carries the same total weight.
    PerEntity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignOptions {
    pub with_scale: bool,
    pub weighting: VertexWeighting,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            with_scale: true,
            weighting: VertexWeighting::PerVertex,
        }
    }
}

/// Per-entity distances (meters) after one alignment fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub mode: AlignMode,
    pub transform: SimilarityTransform,
    /// Scene indices of the humans covered, parallel to `per_human_*`.
    pub humans: Vec<usize>,
    /// Scene indices of the objects covered, parallel to `per_object_*`.
    pub objects: Vec<usize>,
    pub per_human_cd: Vec<f64>,
    pub per_human_v2v: Vec<f64>,
    pub per_object_cd: Vec<f64>,
    pub per_object_v2v: Vec<f64>,
}

/// Stacked vertices of a set of entities, with per-vertex weights.
struct Stack {
    points: Vec<Vec3>,
    weights: Vec<f64>,
}

fn stack(scene: &Scene, humans: &[usize], objects: &[usize], weighting: VertexWeighting) -> Stack {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut push = |vs: Vec<Vec3>| {
        let w = match weighting {
            VertexWeighting::PerVertex => 1.0,
            VertexWeighting::PerEntity => 1.0 / vs.len() as f64,
        };
        weights.extend(std::iter::repeat_n(w, vs.len()));
        points.extend(vs);
    };
    for &h in humans {
        push(scene.humans[h].vertices().to_vec());
    }
    for &o in objects {
        push(scene.object_vertices(o));
    }
    Stack { points, weights }
}

/// Fits pred onto gt using the given entity subset.
pub fn fit_entities(
    pred: &Scene,
    gt: &Scene,
    humans: &[usize],
    objects: &[usize],
    opts: &AlignOptions,
) -> Result<SimilarityTransform> {
    for &h in humans {
        check_index("human", h, pred.humans.len())?;
        check_index("human", h, gt.humans.len())?;
        check_same_len(pred.humans[h].len(), gt.humans[h].len())?;
    }
    for &o in objects {
        check_index("object", o, pred.objects.len())?;
        check_index("object", o, gt.objects.len())?;
        check_same_len(pred.objects[o].mesh.len(), gt.objects[o].mesh.len())?;
    }
    let src = stack(pred, humans, objects, opts.weighting);
    let dst = stack(gt, humans, objects, opts.weighting);
    let weights = match opts.weighting {
        VertexWeighting::PerVertex => None,
        VertexWeighting::PerEntity => Some(src.weights.as_slice()),
    };
    procrustes_weighted(&src.points, &dst.points, weights, opts.with_scale)
}

fn check_same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::TopologyMismatch { left: a, right: b });
    }
    Ok(())
}

/// Per-entity CD and V2V of `transform(pred)` against gt.
pub fn report_for(
    mode: AlignMode,
    transform: SimilarityTransform,
    pred: &Scene,
    gt: &Scene,
    humans: &[usize],
    objects: &[usize],
) -> Result<AlignmentReport> {
    let mut report = AlignmentReport {
        mode,
        transform,
        humans: humans.to_vec(),
        objects: objects.to_vec(),
        per_human_cd: Vec::with_capacity(humans.len()),
        per_human_v2v: Vec::with_capacity(humans.len()),
        per_object_cd: Vec::with_capacity(objects.len()),
        per_object_v2v: Vec::with_capacity(objects.len()),
    };
    for &h in humans {
        let aligned = transform.apply_all(pred.humans[h].vertices());
        let truth = gt.humans[h].vertices();
        report.per_human_cd.push(chamfer_distance(&aligned, truth)?);
        report.per_human_v2v.push(v2v_points(&aligned, truth)?);
    }
    for &o in objects {
        let aligned = transform.apply_all(&pred.object_vertices(o));
        let truth = gt.object_vertices(o);
        report
            .per_object_cd
            .push(chamfer_distance(&aligned, &truth)?);
        report.per_object_v2v.push(v2v_points(&aligned, &truth)?);
    }
    Ok(report)
}

/// One fit over the concatenated vertices of a single human-object pair.
pub fn align_single_hoi(
    pred: &Scene,
    gt: &Scene,
    pair: (usize, usize),
    opts: &AlignOptions,
) -> Result<AlignmentReport> {
    let (h, o) = pair;
    let t = fit_entities(pred, gt, &[h], &[o], opts)?;
    report_for(AlignMode::Single, t, pred, gt, &[h], &[o])
}

/// One fit over every human and object vertex in the scene.
pub fn align_multi_hoi(pred: &Scene, gt: &Scene, opts: &AlignOptions) -> Result<AlignmentReport> {
    pred.check_compatible(gt)?;
    let humans: Vec<usize> = (0..gt.humans.len()).collect();
    let objects: Vec<usize> = (0..gt.objects.len()).collect();
    let t = fit_entities(pred, gt, &humans, &objects, opts)?;
    report_for(AlignMode::Multi, t, pred, gt, &humans, &objects)
}

/// Global fit transform only.
pub fn fit_global(pred: &Scene, gt: &Scene, opts: &AlignOptions) -> Result<SimilarityTransform> {
    pred.check_compatible(gt)?;
    let humans: Vec<usize> = (0..gt.humans.len()).collect();
    let objects: Vec<usize> = (0..gt.objects.len()).collect();
    fit_entities(pred, gt, &humans, &objects, opts)
}

/// Mean squared residual of a pair's concatenated vertices under `transform`.
pub fn pair_residual(
    pred: &Scene,
    gt: &Scene,
    pair: (usize, usize),
    transform: &SimilarityTransform,
) -> f64 {
    let src = stack(pred, &[pair.0], &[pair.1], VertexWeighting::PerVertex);
    let dst = stack(gt, &[pair.0], &[pair.1], VertexWeighting::PerVertex);
    mean_squared_residual(transform, &src.points, &dst.points)
}

/// Per-entity metrics for a whole scene, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub mode: AlignMode,
    pub human_cd: Vec<f64>,
    pub human_v2v: Vec<f64>,
    pub object_cd: Vec<f64>,
    pub object_v2v: Vec<f64>,
}

/// Scene-level metrics under either protocol.
///
/// In S mode each annotated (human, object) pair gets its own fit (all
/// N×M pairs when nothing is annotated) and an entity's metrics are the mean
/// over the pairs it takes part in. Entities that appear in no pair (a scene
/// with only humans or only objects) are aligned on their own.
pub fn evaluate_scene(
    pred: &Scene,
    gt: &Scene,
    mode: AlignMode,
    opts: &AlignOptions,
) -> Result<SceneMetrics> {
    pred.check_compatible(gt)?;
    let (nh, no) = (gt.humans.len(), gt.objects.len());
    match mode {
        AlignMode::Multi => {
            let r = align_multi_hoi(pred, gt, opts)?;
            Ok(SceneMetrics {
                mode,
                human_cd: r.per_human_cd,
                human_v2v: r.per_human_v2v,
                object_cd: r.per_object_cd,
                object_v2v: r.per_object_v2v,
            })
        }
        AlignMode::Single => {
            let mut pairs = gt.interaction_pairs();
            if pairs.is_empty() {
                pairs = enumerate_pairs(nh, no);
            }
            let mut h_sum = vec![(0.0, 0.0, 0usize); nh];
            let mut o_sum = vec![(0.0, 0.0, 0usize); no];
            for &pair in &pairs {
                let r = align_single_hoi(pred, gt, pair, opts)?;
                let hs = &mut h_sum[pair.0];
                hs.0 += r.per_human_cd[0];
                hs.1 += r.per_human_v2v[0];
                hs.2 += 1;
                let os = &mut o_sum[pair.1];
                os.0 += r.per_object_cd[0];
                os.1 += r.per_object_v2v[0];
                os.2 += 1;
            }
            let mut metrics = SceneMetrics {
                mode,
                human_cd: Vec::with_capacity(nh),
                human_v2v: Vec::with_capacity(nh),
                object_cd: Vec::with_capacity(no),
                object_v2v: Vec::with_capacity(no),
            };
            for (h, &(cd, v2v, n)) in h_sum.iter().enumerate() {
                let (cd, v2v) = if n > 0 {
                    (cd / n as f64, v2v / n as f64)
                } else {
                    let t = fit_entities(pred, gt, &[h], &[], opts)?;
                    let r = report_for(mode, t, pred, gt, &[h], &[])?;
                    (r.per_human_cd[0], r.per_human_v2v[0])
                };
                metrics.human_cd.push(cd);
                metrics.human_v2v.push(v2v);
            }
            for (o, &(cd, v2v, n)) in o_sum.iter().enumerate() {
                let (cd, v2v) = if n > 0 {
                    (cd / n as f64, v2v / n as f64)
                } else {
                    let t = fit_entities(pred, gt, &[], &[o], opts)?;
                    let r = report_for(mode, t, pred, gt, &[], &[o])?;
                    (r.per_object_cd[0], r.per_object_v2v[0])
                };
                metrics.object_cd.push(cd);
                metrics.object_v2v.push(v2v);
            }
            Ok(metrics)
        }
    }
}
