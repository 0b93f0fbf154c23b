//! C ABI over `mmhoi-geom`.
//!
//! Meshes, scenes and alignment reports are opaque handles created by a
//! `*_load` / `*_from_*` function and released with the matching `*_free`.
//! Every fallible call returns an [`MhgStatus`]; on failure
//! [`mhg_last_error_message`] describes the error until the next call on the
//! same thread. Matrices cross the boundary as 9 doubles in row-major order.
//! Panics never unwind into C; they surface as `MHG_STATUS_PANIC`.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mmhoi_geom::alignment::{align_multi_hoi, align_single_hoi, AlignOptions, AlignmentReport};
use mmhoi_geom::geometry::{chamfer_distance, v2v_points};
use mmhoi_geom::interaction::consistency_loss;
use mmhoi_geom::io::{load_mesh, load_scene};
use mmhoi_geom::patches::{extract_dual_patches, PatchGrid, ShrinkRules};
use mmhoi_geom::{
    average_rotations, icp, procrustes, BodyPart, Error, IcpParams, Mat3, Mesh, RigidTransform,
    Scene, SimilarityTransform, Vec3,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Degenerate = 5,
    Mismatch = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque mesh handle.
pub struct MhgMesh(Mesh);

/// Opaque scene handle.
pub struct MhgScene(Scene);

/// Opaque alignment report handle.
pub struct MhgReport(AlignmentReport);

/// `x ↦ scale·R·x + t`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhgSimilarity {
    pub scale: f64,
    /// Row-major.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhgIcpResult {
    pub transform: MhgSimilarity,
    pub rmse: f64,
    pub iterations: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhgDualPatch {
    pub main_row: u32,
    pub main_col: u32,
    pub sub_row: u32,
    pub sub_col: u32,
    pub main_offset: [f64; 2],
    pub sub_offset: [f64; 2],
    pub sub_has_interaction: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MhgStatus {
    match e {
        Error::Object { source, .. } => status_of(source),
        Error::Io { .. } => MhgStatus::Io,
        Error::Parse { .. } | Error::Schema { .. } => MhgStatus::Parse,
        Error::DegeneratePointSet | Error::IcpDegenerate(_) => MhgStatus::Degenerate,
        Error::TopologyMismatch { .. }
        | Error::CountMismatch { .. }
        | Error::EntityCountMismatch { .. }
        | Error::LengthMismatch { .. } => MhgStatus::Mismatch,
        _ => MhgStatus::InvalidArgument,
    }
}

struct Failure(MhgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MhgStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(MhgStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MhgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MhgStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MhgStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes either null or a live handle of this type.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, per the API contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<String, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    // SAFETY: non-null, NUL-terminated per the API contract.
    let s = unsafe { CStr::from_ptr(path) };
    s.to_str()
        .map(str::to_owned)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

unsafe fn slice_arg<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and valid for `len` reads per the API contract.
    Ok(unsafe { std::slice::from_raw_parts(data, len) })
}

fn to_ffi(t: &SimilarityTransform) -> MhgSimilarity {
    let r = &t.rotation;
    MhgSimilarity {
        scale: t.scale,
        rotation: [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
        ],
        translation: [t.translation.x, t.translation.y, t.translation.z],
    }
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mhg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn mhg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Mesh from `count` packed `x, y, z` triples.
///
/// # Safety
/// `xyz` must point to `3 * count` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_mesh_from_vertices(
    xyz: *const f64,
    count: usize,
    out: *mut *mut MhgMesh,
) -> MhgStatus {
    guard(|| {
        let n = count
            .checked_mul(3)
            .ok_or_else(|| invalid("vertex count overflows"))?;
        let flat = unsafe { slice_arg(xyz, n, "xyz") }?;
        let vertices = flat
            .chunks_exact(3)
            .map(|c| Vec3::new(c[0], c[1], c[2]))
            .collect();
        let mesh = Mesh::new(vertices)?;
        unsafe { write(out, boxed(MhgMesh(mesh)), "out") }
    })
}

/// Loads an OBJ file (and its `.labels` sidecar when present).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_mesh_load(path: *const c_char, out: *mut *mut MhgMesh) -> MhgStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        let mesh = load_mesh(path)?;
        unsafe { write(out, boxed(MhgMesh(mesh)), "out") }
    })
}

/// # Safety
/// `mesh` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mhg_mesh_vertex_count(mesh: *const MhgMesh) -> usize {
    unsafe { mesh.as_ref() }.map_or(0, |m| m.0.len())
}

/// # Safety
/// `mesh` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mhg_mesh_free(mesh: *mut MhgMesh) {
    if !mesh.is_null() {
        drop(unsafe { Box::from_raw(mesh) });
    }
}

/// Symmetric Chamfer distance between the vertex sets.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_chamfer(
    a: *const MhgMesh,
    b: *const MhgMesh,
    out: *mut f64,
) -> MhgStatus {
    guard(|| {
        let (a, b) = unsafe { (deref(a, "a")?, deref(b, "b")?) };
        let d = chamfer_distance(a.0.vertices(), b.0.vertices())?;
        unsafe { write(out, d, "out") }
    })
}

/// Mean distance between corresponding vertices.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_v2v(a: *const MhgMesh, b: *const MhgMesh, out: *mut f64) -> MhgStatus {
    guard(|| {
        let (a, b) = unsafe { (deref(a, "a")?, deref(b, "b")?) };
        let d = v2v_points(a.0.vertices(), b.0.vertices())?;
        unsafe { write(out, d, "out") }
    })
}

/// Least-squares fit of `source` onto `target` (corresponding vertices).
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_procrustes(
    source: *const MhgMesh,
    target: *const MhgMesh,
    with_scale: bool,
    out: *mut MhgSimilarity,
) -> MhgStatus {
    guard(|| {
        let (s, t) = unsafe { (deref(source, "source")?, deref(target, "target")?) };
        let fit = procrustes(s.0.vertices(), t.0.vertices(), with_scale)?;
        unsafe { write(out, to_ffi(&fit), "out") }
    })
}

/// Point-to-point ICP from the identity.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_icp(
    source: *const MhgMesh,
    target: *const MhgMesh,
    max_iterations: u32,
    tolerance: f64,
    out: *mut MhgIcpResult,
) -> MhgStatus {
    guard(|| {
        let (s, t) = unsafe { (deref(source, "source")?, deref(target, "target")?) };
        let params = IcpParams {
            max_iterations: max_iterations as usize,
            convergence_tol: tolerance,
        };
        let r = icp(
            s.0.vertices(),
            t.0.vertices(),
            &RigidTransform::identity(),
            &params,
        )?;
        let result = MhgIcpResult {
            transform: to_ffi(&r.transform.into()),
            rmse: r.rmse,
            iterations: u32::try_from(r.iterations).unwrap_or(u32::MAX),
        };
        unsafe { write(out, result, "out") }
    })
}

/// Mean of `count` row-major rotation matrices, written as 9 doubles.
///
/// # Safety
/// `rotations` must hold `9 * count` doubles; `out` must hold 9.
#[no_mangle]
pub unsafe extern "C" fn mhg_average_rotations(
    rotations: *const f64,
    count: usize,
    out: *mut f64,
) -> MhgStatus {
    guard(|| {
        let n = count
            .checked_mul(9)
            .ok_or_else(|| invalid("rotation count overflows"))?;
        let flat = unsafe { slice_arg(rotations, n, "rotations") }?;
        let mats: Vec<Mat3> = flat.chunks_exact(9).map(Mat3::from_row_slice).collect();
        let mean = average_rotations(&mats)?;
        if out.is_null() {
            return Err(null("out"));
        }
        for r in 0..3 {
            for c in 0..3 {
                unsafe { out.add(3 * r + c).write(mean[(r, c)]) };
            }
        }
        Ok(())
    })
}

/// Loads a scene JSON file with its meshes and masks.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_scene_load(path: *const c_char, out: *mut *mut MhgScene) -> MhgStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        let scene = load_scene(path)?;
        unsafe { write(out, boxed(MhgScene(scene)), "out") }
    })
}

/// # Safety
/// `scene` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mhg_scene_free(scene: *mut MhgScene) {
    if !scene.is_null() {
        drop(unsafe { Box::from_raw(scene) });
    }
}

/// # Safety
/// `scene` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn mhg_scene_human_count(scene: *const MhgScene) -> usize {
    unsafe { scene.as_ref() }.map_or(0, |s| s.0.humans.len())
}

/// # Safety
/// `scene` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn mhg_scene_object_count(scene: *const MhgScene) -> usize {
    unsafe { scene.as_ref() }.map_or(0, |s| s.0.objects.len())
}

/// One similarity fit over every entity of the scene (M protocol).
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_align_scene(
    pred: *const MhgScene,
    gt: *const MhgScene,
    out: *mut *mut MhgReport,
) -> MhgStatus {
    guard(|| {
        let (p, g) = unsafe { (deref(pred, "pred")?, deref(gt, "gt")?) };
        let report = align_multi_hoi(&p.0, &g.0, &AlignOptions::default())?;
        unsafe { write(out, boxed(MhgReport(report)), "out") }
    })
}

/// One similarity fit over a single human-object pair (S protocol).
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_align_pair(
    pred: *const MhgScene,
    gt: *const MhgScene,
    human: usize,
    object: usize,
    out: *mut *mut MhgReport,
) -> MhgStatus {
    guard(|| {
        let (p, g) = unsafe { (deref(pred, "pred")?, deref(gt, "gt")?) };
        p.0.check_compatible(&g.0)?;
        let report = align_single_hoi(&p.0, &g.0, (human, object), &AlignOptions::default())?;
        unsafe { write(out, boxed(MhgReport(report)), "out") }
    })
}

/// # Safety
/// `report` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mhg_report_free(report: *mut MhgReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// # Safety
/// `report` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_report_transform(
    report: *const MhgReport,
    out: *mut MhgSimilarity,
) -> MhgStatus {
    guard(|| {
        let r = unsafe { deref(report, "report") }?;
        unsafe { write(out, to_ffi(&r.0.transform), "out") }
    })
}

/// Number of humans covered by the report.
///
/// # Safety
/// `report` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn mhg_report_human_count(report: *const MhgReport) -> usize {
    unsafe { report.as_ref() }.map_or(0, |r| r.0.humans.len())
}

/// Number of objects covered by the report.
///
/// # Safety
/// `report` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn mhg_report_object_count(report: *const MhgReport) -> usize {
    unsafe { report.as_ref() }.map_or(0, |r| r.0.objects.len())
}

/// CD and V2V (meters) of the `index`-th human covered by the report.
///
/// # Safety
/// `report` must be valid; `cd` and `v2v` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_report_human_metrics(
    report: *const MhgReport,
    index: usize,
    cd: *mut f64,
    v2v: *mut f64,
) -> MhgStatus {
    guard(|| {
        let r = &unsafe { deref(report, "report") }?.0;
        let (c, v) = r
            .per_human_cd
            .get(index)
            .zip(r.per_human_v2v.get(index))
            .ok_or_else(|| invalid(format!("human index {index} out of range")))?;
        unsafe {
            write(cd, *c, "cd")?;
            write(v2v, *v, "v2v")
        }
    })
}

/// CD and V2V (meters) of the `index`-th object covered by the report.
///
/// # Safety
/// `report` must be valid; `cd` and `v2v` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_report_object_metrics(
    report: *const MhgReport,
    index: usize,
    cd: *mut f64,
    v2v: *mut f64,
) -> MhgStatus {
    guard(|| {
        let r = &unsafe { deref(report, "report") }?.0;
        let (c, v) = r
            .per_object_cd
            .get(index)
            .zip(r.per_object_v2v.get(index))
            .ok_or_else(|| invalid(format!("object index {index} out of range")))?;
        unsafe {
            write(cd, *c, "cd")?;
            write(v2v, *v, "v2v")
        }
    })
}

/// Consistency loss between one body part of `human` and `object` in the
/// same scene. `part` is the body-part id (0 = head ... 13 = right foot).
///
/// # Safety
/// `scene` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_consistency_loss(
    scene: *const MhgScene,
    human: usize,
    object: usize,
    part: u32,
    delta: f64,
    out: *mut f64,
) -> MhgStatus {
    guard(|| {
        let s = &unsafe { deref(scene, "scene") }?.0;
        let h = s
            .humans
            .get(human)
            .ok_or_else(|| invalid(format!("human index {human} out of range")))?;
        if object >= s.objects.len() {
            return Err(invalid(format!("object index {object} out of range")));
        }
        let part = u8::try_from(part)
            .ok()
            .and_then(BodyPart::from_id)
            .ok_or_else(|| invalid(format!("unknown body part {part}")))?;
        if delta.is_nan() || delta < 0.0 {
            return Err(invalid("delta must be >= 0"));
        }
        let loss = consistency_loss(
            h,
            &s.object_vertices(object),
            &BTreeSet::from([part]),
            delta,
        )?;
        unsafe { write(out, loss, "out") }
    })
}

/// Dual patches for every object, using the built-in shrink rules. Writes
/// up to `capacity` entries and the object count into `written`; returns
/// `MHG_STATUS_BUFFER_TOO_SMALL` when `capacity` is short.
///
/// # Safety
/// `scene` must be valid; `out` must hold `capacity` entries; `written`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhg_scene_dual_patches(
    scene: *const MhgScene,
    patch_size: u32,
    out: *mut MhgDualPatch,
    capacity: usize,
    written: *mut usize,
) -> MhgStatus {
    guard(|| {
        let s = &unsafe { deref(scene, "scene") }?.0;
        let grid = PatchGrid::for_scene(s, patch_size)?;
        let patches = extract_dual_patches(s, &grid, &ShrinkRules::default())?;
        unsafe { write(written, patches.len(), "written") }?;
        if patches.len() > capacity {
            return Err(Failure(
                MhgStatus::BufferTooSmall,
                format!("need room for {} patches, have {capacity}", patches.len()),
            ));
        }
        if patches.is_empty() {
            return Ok(());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let to_u32 = |v: usize| u32::try_from(v).unwrap_or(u32::MAX);
        for (i, dp) in patches.iter().enumerate() {
            let entry = MhgDualPatch {
                main_row: to_u32(dp.main_patch.row),
                main_col: to_u32(dp.main_patch.col),
                sub_row: to_u32(dp.sub_patch.row),
                sub_col: to_u32(dp.sub_patch.col),
                main_offset: dp.main_offset,
                sub_offset: dp.sub_offset,
                sub_has_interaction: dp.sub_has_interaction,
            };
            unsafe { out.add(i).write(entry) };
        }
        Ok(())
    })
}
