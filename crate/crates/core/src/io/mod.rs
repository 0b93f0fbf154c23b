//! File formats: OBJ meshes with label sidecars, PGM and RLE masks, scene
//! JSON, and evaluation reports. Loaders reject malformed input instead of
//! repairing it.

pub mod mask;
pub mod obj;
pub mod report;
pub mod scene;

use std::path::Path;

use crate::error::{Error, Result};

pub use mask::{load_mask, load_pgm, parse_pgm, save_pgm, write_pgm, RleDoc};
pub use obj::{load_mesh, parse_obj, save_mesh, write_labels, write_obj};
pub use report::{EvalReport, SceneReport};
pub use scene::{load_scene, save_scene};

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
