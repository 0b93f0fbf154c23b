//! Minimal Wavefront OBJ: `v x y z` and triangular `f a b c` lines with
//! 1-based indices (`a/b/c` forms keep the vertex index). Other directives
//! are ignored.
//!
//! Body-part labels live in a sidecar next to the mesh (`foo.obj` →
//! `foo.labels`), one line per vertex holding a part id `0..=13` or `-`.

use std::path::Path;

use crate::body::BodyPart;
use crate::error::{Error, Result};
use crate::geometry::{Mesh, Vec3};

use super::{read_text, write_file};

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn parse_obj(text: &str, path: &Path) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces: Vec<([usize; 3], usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<&str> = tokens.collect();
                if coords.len() != 3 {
                    return Err(parse_error(
                        path,
                        lineno,
                        format!("expected 3 coordinates, got {}", coords.len()),
                    ));
                }
                let mut v = [0.0; 3];
                for (k, tok) in coords.iter().enumerate() {
                    v[k] = tok
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| {
                            parse_error(path, lineno, format!("bad coordinate `{tok}`"))
                        })?;
                }
                vertices.push(Vec3::new(v[0], v[1], v[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(parse_error(
                        path,
                        lineno,
                        format!("expected a triangle, got {} indices", refs.len()),
                    ));
                }
                let mut f = [0usize; 3];
                for (k, tok) in refs.iter().enumerate() {
                    let head = tok.split('/').next().unwrap_or("");
                    let idx: usize = head.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
                        parse_error(path, lineno, format!("bad vertex index `{tok}`"))
                    })?;
                    f[k] = idx - 1;
                }
                faces.push((f, lineno));
            }
            _ => {}
        }
    }
    if vertices.is_empty() {
        return Err(parse_error(
            path,
            text.lines().count().max(1),
            "no vertices",
        ));
    }
    for (f, lineno) in &faces {
        if let Some(bad) = f.iter().find(|&&v| v >= vertices.len()) {
            return Err(parse_error(
                path,
                *lineno,
                format!(
                    "face index {} out of range ({} vertices)",
                    bad + 1,
                    vertices.len()
                ),
            ));
        }
    }
    let mesh = Mesh::new(vertices)?;
    if faces.is_empty() {
        Ok(mesh)
    } else {
        mesh.with_faces(faces.into_iter().map(|(f, _)| f).collect())
    }
}

pub fn parse_labels(text: &str, path: &Path, vertex_count: usize) -> Result<Vec<Option<BodyPart>>> {
    let mut labels = Vec::with_capacity(vertex_count);
    for (i, raw) in text.lines().enumerate() {
        let tok = raw.trim();
        let label = if tok == "-" {
            None
        } else {
            let id: u8 = tok
                .parse()
                .map_err(|_| parse_error(path, i + 1, format!("bad label `{tok}`")))?;
            Some(
                BodyPart::from_id(id)
                    .ok_or_else(|| parse_error(path, i + 1, format!("label {id} out of range")))?,
            )
        };
        labels.push(label);
    }
    if labels.len() != vertex_count {
        return Err(parse_error(
            path,
            labels.len(),
            format!("{} labels for {vertex_count} vertices", labels.len()),
        ));
    }
    Ok(labels)
}

/// Loads an OBJ, plus its `.labels` sidecar when one exists.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let mesh = parse_obj(&read_text(path)?, path)?;
    let sidecar = path.with_extension("labels");
    if sidecar.is_file() {
        let labels = parse_labels(&read_text(&sidecar)?, &sidecar, mesh.len())?;
        return mesh.with_labels(labels);
    }
    Ok(mesh)
}

/// Coordinates use the shortest representation that parses back to the
/// same `f64`.
pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        out.push_str(&format!("v {:?} {:?} {:?}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces().unwrap_or(&[]) {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    out
}

pub fn write_labels(labels: &[Option<BodyPart>]) -> String {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        match l {
            Some(p) => out.push_str(&p.id().to_string()),
            None => out.push('-'),
        }
        out.push('\n');
    }
    out
}

/// Writes the OBJ and, for labeled meshes, the sidecar.
pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_file(path, write_obj(mesh))?;
    if let Some(labels) = mesh.labels() {
        write_file(&path.with_extension("labels"), write_labels(labels))?;
    }
    Ok(())
}
