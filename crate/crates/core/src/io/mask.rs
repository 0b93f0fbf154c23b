//! Mask encodings: binary PGM (`P5`, 8-bit, nonzero = foreground) and JSON
//! RLE `{"width", "height", "runs": [start, len, start, len, ...]}` over the
//! row-major pixel index.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{InstanceMask, Run};

use super::{read_bytes, write_file};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RleDoc {
    pub width: u32,
    pub height: u32,
    pub runs: Vec<usize>,
}

impl RleDoc {
    pub fn to_mask(&self) -> Result<InstanceMask> {
        if !self.runs.len().is_multiple_of(2) {
            return Err(Error::InvalidMask("runs must be (start, len) pairs".into()));
        }
        let runs = self
            .runs
            .chunks_exact(2)
            .map(|c| Run {
                start: c[0],
                len: c[1],
            })
            .collect();
        InstanceMask::from_runs(self.width, self.height, runs)
    }

    pub fn from_mask(mask: &InstanceMask) -> Self {
        RleDoc {
            width: mask.width(),
            height: mask.height(),
            runs: mask.runs().iter().flat_map(|r| [r.start, r.len]).collect(),
        }
    }
}

fn pgm_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: message.into(),
    }
}

pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<InstanceMask> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // Whitespace and comments between header fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes
            .get(pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            pos += 1;
        }
        if start == pos {
            return Err(pgm_error(path, "truncated PGM header"));
        }
        fields.push(
            std::str::from_utf8(&bytes[start..pos])
                .map_err(|_| pgm_error(path, "non-ASCII header"))?,
        );
    }
    if fields[0] != "P5" {
        return Err(pgm_error(
            path,
            format!("expected P5 magic, got `{}`", fields[0]),
        ));
    }
    let num = |s: &str, what: &str| -> Result<u32> {
        s.parse()
            .map_err(|_| pgm_error(path, format!("bad {what} `{s}`")))
    };
    let width = num(fields[1], "width")?;
    let height = num(fields[2], "height")?;
    let maxval = num(fields[3], "maxval")?;
    if width == 0 || height == 0 {
        return Err(pgm_error(path, "zero image size"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(pgm_error(path, format!("maxval {maxval} is not 8-bit")));
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(pgm_error(path, "missing whitespace after header"));
    }
    pos += 1;
    let data = &bytes[pos..];
    let expected = width as usize * height as usize;
    if data.len() != expected {
        return Err(pgm_error(
            path,
            format!("expected {expected} pixel bytes, found {}", data.len()),
        ));
    }
    let bitmap: Vec<bool> = data.iter().map(|&b| b != 0).collect();
    InstanceMask::from_bitmap(width, height, &bitmap)
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<InstanceMask> {
    let path = path.as_ref();
    parse_pgm(&read_bytes(path)?, path)
}

/// Foreground written as 255, background as 0.
pub fn write_pgm(mask: &InstanceMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(
        mask.to_bitmap()
            .into_iter()
            .map(|b| if b { 255u8 } else { 0 }),
    );
    out
}

pub fn save_pgm(mask: &InstanceMask, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), write_pgm(mask))
}

/// Loads a `.pgm` file, or a JSON RLE file otherwise.
pub fn load_mask(path: impl AsRef<Path>) -> Result<InstanceMask> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    if bytes.starts_with(b"P5") {
        return parse_pgm(&bytes, path);
    }
    let doc: RleDoc = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    doc.to_mask()
}
