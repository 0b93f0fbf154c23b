//! Run-length encoded binary instance masks.
//!
//! Runs are `(start, len)` pairs over the row-major flattened pixel index
//! `y * width + x`. The canonical form has runs sorted, non-empty, and
//! separated by at least one background pixel, so two masks with the same
//! foreground compare equal regardless of how they were encoded.

use crate::error::{Error, Result};

/// Category id used for human instance masks.
pub const HUMAN_CATEGORY: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Run {
    pub start: usize,
    pub len: usize,
}

impl Run {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMask {
    width: u32,
    height: u32,
    runs: Vec<Run>,
    pub instance_id: u32,
    pub category: u32,
}

impl InstanceMask {
    pub fn empty(width: u32, height: u32) -> Self {
        InstanceMask {
            width,
            height,
            runs: Vec::new(),
            instance_id: 0,
            category: 0,
        }
    }

    /// Validates and canonicalizes runs. Runs must be sorted, non-empty,
    /// non-overlapping and in bounds; touching runs are merged.
    pub fn from_runs(width: u32, height: u32, runs: Vec<Run>) -> Result<Self> {
        let total = width as usize * height as usize;
        let mut canonical: Vec<Run> = Vec::with_capacity(runs.len());
        for (i, run) in runs.iter().enumerate() {
            if run.len == 0 {
                return Err(Error::InvalidMask(format!("run {i} has zero length")));
            }
            if run.end() > total {
                return Err(Error::InvalidMask(format!(
                    "run {i} ({}, {}) exceeds {width}x{height} image",
                    run.start, run.len
                )));
            }
            match canonical.last_mut() {
                Some(prev) if run.start < prev.end() => {
                    return Err(Error::InvalidMask(format!(
                        "run {i} starting at {} overlaps or precedes the previous run",
                        run.start
                    )));
                }
                Some(prev) if run.start == prev.end() => prev.len += run.len,
                _ => canonical.push(*run),
            }
        }
        Ok(InstanceMask {
            width,
            height,
            runs: canonical,
            instance_id: 0,
            category: 0,
        })
    }

    pub fn from_bitmap(width: u32, height: u32, bitmap: &[bool]) -> Result<Self> {
        let total = width as usize * height as usize;
        if bitmap.len() != total {
            return Err(Error::InvalidMask(format!(
                "bitmap has {} pixels, expected {total}",
                bitmap.len()
            )));
        }
        let mut runs = Vec::new();
        let mut i = 0;
        while i < total {
            if bitmap[i] {
                let start = i;
                while i < total && bitmap[i] {
                    i += 1;
                }
                runs.push(Run {
                    start,
                    len: i - start,
                });
            } else {
                i += 1;
            }
        }
        Ok(InstanceMask {
            width,
            height,
            runs,
            instance_id: 0,
            category: 0,
        })
    }

    pub fn from_pixels(
        width: u32,
        height: u32,
        pixels: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        let mut bitmap = vec![false; width as usize * height as usize];
        for (x, y) in pixels {
            if x >= width || y >= height {
                return Err(Error::InvalidMask(format!(
                    "pixel ({x}, {y}) outside {width}x{height} image"
                )));
            }
            bitmap[y as usize * width as usize + x as usize] = true;
        }
        Self::from_bitmap(width, height, &bitmap)
    }

    pub fn with_identity(mut self, instance_id: u32, category: u32) -> Self {
        self.instance_id = instance_id;
        self.category = category;
        self
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn pixel_count(&self) -> usize {
        self.runs.iter().map(|r| r.len).sum()
    }

    pub fn to_bitmap(&self) -> Vec<bool> {
        let mut bitmap = vec![false; self.width as usize * self.height as usize];
        for run in &self.runs {
            bitmap[run.start..run.end()].fill(true);
        }
        bitmap
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        if x >= self.width || y >= self.height {
            return false;
        }
        let idx = y as usize * self.width as usize + x as usize;
        match self.runs.binary_search_by(|r| r.start.cmp(&idx)) {
            Ok(_) => true,
            Err(0) => false,
            Err(pos) => idx < self.runs[pos - 1].end(),
        }
    }

    /// Foreground pixels as `(x, y)` in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.runs
            .iter()
            .flat_map(|r| r.start..r.end())
            .map(move |i| ((i % w) as u32, (i / w) as u32))
    }

    /// Inclusive bounding box `(x_min, y_min, x_max, y_max)`.
    pub fn bbox(&self) -> Option<(u32, u32, u32, u32)> {
        let mut pixels = self.pixels();
        let (x0, y0) = pixels.next()?;
        let init = (x0, y0, x0, y0);
        Some(self.pixels().fold(init, |(a, b, c, d), (x, y)| {
            (a.min(x), b.min(y), c.max(x), d.max(y))
        }))
    }

    /// Keeps only rows in `[row_start, row_end)`.
    pub fn retain_rows(&self, row_start: u32, row_end: u32) -> InstanceMask {
        let w = self.width as usize;
        let lo = row_start as usize * w;
        let hi = (row_end.min(self.height) as usize) * w;
        let runs = self
            .runs
            .iter()
            .filter_map(|r| {
                let s = r.start.max(lo);
                let e = r.end().min(hi);
                (s < e).then(|| Run {
                    start: s,
                    len: e - s,
                })
            })
            .collect();
        InstanceMask {
            runs,
            ..self.clone()
        }
    }

    /// 3×3 (8-connected) dilation by `radius` pixels.
    pub fn dilate(&self, radius: u32) -> InstanceMask {
        let (w, h) = (self.width as i64, self.height as i64);
        let r = radius as i64;
        let mut bitmap = vec![false; (w * h) as usize];
        for (x, y) in self.pixels() {
            let (x, y) = (x as i64, y as i64);
            for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                for xx in (x - r).max(0)..=(x + r).min(w - 1) {
                    bitmap[(yy * w + xx) as usize] = true;
                }
            }
        }
        let mut out = InstanceMask::from_bitmap(self.width, self.height, &bitmap)
            .expect("bitmap sized from mask dimensions");
        out.instance_id = self.instance_id;
        out.category = self.category;
        out
    }

    pub fn intersect(&self, other: &InstanceMask) -> Result<InstanceMask> {
        self.check_same_size(other)?;
        let a = self.to_bitmap();
        let b = other.to_bitmap();
        let both: Vec<bool> = a.iter().zip(&b).map(|(x, y)| *x && *y).collect();
        Self::from_bitmap(self.width, self.height, &both)
    }

    pub fn union(&self, other: &InstanceMask) -> Result<InstanceMask> {
        self.check_same_size(other)?;
        let a = self.to_bitmap();
        let b = other.to_bitmap();
        let any: Vec<bool> = a.iter().zip(&b).map(|(x, y)| *x || *y).collect();
        Self::from_bitmap(self.width, self.height, &any)
    }

    fn check_same_size(&self, other: &InstanceMask) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::InvalidMask(format!(
                "size mismatch {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Same foreground, ignoring instance id and category.
    pub fn same_pixels(&self, other: &InstanceMask) -> bool {
        self.width == other.width && self.height == other.height && self.runs == other.runs
    }
}
