//! On-disk formats.
//!
//! * Masks: binary PGM (`P5`, maxval 255, pixels 0 or 255) plus a JSON sidecar
//!   holding the [`GridGeometry`], stored next to the image with a `.json` extension.
//! * Real-valued rasters: raw little-endian `f32`, row-major, with the same sidecar.
//! * Everything else: JSON via serde.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::GridGeometry;
use crate::raster::{Grid, Mask};

/// Sidecar path for a raster file: same stem, `.json` extension.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_sidecar(path: &Path) -> Result<GridGeometry> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Err(Error::format(
            "sidecar",
            format!("missing geometry sidecar {}", side.display()),
        ));
    }
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format("sidecar", e.to_string()))
}

/// Parses a PGM header, returning (width, height, maxval, data offset).
fn parse_pgm_header(bytes: &[u8]) -> Result<(usize, usize, usize, usize)> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format("magic", "expected binary PGM magic 'P5'"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    let names = ["width", "height", "maxval"];
    for (slot, name) in fields.iter_mut().zip(names) {
        // whitespace and comments between tokens
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
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(name, "missing or non-numeric header value"));
        }
        *slot = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(name, "header value out of range"))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::format("maxval", "header must end with one whitespace byte")),
    }
    Ok((fields[0], fields[1], fields[2], pos))
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (w, h, maxval, offset) = parse_pgm_header(&bytes)?;
    if maxval != 255 {
        return Err(Error::format("maxval", format!("expected 255, found {maxval}")));
    }
    if w == 0 || h == 0 {
        return Err(Error::format("width", format!("degenerate size {w}x{h}")));
    }
    let body = &bytes[offset..];
    if body.len() != w * h {
        return Err(Error::format(
            "data",
            format!("expected {} pixel bytes, found {}", w * h, body.len()),
        ));
    }
    let data = body
        .iter()
        .enumerate()
        .map(|(i, &b)| match b {
            0 => Ok(false),
            255 => Ok(true),
            other => Err(Error::format(
                "data",
                format!("non-binary value {other} at pixel ({}, {})", i % w, i / w),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    let geometry = read_sidecar(path)?;
    if geometry.width_px() != w {
        return Err(Error::format(
            "width",
            format!("PGM width {w} but sidecar width_px {}", geometry.width_px()),
        ));
    }
    if geometry.height_px() != h {
        return Err(Error::format(
            "height",
            format!("PGM height {h} but sidecar height_px {}", geometry.height_px()),
        ));
    }
    Grid::from_vec(geometry, data)
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    bytes.extend(mask.data().iter().map(|&b| if b { 255u8 } else { 0 }));
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    write_json(&sidecar_path(path), mask.geometry())
}

pub fn read_f32_grid(path: &Path) -> Result<Grid<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let geometry = read_sidecar(path)?;
    if bytes.len() != geometry.len() * 4 {
        return Err(Error::format(
            "data",
            format!(
                "expected {} bytes for {}x{} f32 grid, found {}",
                geometry.len() * 4,
                geometry.width_px(),
                geometry.height_px(),
                bytes.len()
            ),
        ));
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(i) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::format("data", format!("non-finite value at index {i}")));
    }
    Grid::from_vec(geometry, data)
}

pub fn write_f32_grid(path: &Path, grid: &Grid<f32>) -> Result<()> {
    let bytes: Vec<u8> = grid.data().iter().flat_map(|x| x.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    write_json(&sidecar_path(path), grid.geometry())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
