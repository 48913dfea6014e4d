//! Reference segmenters and ingestion of externally produced masks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GridGeometry;
use crate::io;
use crate::raster::{AlbedoImage, Grid, Mask};
use crate::tactile::TactileFrame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    pub visual_albedo_threshold: f64,
    pub tactile_indent_margin_mm: f64,
    pub min_component_px: usize,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig { visual_albedo_threshold: 0.5, tactile_indent_margin_mm: 0.1, min_component_px: 8 }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.visual_albedo_threshold > 0.0 && self.visual_albedo_threshold < 1.0) {
            return Err(Error::Parameter(format!(
                "visual_albedo_threshold must lie in (0, 1), got {}",
                self.visual_albedo_threshold
            )));
        }
        if !(self.tactile_indent_margin_mm > 0.0 && self.tactile_indent_margin_mm.is_finite()) {
            return Err(Error::Parameter(format!(
                "tactile_indent_margin_mm must be positive, got {}",
                self.tactile_indent_margin_mm
            )));
        }
        Ok(())
    }
}

/// Dark pixels, minus components smaller than `min_component_px`.
/// Paint and grooves look alike here.
pub fn segment_visual(albedo: &AlbedoImage, cfg: &SegmenterConfig) -> Result<Mask> {
    cfg.validate()?;
    let data = albedo.data().iter().map(|&a| (a as f64) < cfg.visual_albedo_threshold).collect();
    let mut mask = Grid::from_vec(*albedo.geometry(), data)?;
    mask.remove_small_components(cfg.min_component_px);
    Ok(mask)
}

/// Pixels indented deeper than the press depth plus the margin.
pub fn segment_tactile(frame: &TactileFrame, cfg: &SegmenterConfig) -> Result<Mask> {
    cfg.validate()?;
    if !frame.ok {
        return Err(Error::NoContact);
    }
    let level = frame.press_depth_mm + cfg.tactile_indent_margin_mm;
    let data = frame.contact_depth.data().iter().map(|&z| z as f64 > level).collect();
    Grid::from_vec(*frame.contact_depth.geometry(), data)
}

/// Reads a mask and checks it sits on `expected`.
pub fn ingest_mask(path: &Path, expected: &GridGeometry) -> Result<Mask> {
    let mask = io::read_mask(path)?;
    let g = mask.geometry();
    if !g.approx_eq(expected, 1e-9) {
        return Err(Error::Contract(format!(
            "mask {} is {}x{} px at {} mm/px, expected {}x{} px at {} mm/px",
            path.display(),
            g.width_px(),
            g.height_px(),
            g.mm_per_px(),
            expected.width_px(),
            expected.height_px(),
            expected.mm_per_px()
        )));
    }
    Ok(mask)
}
