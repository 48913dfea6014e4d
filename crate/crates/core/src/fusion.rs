//! Tactile verification of visual detections and world-frame reconstruction.

use std::path::Path;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::TouchPlan;
use crate::raster::Mask;
use crate::skeleton::SkeletonGraph;
use crate::tactile::{SensorModel, TactileFrame};

/// Touches whose crack area is below this fraction of the frame count as empty.
pub const DEFAULT_AREA_THRESHOLD_FRAC: f64 = 1.0 / 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeVerdict {
    #[serde(rename = "edge")]
    pub edge_index: usize,
    pub touches: usize,
    pub low_area_touches: usize,
    pub rejected: bool,
}

/// Counts low-area touches per edge. `masks[i]` is the tactile mask of contact `i`,
/// `None` when that press never made contact; such frames are not evidence.
/// An edge is rejected once more than two of its touches come back near empty.
pub fn verify_edges(plan: &TouchPlan, masks: &[Option<Mask>], area_threshold_frac: f64) -> Result<Vec<EdgeVerdict>> {
    if masks.len() != plan.len() {
        return Err(Error::Contract(format!("{} tactile masks for {} planned contacts", masks.len(), plan.len())));
    }
    if !(area_threshold_frac > 0.0 && area_threshold_frac <= 1.0) {
        return Err(Error::Parameter(format!("area threshold must lie in (0, 1], got {area_threshold_frac}")));
    }
    Ok(plan
        .per_edge_index
        .iter()
        .enumerate()
        .map(|(e, idx)| {
            let fracs: Vec<f64> = idx
                .iter()
                .filter_map(|&i| masks[i].as_ref())
                .map(|m| m.count() as f64 / m.data().len() as f64)
                .collect();
            let low = fracs.iter().filter(|&&f| f < area_threshold_frac).count();
            EdgeVerdict { edge_index: e, touches: fracs.len(), low_area_touches: low, rejected: low > 2 }
        })
        .collect())
}

/// Drops visual components whose intersecting edges are all rejected.
pub fn refine_visual_mask(visual: &Mask, graph: &SkeletonGraph, verdicts: &[EdgeVerdict]) -> Result<Mask> {
    if verdicts.len() != graph.edges.len() {
        return Err(Error::Contract(format!("{} verdicts for {} edges", verdicts.len(), graph.edges.len())));
    }
    if !visual.same_shape(&graph.skeleton) {
        return Err(Error::Contract("visual mask and skeleton differ in size".into()));
    }
    let labels = visual.component_labels();
    let n = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut touched = vec![false; n];
    let mut kept = vec![false; n];
    for (edge, verdict) in graph.edges.iter().zip(verdicts) {
        for p in &edge.path {
            if let Some(l) = labels[visual.index(p.u, p.v)] {
                touched[l] = true;
                kept[l] |= !verdict.rejected;
            }
        }
    }
    let mut out = visual.clone();
    for (px, l) in out.data_mut().iter_mut().zip(&labels) {
        if let Some(l) = *l {
            if touched[l] && !kept[l] {
                *px = false;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructOptions {
    /// Keep every `stride`-th selected crack pixel in row-major order.
    pub stride: usize,
    /// Select only mask pixels with a 4-neighbor outside the mask.
    pub boundary_only: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions { stride: 4, boundary_only: false }
    }
}

/// Lifts crack pixels of one frame to world points through the gel plane.
pub fn reconstruct_frame(frame: &TactileFrame, mask: &Mask, sensor: &SensorModel, opts: &ReconstructOptions) -> Result<Vec<Vector3<f64>>> {
    if !mask.same_shape(&frame.contact_depth) {
        return Err(Error::Contract(format!(
            "tactile mask is {}x{} px, frame is {}x{} px",
            mask.width(),
            mask.height(),
            frame.contact_depth.width(),
            frame.contact_depth.height()
        )));
    }
    if opts.stride == 0 {
        return Err(Error::Parameter("reconstruction stride must be at least 1".into()));
    }
    let chain = frame.effector_to_world.compose(&sensor.sensor_to_effector);
    let k = &sensor.intrinsics;
    Ok(mask
        .pixels()
        .filter(|p| {
            if !opts.boundary_only {
                return true;
            }
            let (u, v) = (p.u as isize, p.v as isize);
            !(mask.at(u - 1, v) && mask.at(u + 1, v) && mask.at(u, v - 1) && mask.at(u, v + 1))
        })
        .step_by(opts.stride)
        .map(|p| chain.apply(&k.pixel_to_sensor(p.u as f64, p.v as f64)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedPoint {
    pub position: Vector3<f64>,
    pub frame: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CrackReconstruction {
    pub points: Vec<ReconstructedPoint>,
    /// Point indices per plan edge; empty for plans without edges.
    pub per_edge: Vec<Vec<usize>>,
}

impl CrackReconstruction {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.points.iter().map(|p| &p.position)
    }
}

fn check_aligned(frames: &[TactileFrame], masks: &[Option<Mask>]) -> Result<()> {
    if frames.len() != masks.len() {
        return Err(Error::Contract(format!("{} frames but {} masks", frames.len(), masks.len())));
    }
    Ok(())
}

fn lift_all(
    frames: &[TactileFrame],
    masks: &[Option<Mask>],
    sensor: &SensorModel,
    opts: &ReconstructOptions,
    include: impl Fn(usize) -> bool + Sync,
) -> Result<Vec<Vec<Vector3<f64>>>> {
    frames
        .par_iter()
        .zip(masks)
        .enumerate()
        .map(|(i, (f, m))| match m {
            Some(m) if include(i) => reconstruct_frame(f, m, sensor, opts),
            _ => Ok(Vec::new()),
        })
        .collect()
}

/// Union of the frame reconstructions of kept edges, in frame order.
pub fn assemble_reconstruction(
    frames: &[TactileFrame],
    masks: &[Option<Mask>],
    verdicts: &[EdgeVerdict],
    plan: &TouchPlan,
    sensor: &SensorModel,
    opts: &ReconstructOptions,
) -> Result<CrackReconstruction> {
    check_aligned(frames, masks)?;
    if frames.len() != plan.len() || verdicts.len() != plan.per_edge_index.len() {
        return Err(Error::Contract(format!(
            "{} frames and {} verdicts for a plan of {} contacts over {} edges",
            frames.len(),
            verdicts.len(),
            plan.len(),
            plan.per_edge_index.len()
        )));
    }
    let mut edge_of = vec![None; plan.len()];
    for (e, idx) in plan.per_edge_index.iter().enumerate() {
        for &i in idx {
            edge_of[i] = Some(e);
        }
    }
    let lifted = lift_all(frames, masks, sensor, opts, |i| edge_of[i].is_some_and(|e| !verdicts[e].rejected))?;
    let mut out = CrackReconstruction { points: Vec::new(), per_edge: vec![Vec::new(); verdicts.len()] };
    for (i, pts) in lifted.into_iter().enumerate() {
        for position in pts {
            if let Some(e) = edge_of[i] {
                out.per_edge[e].push(out.points.len());
            }
            out.points.push(ReconstructedPoint { position, frame: i });
        }
    }
    Ok(out)
}

/// Reconstruction from every frame that made contact, for plans without edges.
pub fn reconstruct_all(frames: &[TactileFrame], masks: &[Option<Mask>], sensor: &SensorModel, opts: &ReconstructOptions) -> Result<CrackReconstruction> {
    check_aligned(frames, masks)?;
    let lifted = lift_all(frames, masks, sensor, opts, |_| true)?;
    let points = lifted
        .into_iter()
        .enumerate()
        .flat_map(|(frame, pts)| pts.into_iter().map(move |position| ReconstructedPoint { position, frame }))
        .collect();
    Ok(CrackReconstruction { points, per_edge: Vec::new() })
}

#[derive(Serialize, Deserialize)]
struct PointRow {
    x_mm: f64,
    y_mm: f64,
    z_mm: f64,
    frame: usize,
}

pub fn write_reconstruction_csv(path: &Path, recon: &CrackReconstruction) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for p in &recon.points {
        w.serialize(PointRow { x_mm: p.position.x, y_mm: p.position.y, z_mm: p.position.z, frame: p.frame })
            .map_err(|e| csv_error(path, e))?;
    }
    if recon.points.is_empty() {
        w.write_record(["x_mm", "y_mm", "z_mm", "frame"]).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads points written by [`write_reconstruction_csv`]; `per_edge` is not stored.
pub fn read_reconstruction_csv(path: &Path) -> Result<CrackReconstruction> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut points = Vec::new();
    for row in r.deserialize::<PointRow>() {
        let row = row.map_err(|e| Error::format("csv", e.to_string()))?;
        points.push(ReconstructedPoint { position: Vector3::new(row.x_mm, row.y_mm, row.z_mm), frame: row.frame });
    }
    Ok(CrackReconstruction { points, per_edge: Vec::new() })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!("checked io kind"),
        }
    } else {
        Error::format("csv", e.to_string())
    }
}
