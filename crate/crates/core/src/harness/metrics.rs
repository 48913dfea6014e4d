use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::polyline_distance;
use crate::raster::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub iou: f64,
    pub pix_acc: f64,
    /// Recall over ground-truth crack pixels.
    pub tp_rate: f64,
}

pub fn detection_metrics(pred: &Mask, gt: &Mask) -> Result<DetectionMetrics> {
    if !pred.same_shape(gt) {
        return Err(Error::Contract(format!(
            "prediction is {}x{} px, ground truth {}x{} px",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let (mut both, mut any, mut agree, mut positives) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        both += usize::from(p && g);
        any += usize::from(p || g);
        agree += usize::from(p == g);
        positives += usize::from(g);
    }
    Ok(DetectionMetrics {
        iou: if any == 0 { 1.0 } else { both as f64 / any as f64 },
        pix_acc: agree as f64 / pred.data().len() as f64,
        tp_rate: if positives == 0 { 1.0 } else { both as f64 / positives as f64 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionMetrics {
    pub mean_d_mm: f64,
    /// Population standard deviation.
    pub sd_mm: f64,
    pub max_d_mm: f64,
    pub touches: usize,
    pub time_model_s: f64,
}

/// Shortest distance from `p` to any ground-truth centerline.
pub fn distance_to_centerlines(p: &Vector3<f64>, centerlines: &[Vec<Vector3<f64>>]) -> f64 {
    centerlines.iter().map(|c| polyline_distance(p, c)).fold(f64::INFINITY, f64::min)
}

pub fn reconstruction_metrics<'a>(
    points: impl IntoIterator<Item = &'a Vector3<f64>>,
    centerlines: &[Vec<Vector3<f64>>],
    touches: usize,
    per_touch_s: f64,
) -> Result<ReconstructionMetrics> {
    if centerlines.iter().all(|c| c.is_empty()) {
        return Err(Error::Domain("no ground-truth centerline to measure against".into()));
    }
    let d: Vec<f64> = points.into_iter().map(|p| distance_to_centerlines(p, centerlines)).collect();
    if d.is_empty() {
        return Err(Error::EmptyReconstruction);
    }
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(ReconstructionMetrics {
        mean_d_mm: mean,
        sd_mm: var.sqrt(),
        max_d_mm: d.iter().copied().fold(0.0, f64::max),
        touches,
        time_model_s: touches as f64 * per_touch_s,
    })
}
