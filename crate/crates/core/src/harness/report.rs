use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::pipeline::{scene_seed, Method, MethodResult, PipelineConfig};
use crate::error::{Error, Result};
use crate::io;

pub const CSV_HEADER: &str = "scene,method,iou,pix_acc,tp,mean_d_mm,sd_mm,max_d_mm,touches,time_model_s";

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

/// One row per result; reconstruction columns are blank when nothing was reconstructed.
pub fn report_csv(results: &[MethodResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        let (mean, sd, max) = match &r.reconstruction {
            Some(m) => (fixed(m.mean_d_mm), fixed(m.sd_mm), fixed(m.max_d_mm)),
            None => Default::default(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scene,
            r.method,
            fixed(r.detection.iou),
            fixed(r.detection.pix_acc),
            fixed(r.detection.tp_rate),
            mean,
            sd,
            max,
            r.touches,
            fixed(r.time_model_s)
        )
        .expect("writing to a String");
    }
    out
}

#[derive(Serialize)]
struct MethodSummary {
    method: Method,
    scenes: usize,
    mean_iou: f64,
    mean_pix_acc: f64,
    mean_tp: f64,
    /// Over scenes with a reconstruction.
    mean_d_mm: Option<f64>,
    reconstructed_scenes: usize,
    total_touches: usize,
    total_time_model_s: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    seed: u64,
    scene_seeds: Vec<u64>,
    config: &'a PipelineConfig,
    methods: Vec<MethodSummary>,
    results: &'a [MethodResult],
}

fn summarize(results: &[MethodResult]) -> Vec<MethodSummary> {
    let mut methods: Vec<Method> = results.iter().map(|r| r.method).collect();
    methods.sort_by_key(|m| m.name());
    methods.dedup();
    methods
        .into_iter()
        .map(|method| {
            let rs: Vec<&MethodResult> = results.iter().filter(|r| r.method == method).collect();
            let n = rs.len() as f64;
            let mean = |f: &dyn Fn(&MethodResult) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
            let recon: Vec<f64> = rs.iter().filter_map(|r| r.reconstruction.map(|m| m.mean_d_mm)).collect();
            MethodSummary {
                method,
                scenes: rs.len(),
                mean_iou: mean(&|r| r.detection.iou),
                mean_pix_acc: mean(&|r| r.detection.pix_acc),
                mean_tp: mean(&|r| r.detection.tp_rate),
                mean_d_mm: (!recon.is_empty()).then(|| recon.iter().sum::<f64>() / recon.len() as f64),
                reconstructed_scenes: recon.len(),
                total_touches: rs.iter().map(|r| r.touches).sum(),
                total_time_model_s: rs.iter().map(|r| r.time_model_s).sum(),
            }
        })
        .collect()
}

/// Writes `report.csv` and `summary.json` into `dir`.
pub fn emit_report(results: &[MethodResult], cfg: &PipelineConfig, seed: u64, dir: &Path) -> Result<()> {
    io::ensure_dir(dir)?;
    let csv_path = dir.join("report.csv");
    fs::write(&csv_path, report_csv(results)).map_err(|e| Error::io(&csv_path, e))?;
    let scenes = results.iter().map(|r| r.scene + 1).max().unwrap_or(0);
    let summary = Summary {
        seed,
        scene_seeds: (0..scenes).map(|i| scene_seed(seed, i)).collect(),
        config: cfg,
        methods: summarize(results),
        results,
    };
    io::write_json(&dir.join("summary.json"), &summary)
}
