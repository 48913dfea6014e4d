use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{detection_metrics, reconstruction_metrics, DetectionMetrics, ReconstructionMetrics};
use crate::error::{Error, Result};
use crate::fusion::{
    assemble_reconstruction, reconstruct_all, refine_visual_mask, verify_edges, CrackReconstruction, EdgeVerdict,
    ReconstructOptions, ReconstructedPoint, DEFAULT_AREA_THRESHOLD_FRAC,
};
use crate::planner::{build_touch_plan, plan_passive_raster, TouchPlan, DEFAULT_SPACING_MM, SENSOR_FOOTPRINT_MM};
use crate::raster::Mask;
use crate::segment::{segment_tactile, segment_visual, SegmenterConfig};
use crate::simscene::{generate_scene, random_scene, RandomSceneConfig, Scene};
use crate::skeleton::SkeletonGraph;
use crate::tactile::{simulate_plan, SensorModel, TactileFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Vision,
    AlignedVision,
    PassiveTactile,
    ActiveTactile,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Vision, Method::AlignedVision, Method::PassiveTactile, Method::ActiveTactile];

    pub fn name(self) -> &'static str {
        match self {
            Method::Vision => "vision",
            Method::AlignedVision => "aligned-vision",
            Method::PassiveTactile => "passive-tactile",
            Method::ActiveTactile => "active-tactile",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown method {s:?}")))
    }
}

/// The demo corpus: `scenes` random scenes on one extent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub scenes: usize,
    pub real_cracks: usize,
    pub fake_cracks: usize,
    pub extent_mm: (f64, f64),
    pub generator: RandomSceneConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            scenes: 5,
            real_cracks: 2,
            fake_cracks: 1,
            extent_mm: (140.0, 105.0),
            generator: RandomSceneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub sensor: SensorModel,
    pub segmenter: SegmenterConfig,
    pub spacing_mm: f64,
    pub area_threshold_frac: f64,
    pub reconstruct: ReconstructOptions,
    pub passive_overlap: f64,
    /// Depth-camera noise along the surface normal for the vision method.
    pub visual_depth_sigma_mm: f64,
    pub per_touch_s: f64,
    pub corpus: CorpusConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sensor: SensorModel::default(),
            segmenter: SegmenterConfig::default(),
            spacing_mm: DEFAULT_SPACING_MM,
            area_threshold_frac: DEFAULT_AREA_THRESHOLD_FRAC,
            reconstruct: ReconstructOptions::default(),
            passive_overlap: 0.0,
            visual_depth_sigma_mm: 0.5,
            per_touch_s: 8.0,
            corpus: CorpusConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        self.segmenter.validate()?;
        if !(self.visual_depth_sigma_mm >= 0.0 && self.visual_depth_sigma_mm.is_finite()) {
            return Err(Error::Parameter("visual_depth_sigma_mm must be non-negative".into()));
        }
        if !(self.per_touch_s >= 0.0 && self.per_touch_s.is_finite()) {
            return Err(Error::Parameter("per_touch_s must be non-negative".into()));
        }
        Ok(())
    }
}

/// Intermediate products, kept for inspection and the CLI.
#[derive(Debug, Clone, Default)]
pub struct MethodArtifacts {
    pub visual_mask: Option<Mask>,
    pub graph: Option<SkeletonGraph>,
    pub plan: Option<TouchPlan>,
    pub frames: Vec<TactileFrame>,
    pub tactile_masks: Vec<Option<Mask>>,
    pub verdicts: Vec<EdgeVerdict>,
    pub detection_mask: Option<Mask>,
    pub reconstruction: CrackReconstruction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub scene: usize,
    pub method: Method,
    pub detection: DetectionMetrics,
    /// `None` when nothing was reconstructed or the scene has no real crack.
    pub reconstruction: Option<ReconstructionMetrics>,
    pub touches: usize,
    pub time_model_s: f64,
}

fn lift_visual(scene: &Scene, mask: &Mask, sigma: f64, with_depth: bool, seed: u64) -> Result<CrackReconstruction> {
    let geom = scene.geometry();
    let n = geom.normal();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = mask
        .pixels()
        .map(|p| {
            let mut position = geom.pixel_to_world(p.u as f64, p.v as f64);
            if with_depth {
                let z = -(*scene.depth.get(p.u, p.v) as f64) + noise.sample(&mut rng);
                position += n * z;
            }
            ReconstructedPoint { position, frame: 0 }
        })
        .collect();
    Ok(CrackReconstruction { points, per_edge: Vec::new() })
}

fn tactile_masks(frames: &[TactileFrame], cfg: &SegmenterConfig) -> Result<Vec<Option<Mask>>> {
    frames
        .par_iter()
        .map(|f| match segment_tactile(f, cfg) {
            Ok(m) => Ok(Some(m)),
            Err(Error::NoContact) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Scene-pixel mask of every reconstructed point.
fn rasterize_points(scene: &Scene, recon: &CrackReconstruction) -> Mask {
    let geom = scene.geometry();
    let mut m = Mask::empty(*geom);
    for p in recon.positions() {
        let (u, v) = geom.world_to_pixel(p);
        let (u, v) = (u.round(), v.round());
        if u >= 0.0 && v >= 0.0 && (u as usize) < m.width() && (v as usize) < m.height() {
            m.set(u as usize, v as usize, true);
        }
    }
    m
}

/// Runs one method end to end on one scene.
pub fn run_method(scene: &Scene, method: Method, cfg: &PipelineConfig, seed: u64) -> Result<(MethodResult, MethodArtifacts)> {
    cfg.validate()?;
    let mut art = MethodArtifacts::default();
    match method {
        Method::Vision | Method::AlignedVision => {
            let mask = segment_visual(&scene.albedo, &cfg.segmenter)?;
            art.reconstruction =
                lift_visual(scene, &mask, cfg.visual_depth_sigma_mm, method == Method::Vision, seed)?;
            art.detection_mask = Some(mask.clone());
            art.visual_mask = Some(mask);
        }
        Method::PassiveTactile => {
            let plan = plan_passive_raster(scene.geometry(), SENSOR_FOOTPRINT_MM, cfg.passive_overlap)?;
            let frames = simulate_plan(scene, &cfg.sensor, &plan, seed)?;
            let masks = tactile_masks(&frames, &cfg.segmenter)?;
            art.reconstruction = reconstruct_all(&frames, &masks, &cfg.sensor, &cfg.reconstruct)?;
            art.detection_mask = Some(rasterize_points(scene, &art.reconstruction));
            art.plan = Some(plan);
            art.frames = frames;
            art.tactile_masks = masks;
        }
        Method::ActiveTactile => {
            let visual = segment_visual(&scene.albedo, &cfg.segmenter)?;
            let graph = SkeletonGraph::from_mask(&visual);
            let plan = build_touch_plan(&graph, scene.geometry(), cfg.spacing_mm)?;
            let frames = simulate_plan(scene, &cfg.sensor, &plan, seed)?;
            let masks = tactile_masks(&frames, &cfg.segmenter)?;
            let verdicts = verify_edges(&plan, &masks, cfg.area_threshold_frac)?;
            let refined = refine_visual_mask(&visual, &graph, &verdicts)?;
            art.reconstruction = assemble_reconstruction(&frames, &masks, &verdicts, &plan, &cfg.sensor, &cfg.reconstruct)?;
            art.detection_mask = Some(refined);
            art.visual_mask = Some(visual);
            art.graph = Some(graph);
            art.plan = Some(plan);
            art.frames = frames;
            art.tactile_masks = masks;
            art.verdicts = verdicts;
        }
    }
    let touches = art.plan.as_ref().map_or(0, TouchPlan::len);
    let detection = detection_metrics(art.detection_mask.as_ref().expect("every method sets a mask"), &scene.gt_mask)?;
    let reconstruction = match reconstruction_metrics(art.reconstruction.positions(), &scene.gt_centerlines, touches, cfg.per_touch_s) {
        Ok(m) => Some(m),
        Err(Error::EmptyReconstruction | Error::Domain(_)) => None,
        Err(e) => return Err(e),
    };
    let result = MethodResult {
        scene: 0,
        method,
        detection,
        reconstruction,
        touches,
        time_model_s: touches as f64 * cfg.per_touch_s,
    };
    Ok((result, art))
}

/// Seed of the `index`-th corpus scene.
pub fn scene_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(index as u64 + 1)
}

pub fn demo_corpus(cfg: &CorpusConfig, seed: u64) -> Result<Vec<Scene>> {
    (0..cfg.scenes)
        .into_par_iter()
        .map(|i| {
            let spec = random_scene(scene_seed(seed, i), cfg.real_cracks, cfg.fake_cracks, cfg.extent_mm, &cfg.generator)?;
            generate_scene(&spec)
        })
        .collect()
}

/// All methods on all scenes, ordered by scene index then method name.
pub fn run_corpus(scenes: &[Scene], cfg: &PipelineConfig, seed: u64) -> Result<Vec<MethodResult>> {
    let jobs: Vec<(usize, Method)> = (0..scenes.len()).flat_map(|s| Method::ALL.map(|m| (s, m))).collect();
    let mut results: Vec<MethodResult> = jobs
        .par_iter()
        .map(|&(s, m)| {
            let (mut r, _) = run_method(&scenes[s], m, cfg, scene_seed(seed, s))?;
            r.scene = s;
            Ok(r)
        })
        .collect::<Result<_>>()?;
    results.sort_by(|a, b| (a.scene, a.method.name()).cmp(&(b.scene, b.method.name())));
    Ok(results)
}

pub fn run_demo(cfg: &PipelineConfig, seed: u64) -> Result<Vec<MethodResult>> {
    cfg.validate()?;
    let scenes = demo_corpus(&cfg.corpus, seed)?;
    run_corpus(&scenes, cfg, seed)
}
