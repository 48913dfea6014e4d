//! Synthetic cracked structures.
//!
//! Real cracks are flat-bottomed grooves. Fake cracks are paint: they darken the
//! albedo exactly like real ones but have no depth. Scene coordinates are mm from
//! the raster corner; pixel `(u, v)` covers `[u, u+1) x [v, v+1)` times the pitch.

use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polyline_distance, segment_distance, GridGeometry};
use crate::io;
use crate::raster::{AlbedoImage, DepthMap, Grid, Mask};

pub const BACKGROUND_ALBEDO: f32 = 0.8;
pub const BACKGROUND_NOISE: f32 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackSpec {
    pub centerline: Vec<[f64; 2]>,
    pub width_mm: f64,
    pub depth_mm: f64,
    pub albedo: f64,
}

impl CrackSpec {
    pub fn is_fake(&self) -> bool {
        self.depth_mm == 0.0
    }

    fn points(&self) -> Vec<Vector3<f64>> {
        self.centerline.iter().map(|p| Vector3::new(p[0], p[1], 0.0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub extent_mm: (f64, f64),
    pub surface_z_mm: f64,
    pub real_cracks: Vec<CrackSpec>,
    pub fake_cracks: Vec<CrackSpec>,
    pub mm_per_px: f64,
}

impl SceneSpec {
    /// Raster placement: scene point `(x, y)` maps to world `(x, y, surface_z_mm)`.
    pub fn geometry(&self) -> Result<GridGeometry> {
        let (w, h) = self.extent_mm;
        let mm = self.mm_per_px;
        if !(w > 0.0 && h > 0.0 && mm > 0.0 && w.is_finite() && h.is_finite() && mm.is_finite()) {
            return Err(Error::Spec(format!("extent {w}x{h} mm at {mm} mm/px is not positive")));
        }
        let (nw, nh) = ((w / mm).round(), (h / mm).round());
        if ((nw * mm - w).abs() > 1e-9 * w.max(1.0)) || ((nh * mm - h).abs() > 1e-9 * h.max(1.0)) {
            return Err(Error::Spec(format!("extent {w}x{h} mm is not a whole number of {mm} mm pixels")));
        }
        GridGeometry::planar(
            nw as usize,
            nh as usize,
            mm,
            Vector3::new(mm / 2.0, mm / 2.0, self.surface_z_mm),
        )
        .map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn validate(&self) -> Result<GridGeometry> {
        let geom = self.geometry()?;
        let (w, h) = self.extent_mm;
        for (kind, cracks, real) in [("real", &self.real_cracks, true), ("fake", &self.fake_cracks, false)] {
            for (i, c) in cracks.iter().enumerate() {
                let name = format!("{kind} crack {i}");
                if c.centerline.len() < 2 {
                    return Err(Error::Spec(format!("{name}: centerline needs at least two points")));
                }
                if !(c.width_mm > 0.0 && c.width_mm.is_finite()) {
                    return Err(Error::Spec(format!("{name}: width must be positive")));
                }
                if !(0.0..=1.0).contains(&c.albedo) {
                    return Err(Error::Spec(format!("{name}: albedo outside [0, 1]")));
                }
                if real != (c.depth_mm > 0.0) || !c.depth_mm.is_finite() {
                    return Err(Error::Spec(format!("{name}: depth {} mm", c.depth_mm)));
                }
                if let Some(p) = c.centerline.iter().find(|p| !(0.0..=w).contains(&p[0]) || !(0.0..=h).contains(&p[1])) {
                    return Err(Error::Spec(format!("{name}: point ({}, {}) outside the {w}x{h} mm extent", p[0], p[1])));
                }
            }
        }
        Ok(geom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub spec: SceneSpec,
    pub albedo: AlbedoImage,
    pub depth: DepthMap,
    pub gt_mask: Mask,
    /// World-frame centerlines of the real cracks, on the surface plane.
    pub gt_centerlines: Vec<Vec<Vector3<f64>>>,
}

impl Scene {
    pub fn geometry(&self) -> &GridGeometry {
        self.depth.geometry()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        io::ensure_dir(dir)?;
        io::write_json(&dir.join("spec.json"), &self.spec)?;
        io::write_f32_grid(&dir.join("albedo.f32"), &self.albedo)?;
        io::write_f32_grid(&dir.join("depth.f32"), &self.depth)?;
        io::write_mask(&dir.join("gt_mask.pgm"), &self.gt_mask)
    }

    /// Loads rasters written by [`Scene::save`] and checks them against the stored scene spec.
    pub fn load(dir: &Path) -> Result<Scene> {
        let spec: SceneSpec = io::read_json(&dir.join("spec.json"))?;
        let geom = spec.validate()?;
        let albedo = io::read_f32_grid(&dir.join("albedo.f32"))?;
        let depth = io::read_f32_grid(&dir.join("depth.f32"))?;
        let gt_mask = io::read_mask(&dir.join("gt_mask.pgm"))?;
        for g in [albedo.geometry(), depth.geometry(), gt_mask.geometry()] {
            if !g.approx_eq(&geom, 1e-9) {
                return Err(Error::Contract(format!(
                    "scene raster is {}x{} px, spec implies {}x{} px",
                    g.width_px(),
                    g.height_px(),
                    geom.width_px(),
                    geom.height_px()
                )));
            }
        }
        let gt_centerlines = centerlines(&spec);
        Ok(Scene { spec, albedo, depth, gt_mask, gt_centerlines })
    }
}

fn centerlines(spec: &SceneSpec) -> Vec<Vec<Vector3<f64>>> {
    spec.real_cracks
        .iter()
        .map(|c| c.centerline.iter().map(|p| Vector3::new(p[0], p[1], spec.surface_z_mm)).collect())
        .collect()
}

/// Calls `f(index)` for every pixel whose center lies within `width/2` of the centerline.
fn for_each_crack_pixel(geom: &GridGeometry, crack: &CrackSpec, mut f: impl FnMut(usize)) {
    let mm = geom.mm_per_px();
    let half = crack.width_mm / 2.0;
    let pts = crack.points();
    let (w, h) = (geom.width_px(), geom.height_px());
    let mut seen = vec![false; w * h];
    for seg in pts.windows(2) {
        let lo = seg[0].inf(&seg[1]).add_scalar(-half);
        let hi = seg[0].sup(&seg[1]).add_scalar(half);
        let u0 = ((lo.x / mm - 0.5).floor().max(0.0)) as usize;
        let v0 = ((lo.y / mm - 0.5).floor().max(0.0)) as usize;
        let u1 = ((hi.x / mm - 0.5).ceil().max(0.0) as usize).min(w - 1);
        let v1 = ((hi.y / mm - 0.5).ceil().max(0.0) as usize).min(h - 1);
        for v in v0..=v1 {
            for u in u0..=u1 {
                let i = v * w + u;
                if seen[i] {
                    continue;
                }
                let c = Vector3::new((u as f64 + 0.5) * mm, (v as f64 + 0.5) * mm, 0.0);
                if segment_distance(&c, &seg[0], &seg[1]) <= half {
                    seen[i] = true;
                    f(i);
                }
            }
        }
    }
}

/// Pixels whose centers lie within half the crack width of its centerline.
pub fn rasterize_crack(geom: &GridGeometry, crack: &CrackSpec) -> Mask {
    let mut m = Mask::empty(*geom);
    for_each_crack_pixel(geom, crack, |i| m.data_mut()[i] = true);
    m
}

/// Rasterizes a scene. Background albedo carries seeded uniform noise; cracks do not.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    let geom = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let albedo_data: Vec<f32> = (0..geom.len())
        .map(|_| BACKGROUND_ALBEDO + rng.random_range(-BACKGROUND_NOISE..=BACKGROUND_NOISE))
        .collect();
    let mut albedo = Grid::from_vec(geom, albedo_data)?;
    let mut depth = Grid::filled(geom, 0.0f32);

    for crack in spec.real_cracks.iter().chain(&spec.fake_cracks) {
        let a = crack.albedo as f32;
        let d = crack.depth_mm as f32;
        for_each_crack_pixel(&geom, crack, |i| {
            let px = &mut albedo.data_mut()[i];
            *px = px.min(a);
            let z = &mut depth.data_mut()[i];
            *z = z.max(d);
        });
    }
    let gt_mask = Grid::from_vec(geom, depth.data().iter().map(|&z| z > 0.0).collect())?;
    Ok(Scene {
        spec: spec.clone(),
        albedo,
        depth,
        gt_mask,
        gt_centerlines: centerlines(spec),
    })
}

/// Knobs for [`random_scene`]. Ranges are half-open `(lo, hi)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomSceneConfig {
    pub mm_per_px: f64,
    pub surface_z_mm: f64,
    pub width_mm: (f64, f64),
    pub depth_mm: (f64, f64),
    pub segments: (usize, usize),
    pub segment_length_mm: (f64, f64),
    pub max_turn_rad: f64,
    /// Minimum distance from the raster border to any centerline point.
    pub margin_mm: f64,
    /// Minimum edge-to-edge gap between different cracks.
    pub clearance_mm: f64,
    pub crack_albedo: f64,
    pub max_attempts: usize,
}

impl Default for RandomSceneConfig {
    fn default() -> Self {
        RandomSceneConfig {
            mm_per_px: 0.25,
            surface_z_mm: 0.0,
            width_mm: (0.5, 3.0),
            depth_mm: (1.0, 3.0),
            segments: (3, 6),
            segment_length_mm: (5.0, 9.0),
            max_turn_rad: 0.5,
            margin_mm: 12.0,
            clearance_mm: 10.0,
            crack_albedo: 0.2,
            max_attempts: 500,
        }
    }
}

fn random_walk(rng: &mut ChaCha8Rng, cfg: &RandomSceneConfig, w: f64, h: f64) -> Option<Vec<[f64; 2]>> {
    let m = cfg.margin_mm;
    if w <= 2.0 * m || h <= 2.0 * m {
        return None;
    }
    let mut p = [rng.random_range(m..w - m), rng.random_range(m..h - m)];
    let mut heading = rng.random_range(0.0..std::f64::consts::TAU);
    let n = rng.random_range(cfg.segments.0..=cfg.segments.1);
    let mut out = vec![p];
    for _ in 0..n {
        let len = rng.random_range(cfg.segment_length_mm.0..cfg.segment_length_mm.1);
        heading += rng.random_range(-cfg.max_turn_rad..=cfg.max_turn_rad);
        p = [p[0] + len * heading.cos(), p[1] + len * heading.sin()];
        if !(m..=w - m).contains(&p[0]) || !(m..=h - m).contains(&p[1]) {
            return None;
        }
        out.push(p);
    }
    Some(out)
}

fn polyline_gap(a: &CrackSpec, b: &CrackSpec) -> f64 {
    let (pa, pb) = (a.points(), b.points());
    let mut best = f64::INFINITY;
    for p in &pa {
        best = best.min(polyline_distance(p, &pb));
    }
    for p in &pb {
        best = best.min(polyline_distance(p, &pa));
    }
    // vertex-to-polyline distances miss crossings
    for sa in pa.windows(2) {
        for sb in pb.windows(2) {
            if segments_cross(&sa[0], &sa[1], &sb[0], &sb[1]) {
                return 0.0;
            }
        }
    }
    best - (a.width_mm + b.width_mm) / 2.0
}

fn segments_cross(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>, d: &Vector3<f64>) -> bool {
    let orient = |p: &Vector3<f64>, q: &Vector3<f64>, r: &Vector3<f64>| (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    let (d1, d2) = (orient(a, b, c), orient(a, b, d));
    let (d3, d4) = (orient(c, d, a), orient(c, d, b));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Seeded random scene with `n_real` grooves and `n_fake` painted marks.
pub fn random_scene(seed: u64, n_real: usize, n_fake: usize, extent_mm: (f64, f64), cfg: &RandomSceneConfig) -> Result<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = extent_mm;
    let mut placed: Vec<CrackSpec> = Vec::with_capacity(n_real + n_fake);
    for k in 0..n_real + n_fake {
        let real = k < n_real;
        let mut attempt = 0;
        let crack = loop {
            attempt += 1;
            if attempt > cfg.max_attempts {
                return Err(Error::Spec(format!(
                    "could not place crack {} of {} in a {w}x{h} mm extent after {} attempts",
                    k + 1,
                    n_real + n_fake,
                    cfg.max_attempts
                )));
            }
            let Some(centerline) = random_walk(&mut rng, cfg, w, h) else { continue };
            let width_mm = rng.random_range(cfg.width_mm.0..=cfg.width_mm.1);
            let depth_mm = if real { rng.random_range(cfg.depth_mm.0..=cfg.depth_mm.1) } else { 0.0 };
            let c = CrackSpec { centerline, width_mm, depth_mm, albedo: cfg.crack_albedo };
            if placed.iter().all(|o| polyline_gap(o, &c) >= cfg.clearance_mm) {
                break c;
            }
        };
        placed.push(crack);
    }
    let fake_cracks = placed.split_off(n_real);
    let spec = SceneSpec {
        seed,
        extent_mm,
        surface_z_mm: cfg.surface_z_mm,
        real_cracks: placed,
        fake_cracks,
        mm_per_px: cfg.mm_per_px,
    };
    spec.validate()?;
    Ok(spec)
}
