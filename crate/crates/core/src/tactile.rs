//! Camera-based optical tactile sensor simulation.
//!
//! A frame is the gel indentation seen by the sensor camera. Each sensor pixel is
//! back-projected onto the gel plane, carried into the world through
//! `T_E^W * T_C^E`, and looked up in the scene's touchable depth.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridGeometry, PinholeIntrinsics, RigidTransform};
use crate::io;
use crate::planner::{ContactPose, TouchPlan};
use crate::raster::Grid;
use crate::simscene::{rasterize_crack, Scene};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    pub intrinsics: PinholeIntrinsics,
    pub image_px: (usize, usize),
    pub view_mm: (f64, f64),
    pub press_depth_mm: f64,
    pub noise_sigma: f64,
    pub sensor_to_effector: RigidTransform,
    pub max_indentation_mm: f64,
    /// Grooves narrower than this are spanned by the gel and feel intact.
    pub bridging_width_mm: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        default_sensor()
    }
}

/// 640x480 px over a 14x10.5 mm view, camera 20 mm behind the gel.
pub fn default_sensor() -> SensorModel {
    let (w, h) = (640usize, 480usize);
    let (vw, vh) = (14.0f64, 10.5f64);
    let zc = 20.0;
    let f = w as f64 * zc / vw;
    SensorModel {
        intrinsics: PinholeIntrinsics::new(f, h as f64 * zc / vh, w as f64 / 2.0, h as f64 / 2.0, zc)
            .expect("default intrinsics are valid"),
        image_px: (w, h),
        view_mm: (vw, vh),
        press_depth_mm: 0.2,
        noise_sigma: 0.0,
        sensor_to_effector: RigidTransform::from_translation(Vector3::new(0.0, 0.0, -zc)),
        max_indentation_mm: 1.0,
        bridging_width_mm: 0.3,
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        let k = &self.intrinsics;
        let (w, h) = self.image_px;
        if w == 0 || h == 0 {
            return Err(Error::Parameter("sensor image must be non-empty".into()));
        }
        let zc = k.plane_depth_mm();
        if (k.fx_px() * self.view_mm.0 / zc - w as f64).abs() > 1e-6
            || (k.fy_px() * self.view_mm.1 / zc - h as f64).abs() > 1e-6
        {
            return Err(Error::Parameter(format!(
                "view {}x{} mm is inconsistent with the intrinsics at {w}x{h} px",
                self.view_mm.0, self.view_mm.1
            )));
        }
        if (k.fx_px() - k.fy_px()).abs() > 1e-9 * k.fx_px() {
            return Err(Error::Parameter("sensor pixels must be square".into()));
        }
        let positive = [self.press_depth_mm, self.max_indentation_mm];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Parameter("press depth and max indentation must be positive".into()));
        }
        let non_negative = |x: f64| x.is_finite() && x >= 0.0;
        if !non_negative(self.noise_sigma) || !non_negative(self.bridging_width_mm) {
            return Err(Error::Parameter("noise sigma and bridging width must be non-negative".into()));
        }
        Ok(())
    }

    /// Gel-plane pitch in mm per sensor pixel.
    pub fn pitch_mm(&self) -> f64 {
        self.intrinsics.plane_depth_mm() / self.intrinsics.fx_px()
    }

    /// Placement of the frame raster on the gel plane, in sensor coordinates.
    pub fn frame_geometry(&self) -> GridGeometry {
        let (w, h) = self.image_px;
        GridGeometry::planar(w, h, self.pitch_mm(), self.intrinsics.pixel_to_sensor(0.0, 0.0))
            .expect("validated sensor has a positive pitch")
    }
}

/// Effector pose for a contact: x along the yaw direction in the surface plane,
/// z into the surface, origin at the contact point.
pub fn effector_to_world(pose: &ContactPose, surface: &GridGeometry) -> RigidTransform {
    let [au, av] = surface.plane_axes();
    let (s, c) = pose.yaw_rad.sin_cos();
    let x = au * c + av * s;
    let y = au * s - av * c;
    let z = -surface.normal();
    RigidTransform::new(Matrix3::from_columns(&[x, y, z]), pose.position).expect("orthonormal by construction")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TactileFrame {
    /// Gel indentation in mm, on [`SensorModel::frame_geometry`].
    pub contact_depth: Grid<f32>,
    pub pose: ContactPose,
    pub effector_to_world: RigidTransform,
    pub press_depth_mm: f64,
    pub ok: bool,
}

impl TactileFrame {
    pub fn max_indentation(&self) -> f32 {
        self.contact_depth.data().iter().copied().fold(0.0, f32::max)
    }
}

/// Groove depth the gel can reach: real cracks at least as wide as the bridging width.
#[derive(Debug, Clone)]
pub struct TouchSurface {
    depth: Grid<f32>,
    /// Touchable pixel bounds `(u0, v0, u1, v1)`, inclusive; `None` if nothing is touchable.
    bounds: Option<(usize, usize, usize, usize)>,
}

impl TouchSurface {
    pub fn new(scene: &Scene, sensor: &SensorModel) -> Self {
        let geom = *scene.geometry();
        let mut reach = vec![false; geom.len()];
        for crack in scene.spec.real_cracks.iter().filter(|c| c.width_mm >= sensor.bridging_width_mm) {
            for (r, m) in reach.iter_mut().zip(rasterize_crack(&geom, crack).data()) {
                *r |= *m;
            }
        }
        let data: Vec<f32> = scene
            .depth
            .data()
            .iter()
            .zip(&reach)
            .map(|(&z, &r)| if r { z } else { 0.0 })
            .collect();
        let depth = Grid::from_vec(geom, data).expect("same shape as the scene");
        let mut bounds: Option<(usize, usize, usize, usize)> = None;
        for (i, _) in depth.data().iter().enumerate().filter(|(_, z)| **z > 0.0) {
            let p = depth.pixel_of(i);
            bounds = Some(match bounds {
                None => (p.u, p.v, p.u, p.v),
                Some((a, b, c, d)) => (a.min(p.u), b.min(p.v), c.max(p.u), d.max(p.v)),
            });
        }
        TouchSurface { depth, bounds }
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.depth.geometry()
    }

    /// Bilinear groove occupancy and depth at fractional pixel `(u, v)`.
    #[inline]
    fn sample(&self, u: f64, v: f64) -> (f64, f64) {
        let (w, h) = (self.depth.width() as isize, self.depth.height() as isize);
        let (fu, fv) = (u.floor(), v.floor());
        let (tu, tv) = (u - fu, v - fv);
        let (iu, iv) = (fu as isize, fv as isize);
        let mut occ = 0.0;
        let mut dep = 0.0;
        for (du, dv, wgt) in [
            (0, 0, (1.0 - tu) * (1.0 - tv)),
            (1, 0, tu * (1.0 - tv)),
            (0, 1, (1.0 - tu) * tv),
            (1, 1, tu * tv),
        ] {
            let (x, y) = (iu + du, iv + dv);
            if x < 0 || y < 0 || x >= w || y >= h {
                continue;
            }
            let z = self.depth.data()[(y * w + x) as usize];
            if z > 0.0 {
                occ += wgt;
                dep += wgt * z as f64;
            }
        }
        (occ, dep)
    }
}

fn check_pose(pose: &ContactPose, geom: &GridGeometry) -> Result<()> {
    let off_plane = (pose.position - geom.world_origin()).dot(&geom.normal());
    if !pose.position.iter().all(|x| x.is_finite()) || !pose.yaw_rad.is_finite() || off_plane.abs() > 1e-6 {
        return Err(Error::Pose(format!("pose {:?} is not on the surface plane", pose.position.as_slice())));
    }
    let (u, v) = geom.world_to_pixel(&pose.position);
    let (w, h) = (geom.width_px() as f64, geom.height_px() as f64);
    if !(-0.5..=w - 0.5).contains(&u) || !(-0.5..=h - 0.5).contains(&v) {
        return Err(Error::Pose(format!("pose at pixel ({u:.2}, {v:.2}) lies outside the {w}x{h} px scene")));
    }
    Ok(())
}

/// Simulates one press against a prepared surface.
pub fn simulate_touch_on(surface: &TouchSurface, sensor: &SensorModel, pose: &ContactPose, seed: u64) -> Result<TactileFrame> {
    sensor.validate()?;
    let geom = surface.geometry();
    check_pose(pose, geom)?;
    let e2w = effector_to_world(pose, geom);
    let chain = e2w.compose(&sensor.sensor_to_effector);
    let k = &sensor.intrinsics;
    let (w, h) = sensor.image_px;

    // the pixel -> scene-pixel map is affine
    let scene_px = |u: f64, v: f64| {
        let (a, b) = geom.world_to_pixel(&chain.apply(&k.pixel_to_sensor(u, v)));
        Vector3::new(a, b, 0.0)
    };
    let o = scene_px(0.0, 0.0);
    let du = scene_px(1.0, 0.0) - o;
    let dv = scene_px(0.0, 1.0) - o;

    let press = sensor.press_depth_mm;
    let mut data = vec![press as f32; w * h];
    let touchable = surface.bounds.is_some_and(|(u0, v0, u1, v1)| {
        let corners = [o, o + du * (w - 1) as f64, o + dv * (h - 1) as f64, o + du * (w - 1) as f64 + dv * (h - 1) as f64];
        let lo = corners.iter().fold(Vector3::repeat(f64::INFINITY), |m, c| m.inf(c));
        let hi = corners.iter().fold(Vector3::repeat(f64::NEG_INFINITY), |m, c| m.sup(c));
        hi.x >= u0 as f64 - 1.0 && lo.x <= u1 as f64 + 1.0 && hi.y >= v0 as f64 - 1.0 && lo.y <= v1 as f64 + 1.0
    });
    if touchable {
        data.par_chunks_mut(w).enumerate().for_each(|(v, row)| {
            let start = o + dv * v as f64;
            for (u, px) in row.iter_mut().enumerate() {
                let p = start + du * u as f64;
                let (occ, dep) = surface.sample(p.x, p.y);
                // half occupancy keeps the groove edge where the raster puts it
                if occ >= 0.5 {
                    *px = (press + dep / occ).min(sensor.max_indentation_mm) as f32;
                }
            }
        });
    }
    if sensor.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, sensor.noise_sigma).map_err(|e| Error::Parameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for px in &mut data {
            *px = (*px as f64 + normal.sample(&mut rng)).max(0.0) as f32;
        }
    }
    let contact_depth = Grid::from_vec(sensor.frame_geometry(), data)?;
    let ok = contact_depth.data().iter().any(|&z| z as f64 >= press);
    Ok(TactileFrame { contact_depth, pose: pose.clone(), effector_to_world: e2w, press_depth_mm: press, ok })
}

pub fn simulate_touch(scene: &Scene, sensor: &SensorModel, pose: &ContactPose, seed: u64) -> Result<TactileFrame> {
    simulate_touch_on(&TouchSurface::new(scene, sensor), sensor, pose, seed)
}

/// Noise seed for the `index`-th frame of a run seeded with `seed`.
pub fn frame_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Executes a plan; frames come back in plan order.
pub fn simulate_plan(scene: &Scene, sensor: &SensorModel, plan: &TouchPlan, seed: u64) -> Result<Vec<TactileFrame>> {
    let surface = TouchSurface::new(scene, sensor);
    plan.contacts
        .par_iter()
        .enumerate()
        .map(|(i, pose)| simulate_touch_on(&surface, sensor, pose, frame_seed(seed, i)))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct FrameMeta {
    pose: ContactPose,
    effector_to_world: RigidTransform,
    press_depth_mm: f64,
    ok: bool,
}

fn frame_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("frame_{i:04}.f32"))
}

fn pose_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("frame_{i:04}.pose.json"))
}

/// Writes `frame_NNNN.f32` with its geometry sidecar and a `frame_NNNN.pose.json`.
pub fn write_frames(dir: &Path, frames: &[TactileFrame]) -> Result<()> {
    io::ensure_dir(dir)?;
    for (i, f) in frames.iter().enumerate() {
        io::write_f32_grid(&frame_path(dir, i), &f.contact_depth)?;
        let meta = FrameMeta {
            pose: f.pose.clone(),
            effector_to_world: f.effector_to_world,
            press_depth_mm: f.press_depth_mm,
            ok: f.ok,
        };
        io::write_json(&pose_path(dir, i), &meta)?;
    }
    Ok(())
}

/// Reads consecutively numbered frames starting at `frame_0000`.
pub fn read_frames(dir: &Path) -> Result<Vec<TactileFrame>> {
    if !dir.is_dir() {
        return Err(Error::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "frame directory not found")));
    }
    let mut frames = Vec::new();
    for i in 0.. {
        let path = frame_path(dir, i);
        if !path.exists() {
            break;
        }
        let contact_depth = io::read_f32_grid(&path)?;
        let meta: FrameMeta = io::read_json(&pose_path(dir, i))?;
        frames.push(TactileFrame {
            contact_depth,
            pose: meta.pose,
            effector_to_world: meta.effector_to_world,
            press_depth_mm: meta.press_depth_mm,
            ok: meta.ok,
        });
    }
    Ok(frames)
}
