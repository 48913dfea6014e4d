//! Rigid transforms, pinhole intrinsics and the physical geometry of world rasters.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthonormality tolerance accepted when a transform is constructed.
pub const ROTATION_TOLERANCE: f64 = 1e-9;
/// Drift beyond which composed rotations are re-orthonormalized.
pub const ROTATION_DRIFT_REPAIR: f64 = 1e-12;

/// Physical placement of a row-major raster: pixel `(u, v)` has its center at
/// `world_origin + mm_per_px * (u * axis_u + v * axis_v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryRepr", into = "GeometryRepr")]
pub struct GridGeometry {
    width_px: usize,
    height_px: usize,
    mm_per_px: f64,
    world_origin: Vector3<f64>,
    axis_u: Vector3<f64>,
    axis_v: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct GeometryRepr {
    width_px: usize,
    height_px: usize,
    mm_per_px: f64,
    world_origin: [f64; 3],
    plane_axes: [[f64; 3]; 2],
}

impl TryFrom<GeometryRepr> for GridGeometry {
    type Error = Error;

    fn try_from(r: GeometryRepr) -> Result<Self> {
        GridGeometry::new(
            r.width_px,
            r.height_px,
            r.mm_per_px,
            Vector3::from(r.world_origin),
            [Vector3::from(r.plane_axes[0]), Vector3::from(r.plane_axes[1])],
        )
    }
}

impl From<GridGeometry> for GeometryRepr {
    fn from(g: GridGeometry) -> Self {
        GeometryRepr {
            width_px: g.width_px,
            height_px: g.height_px,
            mm_per_px: g.mm_per_px,
            world_origin: g.world_origin.into(),
            plane_axes: [g.axis_u.into(), g.axis_v.into()],
        }
    }
}

impl GridGeometry {
    pub fn new(
        width_px: usize,
        height_px: usize,
        mm_per_px: f64,
        world_origin: Vector3<f64>,
        plane_axes: [Vector3<f64>; 2],
    ) -> Result<Self> {
        if width_px == 0 || height_px == 0 {
            return Err(Error::Contract(format!(
                "grid dimensions must be positive, got {width_px}x{height_px}"
            )));
        }
        if !(mm_per_px.is_finite() && mm_per_px > 0.0) {
            return Err(Error::Contract(format!(
                "mm_per_px must be positive, got {mm_per_px}"
            )));
        }
        if !world_origin.iter().all(|c| c.is_finite()) {
            return Err(Error::Contract("world_origin must be finite".into()));
        }
        let [au, av] = plane_axes;
        let orthonormal = (au.norm() - 1.0).abs() <= ROTATION_TOLERANCE
            && (av.norm() - 1.0).abs() <= ROTATION_TOLERANCE
            && au.dot(&av).abs() <= ROTATION_TOLERANCE;
        if !orthonormal {
            return Err(Error::Contract("plane_axes must be orthonormal".into()));
        }
        Ok(GridGeometry {
            width_px,
            height_px,
            mm_per_px,
            world_origin,
            axis_u: au,
            axis_v: av,
        })
    }

    /// Raster lying in a world plane of constant z, with +u along +x and +v along +y.
    pub fn planar(width_px: usize, height_px: usize, mm_per_px: f64, origin: Vector3<f64>) -> Result<Self> {
        Self::new(width_px, height_px, mm_per_px, origin, [Vector3::x(), Vector3::y()])
    }

    pub fn width_px(&self) -> usize {
        self.width_px
    }

    pub fn height_px(&self) -> usize {
        self.height_px
    }

    pub fn len(&self) -> usize {
        self.width_px * self.height_px
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mm_per_px(&self) -> f64 {
        self.mm_per_px
    }

    pub fn world_origin(&self) -> Vector3<f64> {
        self.world_origin
    }

    pub fn plane_axes(&self) -> [Vector3<f64>; 2] {
        [self.axis_u, self.axis_v]
    }

    /// Unit normal of the raster plane (`axis_u x axis_v`).
    pub fn normal(&self) -> Vector3<f64> {
        self.axis_u.cross(&self.axis_v)
    }

    /// Same raster moved by `delta` in world space.
    pub fn translated(&self, delta: Vector3<f64>) -> Self {
        GridGeometry {
            world_origin: self.world_origin + delta,
            ..*self
        }
    }

    /// World position of a (possibly fractional) pixel coordinate.
    pub fn pixel_to_world(&self, u: f64, v: f64) -> Vector3<f64> {
        self.world_origin + self.axis_u * (u * self.mm_per_px) + self.axis_v * (v * self.mm_per_px)
    }

    /// Fractional pixel coordinate of the projection of `p` onto the raster plane.
    pub fn world_to_pixel(&self, p: &Vector3<f64>) -> (f64, f64) {
        let d = p - self.world_origin;
        (d.dot(&self.axis_u) / self.mm_per_px, d.dot(&self.axis_v) / self.mm_per_px)
    }

    /// Physical extent covered by the pixel footprints, in mm along u and v.
    pub fn extent_mm(&self) -> (f64, f64) {
        (
            self.width_px as f64 * self.mm_per_px,
            self.height_px as f64 * self.mm_per_px,
        )
    }

    /// World position of the outer corner of pixel (0,0), where the extent begins.
    pub fn extent_origin(&self) -> Vector3<f64> {
        self.pixel_to_world(-0.5, -0.5)
    }

    pub fn approx_eq(&self, other: &GridGeometry, tol: f64) -> bool {
        self.width_px == other.width_px
            && self.height_px == other.height_px
            && (self.mm_per_px - other.mm_per_px).abs() <= tol
            && (self.world_origin - other.world_origin).amax() <= tol
            && (self.axis_u - other.axis_u).amax() <= tol
            && (self.axis_v - other.axis_v).amax() <= tol
    }
}

/// Proper rigid motion `p -> R p + t` (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformRepr", into = "TransformRepr")]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

/// JSON layout: row-major 3x3 rotation plus translation.
#[derive(Serialize, Deserialize)]
struct TransformRepr {
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl TryFrom<TransformRepr> for RigidTransform {
    type Error = Error;

    fn try_from(r: TransformRepr) -> Result<Self> {
        RigidTransform::new(Matrix3::from_row_slice(&r.rotation), Vector3::from(r.translation))
    }
}

impl From<RigidTransform> for TransformRepr {
    fn from(t: RigidTransform) -> Self {
        let r = &t.rotation;
        TransformRepr {
            rotation: [
                r[(0, 0)], r[(0, 1)], r[(0, 2)],
                r[(1, 0)], r[(1, 1)], r[(1, 2)],
                r[(2, 0)], r[(2, 1)], r[(2, 2)],
            ],
            translation: t.translation.into(),
        }
    }
}

fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).amax()
}

/// Gram-Schmidt on the columns, keeping the first column's direction.
fn reorthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let c0 = r.column(0).normalize();
    let c1 = (r.column(1) - c0 * c0.dot(&r.column(1))).normalize();
    let c2 = c0.cross(&c1);
    Matrix3::from_columns(&[c0, c1, c2])
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|c| c.is_finite()) {
            return Err(Error::Contract("rigid transform entries must be finite".into()));
        }
        if orthonormality_error(&rotation) > ROTATION_TOLERANCE
            || (rotation.determinant() - 1.0).abs() > ROTATION_TOLERANCE
        {
            return Err(Error::Contract(
                "rotation must be orthonormal with determinant +1".into(),
            ));
        }
        Ok(RigidTransform { rotation, translation })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RigidTransform {
            rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            translation: Vector3::zeros(),
        }
    }

    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RigidTransform {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// `self ∘ other`: the result applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let mut rotation = self.rotation * other.rotation;
        if orthonormality_error(&rotation) > ROTATION_DRIFT_REPAIR {
            rotation = reorthonormalize(&rotation);
        }
        RigidTransform {
            rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

/// Pinhole intrinsics of the tactile webcam plus the fixed depth of the gel plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntrinsicsRepr", into = "IntrinsicsRepr")]
pub struct PinholeIntrinsics {
    fx_px: f64,
    fy_px: f64,
    u0_px: f64,
    v0_px: f64,
    plane_depth_mm: f64,
}

#[derive(Serialize, Deserialize)]
struct IntrinsicsRepr {
    fx_px: f64,
    fy_px: f64,
    u0_px: f64,
    v0_px: f64,
    plane_depth_mm: f64,
}

impl TryFrom<IntrinsicsRepr> for PinholeIntrinsics {
    type Error = Error;

    fn try_from(r: IntrinsicsRepr) -> Result<Self> {
        PinholeIntrinsics::new(r.fx_px, r.fy_px, r.u0_px, r.v0_px, r.plane_depth_mm)
    }
}

impl From<PinholeIntrinsics> for IntrinsicsRepr {
    fn from(k: PinholeIntrinsics) -> Self {
        IntrinsicsRepr {
            fx_px: k.fx_px,
            fy_px: k.fy_px,
            u0_px: k.u0_px,
            v0_px: k.v0_px,
            plane_depth_mm: k.plane_depth_mm,
        }
    }
}

impl PinholeIntrinsics {
    pub fn new(fx_px: f64, fy_px: f64, u0_px: f64, v0_px: f64, plane_depth_mm: f64) -> Result<Self> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(positive(fx_px) && positive(fy_px) && positive(plane_depth_mm)) {
            return Err(Error::Contract(
                "fx_px, fy_px and plane_depth_mm must be positive".into(),
            ));
        }
        if !(u0_px.is_finite() && v0_px.is_finite()) {
            return Err(Error::Contract("principal point must be finite".into()));
        }
        Ok(PinholeIntrinsics {
            fx_px,
            fy_px,
            u0_px,
            v0_px,
            plane_depth_mm,
        })
    }

    pub fn fx_px(&self) -> f64 {
        self.fx_px
    }

    pub fn fy_px(&self) -> f64 {
        self.fy_px
    }

    pub fn u0_px(&self) -> f64 {
        self.u0_px
    }

    pub fn v0_px(&self) -> f64 {
        self.v0_px
    }

    pub fn plane_depth_mm(&self) -> f64 {
        self.plane_depth_mm
    }

    /// Back-projects an image pixel onto the gel plane `Z = plane_depth_mm`.
    pub fn pixel_to_sensor(&self, u: f64, v: f64) -> Vector3<f64> {
        let z = self.plane_depth_mm;
        Vector3::new((u - self.u0_px) * z / self.fx_px, (v - self.v0_px) * z / self.fy_px, z)
    }

    /// Projects a sensor-frame point using its own depth.
    pub fn sensor_to_pixel(&self, p: &Vector3<f64>) -> Result<(f64, f64)> {
        if p.z.is_nan() || p.z <= 0.0 {
            return Err(Error::Domain(format!(
                "point depth must be positive for projection, got {}",
                p.z
            )));
        }
        Ok((
            self.fx_px * p.x / p.z + self.u0_px,
            self.fy_px * p.y / p.z + self.v0_px,
        ))
    }
}

/// Exact Euclidean distance from `p` to the closed segment `ab`.
pub fn segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + ab * t - p).norm()
}

/// Shortest distance from `p` to a polyline; a single vertex counts as a point.
/// Infinite for an empty polyline.
pub fn polyline_distance(p: &Vector3<f64>, polyline: &[Vector3<f64>]) -> f64 {
    match polyline {
        [] => f64::INFINITY,
        [only] => (p - only).norm(),
        _ => polyline
            .windows(2)
            .map(|w| segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}
