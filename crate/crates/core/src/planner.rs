//! Touch planning along skeleton edges, plus the passive raster baseline.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::GridGeometry;
use crate::raster::Pixel;
use crate::skeleton::{MinimalEdge, SkeletonGraph};

/// Default contact spacing: four fifths of the 14 mm sensor view length.
pub const DEFAULT_SPACING_MM: f64 = 11.2;

/// Sensor footprint on the surface, long axis first.
pub const SENSOR_FOOTPRINT_MM: (f64, f64) = (14.0, 10.5);

/// Where and how the sensor is pressed. `yaw_rad` is measured in the surface
/// plane from its first axis and is canonical in `[0, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPose {
    pub position: Vector3<f64>,
    pub yaw_rad: f64,
    pub source_edge: Option<usize>,
    pub source_pixel: Option<Pixel>,
}

#[derive(Serialize, Deserialize)]
struct ContactRepr {
    x_mm: f64,
    y_mm: f64,
    z_mm: f64,
    yaw_rad: f64,
    edge: Option<usize>,
    pixel: Option<Pixel>,
}

impl Serialize for ContactPose {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ContactRepr {
            x_mm: self.position.x,
            y_mm: self.position.y,
            z_mm: self.position.z,
            yaw_rad: self.yaw_rad,
            edge: self.source_edge,
            pixel: self.source_pixel,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ContactPose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ContactRepr::deserialize(d)?;
        if ![r.x_mm, r.y_mm, r.z_mm, r.yaw_rad].iter().all(|x| x.is_finite()) {
            return Err(serde::de::Error::custom("non-finite contact pose"));
        }
        Ok(ContactPose {
            position: Vector3::new(r.x_mm, r.y_mm, r.z_mm),
            yaw_rad: r.yaw_rad,
            source_edge: r.edge,
            source_pixel: r.pixel,
        })
    }
}

/// Ordered contacts. `per_edge_index[e]` lists the indices into `contacts` planned
/// for edge `e`; passive plans have no edges and no spacing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TouchPlan {
    pub contacts: Vec<ContactPose>,
    pub spacing_mm: Option<f64>,
    pub per_edge_index: Vec<Vec<usize>>,
}

impl TouchPlan {
    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    /// Rebuilds the edge index from the contacts' `source_edge` fields.
    pub fn from_contacts(contacts: Vec<ContactPose>) -> Self {
        let n_edges = contacts.iter().filter_map(|c| c.source_edge).max().map_or(0, |m| m + 1);
        let mut per_edge_index = vec![Vec::new(); n_edges];
        for (i, c) in contacts.iter().enumerate() {
            if let Some(e) = c.source_edge {
                per_edge_index[e].push(i);
            }
        }
        TouchPlan { contacts, spacing_mm: None, per_edge_index }
    }
}

impl Serialize for TouchPlan {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.contacts.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TouchPlan {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(TouchPlan::from_contacts(Vec::deserialize(d)?))
    }
}

fn check_spacing(d_mm: f64) -> Result<()> {
    if d_mm.is_finite() && d_mm > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("contact spacing must be positive, got {d_mm}")))
    }
}

fn world(geom: &GridGeometry, p: Pixel) -> Vector3<f64> {
    geom.pixel_to_world(p.u as f64, p.v as f64)
}

/// Greedy contact selection along one edge; returns indices into `edge.path`.
///
/// From the current contact, the next one is the strictly-later path point farthest
/// from it while still closer than `d_mm`. When no later point is that close, the
/// nearest later point is taken instead. The last path point always ends the list.
/// Closed loops are planned over the path without its repeated closing pixel.
pub fn plan_edge_contacts(edge: &MinimalEdge, geom: &GridGeometry, d_mm: f64) -> Result<Vec<usize>> {
    check_spacing(d_mm)?;
    if edge.path.is_empty() {
        return Err(Error::Contract("edge path is empty".into()));
    }
    let n = if edge.is_closed() { edge.path.len() - 1 } else { edge.path.len() };
    let pts: Vec<Vector3<f64>> = edge.path[..n].iter().map(|&p| world(geom, p)).collect();

    let mut picked = vec![0];
    let mut cur = 0;
    while cur + 1 < n {
        let mut best: Option<(usize, f64)> = None;
        let mut nearest = (cur + 1, f64::INFINITY);
        for (j, p) in pts.iter().enumerate().skip(cur + 1) {
            let dist = (p - pts[cur]).norm();
            if dist < d_mm && best.is_none_or(|(_, b)| dist > b) {
                best = Some((j, dist));
            }
            if dist < nearest.1 {
                nearest = (j, dist);
            }
        }
        cur = best.map_or(nearest.0, |(j, _)| j);
        picked.push(cur);
    }
    Ok(picked)
}

/// Folds an angle onto `[0, π)`; the rectangular sensor is symmetric under a half turn.
pub fn canonical_yaw(angle: f64) -> f64 {
    let y = angle.rem_euclid(PI);
    if y >= PI || y == 0.0 {
        0.0
    } else {
        y
    }
}

fn plane_angle(geom: &GridGeometry, from: &Vector3<f64>, to: &Vector3<f64>) -> f64 {
    let [au, av] = geom.plane_axes();
    let d = to - from;
    canonical_yaw(d.dot(&av).atan2(d.dot(&au)))
}

/// Yaw for each contact of each edge; `contacts[e]` holds path indices into `edges[e]`.
///
/// A contact faces its nearest other contact on the same edge, ties broken by the
/// smaller pixel. A lone contact follows the path tangent, a central difference
/// over up to two pixels each way.
pub fn assign_yaw(edges: &[MinimalEdge], contacts: &[Vec<usize>], geom: &GridGeometry) -> Vec<Vec<ContactPose>> {
    edges
        .iter()
        .zip(contacts)
        .enumerate()
        .map(|(e, (edge, idx))| {
            let pts: Vec<Vector3<f64>> = idx.iter().map(|&k| world(geom, edge.path[k])).collect();
            idx.iter()
                .enumerate()
                .map(|(i, &k)| {
                    let nearest = (0..pts.len())
                        .filter(|&j| j != i)
                        .map(|j| (j, (pts[j] - pts[i]).norm()))
                        .filter(|&(_, d)| d > 0.0)
                        // ties go to the smaller pixel so reversing the path changes nothing
                        .min_by(|a, b| a.1.total_cmp(&b.1).then(edge.path[idx[a.0]].cmp(&edge.path[idx[b.0]])));
                    let yaw = match nearest {
                        Some((j, _)) => plane_angle(geom, &pts[i], &pts[j]),
                        None => {
                            let last = edge.path.len() - 1;
                            let a = world(geom, edge.path[k.saturating_sub(2)]);
                            let b = world(geom, edge.path[(k + 2).min(last)]);
                            if a == b {
                                0.0
                            } else {
                                plane_angle(geom, &a, &b)
                            }
                        }
                    };
                    ContactPose {
                        position: pts[i],
                        yaw_rad: yaw,
                        source_edge: Some(e),
                        source_pixel: Some(edge.path[k]),
                    }
                })
                .collect()
        })
        .collect()
}

/// Plans every edge of `graph`, concatenated in edge order.
pub fn build_touch_plan(graph: &SkeletonGraph, geom: &GridGeometry, d_mm: f64) -> Result<TouchPlan> {
    check_spacing(d_mm)?;
    if geom.width_px() != graph.geometry().width_px() || geom.height_px() != graph.geometry().height_px() {
        return Err(Error::Contract("plan geometry does not match the skeleton raster".into()));
    }
    let idx: Vec<Vec<usize>> = graph
        .edges
        .par_iter()
        .map(|e| plan_edge_contacts(e, geom, d_mm))
        .collect::<Result<_>>()?;
    let poses = assign_yaw(&graph.edges, &idx, geom);

    let mut plan = TouchPlan { spacing_mm: Some(d_mm), ..TouchPlan::default() };
    for edge_poses in poses {
        let start = plan.contacts.len();
        plan.per_edge_index.push((start..start + edge_poses.len()).collect());
        plan.contacts.extend(edge_poses);
    }
    Ok(plan)
}

fn raster_centers(extent: f64, footprint: f64, stride: f64) -> Vec<f64> {
    let n = ((extent / stride - 1e-9).ceil() as usize).max(1);
    if n == 1 {
        return vec![extent / 2.0];
    }
    let step = (extent - footprint) / (n - 1) as f64;
    (0..n).map(|i| footprint / 2.0 + step * i as f64).collect()
}

/// Boustrophedon grid of yaw-0 touches covering the whole raster extent.
pub fn plan_passive_raster(geom: &GridGeometry, footprint_mm: (f64, f64), overlap: f64) -> Result<TouchPlan> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Parameter(format!("overlap must lie in [0, 1), got {overlap}")));
    }
    let (fw, fh) = footprint_mm;
    if !(fw > 0.0 && fh > 0.0) {
        return Err(Error::Parameter("footprint must be positive".into()));
    }
    let (w, h) = geom.extent_mm();
    if w + 1e-9 < fw || h + 1e-9 < fh {
        return Err(Error::Parameter(format!("surface {w}x{h} mm is smaller than one {fw}x{fh} mm footprint")));
    }
    let xs = raster_centers(w, fw, fw * (1.0 - overlap));
    let ys = raster_centers(h, fh, fh * (1.0 - overlap));
    let [au, av] = geom.plane_axes();
    let origin = geom.extent_origin();

    let mut contacts = Vec::with_capacity(xs.len() * ys.len());
    for (row, &y) in ys.iter().enumerate() {
        let mut push = |x: f64| {
            contacts.push(ContactPose {
                position: origin + au * x + av * y,
                yaw_rad: 0.0,
                source_edge: None,
                source_pixel: None,
            })
        };
        if row % 2 == 0 {
            xs.iter().for_each(|&x| push(x));
        } else {
            xs.iter().rev().for_each(|&x| push(x));
        }
    }
    Ok(TouchPlan { contacts, spacing_mm: None, per_edge_index: Vec::new() })
}
