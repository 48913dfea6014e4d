//! Row-major rasters with physical geometry.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GridGeometry;

/// Integer pixel coordinate. Ordering follows row-major scan order (`v`, then `u`),
/// which is the tie-break order used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Pixel {
    pub u: usize,
    pub v: usize,
}

impl Pixel {
    pub const fn new(u: usize, v: usize) -> Self {
        Pixel { u, v }
    }

    /// Chebyshev adjacency (8-neighborhood), excluding the pixel itself.
    pub fn is_adjacent(&self, other: &Pixel) -> bool {
        self != other && self.u.abs_diff(other.u) <= 1 && self.v.abs_diff(other.v) <= 1
    }
}

impl Ord for Pixel {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.v, self.u).cmp(&(other.v, other.u))
    }
}

impl PartialOrd for Pixel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<[usize; 2]> for Pixel {
    fn from(a: [usize; 2]) -> Self {
        Pixel::new(a[0], a[1])
    }
}

impl From<Pixel> for [usize; 2] {
    fn from(p: Pixel) -> Self {
        [p.u, p.v]
    }
}

impl fmt::Display for Pixel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

/// Offsets of the 8-neighborhood in row-major order.
pub const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    geometry: GridGeometry,
    data: Vec<T>,
}

/// Binary crack mask.
pub type Mask = Grid<bool>;
/// Groove depth below the nominal surface, mm (0 = intact).
pub type DepthMap = Grid<f32>;
/// Surface reflectance in [0, 1].
pub type AlbedoImage = Grid<f32>;

impl<T: Clone> Grid<T> {
    pub fn filled(geometry: GridGeometry, value: T) -> Self {
        Grid {
            data: vec![value; geometry.len()],
            geometry,
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(geometry: GridGeometry, data: Vec<T>) -> Result<Self> {
        if data.len() != geometry.len() {
            return Err(Error::Contract(format!(
                "grid data has {} elements, geometry {}x{} needs {}",
                data.len(),
                geometry.width_px(),
                geometry.height_px(),
                geometry.len()
            )));
        }
        Ok(Grid { geometry, data })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn width(&self) -> usize {
        self.geometry.width_px()
    }

    pub fn height(&self) -> usize {
        self.geometry.height_px()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width() + u
    }

    #[inline]
    pub fn pixel_of(&self, index: usize) -> Pixel {
        Pixel::new(index % self.width(), index / self.width())
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> &T {
        &self.data[self.index(u, v)]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: T) {
        let i = self.index(u, v);
        self.data[i] = value;
    }

    pub fn contains(&self, u: isize, v: isize) -> bool {
        u >= 0 && v >= 0 && (u as usize) < self.width() && (v as usize) < self.height()
    }

    /// In-bounds 8-neighbors of `p`, in row-major order.
    pub fn neighbors8(&self, p: Pixel) -> impl Iterator<Item = Pixel> + '_ {
        NEIGHBORS_8.iter().filter_map(move |&(du, dv)| {
            let (u, v) = (p.u as isize + du, p.v as isize + dv);
            self.contains(u, v).then(|| Pixel::new(u as usize, v as usize))
        })
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.width() == other.width() && self.height() == other.height()
    }
}

impl Grid<bool> {
    pub fn empty(geometry: GridGeometry) -> Self {
        Grid::filled(geometry, false)
    }

    /// True at `(u, v)`; out-of-bounds reads as background.
    #[inline]
    pub fn at(&self, u: isize, v: isize) -> bool {
        self.contains(u, v) && *self.get(u as usize, v as usize)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Foreground pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.pixel_of(i))
    }

    /// Number of foreground 8-neighbors.
    pub fn neighbor_count(&self, p: Pixel) -> usize {
        self.neighbors8(p).filter(|q| *self.get(q.u, q.v)).count()
    }

    /// 8-connected foreground components, each sorted row-major, ordered by first pixel.
    pub fn components(&self) -> Vec<Vec<Pixel>> {
        let labels = self.component_labels();
        let n = labels.iter().flatten().max().map_or(0, |m| m + 1);
        let mut comps = vec![Vec::new(); n];
        for (i, l) in labels.iter().enumerate() {
            if let Some(l) = l {
                comps[*l].push(self.pixel_of(i));
            }
        }
        comps
    }

    /// Per-pixel 8-connected component label, numbered in row-major discovery order.
    pub fn component_labels(&self) -> Vec<Option<usize>> {
        let mut labels = vec![None; self.data.len()];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..self.data.len() {
            if !self.data[start] || labels[start].is_some() {
                continue;
            }
            labels[start] = Some(next);
            stack.push(start);
            while let Some(i) = stack.pop() {
                let p = self.pixel_of(i);
                for q in self.neighbors8(p) {
                    let j = self.index(q.u, q.v);
                    if self.data[j] && labels[j].is_none() {
                        labels[j] = Some(next);
                        stack.push(j);
                    }
                }
            }
            next += 1;
        }
        labels
    }

    /// Drops 8-connected components with fewer than `min_px` pixels.
    pub fn remove_small_components(&mut self, min_px: usize) {
        if min_px <= 1 {
            return;
        }
        for comp in self.components() {
            if comp.len() < min_px {
                for p in comp {
                    self.set(p.u, p.v, false);
                }
            }
        }
    }
}

impl Grid<f32> {
    /// Bilinear sample at a fractional pixel coordinate; samples outside the raster read `outside`.
    pub fn bilinear(&self, u: f64, v: f64, outside: f32) -> f64 {
        let (u0, v0) = (u.floor(), v.floor());
        let (fu, fv) = (u - u0, v - v0);
        let (u0, v0) = (u0 as isize, v0 as isize);
        let sample = |du: isize, dv: isize| -> f64 {
            let (x, y) = (u0 + du, v0 + dv);
            if self.contains(x, y) {
                *self.get(x as usize, y as usize) as f64
            } else {
                outside as f64
            }
        };
        let top = sample(0, 0) * (1.0 - fu) + sample(1, 0) * fu;
        let bottom = sample(0, 1) * (1.0 - fu) + sample(1, 1) * fu;
        top * (1.0 - fv) + bottom * fv
    }
}
