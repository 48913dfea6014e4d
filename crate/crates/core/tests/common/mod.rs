//! Test-only oracles, written independently of the library code they check.

#![allow(dead_code)]

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactile_crack::{GridGeometry, Mask};

/// Zero-padded 0/1 image indexed as `img[row][col]`, one pixel of padding each side.
pub type Padded = Vec<Vec<u8>>;

pub fn to_padded(mask: &Mask) -> Padded {
    let (w, h) = (mask.width(), mask.height());
    let mut img = vec![vec![0u8; w + 2]; h + 2];
    for r in 0..h {
        for c in 0..w {
            img[r + 1][c + 1] = u8::from(*mask.get(c, r));
        }
    }
    img
}

pub fn from_padded(img: &Padded, like: &Mask) -> Mask {
    let mut out = Mask::empty(*like.geometry());
    for r in 0..like.height() {
        for c in 0..like.width() {
            out.set(c, r, img[r + 1][c + 1] == 1);
        }
    }
    out
}

/// Flood-fill count of 8-connected foreground components.
pub fn count_components(img: &Padded) -> usize {
    let (h, w) = (img.len(), img[0].len());
    let mut seen = vec![vec![false; w]; h];
    let mut n = 0;
    for r in 0..h {
        for c in 0..w {
            if img[r][c] == 0 || seen[r][c] {
                continue;
            }
            n += 1;
            let mut stack = vec![(r, c)];
            seen[r][c] = true;
            while let Some((y, x)) = stack.pop() {
                for dy in [-1i32, 0, 1] {
                    for dx in [-1i32, 0, 1] {
                        let (yy, xx) = ((y as i32 + dy) as usize, (x as i32 + dx) as usize);
                        if yy < h && xx < w && img[yy][xx] == 1 && !seen[yy][xx] {
                            seen[yy][xx] = true;
                            stack.push((yy, xx));
                        }
                    }
                }
            }
        }
    }
    n
}

fn component_of(img: &Padded, start: (usize, usize)) -> Vec<(usize, usize)> {
    let (h, w) = (img.len(), img[0].len());
    let mut seen = vec![vec![false; w]; h];
    let mut out = vec![start];
    seen[start.0][start.1] = true;
    let mut i = 0;
    while i < out.len() {
        let (y, x) = out[i];
        i += 1;
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                if yy < h && xx < w && img[yy][xx] == 1 && !seen[yy][xx] {
                    seen[yy][xx] = true;
                    out.push((yy, xx));
                }
            }
        }
    }
    out
}

/// Topological simple-pixel test: exactly one 8-component of foreground among the
/// eight neighbors and exactly one 4-component of background 4-adjacent to the pixel.
fn is_simple(img: &Padded, y: usize, x: usize) -> bool {
    // neighbor offsets, clockwise from N
    let ring: [(i32, i32); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];
    let val = |k: usize| img[(y as i32 + ring[k].0) as usize][(x as i32 + ring[k].1) as usize];
    let adjacent8 = |a: usize, b: usize| {
        let (dy, dx) = (ring[a].0 - ring[b].0, ring[a].1 - ring[b].1);
        a != b && dy.abs() <= 1 && dx.abs() <= 1
    };
    let adjacent4 = |a: usize, b: usize| {
        let (dy, dx) = (ring[a].0 - ring[b].0, ring[a].1 - ring[b].1);
        dy.abs() + dx.abs() == 1
    };
    let count = |want: u8, adj: &dyn Fn(usize, usize) -> bool, only_4adjacent: bool| -> usize {
        let mut label = [usize::MAX; 8];
        let mut n = 0;
        for s in 0..8 {
            if val(s) != want || label[s] != usize::MAX {
                continue;
            }
            let mut members = vec![s];
            label[s] = n;
            let mut i = 0;
            #[allow(clippy::needless_range_loop)]
            while i < members.len() {
                let a = members[i];
                i += 1;
                for b in 0..8 {
                    if val(b) == want && label[b] == usize::MAX && adj(a, b) {
                        label[b] = n;
                        members.push(b);
                    }
                }
            }
            // 4-adjacent to the center means containing an even ring position
            if !only_4adjacent || members.iter().any(|m| m % 2 == 0) {
                n += 1;
            } else {
                for m in members {
                    label[m] = usize::MAX - 1;
                }
            }
        }
        n
    };
    count(1, &adjacent8, false) == 1 && count(0, &adjacent4, true) == 1
}

/// Textbook Zhang-Suen plus the component guard and staircase pass, written from scratch.
pub fn reference_thin(mask: &Mask) -> Mask {
    let mut img = to_padded(mask);
    let (h, w) = (img.len(), img[0].len());
    loop {
        loop {
            let mut any = false;
            for step in 0..2 {
                let mut marked = Vec::new();
                for y in 1..h - 1 {
                    for x in 1..w - 1 {
                        if img[y][x] == 0 {
                            continue;
                        }
                        let p2 = img[y - 1][x];
                        let p3 = img[y - 1][x + 1];
                        let p4 = img[y][x + 1];
                        let p5 = img[y + 1][x + 1];
                        let p6 = img[y + 1][x];
                        let p7 = img[y + 1][x - 1];
                        let p8 = img[y][x - 1];
                        let p9 = img[y - 1][x - 1];
                        let seq = [p2, p3, p4, p5, p6, p7, p8, p9, p2];
                        let b: u8 = seq[..8].iter().sum();
                        let a = seq.windows(2).filter(|s| s[0] == 0 && s[1] == 1).count();
                        let (c1, c2) = if step == 0 {
                            (p2 * p4 * p6, p4 * p6 * p8)
                        } else {
                            (p2 * p4 * p8, p2 * p6 * p8)
                        };
                        if (2..=6).contains(&b) && a == 1 && c1 == 0 && c2 == 0 {
                            marked.push((y, x));
                        }
                    }
                }
                if marked.is_empty() {
                    continue;
                }
                // spare the first pixel of any component marked in full
                let mut spared = Vec::new();
                let mut checked = std::collections::HashSet::new();
                for &m in &marked {
                    if checked.contains(&m) {
                        continue;
                    }
                    let comp = component_of(&img, m);
                    let marked_set: std::collections::HashSet<_> = marked.iter().copied().collect();
                    if comp.iter().all(|p| marked_set.contains(p)) {
                        spared.push(*comp.iter().min().unwrap());
                    }
                    checked.extend(comp);
                }
                for &(y, x) in &marked {
                    if !spared.contains(&(y, x)) {
                        img[y][x] = 0;
                        any = true;
                    }
                }
            }
            if !any {
                break;
            }
        }
        let mut stair = false;
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                if img[y][x] == 0 {
                    continue;
                }
                let (n, e, s, wv) = (img[y - 1][x], img[y][x + 1], img[y + 1][x], img[y][x - 1]);
                let corner = (n & e) | (e & s) | (s & wv) | (wv & n);
                if corner == 1 && is_simple(&img, y, x) {
                    img[y][x] = 0;
                    stair = true;
                }
            }
        }
        if !stair {
            break;
        }
    }
    from_padded(&img, mask)
}

pub fn unit_geometry(w: usize, h: usize) -> GridGeometry {
    GridGeometry::planar(w, h, 1.0, Vector3::zeros()).unwrap()
}

/// Union of random discs, rectangles and thick strokes, plus a little salt noise.
pub fn random_blob_mask(seed: u64, w: usize, h: usize) -> Mask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Mask::empty(unit_geometry(w, h));
    let shapes = rng.random_range(2..8);
    for _ in 0..shapes {
        let kind = rng.random_range(0..3);
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        match kind {
            0 => {
                let r = rng.random_range(1.0..9.0f64);
                for v in 0..h {
                    for u in 0..w {
                        if (u as f64 - cx).powi(2) + (v as f64 - cy).powi(2) <= r * r {
                            m.set(u, v, true);
                        }
                    }
                }
            }
            1 => {
                let (rw, rh) = (rng.random_range(1..14), rng.random_range(1..14));
                for v in (cy as usize)..(cy as usize + rh).min(h) {
                    for u in (cx as usize)..(cx as usize + rw).min(w) {
                        m.set(u, v, true);
                    }
                }
            }
            _ => {
                let ang = rng.random_range(0.0..std::f64::consts::PI);
                let len = rng.random_range(5.0..40.0f64);
                let half = rng.random_range(0.5..4.0f64);
                let (dx, dy) = (ang.cos(), ang.sin());
                for v in 0..h {
                    for u in 0..w {
                        let (px, py) = (u as f64 - cx, v as f64 - cy);
                        let t = (px * dx + py * dy).clamp(0.0, len);
                        let (ex, ey) = (px - t * dx, py - t * dy);
                        if ex * ex + ey * ey <= half * half {
                            m.set(u, v, true);
                        }
                    }
                }
            }
        }
    }
    for _ in 0..rng.random_range(0..6) {
        let (u, v) = (rng.random_range(0..w), rng.random_range(0..h));
        m.set(u, v, true);
    }
    m
}

/// True if any 2x2 window is entirely foreground.
pub fn has_2x2_block(mask: &Mask) -> bool {
    (0..mask.height().saturating_sub(1)).any(|v| {
        (0..mask.width().saturating_sub(1)).any(|u| {
            *mask.get(u, v) && *mask.get(u + 1, v) && *mask.get(u, v + 1) && *mask.get(u + 1, v + 1)
        })
    })
}

/// Distance from `p` to segment `ab` by dense sampling of the segment.
pub fn sampled_segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, samples: usize) -> f64 {
    (0..=samples)
        .map(|i| {
            let t = i as f64 / samples as f64;
            (a + (b - a) * t - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}
