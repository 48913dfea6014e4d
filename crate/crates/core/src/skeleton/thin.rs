//! Zhang-Suen thinning.
//!
//! The classic two-subiteration scheme, with two additions so the result is a
//! clean 8-connected skeleton:
//!
//! * a component guard: if a subiteration would delete every pixel of an
//!   8-connected component (2x2 squares, short thick diagonals), the component's
//!   first pixel in scan order survives;
//! * a staircase pass: a pixel with two perpendicular 4-neighbors whose removal
//!   keeps its neighborhood connected (Yokoi number 1) is removed in scan order.
//!
//! Both are repeated until neither changes anything, so the output is a fixed
//! point and `thin` is idempotent.

use crate::raster::Mask;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    First,
    Second,
}

/// Neighbors as `[P2, P3, ..., P9]`: N, NE, E, SE, S, SW, W, NW.
#[inline]
fn ring(mask: &Mask, u: usize, v: usize) -> [bool; 8] {
    let (u, v) = (u as isize, v as isize);
    [
        mask.at(u, v - 1),
        mask.at(u + 1, v - 1),
        mask.at(u + 1, v),
        mask.at(u + 1, v + 1),
        mask.at(u, v + 1),
        mask.at(u - 1, v + 1),
        mask.at(u - 1, v),
        mask.at(u - 1, v - 1),
    ]
}

fn deletable(p: &[bool; 8], step: Step) -> bool {
    let b = p.iter().filter(|&&x| x).count();
    if !(2..=6).contains(&b) {
        return false;
    }
    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
    if a != 1 {
        return false;
    }
    let [p2, _, p4, _, p6, _, p8, _] = *p;
    match step {
        Step::First => !(p2 && p4 && p6) && !(p4 && p6 && p8),
        Step::Second => !(p2 && p4 && p8) && !(p2 && p6 && p8),
    }
}

fn subiteration(mask: &mut Mask, step: Step) -> bool {
    let candidates: Vec<usize> = mask
        .pixels()
        .filter(|p| deletable(&ring(mask, p.u, p.v), step))
        .map(|p| mask.index(p.u, p.v))
        .collect();
    if candidates.is_empty() {
        return false;
    }

    let labels = mask.component_labels();
    let n_comp = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; n_comp];
    for l in labels.iter().flatten() {
        size[*l] += 1;
    }
    let mut doomed = vec![0usize; n_comp];
    let mut first_candidate: Vec<Option<usize>> = vec![None; n_comp];
    for &i in &candidates {
        let l = labels[i].expect("candidate is foreground");
        doomed[l] += 1;
        first_candidate[l].get_or_insert(i);
    }

    let mut changed = false;
    for &i in &candidates {
        let l = labels[i].expect("candidate is foreground");
        if doomed[l] == size[l] && first_candidate[l] == Some(i) {
            continue;
        }
        mask.data_mut()[i] = false;
        changed = true;
    }
    changed
}

/// Yokoi connectivity number in 8-connectivity; 1 means `p` is a simple pixel.
pub(crate) fn yokoi_8(mask: &Mask, u: usize, v: usize) -> usize {
    let (u, v) = (u as isize, v as isize);
    // x1..x8 = E, NE, N, NW, W, SW, S, SE; complemented
    let x: [usize; 8] = [
        mask.at(u + 1, v),
        mask.at(u + 1, v - 1),
        mask.at(u, v - 1),
        mask.at(u - 1, v - 1),
        mask.at(u - 1, v),
        mask.at(u - 1, v + 1),
        mask.at(u, v + 1),
        mask.at(u + 1, v + 1),
    ]
    .map(|b| usize::from(!b));
    [0, 2, 4, 6]
        .iter()
        .map(|&k| x[k] - x[k] * x[(k + 1) % 8] * x[(k + 2) % 8])
        .sum()
}

fn staircase_pass(mask: &mut Mask) -> bool {
    let mut changed = false;
    for i in 0..mask.data().len() {
        if !mask.data()[i] {
            continue;
        }
        let p = mask.pixel_of(i);
        let (u, v) = (p.u as isize, p.v as isize);
        let (n, e, s, w) = (
            mask.at(u, v - 1),
            mask.at(u + 1, v),
            mask.at(u, v + 1),
            mask.at(u - 1, v),
        );
        let corner = (n && e) || (e && s) || (s && w) || (w && n);
        if corner && yokoi_8(mask, p.u, p.v) == 1 {
            mask.data_mut()[i] = false;
            changed = true;
        }
    }
    changed
}

/// Thins a binary mask to a one-pixel-wide, 8-connected skeleton.
pub fn thin(mask: &Mask) -> Mask {
    let mut out = mask.clone();
    loop {
        loop {
            let a = subiteration(&mut out, Step::First);
            let b = subiteration(&mut out, Step::Second);
            if !a && !b {
                break;
            }
        }
        if !staircase_pass(&mut out) {
            break;
        }
    }
    out
}
