//! Keypoints and minimal edges of a thinned skeleton.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GridGeometry;
use crate::raster::{Mask, Pixel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeypointKind {
    End,
    Branch,
}

/// A topological keypoint. Mutually adjacent branch pixels form one keypoint
/// located at the cluster's first pixel in scan order; `cluster` lists all of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keypoint {
    pub pixel: Pixel,
    pub kind: KeypointKind,
    pub cluster: Vec<Pixel>,
}

/// Skeleton path between two keypoints whose interior pixels all have two neighbors.
///
/// Closed loops without keypoints have `p_i == p_j` and their path returns to the
/// start pixel; single isolated pixels are one-pixel edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalEdge {
    pub p_i: Pixel,
    pub p_j: Pixel,
    pub path: Vec<Pixel>,
}

impl MinimalEdge {
    pub fn from_path(path: Vec<Pixel>) -> Self {
        MinimalEdge {
            p_i: path[0],
            p_j: *path.last().expect("non-empty path"),
            path,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.path.len() > 1 && self.p_i == self.p_j
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonGraph {
    pub skeleton: Mask,
    pub keypoints: Vec<Keypoint>,
    pub edges: Vec<MinimalEdge>,
}

/// Raw per-pixel classification: fewer than two 8-neighbors is an end, more than two a branch.
pub fn pixel_kind(skeleton: &Mask, p: Pixel) -> Option<KeypointKind> {
    if !*skeleton.get(p.u, p.v) {
        return None;
    }
    match skeleton.neighbor_count(p) {
        0 | 1 => Some(KeypointKind::End),
        2 => None,
        _ => Some(KeypointKind::Branch),
    }
}

/// End pixels and merged branch clusters, sorted by keypoint pixel.
pub fn classify_keypoints(skeleton: &Mask) -> Vec<Keypoint> {
    let mut keypoints = Vec::new();
    let mut branch = HashSet::new();
    for p in skeleton.pixels() {
        match pixel_kind(skeleton, p) {
            Some(KeypointKind::End) => keypoints.push(Keypoint {
                pixel: p,
                kind: KeypointKind::End,
                cluster: vec![p],
            }),
            Some(KeypointKind::Branch) => {
                branch.insert(p);
            }
            None => {}
        }
    }

    let mut seen = HashSet::new();
    let mut ordered: Vec<Pixel> = branch.iter().copied().collect();
    ordered.sort();
    for start in ordered {
        if !seen.insert(start) {
            continue;
        }
        let mut cluster = vec![start];
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            for q in skeleton.neighbors8(p) {
                if branch.contains(&q) && seen.insert(q) {
                    cluster.push(q);
                    stack.push(q);
                }
            }
        }
        cluster.sort();
        keypoints.push(Keypoint {
            pixel: cluster[0],
            kind: KeypointKind::Branch,
            cluster,
        });
    }
    keypoints.sort_by_key(|k| k.pixel);
    keypoints
}

/// Shortest path from `from` to `to` inside `cluster`, both inclusive.
fn cluster_path(skeleton: &Mask, cluster: &HashSet<Pixel>, from: Pixel, to: Pixel) -> Vec<Pixel> {
    if from == to {
        return vec![from];
    }
    let mut parent: HashMap<Pixel, Pixel> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        if p == to {
            break;
        }
        for q in skeleton.neighbors8(p) {
            if cluster.contains(&q) && q != from && !parent.contains_key(&q) {
                parent.insert(q, p);
                queue.push_back(q);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = parent[&cur];
        path.push(cur);
    }
    path.reverse();
    path
}

fn join(mut head: Vec<Pixel>, tail: impl IntoIterator<Item = Pixel>) -> Vec<Pixel> {
    for p in tail {
        if head.last() != Some(&p) {
            head.push(p);
        }
    }
    head
}

fn canonical(mut path: Vec<Pixel>) -> Vec<Pixel> {
    let n = path.len();
    let reverse = if n > 1 && path[0] == path[n - 1] {
        n > 2 && path[n - 2] < path[1]
    } else {
        path[n - 1] < path[0]
    };
    if reverse {
        path.reverse();
    }
    path
}

/// Traces minimal edges between keypoints, plus closed loops and isolated pixels.
pub fn extract_edges(skeleton: &Mask, keypoints: &[Keypoint]) -> Result<SkeletonGraph> {
    if classify_keypoints(skeleton) != keypoints {
        return Err(Error::Contract(
            "keypoint list is inconsistent with the skeleton".into(),
        ));
    }

    let group: HashMap<Pixel, usize> = keypoints
        .iter()
        .enumerate()
        .flat_map(|(k, kp)| kp.cluster.iter().map(move |&p| (p, k)))
        .collect();
    let clusters: Vec<HashSet<Pixel>> = keypoints
        .iter()
        .map(|kp| kp.cluster.iter().copied().collect())
        .collect();
    let to_key = |k: usize, p: Pixel| cluster_path(skeleton, &clusters[k], keypoints[k].pixel, p);

    let is_on = |p: Pixel| *skeleton.get(p.u, p.v);
    let mut visited = vec![false; skeleton.data().len()];
    let mut direct_pairs = HashSet::new();
    let mut edges = Vec::new();
    let mut has_edge = vec![false; keypoints.len()];

    for (k, kp) in keypoints.iter().enumerate() {
        for &start in &kp.cluster {
            for n in skeleton.neighbors8(start) {
                if !is_on(n) {
                    continue;
                }
                if let Some(&k2) = group.get(&n) {
                    if k2 == k {
                        continue;
                    }
                    let pair = if start < n { (start, n) } else { (n, start) };
                    if direct_pairs.insert(pair) {
                        let mut back = to_key(k2, n);
                        back.reverse();
                        edges.push(join(to_key(k, start), back));
                        has_edge[k] = true;
                        has_edge[k2] = true;
                    }
                    continue;
                }
                let ni = skeleton.index(n.u, n.v);
                if visited[ni] {
                    continue;
                }
                visited[ni] = true;
                let mut walk = vec![n];
                let (mut prev, mut cur) = (start, n);
                let end = loop {
                    let next = skeleton
                        .neighbors8(cur)
                        .find(|&q| is_on(q) && q != prev)
                        .expect("interior pixel has two neighbors");
                    if group.contains_key(&next) {
                        break next;
                    }
                    let qi = skeleton.index(next.u, next.v);
                    visited[qi] = true;
                    walk.push(next);
                    prev = cur;
                    cur = next;
                };
                let k2 = group[&end];
                let mut back = to_key(k2, end);
                back.reverse();
                edges.push(join(join(to_key(k, start), walk), back));
                has_edge[k] = true;
                has_edge[k2] = true;
            }
        }
    }

    // isolated pixels and edge-less clusters become one-pixel edges
    for (k, kp) in keypoints.iter().enumerate() {
        if !has_edge[k] {
            edges.push(vec![kp.pixel]);
        }
    }

    // loops made only of two-neighbor pixels
    for p in skeleton.pixels() {
        let i = skeleton.index(p.u, p.v);
        if visited[i] || group.contains_key(&p) {
            continue;
        }
        visited[i] = true;
        let first = skeleton
            .neighbors8(p)
            .filter(|&q| is_on(q))
            .min()
            .expect("loop pixel has neighbors");
        let mut path = vec![p];
        let (mut prev, mut cur) = (p, first);
        while cur != p {
            visited[skeleton.index(cur.u, cur.v)] = true;
            path.push(cur);
            let next = skeleton
                .neighbors8(cur)
                .find(|&q| is_on(q) && q != prev)
                .expect("loop pixel has two neighbors");
            prev = cur;
            cur = next;
        }
        path.push(p);
        edges.push(path);
    }

    let mut edges: Vec<MinimalEdge> = edges
        .into_iter()
        .map(|path| MinimalEdge::from_path(canonical(path)))
        .collect();
    edges.sort_by(|a, b| a.path.cmp(&b.path));

    Ok(SkeletonGraph {
        skeleton: skeleton.clone(),
        keypoints: keypoints.to_vec(),
        edges,
    })
}

impl SkeletonGraph {
    /// Thins `mask` and extracts its topology.
    pub fn from_mask(mask: &Mask) -> Self {
        let skeleton = super::thin(mask);
        let keypoints = classify_keypoints(&skeleton);
        extract_edges(&skeleton, &keypoints).expect("keypoints derived from the same skeleton")
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.skeleton.geometry()
    }
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    geometry: GridGeometry,
    skeleton: Vec<Pixel>,
    keypoints: Vec<Keypoint>,
    edges: Vec<MinimalEdge>,
}

impl Serialize for SkeletonGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphRepr {
            geometry: *self.skeleton.geometry(),
            skeleton: self.skeleton.pixels().collect(),
            keypoints: self.keypoints.clone(),
            edges: self.edges.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SkeletonGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = GraphRepr::deserialize(d)?;
        let mut skeleton = Mask::empty(r.geometry);
        for p in r.skeleton {
            if p.u >= skeleton.width() || p.v >= skeleton.height() {
                return Err(D::Error::custom(format!("skeleton pixel {p} outside the grid")));
            }
            skeleton.set(p.u, p.v, true);
        }
        Ok(SkeletonGraph {
            skeleton,
            keypoints: r.keypoints,
            edges: r.edges,
        })
    }
}
