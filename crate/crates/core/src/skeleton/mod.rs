//! Skeletonization of crack masks and extraction of their topology.

mod graph;
mod thin;

pub use graph::{classify_keypoints, extract_edges, pixel_kind, Keypoint, KeypointKind, MinimalEdge, SkeletonGraph};
pub use thin::thin;
