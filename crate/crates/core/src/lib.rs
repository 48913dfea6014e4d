//! Vision-guided active tactile crack detection and reconstruction.
//!
//! The pipeline, stage by stage:
//!
//! 1. [`segment`]: a visual crack mask is produced from an albedo raster (or ingested).
//! 2. [`skeleton`]: the mask is thinned and split into keypoints and minimal edges.
//! 3. [`planner`]: each minimal edge gets a greedy sequence of tactile contacts.
//! 4. [`tactile`]: a camera-based optical tactile sensor is simulated at each contact.
//! 5. [`fusion`]: tactile masks reject painted false positives and are lifted to
//!    world-frame crack points through the pinhole model and the transform chain.
//! 6. [`harness`]: detection and reconstruction metrics for the vision, aligned-vision,
//!    passive-tactile and active-tactile methods.
//!
//! [`simscene`] generates the synthetic structures all of this is evaluated on.

pub mod error;
pub mod fusion;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod planner;
pub mod raster;
pub mod segment;
pub mod simscene;
pub mod skeleton;
pub mod tactile;

pub use error::{Error, Result};
pub use geometry::{GridGeometry, PinholeIntrinsics, RigidTransform};
pub use raster::{AlbedoImage, DepthMap, Grid, Mask, Pixel};
