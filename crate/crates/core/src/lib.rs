//! Scene-reliability RGB-D SLAM front-end.
//!
//! The pipeline assesses every frame's suitability for feature-based
//! tracking, culls dynamic features adaptively, refines poses with a direct
//! method when reliability is low, and gates keyframing and optimization on
//! the per-frame reliability. Runs on TUM-format sequences and on synthetic
//! scenes with exact ground truth.

pub mod assessment;
pub mod camera;
pub mod error;
pub mod flow;
pub mod image;
mod parallel;
pub mod se3;
pub mod types;

pub use camera::CameraIntrinsics;
pub use error::{Error, Result};
pub use image::{DepthImage, GrayImage};
pub use se3::{PoseSE3, Twist};
pub use types::{BoundingBox, Detection, FeatureLabel, FeaturePoint, Frame, GridLayout};
