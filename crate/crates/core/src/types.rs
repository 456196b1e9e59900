//! Shared domain types: features, detections, the 3x3 assessment grid, and
//! the per-frame container moved through the pipeline.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::image::{DepthImage, GrayImage};
use crate::se3::PoseSE3;

/// Lifecycle of a tracked corner. Transitions only run forward:
/// `Static -> PotentialDynamic -> {Static | Removed}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureLabel {
    Static,
    PotentialDynamic,
    Removed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePoint {
    /// Pixel position in the current frame.
    pub position: Vector2<f64>,
    /// Corner response, normalized per frame to [0, 1].
    pub response: f64,
    /// Depth in meters at the feature, `None` when the sensor has no return.
    pub depth: Option<f64>,
    /// Flow vector (px) to the matched position in the reference frame.
    pub flow: Option<Vector2<f64>>,
    pub label: FeatureLabel,
}

impl FeaturePoint {
    pub fn new(position: Vector2<f64>, response: f64) -> Self {
        Self {
            position,
            response,
            depth: None,
            flow: None,
            label: FeatureLabel::Static,
        }
    }
}

/// Axis-aligned pixel rectangle, inclusive of `min`, exclusive of `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn area(&self) -> f64 {
        (self.max_x - self.min_x).max(0.0) * (self.max_y - self.min_y).max(0.0)
    }

    pub fn center(&self) -> Vector2<f64> {
        Vector2::new(
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn clip(&self, width: usize, height: usize) -> Self {
        Self {
            min_x: self.min_x.clamp(0.0, width as f64),
            min_y: self.min_y.clamp(0.0, height as f64),
            max_x: self.max_x.clamp(0.0, width as f64),
            max_y: self.max_y.clamp(0.0, height as f64),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }
}

/// One object detection ingested from file (the detector runs out of process).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_name: String,
    pub confidence: f64,
    pub bbox: BoundingBox,
    /// True when the class is on the prior dynamic list (e.g. "person").
    pub apriori_dynamic: bool,
}

/// Fixed 3x3 partition of the image used by the grid-based metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
    pub width: usize,
    pub height: usize,
}

impl GridLayout {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            rows: 3,
            cols: 3,
            width,
            height,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Cell index of an in-bounds pixel position; positions on or past the
    /// right/bottom edge clamp into the last cell so every in-bounds pixel
    /// maps to exactly one cell.
    pub fn cell_of(&self, x: f64, y: f64) -> usize {
        let col = ((x * self.cols as f64 / self.width as f64) as usize).min(self.cols - 1);
        let row = ((y * self.rows as f64 / self.height as f64) as usize).min(self.rows - 1);
        row * self.cols + col
    }

    /// Pixel bounds `(x0, y0, x1, y1)` of a cell, end-exclusive.
    pub fn cell_bounds(&self, cell: usize) -> (usize, usize, usize, usize) {
        let row = cell / self.cols;
        let col = cell % self.cols;
        let x0 = col * self.width / self.cols;
        let x1 = (col + 1) * self.width / self.cols;
        let y0 = row * self.height / self.rows;
        let y1 = (row + 1) * self.height / self.rows;
        (x0, y0, x1, y1)
    }
}

/// One RGB-D observation with everything the pipeline attaches to it.
#[derive(Debug, Clone)]
pub struct Frame {
    pub id: usize,
    pub timestamp: f64,
    pub gray: GrayImage,
    pub depth: DepthImage,
    pub features: Vec<FeaturePoint>,
    pub detections: Vec<Detection>,
    pub reliability: Option<crate::assessment::ReliabilityRecord>,
    /// Camera-to-world pose once estimated.
    pub pose: Option<PoseSE3>,
}

impl Frame {
    pub fn new(id: usize, timestamp: f64, gray: GrayImage, depth: DepthImage) -> Self {
        Self {
            id,
            timestamp,
            gray,
            depth,
            features: Vec::new(),
            detections: Vec::new(),
            reliability: None,
            pose: None,
        }
    }
}
