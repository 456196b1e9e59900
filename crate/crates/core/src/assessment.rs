//! Per-frame scene reliability assessment.
//!
//! Four complementary metrics (detection confidence, object spatial layout,
//! feature quality, depth quality) sum to the current reliability `R_c`. The
//! motion residual `R_r` against a reference frame attenuates `R_c` into the
//! final reliability `R`, which is thresholded into GOOD/BAD. Empty inputs
//! (no detections, empty grid cells, all-invalid depth cells) contribute 0 —
//! pessimistic for a reliability score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowField, TrackStatus};
use crate::image::{DepthImage, GrayImage};
use crate::types::{Detection, FeaturePoint, GridLayout};

/// How the motion residual attenuates the current reliability.
///
/// The printed fusion formula multiplies by `R_r / R_cb`, which *raises*
/// reliability with motion; the surrounding description says reliability is
/// reduced in dynamic scenes. Both readings are available; `ProseConsistent`
/// (the reduction) is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AttenuationMode {
    Literal,
    #[default]
    ProseConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssessmentConfig {
    /// GOOD/BAD classification threshold.
    pub th_scene: f64,
    /// Motion-residual baseline (px); full attenuation at this residual.
    pub r_change_baseline: f64,
    /// Cap on per-cell depth standard deviation (m).
    pub c_m: f64,
    /// Cap on per-cell mean depth gradient (m/px).
    pub s_m: f64,
    /// Number of leading frames scanned to pick the initial reference.
    pub init_window: usize,
    pub attenuation_mode: AttenuationMode,
}

impl Default for AssessmentConfig {
    fn default() -> Self {
        Self {
            th_scene: 0.20,
            r_change_baseline: 60.0,
            c_m: 2.0,
            s_m: 0.5,
            init_window: 5,
            attenuation_mode: AttenuationMode::ProseConsistent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SceneLabel {
    Good,
    Bad,
}

impl std::fmt::Display for SceneLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SceneLabel::Good => write!(f, "GOOD"),
            SceneLabel::Bad => write!(f, "BAD"),
        }
    }
}

/// The full assessment of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRecord {
    pub r_conf: f64,
    pub r_spatial: f64,
    pub r_feature: f64,
    pub r_depth: f64,
    /// Sum of the four metrics.
    pub r_current: f64,
    /// Motion residual against the reference frame (px).
    pub r_motion: f64,
    /// Final fused reliability.
    pub r_final: f64,
    pub label: SceneLabel,
    /// Set when the motion residual had no tracked points to average.
    pub no_tracks: bool,
}

/// Mean detection confidence; 0 with no detections.
pub fn metric_confidence(detections: &[Detection]) -> f64 {
    if detections.is_empty() {
        return 0.0;
    }
    detections.iter().map(|d| d.confidence).sum::<f64>() / detections.len() as f64
}

/// Object layout metric: per object, an area term `max(0, 1 - A_i/A_t)` plus
/// a centrality term `1 - min(1, d_i/d_m)`, averaged over detections.
pub fn metric_spatial(detections: &[Detection], width: usize, height: usize) -> f64 {
    if detections.is_empty() {
        return 0.0;
    }
    let total_area = (width * height) as f64;
    let center = nalgebra::Vector2::new(width as f64 / 2.0, height as f64 / 2.0);
    let diagonal = ((width * width + height * height) as f64).sqrt();
    let sum: f64 = detections
        .iter()
        .map(|d| {
            let area_term = (1.0 - d.bbox.area() / total_area).max(0.0);
            let dist = (d.bbox.center() - center).norm();
            let dist_term = 1.0 - (dist / diagonal).min(1.0);
            area_term + dist_term
        })
        .sum();
    sum / detections.len() as f64
}

/// Feature quality metric over the 3x3 grid: per non-empty cell, the mean
/// response plus `1 / (1 + sqrt(var))` where `var` is the population variance
/// of responses in the cell; averaged over all `G` cells, empty cells
/// contributing 0.
pub fn metric_feature(features: &[FeaturePoint], grid: &GridLayout) -> f64 {
    let g = grid.cell_count();
    let mut sums = vec![0.0f64; g];
    let mut sq_sums = vec![0.0f64; g];
    let mut counts = vec![0usize; g];
    for f in features {
        let cell = grid.cell_of(f.position.x, f.position.y);
        sums[cell] += f.response;
        sq_sums[cell] += f.response * f.response;
        counts[cell] += 1;
    }
    let mut total = 0.0;
    for cell in 0..g {
        if counts[cell] == 0 {
            continue;
        }
        let n = counts[cell] as f64;
        let mean = sums[cell] / n;
        let var = (sq_sums[cell] / n - mean * mean).max(0.0);
        total += mean + 1.0 / (1.0 + var.sqrt());
    }
    total / g as f64
}

/// Depth quality metric over the 3x3 grid: per cell with any valid depth,
/// valid-pixel coverage, a bounded inverse depth spread, and a bounded
/// inverse forward-difference gradient mean; cells without valid depth
/// contribute 0.
pub fn metric_depth(depth: &DepthImage, grid: &GridLayout, cfg: &AssessmentConfig) -> f64 {
    let g = grid.cell_count();
    let cells = crate::parallel::map_collect(g, |cell| {
        let (x0, y0, x1, y1) = grid.cell_bounds(cell);
        let total = ((x1 - x0) * (y1 - y0)) as f64;
        if total == 0.0 {
            return 0.0;
        }
        let mut n_valid = 0usize;
        let mut sum = 0.0;
        let mut sq_sum = 0.0;
        let mut grad_sum = 0.0;
        let mut grad_n = 0usize;
        for y in y0..y1 {
            for x in x0..x1 {
                let Some(d) = depth.get(x, y) else { continue };
                n_valid += 1;
                sum += d;
                sq_sum += d * d;
                if x + 1 < x1 {
                    if let Some(dr) = depth.get(x + 1, y) {
                        grad_sum += (dr - d).abs();
                        grad_n += 1;
                    }
                }
                if y + 1 < y1 {
                    if let Some(db) = depth.get(x, y + 1) {
                        grad_sum += (db - d).abs();
                        grad_n += 1;
                    }
                }
            }
        }
        if n_valid == 0 {
            return 0.0;
        }
        let nf = n_valid as f64;
        let mean = sum / nf;
        let std = (sq_sum / nf - mean * mean).max(0.0).sqrt();
        let grad_mean = if grad_n > 0 { grad_sum / grad_n as f64 } else { 0.0 };
        let coverage = nf / total;
        let spread_term = 1.0 - (std / cfg.c_m).min(1.0);
        let grad_term = 1.0 - (grad_mean / cfg.s_m).min(1.0);
        coverage + spread_term + grad_term
    });
    cells.iter().sum::<f64>() / g as f64
}

/// Exact sum of the four metrics.
pub fn current_reliability(r_conf: f64, r_spatial: f64, r_feature: f64, r_depth: f64) -> f64 {
    r_conf + r_spatial + r_feature + r_depth
}

/// Motion residual: mean tracked-flow magnitude plus the grid-mean of the
/// per-cell mean-flow-vector norms. Returns `(residual, no_tracks)`.
pub fn motion_residual(
    features: &[FeaturePoint],
    flow: &FlowField,
    grid: &GridLayout,
) -> (f64, bool) {
    let g = grid.cell_count();
    let mut cell_sums = vec![nalgebra::Vector2::zeros(); g];
    let mut cell_counts = vec![0usize; g];
    let mut mag_sum = 0.0;
    let mut tracked = 0usize;
    for (i, f) in features.iter().enumerate() {
        let Some(TrackStatus::Tracked { flow: v, .. }) = flow.entries.get(i).copied() else {
            continue;
        };
        tracked += 1;
        mag_sum += v.norm();
        let cell = grid.cell_of(f.position.x, f.position.y);
        cell_sums[cell] += v;
        cell_counts[cell] += 1;
    }
    if tracked == 0 {
        return (0.0, true);
    }
    let point_term = mag_sum / tracked as f64;
    let grid_term = (0..g)
        .map(|c| {
            if cell_counts[c] == 0 {
                0.0
            } else {
                (cell_sums[c] / cell_counts[c] as f64).norm()
            }
        })
        .sum::<f64>()
        / g as f64;
    (point_term + grid_term, false)
}

/// Weighted fusion of motion residual and current reliability plus the
/// GOOD/BAD decision. `r_motion = None` during initialization, where the
/// change component is excluded and `R = R_c`.
pub fn fuse_and_classify(
    r_current: f64,
    r_motion: Option<f64>,
    cfg: &AssessmentConfig,
) -> (f64, SceneLabel) {
    let r_final = match r_motion {
        None => r_current,
        Some(rr) => match cfg.attenuation_mode {
            AttenuationMode::Literal => (rr / cfg.r_change_baseline) * r_current,
            AttenuationMode::ProseConsistent => {
                (1.0 - rr / cfg.r_change_baseline).max(0.0) * r_current
            }
        },
    };
    let label = if r_final >= cfg.th_scene {
        SceneLabel::Good
    } else {
        SceneLabel::Bad
    };
    (r_final, label)
}

/// Reference frame retained for motion-residual computation: the
/// highest-`R_c` frame seen so far.
#[derive(Debug, Clone)]
pub struct ReferenceFrame {
    pub frame_id: usize,
    pub gray: GrayImage,
    pub features: Vec<FeaturePoint>,
    pub r_current: f64,
}

/// Pick the reference among the initialization window: argmax `R_c`, ties
/// broken by the earliest frame.
pub fn initialize_reference<'a, I>(frames: I) -> Result<ReferenceFrame>
where
    I: IntoIterator<Item = (usize, &'a GrayImage, &'a [FeaturePoint], f64)>,
{
    let mut best: Option<ReferenceFrame> = None;
    for (frame_id, gray, features, r_current) in frames {
        let replace = match &best {
            None => true,
            Some(b) => r_current > b.r_current,
        };
        if replace {
            best = Some(ReferenceFrame {
                frame_id,
                gray: gray.clone(),
                features: features.to_vec(),
                r_current,
            });
        }
    }
    best.ok_or(Error::NoFrames)
}

/// Replace the reference iff the current frame's `R_c` is strictly higher.
pub fn maybe_update_reference(
    reference: &mut ReferenceFrame,
    frame_id: usize,
    gray: &GrayImage,
    features: &[FeaturePoint],
    r_current: f64,
) -> bool {
    if r_current > reference.r_current {
        *reference = ReferenceFrame {
            frame_id,
            gray: gray.clone(),
            features: features.to_vec(),
            r_current,
        };
        true
    } else {
        false
    }
}

/// Assemble a full record from precomputed metrics.
pub fn assess(
    r_conf: f64,
    r_spatial: f64,
    r_feature: f64,
    r_depth: f64,
    r_motion: Option<f64>,
    no_tracks: bool,
    cfg: &AssessmentConfig,
) -> ReliabilityRecord {
    let r_current = current_reliability(r_conf, r_spatial, r_feature, r_depth);
    let (r_final, label) = fuse_and_classify(r_current, r_motion, cfg);
    ReliabilityRecord {
        r_conf,
        r_spatial,
        r_feature,
        r_depth,
        r_current,
        r_motion: r_motion.unwrap_or(0.0),
        r_final,
        label,
        no_tracks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BoundingBox;
    use nalgebra::Vector2;

    fn det(conf: f64, bbox: BoundingBox) -> Detection {
        Detection {
            class_name: "person".into(),
            confidence: conf,
            bbox,
            apriori_dynamic: true,
        }
    }

    fn feature_at(x: f64, y: f64, response: f64) -> FeaturePoint {
        FeaturePoint::new(Vector2::new(x, y), response)
    }

    #[test]
    fn confidence_is_arithmetic_mean() {
        let full = BoundingBox::new(0.0, 0.0, 1.0, 1.0);
        assert_eq!(
            metric_confidence(&[det(0.8, full), det(0.6, full)]),
            0.7
        );
        assert_eq!(metric_confidence(&[]), 0.0);
        assert_eq!(metric_confidence(&[det(0.95, full)]), 0.95);
    }

    #[test]
    fn spatial_full_frame_centered_box() {
        let b = BoundingBox::new(0.0, 0.0, 640.0, 480.0);
        let v = metric_spatial(&[det(0.9, b)], 640, 480);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spatial_zero_area_corner_box() {
        // 640x480 diagonal is 800; a point box at the corner sits 400 from
        // the center: area term 1, distance term 0.5.
        let b = BoundingBox::new(0.0, 0.0, 0.0, 0.0);
        let v = metric_spatial(&[det(0.9, b)], 640, 480);
        assert!((v - 1.5).abs() < 1e-12);
        assert_eq!(metric_spatial(&[], 640, 480), 0.0);
    }

    #[test]
    fn feature_metric_empty_and_uniform() {
        let grid = GridLayout::new(90, 90);
        assert_eq!(metric_feature(&[], &grid), 0.0);
        // One unit-response feature in every cell: each contributes 1 + 1.
        let feats: Vec<_> = (0..9)
            .map(|c| {
                let (x0, y0, x1, y1) = grid.cell_bounds(c);
                feature_at(
                    (x0 + x1) as f64 / 2.0,
                    (y0 + y1) as f64 / 2.0,
                    1.0,
                )
            })
            .collect();
        let v = metric_feature(&feats, &grid);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn feature_metric_single_cell_with_variance() {
        // Responses {0, 1} in one cell: mean 0.5, population variance 0.25,
        // so the cell contributes 0.5 + 1/1.5 and the grid mean divides by 9.
        let grid = GridLayout::new(90, 90);
        let feats = vec![feature_at(1.0, 1.0, 0.0), feature_at(2.0, 2.0, 1.0)];
        let v = metric_feature(&feats, &grid);
        let expected = (0.5 + 1.0 / 1.5) / 9.0;
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.12963).abs() < 1e-5);
    }

    #[test]
    fn depth_metric_constant_and_invalid() {
        let cfg = AssessmentConfig::default();
        let grid = GridLayout::new(30, 30);
        let d = DepthImage::new(30, 30, vec![2.0; 900]);
        assert!((metric_depth(&d, &grid, &cfg) - 3.0).abs() < 1e-12);
        let d = DepthImage::invalid(30, 30);
        assert_eq!(metric_depth(&d, &grid, &cfg), 0.0);
    }

    #[test]
    fn depth_metric_half_valid_cells() {
        // Left half of every cell valid at constant depth: coverage 0.5,
        // zero spread, zero gradient -> 2.5 per cell.
        let cfg = AssessmentConfig::default();
        let grid = GridLayout::new(30, 30);
        let mut data = vec![0.0; 900];
        for y in 0..30 {
            for x in 0..30 {
                let cell_x0 = (x / 10) * 10;
                if x - cell_x0 < 5 {
                    data[y * 30 + x] = 2.0;
                }
            }
        }
        let d = DepthImage::new(30, 30, data);
        assert!((metric_depth(&d, &grid, &cfg) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn current_reliability_is_exact_sum() {
        assert_eq!(current_reliability(0.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(current_reliability(0.7, 1.0, 2.0, 3.0), 6.7);
    }

    #[test]
    fn motion_residual_uniform_and_cancelling() {
        let grid = GridLayout::new(90, 90);
        let feats = vec![feature_at(10.0, 10.0, 1.0), feature_at(12.0, 12.0, 1.0)];
        let mk_flow = |flows: Vec<Vector2<f64>>| FlowField {
            entries: flows
                .into_iter()
                .map(|v| TrackStatus::Tracked {
                    matched: Vector2::new(0.0, 0.0),
                    flow: v,
                })
                .collect(),
        };
        // All zero.
        let (r, warn) = motion_residual(&feats, &mk_flow(vec![Vector2::zeros(); 2]), &grid);
        assert_eq!(r, 0.0);
        assert!(!warn);
        // Shared (3,4) inside a single cell: point term 5, and only one of
        // the nine cells carries a mean vector, so the grid term is 5/9.
        let (r, _) = motion_residual(
            &feats,
            &mk_flow(vec![Vector2::new(3.0, 4.0), Vector2::new(3.0, 4.0)]),
            &grid,
        );
        assert!((r - (5.0 + 5.0 / 9.0)).abs() < 1e-12);
        // Opposite flows in one cell cancel in the grid term.
        let (r, _) = motion_residual(
            &feats,
            &mk_flow(vec![Vector2::new(1.0, 0.0), Vector2::new(-1.0, 0.0)]),
            &grid,
        );
        assert!((r - 1.0).abs() < 1e-12);
        // No tracked points.
        let lost = FlowField {
            entries: vec![TrackStatus::Lost; 2],
        };
        let (r, warn) = motion_residual(&feats, &lost, &grid);
        assert_eq!(r, 0.0);
        assert!(warn);
    }

    #[test]
    fn uniform_flow_every_cell_gives_double_magnitude() {
        // One feature per cell, all flowing (3,4): point term 5, grid term 5.
        let grid = GridLayout::new(90, 90);
        let feats: Vec<_> = (0..9)
            .map(|c| {
                let (x0, y0, x1, y1) = grid.cell_bounds(c);
                feature_at((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0, 1.0)
            })
            .collect();
        let flow = FlowField {
            entries: (0..9)
                .map(|_| TrackStatus::Tracked {
                    matched: Vector2::zeros(),
                    flow: Vector2::new(3.0, 4.0),
                })
                .collect(),
        };
        let (r, _) = motion_residual(&feats, &flow, &grid);
        assert!((r - 10.0).abs() < 1e-12);
    }

    #[test]
    fn fusion_modes_and_classification() {
        let cfg = AssessmentConfig::default();
        // No motion, prose-consistent: no attenuation.
        let (r, label) = fuse_and_classify(1.0, Some(0.0), &cfg);
        assert_eq!(r, 1.0);
        assert_eq!(label, SceneLabel::Good);
        // Full attenuation at the baseline.
        let (r, label) = fuse_and_classify(5.0, Some(60.0), &cfg);
        assert_eq!(r, 0.0);
        assert_eq!(label, SceneLabel::Bad);
        // Literal mode reproduces the printed product.
        let lit = AssessmentConfig {
            attenuation_mode: AttenuationMode::Literal,
            ..cfg
        };
        let (r, label) = fuse_and_classify(0.5, Some(30.0), &lit);
        assert!((r - 0.25).abs() < 1e-12);
        assert_eq!(label, SceneLabel::Good);
        // Initialization excludes the change component.
        let (r, _) = fuse_and_classify(0.5, None, &cfg);
        assert_eq!(r, 0.5);
    }

    #[test]
    fn threshold_comparison_is_inclusive() {
        let cfg = AssessmentConfig::default();
        let (_, label) = fuse_and_classify(cfg.th_scene, None, &cfg);
        assert_eq!(label, SceneLabel::Good);
    }

    #[test]
    fn reference_selection_and_update() {
        let gray = GrayImage::zeros(4, 4);
        let feats: Vec<FeaturePoint> = Vec::new();
        let frames = |rcs: &[f64]| {
            rcs.iter()
                .enumerate()
                .map(|(i, &rc)| (i, &gray, feats.as_slice(), rc))
                .collect::<Vec<_>>()
        };
        let r = initialize_reference(frames(&[1.0, 3.0, 2.0, 0.0, 0.0])).unwrap();
        assert_eq!(r.frame_id, 1);
        let r = initialize_reference(frames(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(r.frame_id, 0);
        let r = initialize_reference(frames(&[0.5])).unwrap();
        assert_eq!(r.frame_id, 0);
        assert!(matches!(
            initialize_reference(frames(&[])),
            Err(Error::NoFrames)
        ));

        let mut rf = initialize_reference(frames(&[1.0])).unwrap();
        assert!(!maybe_update_reference(&mut rf, 5, &gray, &feats, 1.0));
        assert_eq!(rf.frame_id, 0);
        assert!(maybe_update_reference(&mut rf, 6, &gray, &feats, 1.0 + 1e-12));
        assert_eq!(rf.frame_id, 6);
        // Monotonically increasing stream keeps the latest frame.
        for (i, rc) in [2.0, 3.0, 4.0].iter().enumerate() {
            maybe_update_reference(&mut rf, 10 + i, &gray, &feats, *rc);
            assert_eq!(rf.frame_id, 10 + i);
        }
    }
}
