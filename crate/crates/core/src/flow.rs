//! Pyramidal Lucas-Kanade feature tracking between the current frame and the
//! assessment reference frame. Follows the Bouguet formulation: the normal
//! matrix comes from template-window gradients, the residual is re-sampled
//! each iteration, and the coarse-level estimate seeds the next finer level.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::image::GrayImage;
use crate::parallel;
use crate::types::FeaturePoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackStatus {
    Tracked {
        /// Matched position in the reference frame (px).
        matched: Vector2<f64>,
        /// `matched - original`.
        flow: Vector2<f64>,
    },
    Lost,
}

#[derive(Debug, Clone)]
pub struct FlowField {
    pub entries: Vec<TrackStatus>,
}

impl FlowField {
    pub fn tracked_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e, TrackStatus::Tracked { .. }))
            .count()
    }

    pub fn get(&self, idx: usize) -> Option<(Vector2<f64>, Vector2<f64>)> {
        match self.entries.get(idx) {
            Some(TrackStatus::Tracked { matched, flow }) => Some((*matched, *flow)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LkConfig {
    /// Pyramid levels (level 0 is full resolution).
    pub levels: usize,
    /// Window radius; the integration window is `(2r+1) x (2r+1)`.
    pub window_radius: usize,
    /// Iteration cap per level.
    pub max_iters: usize,
    /// Update-norm termination threshold (px).
    pub epsilon: f64,
    /// Minimum eigenvalue of the normal matrix; below this the track is Lost.
    pub min_eigenvalue: f64,
}

impl Default for LkConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            window_radius: 10,
            max_iters: 30,
            epsilon: 0.01,
            min_eigenvalue: 1e-4,
        }
    }
}

struct Window {
    values: Vec<f64>,
    grad_x: Vec<f64>,
    grad_y: Vec<f64>,
    normal: Matrix2<f64>,
}

/// Sample the template window and its gradients around `center`; `None` if
/// any sample leaves the image.
fn template_window(img: &GrayImage, center: Vector2<f64>, r: usize) -> Option<Window> {
    let side = 2 * r + 1;
    let mut values = Vec::with_capacity(side * side);
    let mut grad_x = Vec::with_capacity(side * side);
    let mut grad_y = Vec::with_capacity(side * side);
    let mut normal = Matrix2::zeros();
    for dy in 0..side {
        for dx in 0..side {
            let x = center.x + dx as f64 - r as f64;
            let y = center.y + dy as f64 - r as f64;
            let v = img.sample(x, y)?;
            let gx = 0.5 * (img.sample(x + 1.0, y)? - img.sample(x - 1.0, y)?);
            let gy = 0.5 * (img.sample(x, y + 1.0)? - img.sample(x, y - 1.0)?);
            values.push(v);
            grad_x.push(gx);
            grad_y.push(gy);
            normal[(0, 0)] += gx * gx;
            normal[(0, 1)] += gx * gy;
            normal[(1, 0)] += gx * gy;
            normal[(1, 1)] += gy * gy;
        }
    }
    Some(Window {
        values,
        grad_x,
        grad_y,
        normal,
    })
}

fn min_eigenvalue(m: &Matrix2<f64>) -> f64 {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    tr / 2.0 - disc
}

fn track_one(
    curr_pyr: &[GrayImage],
    ref_pyr: &[GrayImage],
    position: Vector2<f64>,
    cfg: &LkConfig,
) -> TrackStatus {
    let r = cfg.window_radius;
    let levels = cfg.levels.min(curr_pyr.len());
    let mut guess = Vector2::zeros();
    for level in (0..levels).rev() {
        let scale = (1 << level) as f64;
        let center = position / scale;
        let Some(window) = template_window(&curr_pyr[level], center, r) else {
            return TrackStatus::Lost;
        };
        if min_eigenvalue(&window.normal) < cfg.min_eigenvalue {
            return TrackStatus::Lost;
        }
        let Some(inv) = window.normal.try_inverse() else {
            return TrackStatus::Lost;
        };
        let target = &ref_pyr[level];
        let mut delta = Vector2::zeros();
        for _ in 0..cfg.max_iters {
            let mut rhs = Vector2::zeros();
            let side = 2 * r + 1;
            let mut idx = 0;
            for dy in 0..side {
                for dx in 0..side {
                    let x = center.x + dx as f64 - r as f64 + guess.x + delta.x;
                    let y = center.y + dy as f64 - r as f64 + guess.y + delta.y;
                    let Some(v) = target.sample(x, y) else {
                        return TrackStatus::Lost;
                    };
                    let diff = window.values[idx] - v;
                    rhs.x += diff * window.grad_x[idx];
                    rhs.y += diff * window.grad_y[idx];
                    idx += 1;
                }
            }
            let eta = inv * rhs;
            delta += eta;
            if eta.norm() < cfg.epsilon {
                break;
            }
        }
        guess = if level > 0 { (guess + delta) * 2.0 } else { guess + delta };
    }
    let matched = position + guess;
    let w = curr_pyr[0].width() as f64;
    let h = curr_pyr[0].height() as f64;
    if matched.x < 0.0 || matched.y < 0.0 || matched.x >= w || matched.y >= h {
        return TrackStatus::Lost;
    }
    TrackStatus::Tracked {
        matched,
        flow: guess,
    }
}

/// Track `features` (positions in `curr`) into `reference`.
pub fn lk_flow(
    curr: &GrayImage,
    reference: &GrayImage,
    features: &[FeaturePoint],
    cfg: &LkConfig,
) -> FlowField {
    assert_eq!(curr.width(), reference.width());
    assert_eq!(curr.height(), reference.height());
    let curr_pyr = curr.pyramid(cfg.levels);
    let ref_pyr = reference.pyramid(cfg.levels);
    lk_flow_pyramids(&curr_pyr, &ref_pyr, features, cfg)
}

/// Same as [`lk_flow`] with caller-provided pyramids, so per-frame pyramids
/// can be built once and reused.
pub fn lk_flow_pyramids(
    curr_pyr: &[GrayImage],
    ref_pyr: &[GrayImage],
    features: &[FeaturePoint],
    cfg: &LkConfig,
) -> FlowField {
    let entries = parallel::map_slice(features, |f| track_one(curr_pyr, ref_pyr, f.position, cfg));
    FlowField { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Smooth synthetic texture with structure at several scales.
    fn texture(x: f64, y: f64) -> f64 {
        let v = 0.5
            + 0.18 * ((x / 13.0).sin() * (y / 17.0).cos())
            + 0.15 * ((x / 7.5 + y / 11.0).sin())
            + 0.12 * ((x / 23.0 - y / 9.0).cos());
        v.clamp(0.0, 1.0)
    }

    fn render(width: usize, height: usize, shift: Vector2<f64>) -> GrayImage {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(texture(x as f64 + shift.x, y as f64 + shift.y));
            }
        }
        GrayImage::new(width, height, data)
    }

    fn grid_features(width: usize, height: usize, step: usize) -> Vec<FeaturePoint> {
        let mut out = Vec::new();
        let mut y = 20;
        while y + 20 < height {
            let mut x = 20;
            while x + 20 < width {
                out.push(FeaturePoint::new(Vector2::new(x as f64, y as f64), 1.0));
                x += step;
            }
            y += step;
        }
        out
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let img = render(160, 120, Vector2::zeros());
        let feats = grid_features(160, 120, 24);
        let flow = lk_flow(&img, &img, &feats, &LkConfig::default());
        assert!(flow.tracked_count() > 0);
        for entry in &flow.entries {
            if let TrackStatus::Tracked { flow, .. } = entry {
                assert!(flow.norm() < 1e-9, "flow {flow:?}");
            }
        }
    }

    #[test]
    fn two_pixel_shift_is_recovered() {
        // The reference holds the same content displaced so that matches lie
        // 2 px to the right of the current-frame positions.
        let curr = render(160, 120, Vector2::zeros());
        let reference = render(160, 120, Vector2::new(-2.0, 0.0));
        let feats = grid_features(160, 120, 24);
        let flow = lk_flow(&curr, &reference, &feats, &LkConfig::default());
        let mut tracked = 0;
        for entry in &flow.entries {
            if let TrackStatus::Tracked { flow, .. } = entry {
                tracked += 1;
                assert!(
                    (flow.x - 2.0).abs() < 0.2 && flow.y.abs() < 0.2,
                    "flow {flow:?}"
                );
            }
        }
        assert!(tracked as f64 >= 0.8 * feats.len() as f64);
    }

    #[test]
    fn zero_gradient_region_is_lost() {
        let img = GrayImage::new(64, 64, vec![0.5; 64 * 64]);
        let feats = vec![FeaturePoint::new(Vector2::new(32.0, 32.0), 1.0)];
        let flow = lk_flow(&img, &img, &feats, &LkConfig::default());
        assert_eq!(flow.entries[0], TrackStatus::Lost);
    }

    #[test]
    fn border_feature_is_lost() {
        let img = render(64, 64, Vector2::zeros());
        let feats = vec![FeaturePoint::new(Vector2::new(1.0, 1.0), 1.0)];
        let flow = lk_flow(&img, &img, &feats, &LkConfig::default());
        assert_eq!(flow.entries[0], TrackStatus::Lost);
    }
}
