use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole intrinsics plus the raw-depth-to-meters factor of the source
/// sensor (1/5000 for TUM-format 16-bit depth).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        depth_scale: f64,
    ) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            depth_scale,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidIntrinsics("focal lengths must be > 0".into()));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(Error::InvalidIntrinsics("cx outside [0, width)".into()));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::InvalidIntrinsics("cy outside [0, height)".into()));
        }
        if !(self.depth_scale > 0.0) {
            return Err(Error::InvalidIntrinsics("depth_scale must be > 0".into()));
        }
        Ok(())
    }

    /// TUM freiburg presets; `depth_scale` is 1/5000 for all of them.
    pub fn preset(name: &str) -> Option<Self> {
        let (fx, fy, cx, cy) = match name {
            "fr1" => (517.3, 516.5, 318.6, 255.3),
            "fr2" => (520.9, 521.0, 325.1, 249.7),
            "fr3" => (535.4, 539.2, 320.1, 247.6),
            _ => return None,
        };
        Some(Self {
            fx,
            fy,
            cx,
            cy,
            width: 640,
            height: 480,
            depth_scale: 1.0 / 5000.0,
        })
    }

    pub fn diagonal(&self) -> f64 {
        ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }

    /// Perspective projection of a camera-frame point to pixel coordinates.
    pub fn project(&self, point: &Vector3<f64>) -> Result<Vector2<f64>> {
        if point.z <= 0.0 {
            return Err(Error::BehindCamera);
        }
        Ok(Vector2::new(
            self.fx * point.x / point.z + self.cx,
            self.fy * point.y / point.z + self.cy,
        ))
    }

    /// Inverse projection of a pixel with known depth (meters).
    pub fn backproject(&self, pixel: &Vector2<f64>, depth: f64) -> Result<Vector3<f64>> {
        if !(depth > 0.0) {
            return Err(Error::BehindCamera);
        }
        Ok(Vector3::new(
            (pixel.x - self.cx) / self.fx * depth,
            (pixel.y - self.cy) / self.fy * depth,
            depth,
        ))
    }

    pub fn contains(&self, pixel: &Vector2<f64>) -> bool {
        pixel.x >= 0.0
            && pixel.y >= 0.0
            && pixel.x < self.width as f64
            && pixel.y < self.height as f64
    }

    /// Projection Jacobian d(pixel)/d(point) at a camera-frame point.
    pub fn projection_jacobian(&self, point: &Vector3<f64>) -> nalgebra::Matrix2x3<f64> {
        let iz = 1.0 / point.z;
        let iz2 = iz * iz;
        nalgebra::Matrix2x3::new(
            self.fx * iz,
            0.0,
            -self.fx * point.x * iz2,
            0.0,
            self.fy * iz,
            -self.fy * point.y * iz2,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 0.0, 0.0, 640, 480, 1.0 / 5000.0).unwrap()
    }

    #[test]
    fn principal_ray_backprojects_on_axis() {
        let k = CameraIntrinsics::preset("fr3").unwrap();
        let x = k
            .backproject(&Vector2::new(k.cx, k.cy), 2.0)
            .unwrap();
        assert!((x - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        let px = k.project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert!((px - Vector2::new(k.cx, k.cy)).norm() < 1e-12);
    }

    #[test]
    fn pinhole_hand_example() {
        let px = k().project(&Vector3::new(1.0, 2.0, 4.0)).unwrap();
        assert!((px - Vector2::new(25.0, 50.0)).norm() < 1e-12);
    }

    #[test]
    fn behind_camera_is_rejected() {
        assert!(matches!(
            k().project(&Vector3::new(0.0, 0.0, -1.0)),
            Err(Error::BehindCamera)
        ));
        assert!(matches!(
            k().backproject(&Vector2::new(10.0, 10.0), 0.0),
            Err(Error::BehindCamera)
        ));
    }

    #[test]
    fn invalid_intrinsics_are_rejected() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0, 10, 10, 1.0).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 10.0, 0.0, 10, 10, 1.0).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 10, 10, 0.0).is_err());
    }
}
