//! SE(3) tangent-space parameterization.
//!
//! A pose is an `Isometry3<f64>` (unit-quaternion rotation plus translation in
//! meters); a twist is the 6-vector `(v, w)` with the translational part
//! first. `exp` and `log` are inverse of each other for rotation angles below
//! pi; at exactly pi the rotation axis is ambiguous and `log` reports it.

use nalgebra::{Isometry3, Matrix3, Translation3, UnitQuaternion, Vector3, Vector6};

use crate::error::{Error, Result};

pub type PoseSE3 = Isometry3<f64>;
pub type Twist = Vector6<f64>;

/// Below this squared angle the trigonometric coefficients switch to their
/// Taylor expansions.
const TAYLOR_EPS_SQ: f64 = 1e-12;

pub fn translational(xi: &Twist) -> Vector3<f64> {
    Vector3::new(xi[0], xi[1], xi[2])
}

pub fn rotational(xi: &Twist) -> Vector3<f64> {
    Vector3::new(xi[3], xi[4], xi[5])
}

pub fn twist(v: Vector3<f64>, w: Vector3<f64>) -> Twist {
    Vector6::new(v.x, v.y, v.z, w.x, w.y, w.z)
}

pub fn exp(xi: &Twist) -> PoseSE3 {
    let v = translational(xi);
    let w = rotational(xi);
    let theta_sq = w.norm_squared();
    let rotation = UnitQuaternion::from_scaled_axis(w);

    let (b, c) = if theta_sq > TAYLOR_EPS_SQ {
        let theta = theta_sq.sqrt();
        (
            (1.0 - theta.cos()) / theta_sq,
            (theta - theta.sin()) / (theta_sq * theta),
        )
    } else {
        (
            0.5 - theta_sq / 24.0 + theta_sq * theta_sq / 720.0,
            1.0 / 6.0 - theta_sq / 120.0 + theta_sq * theta_sq / 5040.0,
        )
    };

    let hat = w.cross_matrix();
    let v_mat = Matrix3::identity() + hat * b + hat * hat * c;
    Isometry3::from_parts(Translation3::from(v_mat * v), rotation)
}

pub fn log(pose: &PoseSE3) -> Result<Twist> {
    let q = pose.rotation;
    // Normalize the double cover so the scalar part is non-negative; a scalar
    // part of zero means a rotation by exactly pi.
    let scalar = q.scalar().abs();
    if scalar < 1e-9 {
        return Err(Error::AxisAmbiguous);
    }
    let w = q.scaled_axis();
    let theta_sq = w.norm_squared();

    let coeff = if theta_sq > TAYLOR_EPS_SQ {
        let theta = theta_sq.sqrt();
        let half_ratio = theta * theta.sin() / (2.0 * (1.0 - theta.cos()));
        (1.0 - half_ratio) / theta_sq
    } else {
        1.0 / 12.0 + theta_sq / 720.0
    };

    let hat = w.cross_matrix();
    let v_inv = Matrix3::identity() - hat * 0.5 + hat * hat * coeff;
    let v = v_inv * pose.translation.vector;
    Ok(twist(v, w))
}

/// Geodesic between two poses: `t = 0` gives `a`, `t = 1` gives `b`.
/// Endpoints are returned without running the exp/log chain, so they are
/// bit-exact.
pub fn interpolate(a: &PoseSE3, b: &PoseSE3, t: f64) -> Result<PoseSE3> {
    if t == 0.0 {
        return Ok(*a);
    }
    if t == 1.0 {
        return Ok(*b);
    }
    let delta = log(&(a.inverse() * b))?;
    Ok(a * exp(&(delta * t)))
}
