use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on the norm of direction vectors used as joint axes.
pub const UNIT_TOL: f64 = 1e-9;

pub fn ensure_unit(v: &Vec3, what: &str) -> Result<()> {
    let n = v.norm();
    if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::invalid(format!(
            "{what} must be unit-norm (|v| = {n})"
        )));
    }
    Ok(())
}

/// Normalizes `v`, rejecting zero-length or non-finite input.
pub fn normalized(v: &Vec3, what: &str) -> Result<Vec3> {
    let n = v.norm();
    if !n.is_finite() || n < 1e-12 {
        return Err(Error::invalid(format!("{what} has zero length")));
    }
    Ok(v / n)
}

pub fn skew(u: &Vec3) -> Mat3 {
    Mat3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

/// `I + sin(angle) [u]x + (1 - cos(angle)) [u]x^2` for a unit axis `u`.
pub fn rodrigues_rotation(axis: &Vec3, angle: f64) -> Result<Mat3> {
    ensure_unit(axis, "rotation axis")?;
    let k = skew(axis);
    Ok(Mat3::identity() + k * angle.sin() + (k * k) * (1.0 - angle.cos()))
}

/// Rotation angle in `[0, pi]` and unit axis of a proper rotation matrix.
///
/// The axis is undefined for the identity; `None` is returned when the angle is
/// below `1e-12`.
pub fn rotation_axis_angle(r: &Mat3) -> (f64, Option<Vec3>) {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let w = Vec3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    let sin = (w.norm() / 2.0).min(1.0);
    let angle = sin.atan2(cos);
    if angle < 1e-12 {
        return (angle, None);
    }
    if cos > 0.0 {
        return (angle, Some(w / (2.0 * sin)));
    }
    // Beyond 90 degrees the skew part loses precision; recover the axis from
    // the symmetric part (1 - cos) u u^T and take the sign from the skew part.
    let b = (r + r.transpose()) * 0.5 - Mat3::identity() * cos;
    let mut best = 0;
    for i in 1..3 {
        if b[(i, i)] > b[(best, best)] {
            best = i;
        }
    }
    let mut u: Vec3 = b.column(best).into_owned();
    u /= u.norm();
    if u.dot(&w) < 0.0 {
        u = -u;
    }
    (angle, Some(u))
}

/// Angle between two directions in radians, in `[0, pi]`.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Any unit vector perpendicular to the unit vector `u`.
pub fn any_perpendicular(u: &Vec3) -> Vec3 {
    let helper = if u.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    u.cross(&helper).normalize()
}

pub fn is_rotation(r: &Mat3, tol: f64) -> bool {
    (r.transpose() * r - Mat3::identity()).abs().max() <= tol
        && (r.determinant() - 1.0).abs() <= tol
}

pub fn yaw_rotation(yaw: f64) -> Mat3 {
    let (s, c) = yaw.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}
