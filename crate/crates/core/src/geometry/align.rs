use nalgebra::{SymmetricEigen, SVD};

use super::rotation::{Mat3, Vec3};
use super::transform::RigidTransform;
use crate::error::{Error, Result};

/// Weighted least-squares rigid alignment with positional correspondence:
/// minimizes `sum w_i |R src_i + t - dst_i|^2` over proper rotations.
pub fn fit_rigid_transform(src: &[Vec3], dst: &[Vec3], weights: &[f64]) -> Result<RigidTransform> {
    if src.len() != dst.len() || src.len() != weights.len() {
        return Err(Error::invalid(format!(
            "mismatched lengths: {} src, {} dst, {} weights",
            src.len(),
            dst.len(),
            weights.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::invalid(
            "rigid alignment needs at least 3 correspondences",
        ));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("weights must be finite and non-negative"));
    }
    let wsum: f64 = weights.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::invalid("weight sum must be positive"));
    }

    let mut cs = Vec3::zeros();
    let mut cd = Vec3::zeros();
    for ((s, d), w) in src.iter().zip(dst).zip(weights) {
        cs += s * *w;
        cd += d * *w;
    }
    cs /= wsum;
    cd /= wsum;

    let mut cross = Mat3::zeros();
    let mut scatter = Mat3::zeros();
    for ((s, d), w) in src.iter().zip(dst).zip(weights) {
        let a = s - cs;
        let b = d - cd;
        cross += (b * a.transpose()) * *w;
        scatter += (a * a.transpose()) * *w;
    }

    let mut ev = SymmetricEigen::new(scatter).eigenvalues;
    ev.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if !(ev[0] > 0.0) || ev[1] <= 1e-12 * ev[0] {
        return Err(Error::DegenerateGeometry(
            "source points are collinear; rotation is not determined".into(),
        ));
    }

    let svd = SVD::new(cross, true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut fix = Mat3::identity();
    if (u * v_t).determinant() < 0.0 {
        fix[(2, 2)] = -1.0;
    }
    // nalgebra sorts singular values in descending order, so the reflection
    // correction lands on the weakest direction.
    let rotation = u * fix * v_t;
    let translation = cd - rotation * cs;
    Ok(RigidTransform {
        rotation,
        translation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation::rodrigues_rotation;
    use approx::assert_relative_eq;

    fn sample() -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.3, 0.4, 1.5),
            Vec3::new(-0.7, 0.1, 0.2),
        ]
    }

    #[test]
    fn identity_on_equal_sets() {
        let p = sample();
        let t = fit_rigid_transform(&p, &p, &[1.0; 5]).unwrap();
        assert_relative_eq!(t.rotation, Mat3::identity(), epsilon = 1e-12);
        assert_relative_eq!(t.translation, Vec3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn recovers_known_motion() {
        let r = rodrigues_rotation(&Vec3::new(1.0, 1.0, 0.2).normalize(), 2.1).unwrap();
        let t = Vec3::new(0.5, -1.0, 2.0);
        let src = sample();
        let dst: Vec<Vec3> = src.iter().map(|p| r * p + t).collect();
        let fit = fit_rigid_transform(&src, &dst, &[1.0, 0.5, 2.0, 1.0, 0.1]).unwrap();
        assert_relative_eq!(fit.rotation, r, epsilon = 1e-9);
        assert_relative_eq!(fit.translation, t, epsilon = 1e-9);
    }

    #[test]
    fn coplanar_points_still_proper() {
        let src = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let r = rodrigues_rotation(&Vec3::x(), 0.7).unwrap();
        let dst: Vec<Vec3> = src.iter().map(|p| r * p).collect();
        let fit = fit_rigid_transform(&src, &dst, &[1.0; 3]).unwrap();
        assert_relative_eq!(fit.rotation.determinant(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.rotation, r, epsilon = 1e-9);
    }

    #[test]
    fn collinear_is_degenerate() {
        let src: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            fit_rigid_transform(&src, &src, &[1.0; 5]),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn zero_weights_rejected() {
        let p = sample();
        assert!(fit_rigid_transform(&p, &p, &[0.0; 5]).is_err());
    }
}
