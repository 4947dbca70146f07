//! Rotations, rigid transforms, oriented boxes, point clouds, rigid alignment
//! and ICP.

mod align;
mod cloud;
mod icp;
mod kdtree;
mod normals;
mod obb;
mod rotation;
mod transform;

pub use align::fit_rigid_transform;
pub use cloud::PointCloud;
pub use icp::{icp_register, icp_register_from, remove_statistical_outliers, IcpParams, IcpResult};
pub use kdtree::{KdTree, Neighbor};
pub use normals::{estimate_normals, fit_dominant_plane, fit_plane, PlaneFit, DEFAULT_NORMAL_K};
pub use obb::{obb_intersects, obb_separation, OrientedBox};
pub use rotation::{
    angle_between, any_perpendicular, ensure_unit, is_rotation, normalized, rodrigues_rotation,
    rotation_axis_angle, skew, yaw_rotation, Mat3, Vec3, UNIT_TOL,
};
pub use transform::RigidTransform;

use crate::error::{Error, Result};

/// Default inflation applied to boxes in collision checks (meters).
pub const DEFAULT_OBB_MARGIN: f64 = 0.02;

/// Symmetric chamfer distance: the mean nearest-neighbour distance from `a`
/// to `b`, averaged with the reverse direction.
pub fn cloud_displacement(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("chamfer distance needs non-empty clouds"));
    }
    let one_way = |from: &PointCloud, to: &PointCloud| {
        let tree = KdTree::new(&to.points);
        from.points
            .iter()
            .map(|p| tree.nearest(p).expect("non-empty").dist_sq.sqrt())
            .sum::<f64>()
            / from.len() as f64
    };
    Ok(0.5 * (one_way(a, b) + one_way(b, a)))
}
