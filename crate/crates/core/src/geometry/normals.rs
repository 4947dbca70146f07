use nalgebra::SymmetricEigen;

use super::cloud::PointCloud;
use super::kdtree::KdTree;
use super::rotation::{Mat3, Vec3};
use crate::error::{Error, Result};

/// Default neighbourhood size for normal estimation.
pub const DEFAULT_NORMAL_K: usize = 16;

/// Least-squares plane through a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    pub centroid: Vec3,
    /// Unit normal (sign arbitrary).
    pub normal: Vec3,
    /// Root-mean-square distance of the points to the plane.
    pub rms: f64,
}

/// Principal-component plane fit. `None` when fewer than three points are given
/// or the points are collinear within `1e-12` (relative to the spread).
pub fn fit_plane<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<PlaneFit> {
    let pts: Vec<&Vec3> = points.into_iter().collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let centroid: Vec3 = pts.iter().copied().sum::<Vec3>() / n;
    let mut cov = Mat3::zeros();
    for p in &pts {
        let d = *p - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (small, mid, large) = (
        eig.eigenvalues[idx[0]],
        eig.eigenvalues[idx[1]],
        eig.eigenvalues[idx[2]],
    );
    if !(large > 0.0) || mid <= 1e-12 * large {
        return None;
    }
    let normal: Vec3 = eig.eigenvectors.column(idx[0]).into_owned().normalize();
    Some(PlaneFit {
        centroid,
        normal,
        rms: small.max(0.0).sqrt(),
    })
}

/// Per-point unit normals from PCA over each point and its `k` nearest
/// neighbours, oriented so that `dot(n, viewpoint - p) >= 0`.
///
/// Entries are `None` where the neighbourhood is degenerate (collinear).
pub fn estimate_normals(
    cloud: &PointCloud,
    k: usize,
    viewpoint: &Vec3,
) -> Result<Vec<Option<Vec3>>> {
    if k < 2 {
        return Err(Error::invalid(format!(
            "normal estimation needs k >= 2, got {k}"
        )));
    }
    if cloud.len() < k + 1 {
        return Err(Error::invalid(format!(
            "normal estimation with k = {k} needs at least {} points, got {}",
            k + 1,
            cloud.len()
        )));
    }
    let tree = KdTree::new(&cloud.points);
    let normals = cloud
        .points
        .iter()
        .map(|p| {
            let hood = tree.knn(p, k + 1);
            let fit = fit_plane(hood.iter().map(|n| tree.point(n.index)))?;
            let n = fit.normal;
            Some(if n.dot(&(viewpoint - p)) < 0.0 { -n } else { n })
        })
        .collect();
    Ok(normals)
}

/// Plane supported by the most points within `inlier_tol`, refined by PCA
/// over its inliers. Candidate planes come from the local neighbourhoods of
/// up to 64 evenly spaced seed points, so the result is deterministic.
pub fn fit_dominant_plane(points: &[Vec3], inlier_tol: f64) -> Option<PlaneFit> {
    if points.len() < 3 {
        return None;
    }
    let tree = KdTree::new(points);
    let stride = points.len().div_ceil(64);
    let k = 12.min(points.len());
    let count = |f: &PlaneFit| {
        points
            .iter()
            .filter(|p| f.normal.dot(&(*p - f.centroid)).abs() <= inlier_tol)
            .count()
    };
    let mut best: Option<(usize, PlaneFit)> = None;
    for seed in points.iter().step_by(stride) {
        let hood = tree.knn(seed, k);
        let Some(local) = fit_plane(hood.iter().map(|n| tree.point(n.index))) else {
            continue;
        };
        let c = count(&local);
        if best.as_ref().is_none_or(|(b, _)| c > *b) {
            best = Some((c, local));
        }
    }
    let (_, mut plane) = best?;
    for _ in 0..2 {
        let inliers = points
            .iter()
            .filter(|p| plane.normal.dot(&(*p - plane.centroid)).abs() <= inlier_tol);
        plane = fit_plane(inliers)?;
    }
    Some(plane)
}
