//! Point-to-point ICP with statistical outlier removal.

use super::align::fit_rigid_transform;
use super::kdtree::KdTree;
use super::rotation::Vec3;
use super::transform::RigidTransform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpParams {
    pub max_iters: usize,
    /// Convergence when the residual improves by less than this (meters).
    pub tol: f64,
    pub outlier_k: usize,
    pub outlier_std_ratio: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-5,
            outlier_k: 10,
            outlier_std_ratio: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps source points onto the destination cloud.
    pub transform: RigidTransform,
    /// Root-mean-square nearest-neighbour distance after alignment.
    pub residual: f64,
    pub iterations: usize,
    /// Residual of every accepted iterate, starting with the initial guess.
    pub history: Vec<f64>,
}

/// Drops points whose mean distance to their `k` nearest neighbours exceeds
/// the global mean by more than `std_ratio` standard deviations. Clouds with
/// `k` points or fewer are returned unchanged.
pub fn remove_statistical_outliers(points: &[Vec3], k: usize, std_ratio: f64) -> Vec<Vec3> {
    if k == 0 || points.len() <= k {
        return points.to_vec();
    }
    let tree = KdTree::new(points);
    let mean_dists: Vec<f64> = points
        .iter()
        .map(|p| {
            let hood = tree.knn(p, k + 1);
            hood.iter().skip(1).map(|n| n.dist_sq.sqrt()).sum::<f64>() / k as f64
        })
        .collect();
    let n = mean_dists.len() as f64;
    let mean = mean_dists.iter().sum::<f64>() / n;
    let var = mean_dists.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    let cutoff = mean + std_ratio * var.sqrt();
    points
        .iter()
        .zip(&mean_dists)
        .filter(|(_, d)| **d <= cutoff)
        .map(|(p, _)| *p)
        .collect()
}

fn correspond(src: &[Vec3], tree: &KdTree, t: &RigidTransform) -> (Vec<Vec3>, f64) {
    let mut matched = Vec::with_capacity(src.len());
    let mut sq = 0.0;
    for p in src {
        let n = tree.nearest(&t.apply(p)).expect("non-empty tree");
        sq += n.dist_sq;
        matched.push(*tree.point(n.index));
    }
    (matched, (sq / src.len() as f64).sqrt())
}

pub fn icp_register(src: &[Vec3], dst: &[Vec3], params: &IcpParams) -> Result<IcpResult> {
    icp_register_from(src, dst, &RigidTransform::identity(), params)
}

/// ICP seeded with an initial transform guess.
pub fn icp_register_from(
    src: &[Vec3],
    dst: &[Vec3],
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpResult> {
    if src.is_empty() || dst.is_empty() {
        return Err(Error::invalid("ICP needs non-empty clouds"));
    }
    let src = remove_statistical_outliers(src, params.outlier_k, params.outlier_std_ratio);
    let dst = remove_statistical_outliers(dst, params.outlier_k, params.outlier_std_ratio);
    let tree = KdTree::new(&dst);
    let weights = vec![1.0; src.len()];

    let mut current = *init;
    let (mut matched, mut residual) = correspond(&src, &tree, &current);
    let mut history = vec![residual];
    let mut rises = 0;
    let mut iterations = 0;

    for _ in 0..params.max_iters {
        iterations += 1;
        let candidate = fit_rigid_transform(&src, &matched, &weights)?;
        let (next_matched, next_residual) = correspond(&src, &tree, &candidate);
        if next_residual > residual * (1.0 + 1e-12) + 1e-15 {
            rises += 1;
            if rises >= 3 {
                return Err(Error::RegistrationFailed {
                    residual,
                    best: Box::new(current),
                });
            }
            continue;
        }
        rises = 0;
        let improvement = residual - next_residual;
        current = candidate;
        matched = next_matched;
        residual = next_residual;
        history.push(residual);
        if improvement < params.tol {
            break;
        }
    }

    Ok(IcpResult {
        transform: current,
        residual,
        iterations,
        history,
    })
}
