//! Joint models from pre/post observation pairs: contact-seeded motion
//! segmentation, closed-form screw extraction, registration into the scene
//! frame and error metrics against ground truth.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploration::ExplorationRecord;
use crate::geometry::{
    any_perpendicular, fit_dominant_plane, fit_rigid_transform, icp_register_from,
    remove_statistical_outliers, rotation_axis_angle, IcpParams, KdTree, Mat3, OrientedBox,
    PointCloud, RigidTransform, Vec3,
};
use crate::scene::{JointKind, JointModel, KinematicScene, MobilePart, StaticBaseMap};
use crate::sim::Observation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    pub heatmap_sigma: f64,
    /// Heatmap weight above which a candidate seeds the region growing.
    pub seed_weight: f64,
    /// Nearest-neighbour distance (m) beyond which a point counts as moved.
    pub tau: f64,
    pub min_points: usize,
    /// Rotations at least this large (radians) make a revolute joint.
    pub revolute_threshold: f64,
    /// Registrations with a larger RMS residual (m) are rejected.
    pub max_registration_residual: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            heatmap_sigma: 0.10,
            seed_weight: 0.1,
            tau: 0.02,
            min_points: 30,
            revolute_threshold: 5f64.to_radians(),
            max_registration_residual: 0.02,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.heatmap_sigma > 0.0
            && (0.0..1.0).contains(&self.seed_weight)
            && self.tau > 0.0
            && self.min_points >= 3
            && self.revolute_threshold > 0.0
            && self.max_registration_residual > 0.0)
        {
            return Err(Error::Validation(format!(
                "invalid estimation config {self:?}"
            )));
        }
        Ok(())
    }
}

/// Gaussian weighting around an interaction hotspot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactHeatmap {
    pub center: Vec3,
    pub sigma: f64,
}

impl ContactHeatmap {
    pub fn new(center: Vec3, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "heatmap sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { center, sigma })
    }

    pub fn weight(&self, p: &Vec3) -> f64 {
        (-(p - self.center).norm_squared() / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Mask over `pre.cloud` of the points that moved between the observations
/// and are connected to the contact region.
///
/// A point is a candidate when its nearest neighbour in `post` is farther
/// than `tau`. The candidate with the highest heatmap weight seeds a region
/// growing over candidates with radius `2·tau`; it must weigh more than
/// `seed_weight`.
pub fn segment_mobile_part(
    pre: &Observation,
    post: &Observation,
    heatmap: &ContactHeatmap,
    tau: f64,
    seed_weight: f64,
    min_points: usize,
) -> Result<Vec<bool>> {
    if pre.cloud.is_empty() || post.cloud.is_empty() {
        return Err(Error::invalid("segmentation needs non-empty clouds"));
    }
    let post_tree = KdTree::new(&post.cloud.points);
    let candidate: Vec<bool> = pre
        .cloud
        .points
        .iter()
        .map(|p| post_tree.nearest(p).is_some_and(|n| n.dist_sq > tau * tau))
        .collect();
    let idx: Vec<usize> = (0..candidate.len()).filter(|&i| candidate[i]).collect();
    let cand_pts: Vec<Vec3> = idx.iter().map(|&i| pre.cloud.points[i]).collect();
    let mut mask = vec![false; candidate.len()];
    if cand_pts.is_empty() {
        return Err(Error::SegmentationFailed {
            found: 0,
            required: min_points,
        });
    }
    let tree = KdTree::new(&cand_pts);
    let mut grown = vec![false; cand_pts.len()];
    // Grow only the component under the hotspot: neighbouring parts that the
    // moved part occludes in `post` also look displaced and may lie within
    // the heatmap's reach.
    let (seed, w) = (0..cand_pts.len())
        .map(|j| (j, heatmap.weight(&cand_pts[j])))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty candidates");
    if w <= seed_weight {
        return Err(Error::SegmentationFailed {
            found: 0,
            required: min_points,
        });
    }
    let mut stack = vec![seed];
    grown[seed] = true;
    while let Some(j) = stack.pop() {
        for k in tree.within_radius(&cand_pts[j], 2.0 * tau) {
            if !grown[k] {
                grown[k] = true;
                stack.push(k);
            }
        }
    }
    let mut found = 0;
    for (j, &g) in grown.iter().enumerate() {
        if g {
            mask[idx[j]] = true;
            found += 1;
        }
    }
    if found < min_points {
        return Err(Error::SegmentationFailed {
            found,
            required: min_points,
        });
    }
    Ok(mask)
}

/// Screw parameters of a rigid motion.
#[derive(Debug, Clone, PartialEq)]
pub struct ScrewFit {
    pub kind: JointKind,
    /// Unit axis; positive motion turns (or slides) along it.
    pub axis: Vec3,
    /// A point on the rotation axis (revolute only).
    pub pivot: Option<Vec3>,
    /// Rotation angle (rad) or translation length (m).
    pub observed_delta: f64,
    /// Maps pre-motion points onto their post-motion positions.
    pub transform: RigidTransform,
    /// RMS nearest-neighbour residual after alignment.
    pub residual: f64,
}

/// Extra information that disambiguates registration of partial views.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScrewHints {
    /// Grasp point before and after the motion; it moves rigidly with the part.
    pub hotspots: Option<(Vec3, Vec3)>,
    /// Sensor positions of the two views, used to orient surface normals.
    pub viewpoints: Option<(Vec3, Vec3)>,
}

/// Registrations scoring within this much (m) of the best count as ties.
const TIE_SCORE: f64 = 0.003;

/// Recovered rotations closer than this to a half turn are rejected.
const MAX_ROTATION: f64 = 175.0 * std::f64::consts::PI / 180.0;

fn principal_axes(points: &[Vec3], centroid: &Vec3) -> Mat3 {
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    Mat3::from_columns(&[
        eig.eigenvectors.column(order[0]).into_owned(),
        eig.eigenvectors.column(order[1]).into_owned(),
        eig.eigenvectors.column(order[2]).into_owned(),
    ])
}

/// Smallest rotation taking unit `a` onto unit `b`.
fn rotation_between(a: &Vec3, b: &Vec3) -> Mat3 {
    let c = a.dot(b).clamp(-1.0, 1.0);
    let axis = a.cross(b);
    if axis.norm() < 1e-12 {
        if c > 0.0 {
            return Mat3::identity();
        }
        let u = any_perpendicular(a);
        return nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(u),
            std::f64::consts::PI,
        )
        .into_inner();
    }
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), c.acos())
        .into_inner()
}

fn candidate_rotations(
    pre: &[Vec3],
    post: &[Vec3],
    c1: &Vec3,
    c2: &Vec3,
    hints: &ScrewHints,
) -> Vec<Mat3> {
    let mut out = vec![Mat3::identity()];
    let e1 = principal_axes(pre, c1);
    let e2 = principal_axes(post, c2);
    for (s0, s1) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let s = Mat3::from_diagonal(&Vec3::new(s0, s1, s0 * s1));
        let r = e2 * s * e1.transpose();
        if r.determinant() > 0.0 {
            out.push(r);
        } else {
            out.push(e2 * s * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0)) * e1.transpose());
        }
    }
    if let (Some(a), Some(b)) = (
        fit_dominant_plane(pre, 0.01),
        fit_dominant_plane(post, 0.01),
    ) {
        match hints.viewpoints {
            Some((v1, v2)) => {
                let n1 = if a.normal.dot(&(v1 - a.centroid)) < 0.0 {
                    -a.normal
                } else {
                    a.normal
                };
                let n2 = if b.normal.dot(&(v2 - b.centroid)) < 0.0 {
                    -b.normal
                } else {
                    b.normal
                };
                out.push(rotation_between(&n1, &n2));
            }
            None => {
                out.push(rotation_between(&a.normal, &b.normal));
                out.push(rotation_between(&a.normal, &-b.normal));
            }
        }
    }
    out
}

/// Fixed point of `t` in the plane through the origin perpendicular to
/// `axis`, shifted along the axis to the level of `anchor`.
fn pivot_of(t: &RigidTransform, axis: &Vec3, anchor: &Vec3) -> Option<Vec3> {
    let e1 = any_perpendicular(axis);
    let e2 = axis.cross(&e1);
    let m = Matrix2::new(
        e1.dot(&(t.rotation * e1)),
        e1.dot(&(t.rotation * e2)),
        e2.dot(&(t.rotation * e1)),
        e2.dot(&(t.rotation * e2)),
    );
    let rhs = Vector2::new(e1.dot(&t.translation), e2.dot(&t.translation));
    let q = (Matrix2::identity() - m).lu().solve(&rhs)?;
    Some(e1 * q.x + e2 * q.y + axis * axis.dot(anchor))
}

/// Screw parameters of `t`: revolute when its rotation reaches `threshold`,
/// prismatic otherwise.
pub fn screw_from_transform(
    t: &RigidTransform,
    anchor: &Vec3,
    threshold: f64,
) -> Result<(JointKind, Vec3, Option<Vec3>, f64)> {
    let (angle, axis) = rotation_axis_angle(&t.rotation);
    if angle >= threshold {
        if angle > MAX_ROTATION {
            return Err(Error::EstimationFailed(format!(
                "rotation of {:.1} deg is too close to a half turn",
                angle.to_degrees()
            )));
        }
        let axis = axis.ok_or_else(|| Error::EstimationFailed("rotation axis undefined".into()))?;
        let pivot = pivot_of(t, &axis, anchor)
            .ok_or_else(|| Error::EstimationFailed("pivot system is singular".into()))?;
        return Ok((JointKind::Revolute, axis, Some(pivot), angle));
    }
    let len = t.translation.norm();
    if len < 1e-6 {
        return Err(Error::EstimationFailed(
            "no motion between the observations".into(),
        ));
    }
    Ok((JointKind::Prismatic, t.translation / len, None, len))
}

/// Rigid motion between two segmented part clouds and its screw parameters.
pub fn fit_screw(pre: &PointCloud, post: &PointCloud, min_points: usize) -> Result<ScrewFit> {
    fit_screw_with(
        pre,
        post,
        min_points,
        5f64.to_radians(),
        &ScrewHints::default(),
    )
}

/// [`fit_screw`] with registration hints and an explicit revolute threshold.
///
/// ICP runs from several initial guesses (index correspondence when the
/// clouds have equal size, principal-axis and surface-normal alignments,
/// and the identity); the result with the lowest residual wins, where the
/// distance between the moved pre-hotspot and the post-hotspot is added to
/// the residual when hotspots are given.
pub fn fit_screw_with(
    pre: &PointCloud,
    post: &PointCloud,
    min_points: usize,
    revolute_threshold: f64,
    hints: &ScrewHints,
) -> Result<ScrewFit> {
    let min_points = min_points.max(3);
    for c in [pre, post] {
        if c.len() < min_points {
            return Err(Error::SegmentationFailed {
                found: c.len(),
                required: min_points,
            });
        }
    }
    let c1 = pre.centroid().expect("non-empty");
    let c2 = post.centroid().expect("non-empty");
    // Outliers are dropped once here rather than on every ICP restart.
    let mut params = IcpParams::default();
    let src = remove_statistical_outliers(&pre.points, params.outlier_k, params.outlier_std_ratio);
    let dst = remove_statistical_outliers(&post.points, params.outlier_k, params.outlier_std_ratio);
    params.outlier_k = 0;
    let score = |t: &RigidTransform, residual: f64| match hints.hotspots {
        Some((h1, h2)) => residual + (t.apply(&h1) - h2).norm(),
        None => residual,
    };

    let mut inits = Vec::new();
    if pre.len() == post.len() {
        let w = vec![1.0; pre.len()];
        if let Ok(t) = fit_rigid_transform(&pre.points, &post.points, &w) {
            inits.push(t);
        }
    }
    for r in candidate_rotations(&pre.points, &post.points, &c1, &c2, hints) {
        inits.push(RigidTransform {
            rotation: r,
            translation: c2 - r * c1,
        });
        if let Some((h1, h2)) = hints.hotspots {
            inits.push(RigidTransform {
                rotation: r,
                translation: h2 - r * h1,
            });
        }
    }

    let mut fits: Vec<(f64, RigidTransform, f64)> = Vec::new();
    let mut last_err = None;
    for init in &inits {
        match icp_register_from(&src, &dst, init, &params) {
            Ok(res) => {
                let exact = res.residual < 1e-12;
                fits.push((
                    score(&res.transform, res.residual),
                    res.transform,
                    res.residual,
                ));
                if exact {
                    break;
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(best) = fits.iter().map(|f| f.0).min_by(f64::total_cmp) else {
        return Err(
            last_err.unwrap_or_else(|| Error::EstimationFailed("no registration converged".into()))
        );
    };
    // Symmetric parts (a centred handle on a rectangular front) admit
    // flipped alignments of equal quality; the smallest motion explains
    // the data with the least rotation.
    let (_, transform, residual) = fits
        .into_iter()
        .filter(|f| f.0 <= best + TIE_SCORE)
        .min_by(|a, b| {
            rotation_axis_angle(&a.1.rotation)
                .0
                .total_cmp(&rotation_axis_angle(&b.1.rotation).0)
        })
        .expect("best fit is eligible");
    let (kind, axis, pivot, observed_delta) =
        screw_from_transform(&transform, &c1, revolute_threshold)?;
    Ok(ScrewFit {
        kind,
        axis,
        pivot,
        observed_delta,
        transform,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedArticulation {
    pub part_id: String,
    pub kind: JointKind,
    pub axis: Vec3,
    pub pivot: Option<Vec3>,
    pub observed_delta: f64,
    /// Mobile points of the pre-interaction observation.
    pub mobile_mask: Vec<bool>,
    /// Fraction of mobile points within `tau` of the post cloud after
    /// applying the recovered motion.
    pub confidence: f64,
    /// Interaction hotspot before the motion.
    pub handle: Vec3,
    /// Mobile points of the pre-interaction observation.
    pub part_cloud: PointCloud,
}

/// Estimates the joint behind one exploration record.
pub fn estimate_articulation(
    record: &ExplorationRecord,
    cfg: &EstimationConfig,
) -> Result<EstimatedArticulation> {
    cfg.validate()?;
    let (pre, post) = (&record.pre, &record.post);
    let pre_map = ContactHeatmap::new(pre.hotspot, cfg.heatmap_sigma)?;
    let post_map = ContactHeatmap::new(post.hotspot, cfg.heatmap_sigma)?;
    let pre_mask = segment_mobile_part(
        pre,
        post,
        &pre_map,
        cfg.tau,
        cfg.seed_weight,
        cfg.min_points,
    )?;
    let post_mask = segment_mobile_part(
        post,
        pre,
        &post_map,
        cfg.tau,
        cfg.seed_weight,
        cfg.min_points,
    )?;
    let pre_part = pre.cloud.select(&pre_mask);
    let post_part = post.cloud.select(&post_mask);
    let hints = ScrewHints {
        hotspots: Some((pre.hotspot, post.hotspot)),
        viewpoints: Some((pre.viewpoint, post.viewpoint)),
    };
    let fit = fit_screw_with(
        &pre_part,
        &post_part,
        cfg.min_points,
        cfg.revolute_threshold,
        &hints,
    )?;
    let tree = KdTree::new(&post_part.points);
    let close = pre_part
        .points
        .iter()
        .filter(|p| {
            tree.nearest(&fit.transform.apply(p))
                .is_some_and(|n| n.dist_sq < cfg.tau * cfg.tau)
        })
        .count();
    Ok(EstimatedArticulation {
        part_id: record.part_id.clone(),
        kind: fit.kind,
        axis: fit.axis,
        pivot: fit.pivot,
        observed_delta: fit.observed_delta,
        mobile_mask: pre_mask,
        confidence: close as f64 / pre_part.len() as f64,
        handle: pre.hotspot,
        part_cloud: pre_part,
    })
}

/// Applies `t` to an estimate's geometric parameters.
pub fn transform_articulation(
    est: &EstimatedArticulation,
    t: &RigidTransform,
) -> EstimatedArticulation {
    EstimatedArticulation {
        axis: (t.rotation * est.axis).normalize(),
        pivot: est.pivot.map(|p| t.apply(&p)),
        handle: t.apply(&est.handle),
        part_cloud: est.part_cloud.transformed(t),
        ..est.clone()
    }
}

/// Registers an object model, expressed in its own frame, against a cloud
/// of the static base map and carries its joint parameters into the scene
/// frame. Returns the moved estimate and the registration transform.
pub fn register_to_scene(
    est: &EstimatedArticulation,
    object_cloud: &PointCloud,
    base_map: &PointCloud,
    max_residual: f64,
) -> Result<(EstimatedArticulation, RigidTransform)> {
    if object_cloud.is_empty() || base_map.is_empty() {
        return Err(Error::invalid("registration needs non-empty clouds"));
    }
    let res = icp_register_from(
        &object_cloud.points,
        &base_map.points,
        &RigidTransform::identity(),
        &IcpParams::default(),
    )?;
    if res.residual > max_residual {
        return Err(Error::RegistrationFailed {
            residual: res.residual,
            best: Box::new(res.transform),
        });
    }
    Ok((transform_articulation(est, &res.transform), res.transform))
}

/// Errors of an estimate against the true joint. `None` when the kinds
/// differ (a classification error; the metrics are undefined).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArticulationErrors {
    pub angle_err_deg: f64,
    /// Revolute only: minimum distance between the two axis lines.
    pub trans_err_m: Option<f64>,
}

/// Minimum distance between the lines `p1 + s·u1` and `p2 + t·u2`.
pub fn line_distance(p1: &Vec3, u1: &Vec3, p2: &Vec3, u2: &Vec3) -> f64 {
    let d = p2 - p1;
    let n = u1.cross(u2);
    if n.norm() < 1e-9 {
        d.cross(u1).norm() / u1.norm()
    } else {
        d.dot(&n).abs() / n.norm()
    }
}

pub fn articulation_errors(
    kind: JointKind,
    axis: &Vec3,
    pivot: Option<&Vec3>,
    truth: &JointModel,
) -> Option<ArticulationErrors> {
    if kind != truth.kind {
        return None;
    }
    // Sign-free angle between the axis lines; atan2 stays accurate near 0.
    let (a, b) = (axis.normalize(), truth.axis.normalize());
    let angle_err_deg = a.cross(&b).norm().atan2(a.dot(&b).abs()).to_degrees();
    let trans_err_m = match (kind, pivot, truth.pivot.as_ref()) {
        (JointKind::Revolute, Some(p), Some(q)) => Some(line_distance(p, axis, q, &truth.axis)),
        _ => None,
    };
    Some(ArticulationErrors {
        angle_err_deg,
        trans_err_m,
    })
}

/// Yaw-only box around a part cloud: heading from the horizontal principal
/// direction, extents from the 2nd–98th percentiles along each box axis, at
/// least `min_half` thick.
pub fn part_box(cloud: &PointCloud, min_half: f64) -> Result<OrientedBox> {
    let c = cloud
        .centroid()
        .ok_or_else(|| Error::EstimationFailed("empty part cloud".into()))?;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &cloud.points {
        let (dx, dy) = (p.x - c.x, p.y - c.y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let yaw = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let axes = [
        Vec3::new(yaw.cos(), yaw.sin(), 0.0),
        Vec3::new(-yaw.sin(), yaw.cos(), 0.0),
        Vec3::z(),
    ];
    let mut center = Vec3::zeros();
    let mut half = Vec3::zeros();
    for (k, a) in axes.iter().enumerate() {
        let mut v: Vec<f64> = cloud.points.iter().map(|p| a.dot(p)).collect();
        v.sort_by(f64::total_cmp);
        let q = |f: f64| v[((v.len() - 1) as f64 * f).round() as usize];
        let (lo, hi) = (q(0.02), q(0.98));
        center += a * (0.5 * (lo + hi));
        half[k] = (0.5 * (hi - lo)).max(min_half);
    }
    OrientedBox::with_yaw(center, half, yaw)
}

/// Scene model built from estimates: the known static base map plus one
/// part per estimate, closed, with the default opening limit of its kind.
pub fn estimated_scene(
    base: &StaticBaseMap,
    estimates: &[EstimatedArticulation],
) -> Result<KinematicScene> {
    let mut parts = Vec::new();
    for e in estimates {
        let joint = match e.kind {
            JointKind::Revolute => JointModel::revolute(e.axis, e.pivot.expect("revolute pivot"))?,
            JointKind::Prismatic => JointModel::prismatic(e.axis)?,
        };
        parts.push(MobilePart {
            id: e.part_id.clone(),
            shape: part_box(&e.part_cloud, 0.01)?,
            joint,
            handle: e.handle,
        });
    }
    Ok(KinematicScene {
        base: base.clone(),
        parts,
    })
}
