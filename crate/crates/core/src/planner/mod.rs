//! Scene-level manipulation: trajectory synthesis, part-collision and path
//! feasibility checks, base placement and interaction-order search.

mod execute;
mod json;
mod search;

pub use execute::{execute_plan, ExecutionConfig, ExecutionReport, PartExecution};
pub use json::{plan_to_json, round_sig};
pub use search::{
    check_order, enumerate_orders, plan_scene, planner_start, InteractionPlan, OrderOutcome,
    PlanStep, PlannerConfig, RejectReason, Rejection,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{ensure_unit, obb_intersects, rodrigues_rotation, OrientedBox, Vec3};
use crate::scene::{
    ArmReach, BasePose, JointKind, JointModel, KinematicScene, MobilePart, SceneState,
};
use crate::sim::OccupancyGrid;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_SWEEP_CONFIGS: usize = 6;
pub const DEFAULT_BASE_SAMPLES: usize = 200;
pub const DEFAULT_BASE_RANGE: f64 = 1.2;

/// Grasp-point path for one joint change: `k + 1` positions starting at the
/// grasp point.
#[derive(Debug, Clone, PartialEq)]
pub struct EndEffectorTrajectory {
    pub part_id: String,
    pub kind: JointKind,
    pub waypoints: Vec<Vec3>,
    /// Radians or meters.
    pub goal_delta: f64,
    pub k: usize,
}

impl EndEffectorTrajectory {
    pub fn centroid(&self) -> Vec3 {
        self.waypoints.iter().sum::<Vec3>() / self.waypoints.len() as f64
    }
}

fn check_delta(joint: &JointModel, delta: f64, k: usize) -> Result<()> {
    ensure_unit(&joint.axis, "joint axis")?;
    if k == 0 {
        return Err(Error::invalid("trajectory needs K >= 1"));
    }
    if !joint.within_limits(delta) {
        return Err(Error::LimitViolation {
            part: String::new(),
            value: delta,
            min: joint.limit_min,
            max: joint.limit_max,
        });
    }
    Ok(())
}

/// Waypoints `R(i·g/K)(p − q) + q`.
pub fn revolute_trajectory(
    p: &Vec3,
    joint: &JointModel,
    g_r: f64,
    k: usize,
) -> Result<EndEffectorTrajectory> {
    if joint.kind != JointKind::Revolute {
        return Err(Error::invalid("revolute trajectory needs a revolute joint"));
    }
    check_delta(joint, g_r, k)?;
    let q = joint
        .pivot
        .ok_or_else(|| Error::invalid("revolute joint without pivot"))?;
    let waypoints = (0..=k)
        .map(|i| {
            if i == 0 {
                return Ok(*p);
            }
            let r = rodrigues_rotation(&joint.axis, i as f64 * g_r / k as f64)?;
            Ok(r * (p - q) + q)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EndEffectorTrajectory {
        part_id: String::new(),
        kind: JointKind::Revolute,
        waypoints,
        goal_delta: g_r,
        k,
    })
}

/// Waypoints `p + (i/K)·g·u`.
pub fn prismatic_trajectory(
    p: &Vec3,
    joint: &JointModel,
    g_p: f64,
    k: usize,
) -> Result<EndEffectorTrajectory> {
    if joint.kind != JointKind::Prismatic {
        return Err(Error::invalid(
            "prismatic trajectory needs a prismatic joint",
        ));
    }
    check_delta(joint, g_p, k)?;
    let waypoints = (0..=k)
        .map(|i| p + joint.axis * (i as f64 / k as f64 * g_p))
        .collect();
    Ok(EndEffectorTrajectory {
        part_id: String::new(),
        kind: JointKind::Prismatic,
        waypoints,
        goal_delta: g_p,
        k,
    })
}

/// Trajectory taking `part` from state `from` to state `to`, grasped at its
/// handle.
pub fn part_trajectory(
    part: &MobilePart,
    from: f64,
    to: f64,
    k: usize,
) -> Result<EndEffectorTrajectory> {
    let grasp = part.handle_at(from)?;
    part.handle_at(to)?;
    // The grasp already sits at `from`, so the joint is re-expressed with the
    // current pose as its zero.
    let mut joint = part.joint;
    joint.limit_min -= from;
    joint.limit_max -= from;
    let mut traj = match joint.kind {
        JointKind::Revolute => revolute_trajectory(&grasp, &joint, to - from, k)?,
        JointKind::Prismatic => prismatic_trajectory(&grasp, &joint, to - from, k)?,
    };
    traj.part_id = part.id.clone();
    Ok(traj)
}

/// Part shape at `n_configs` states evenly spaced from 0 to the joint's
/// upper limit.
pub fn sample_part_sweep(part: &MobilePart, n_configs: usize) -> Result<Vec<OrientedBox>> {
    if n_configs < 2 {
        return Err(Error::invalid("a sweep needs at least 2 configurations"));
    }
    let max = part.joint.limit_max;
    (0..n_configs)
        .map(|j| part.shape_at(j as f64 * max / (n_configs - 1) as f64))
        .collect()
}

/// A labelled box in the collision environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvBox {
    pub label: String,
    pub shape: OrientedBox,
}

/// Base obstacles plus every part other than `exclude` at its state in
/// `state`.
pub fn collision_environment(
    scene: &KinematicScene,
    state: &SceneState,
    exclude: &str,
) -> Vec<EnvBox> {
    let obstacles = scene
        .base
        .obstacles
        .iter()
        .enumerate()
        .map(|(i, o)| EnvBox {
            label: format!("obstacle_{i}"),
            shape: *o,
        });
    let parts = scene.parts.iter().filter(|p| p.id != exclude).map(|p| {
        let theta = p.joint.clamp(state.get_or_zero(&p.id));
        EnvBox {
            label: p.id.clone(),
            shape: p.shape.transformed(&p.joint.motion(theta)),
        }
    });
    obstacles.chain(parts).collect()
}

/// First `(sweep index, environment index)` pair that intersects with the
/// given margin, or `None` when the sweep is clear.
pub fn check_part_collision(
    sweep: &[OrientedBox],
    environment: &[OrientedBox],
    margin: f64,
) -> Option<(usize, usize)> {
    sweep.iter().enumerate().find_map(|(i, s)| {
        environment
            .iter()
            .position(|e| obb_intersects(s, e, margin))
            .map(|j| (i, j))
    })
}

/// Number of waypoints inside the reach annulus and height band of `base`.
pub fn reach_count(reach: &ArmReach, base: &BasePose, waypoints: &[Vec3]) -> usize {
    waypoints.iter().filter(|w| reach.reaches(base, w)).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseCandidate {
    pub pose: BasePose,
    pub reach_count: usize,
    pub sample_index: usize,
    /// Horizontal distance to the trajectory centroid.
    pub distance: f64,
}

/// The `i`-th base sample of a seed: `r = range·√u₁`, `φ = 2π·u₂` around
/// `center`. Later samples never change earlier ones.
pub fn base_samples(center: &Vec3, n: usize, range: f64, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let r = range * u1.sqrt();
            let phi = std::f64::consts::TAU * u2;
            [center.x + r * phi.cos(), center.y + r * phi.sin()]
        })
        .collect()
}

/// Every collision-free sample, best first: most reachable waypoints, then
/// nearest to the trajectory centroid, then lowest sample index.
pub fn rank_bases(
    trajectory: &EndEffectorTrajectory,
    grid: &OccupancyGrid,
    reach: &ArmReach,
    n_samples: usize,
    range: f64,
    seed: u64,
) -> Result<Vec<BaseCandidate>> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    let c = trajectory.centroid();
    let mut out: Vec<BaseCandidate> = base_samples(&c, n_samples, range, seed)
        .into_iter()
        .enumerate()
        .filter(|(_, p)| grid.is_free_at(p[0], p[1]))
        .map(|(i, p)| {
            let pose = BasePose::facing(p[0], p[1], &c);
            BaseCandidate {
                pose,
                reach_count: reach_count(reach, &pose, &trajectory.waypoints),
                sample_index: i,
                distance: pose.horizontal_distance(&c),
            }
        })
        .collect();
    if out.is_empty() {
        return Err(Error::NoBaseFound { samples: n_samples });
    }
    out.sort_by(|a, b| {
        b.reach_count
            .cmp(&a.reach_count)
            .then(a.distance.total_cmp(&b.distance))
            .then(a.sample_index.cmp(&b.sample_index))
    });
    Ok(out)
}

/// Best base sample for `trajectory` on `grid` (see [`rank_bases`]).
pub fn select_base(
    trajectory: &EndEffectorTrajectory,
    grid: &OccupancyGrid,
    reach: &ArmReach,
    n_samples: usize,
    range: f64,
    seed: u64,
) -> Result<BaseCandidate> {
    Ok(rank_bases(trajectory, grid, reach, n_samples, range, seed)?[0])
}
