//! Interaction-order search with committed-state feasibility checks.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_part_collision, collision_environment, part_trajectory, rank_bases, sample_part_sweep,
    EndEffectorTrajectory, DEFAULT_BASE_RANGE, DEFAULT_BASE_SAMPLES, DEFAULT_K,
    DEFAULT_SWEEP_CONFIGS,
};
use crate::error::{Error, Result};
use crate::geometry::DEFAULT_OBB_MARGIN;
use crate::scene::{ArmReach, BasePose, JointKind, KinematicScene, SceneState};
use crate::sim::{nav_grid, nav_grid_with, DEFAULT_GRID_RESOLUTION, DEFAULT_ROBOT_RADIUS};

/// Orders with at most this many steps are enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 6;

const HOME_SNAP: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub k: usize,
    pub n_configs: usize,
    pub n_samples: usize,
    pub base_range: f64,
    pub margin: f64,
    /// Cap on sampled orders when the goal has more than
    /// [`EXHAUSTIVE_LIMIT`] parts.
    pub max_candidates: usize,
    pub seed: u64,
    pub arm_reach: ArmReach,
    pub grid_resolution: f64,
    pub robot_radius: f64,
    /// Robot pose before the first step; defaults to the free cell nearest
    /// the floor center.
    pub start: Option<BasePose>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            n_configs: DEFAULT_SWEEP_CONFIGS,
            n_samples: DEFAULT_BASE_SAMPLES,
            base_range: DEFAULT_BASE_RANGE,
            margin: DEFAULT_OBB_MARGIN,
            max_candidates: 200,
            seed: 0,
            arm_reach: ArmReach::default(),
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            robot_radius: DEFAULT_ROBOT_RADIUS,
            start: None,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        if self.k == 0 || self.n_configs < 2 || self.n_samples == 0 || self.max_candidates == 0 {
            return bad("k, n_samples and max_candidates must be >= 1, n_configs >= 2");
        }
        if !(self.base_range > 0.0 && self.margin >= 0.0 && self.grid_resolution > 0.0) {
            return bad("base_range and grid_resolution must be positive, margin non-negative");
        }
        if !(self.robot_radius >= 0.0) {
            return bad("robot_radius must be non-negative");
        }
        self.arm_reach.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    PartCollision,
    PathBlocked,
    Unreachable,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::PartCollision => "part-collision",
            RejectReason::PathBlocked => "path-blocked",
            RejectReason::Unreachable => "unreachable",
        }
    }
}

/// Why a candidate order failed, at which step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub order: Vec<String>,
    pub step: usize,
    pub part_id: String,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub part_id: String,
    pub kind: JointKind,
    /// Target joint state, radians or meters.
    pub goal: f64,
    pub base_pose: BasePose,
    pub trajectory: EndEffectorTrajectory,
    pub reach_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionPlan {
    pub steps: Vec<PlanStep>,
    pub feasible: bool,
    pub start: BasePose,
    /// Index of the chosen order among the evaluated candidates.
    pub order_index: Option<usize>,
    pub candidates_evaluated: usize,
    /// Rejected candidates, in evaluation order.
    pub diagnostics: Vec<Rejection>,
}

impl InteractionPlan {
    pub fn order(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.part_id.as_str()).collect()
    }
}

pub type OrderOutcome = std::result::Result<Vec<PlanStep>, Rejection>;

/// The configured start pose, or the free cell nearest the floor center.
pub fn planner_start(
    scene: &KinematicScene,
    state: &SceneState,
    cfg: &PlannerConfig,
) -> Result<BasePose> {
    if let Some(s) = cfg.start {
        return Ok(s);
    }
    let fb = &scene.base.floor_bounds;
    let grid = nav_grid(scene, state, cfg.grid_resolution, cfg.robot_radius);
    let (cx, cy) = (0.5 * (fb.min[0] + fb.max[0]), 0.5 * (fb.min[1] + fb.max[1]));
    let r = (fb.max[0] - fb.min[0]).hypot(fb.max[1] - fb.min[1]);
    let p = grid
        .nearest_free(cx, cy, r)
        .ok_or(Error::RepositionFailed { radius: r })?;
    Ok(BasePose::new(p[0], p[1], 0.0))
}

/// Lexicographic permutations of `0..n`.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n)
            .rev()
            .find(|&j| cur[j] > cur[i - 1])
            .expect("successor");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Candidate orders over `n` goal entries: every permutation in
/// lexicographic order for `n <= 6`, otherwise up to `max_candidates`
/// distinct seeded shuffles in draw order.
pub fn enumerate_orders(n: usize, max_candidates: usize, seed: u64) -> Vec<Vec<usize>> {
    if n <= EXHAUSTIVE_LIMIT {
        return permutations(n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..max_candidates.saturating_mul(100) {
        if out.len() == max_candidates {
            break;
        }
        order.shuffle(&mut rng);
        if seen.insert(order.clone()) {
            out.push(order.clone());
        }
    }
    out
}

fn base_seed(seed: u64, part_index: usize) -> u64 {
    seed ^ (part_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Commits `order` step by step from `state` and `start`.
///
/// Each step must (a) sweep clear of the base map and the other parts at
/// their committed states, (b) have a collision-free base sample reaching
/// every waypoint, (c) be reachable from the previous base before the part
/// moves, and (d) leave that base connected to the start (or the free cell
/// nearest it) once the part sits at its goal. Bases are tried in [`rank_bases`] order.
pub fn check_order(
    scene: &KinematicScene,
    state: &SceneState,
    order: &[(String, f64)],
    start: &BasePose,
    cfg: &PlannerConfig,
) -> Result<OrderOutcome> {
    let ids: Vec<String> = order.iter().map(|(id, _)| id.clone()).collect();
    let reject = |step: usize, part: &str, reason, detail: String| {
        Ok(Err(Rejection {
            order: ids.clone(),
            step,
            part_id: part.to_string(),
            reason,
            detail,
        }))
    };
    let mut committed = state.clone();
    let mut prev = *start;
    let mut steps = Vec::with_capacity(order.len());
    for (i, (id, goal)) in order.iter().enumerate() {
        let part = scene.part(id)?;
        let part_index = scene.part_index(id)?;
        let sweep = sample_part_sweep(part, cfg.n_configs)?;
        let env = collision_environment(scene, &committed, id);
        let env_boxes: Vec<_> = env.iter().map(|e| e.shape).collect();
        if let Some((s, e)) = check_part_collision(&sweep, &env_boxes, cfg.margin) {
            return reject(
                i,
                id,
                RejectReason::PartCollision,
                format!("sweep configuration {s} hits `{}`", env[e].label),
            );
        }
        let from = committed.get_or_zero(id);
        let trajectory = part_trajectory(part, from, *goal, cfg.k)?;
        let before = nav_grid(scene, &committed, cfg.grid_resolution, cfg.robot_radius);
        let sampling = nav_grid_with(
            scene,
            &committed,
            cfg.grid_resolution,
            cfg.robot_radius,
            &sweep,
        );
        let after_state = committed.with(scene, id, *goal)?;
        let after = nav_grid(scene, &after_state, cfg.grid_resolution, cfg.robot_radius);
        // The opened part may cover the start itself; home is then the
        // nearest free cell.
        let home = after
            .nearest_free(start.x, start.y, HOME_SNAP)
            .map(|p| BasePose::new(p[0], p[1], start.heading))
            .unwrap_or(*start);
        let full = cfg.k + 1;
        let ranked = match rank_bases(
            &trajectory,
            &sampling,
            &cfg.arm_reach,
            cfg.n_samples,
            cfg.base_range,
            base_seed(cfg.seed, part_index),
        ) {
            Ok(r) => r,
            Err(Error::NoBaseFound { samples }) => {
                return reject(
                    i,
                    id,
                    RejectReason::Unreachable,
                    format!("no collision-free base among {samples} samples"),
                )
            }
            Err(e) => return Err(e),
        };
        if ranked[0].reach_count < full {
            return reject(
                i,
                id,
                RejectReason::Unreachable,
                format!(
                    "best base reaches {} of {full} waypoints",
                    ranked[0].reach_count
                ),
            );
        }
        let chosen = ranked
            .iter()
            .take_while(|c| c.reach_count == full)
            .find(|c| before.check_path(&prev, &c.pose) && after.check_path(&c.pose, &home));
        let Some(chosen) = chosen else {
            let any_path = ranked
                .iter()
                .take_while(|c| c.reach_count == full)
                .any(|c| before.check_path(&prev, &c.pose));
            let detail = if any_path {
                format!("opening `{id}` strands the robot")
            } else {
                format!("no full-reach base for `{id}` is reachable from the previous base")
            };
            return reject(i, id, RejectReason::PathBlocked, detail);
        };
        steps.push(PlanStep {
            part_id: id.clone(),
            kind: part.joint.kind,
            goal: *goal,
            base_pose: chosen.pose,
            trajectory,
            reach_count: chosen.reach_count,
        });
        committed = after_state;
        prev = chosen.pose;
    }
    Ok(Ok(steps))
}

/// Searches candidate orders of the goal parts and returns the first fully
/// feasible one (by candidate index), or an infeasible plan listing every
/// rejection. Goal entries already satisfied in `state` are dropped.
pub fn plan_scene(
    scene: &KinematicScene,
    state: &SceneState,
    goal: &[(String, f64)],
    cfg: &PlannerConfig,
) -> Result<InteractionPlan> {
    cfg.validate()?;
    let mut seen = HashSet::new();
    let mut pending = Vec::new();
    for (id, theta) in goal {
        let part = scene.part(id)?;
        if !seen.insert(id.as_str()) {
            return Err(Error::Validation(format!(
                "part `{id}` appears twice in the goal"
            )));
        }
        part.handle_at(*theta)?;
        if state.get_or_zero(id) < *theta {
            pending.push((id.clone(), *theta));
        }
    }
    let start = planner_start(scene, state, cfg)?;
    let mut plan = InteractionPlan {
        steps: Vec::new(),
        feasible: false,
        start,
        order_index: None,
        candidates_evaluated: 0,
        diagnostics: Vec::new(),
    };
    for (ci, perm) in enumerate_orders(pending.len(), cfg.max_candidates, cfg.seed)
        .into_iter()
        .enumerate()
    {
        let order: Vec<(String, f64)> = perm.iter().map(|&i| pending[i].clone()).collect();
        plan.candidates_evaluated += 1;
        match check_order(scene, state, &order, &start, cfg)? {
            Ok(steps) => {
                plan.steps = steps;
                plan.feasible = true;
                plan.order_index = Some(ci);
                break;
            }
            Err(r) => plan.diagnostics.push(r),
        }
    }
    Ok(plan)
}
