//! Open-loop execution of a plan against the true joints.

use serde::Serialize;

use super::InteractionPlan;
use crate::error::Result;
use crate::geometry::angle_between;
use crate::scene::{JointKind, KinematicScene, SceneState};
use crate::sim::{SimConfig, GRASP_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExecutionConfig {
    /// Commanded motions farther than this from the true motion direction
    /// slip (radians).
    pub slip_angle: f64,
    /// Execution stops once the true grasp point drifts this far from the
    /// waypoint just commanded.
    pub track_tolerance: f64,
    pub grasp_tolerance: f64,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self::from_sim(&SimConfig::default())
    }
}

impl ExecutionConfig {
    pub fn from_sim(sim: &SimConfig) -> Self {
        Self {
            slip_angle: sim.slip_angle,
            track_tolerance: 0.05,
            grasp_tolerance: GRASP_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartExecution {
    pub part_id: String,
    pub kind: JointKind,
    pub goal: f64,
    pub reached: f64,
    /// Reached state over the joint's maximum state.
    pub opening_degree: f64,
    pub waypoints_followed: usize,
    pub stopped: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionReport {
    pub parts: Vec<PartExecution>,
    pub final_state: SceneState,
}

/// Replays each step's waypoints without feedback. Every commanded
/// displacement `d` moves the true joint by `|d|·cos α / lever`, where `α` is
/// the angle to the grasp point's true motion direction; beyond the slip
/// angle the gripper slips and the step ends.
pub fn execute_plan(
    truth: &KinematicScene,
    state: &SceneState,
    plan: &InteractionPlan,
    cfg: &ExecutionConfig,
) -> Result<ExecutionReport> {
    let mut state = state.clone();
    let mut parts = Vec::with_capacity(plan.steps.len());
    for step in &plan.steps {
        let part = truth.part(&step.part_id)?;
        let j = &part.joint;
        let mut theta = state.get_or_zero(&part.id);
        let mut grasp = part.handle_at(theta)?;
        let wps = &step.trajectory.waypoints;
        let mut followed = 0;
        let mut stopped = None;
        if (grasp - wps[0]).norm() > cfg.grasp_tolerance {
            stopped = Some("grasp missed the handle".to_string());
        } else {
            for (i, w) in wps.iter().enumerate().skip(1) {
                let d = w - wps[i - 1];
                let Some(t) = j.motion_direction(&grasp) else {
                    stopped = Some("grasp on the joint axis".into());
                    break;
                };
                let alpha = angle_between(&d, &t);
                if alpha > cfg.slip_angle {
                    stopped = Some(format!("slipped at waypoint {i}"));
                    break;
                }
                theta = j.clamp(theta + d.norm() * alpha.cos() / j.lever_arm(&grasp));
                grasp = part.handle_at(theta)?;
                followed = i;
                if (grasp - w).norm() > cfg.track_tolerance {
                    stopped = Some(format!("lost track at waypoint {i}"));
                    break;
                }
            }
        }
        state = state.with(truth, &part.id, theta)?;
        parts.push(PartExecution {
            part_id: part.id.clone(),
            kind: j.kind,
            goal: step.goal,
            reached: theta,
            opening_degree: theta / j.limit_max,
            waypoints_followed: followed,
            stopped,
        });
    }
    Ok(ExecutionReport {
        parts,
        final_state: state,
    })
}
