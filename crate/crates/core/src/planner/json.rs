//! Canonical plan JSON.

use serde::Serialize;

use super::{InteractionPlan, RejectReason};
use crate::error::{Error, Result};
use crate::scene::{BasePose, JointKind};

/// `x` rounded to `digits` significant digits; `-0` becomes `0`.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

const DIGITS: usize = 9;

fn r(x: f64) -> f64 {
    round_sig(x, DIGITS)
}

#[derive(Serialize)]
struct PoseJson {
    x: f64,
    y: f64,
    heading_deg: f64,
}

impl From<&BasePose> for PoseJson {
    fn from(p: &BasePose) -> Self {
        Self {
            x: r(p.x),
            y: r(p.y),
            heading_deg: r(p.heading.to_degrees()),
        }
    }
}

#[derive(Serialize)]
struct StepJson<'a> {
    part_id: &'a str,
    kind: JointKind,
    /// Degrees for revolute joints, meters for prismatic ones.
    goal: f64,
    base_pose: PoseJson,
    waypoints: Vec<[f64; 3]>,
    reach_count: usize,
}

#[derive(Serialize)]
struct RejectionJson<'a> {
    order: &'a [String],
    step: usize,
    part_id: &'a str,
    reason: RejectReason,
    detail: &'a str,
}

#[derive(Serialize)]
struct PlanJson<'a> {
    feasible: bool,
    start: PoseJson,
    order_index: Option<usize>,
    candidates_evaluated: usize,
    steps: Vec<StepJson<'a>>,
    diagnostics: Vec<RejectionJson<'a>>,
}

/// Pretty-printed plan with every number at 9 significant digits; identical
/// plans give identical bytes.
pub fn plan_to_json(plan: &InteractionPlan) -> Result<String> {
    let steps = plan
        .steps
        .iter()
        .map(|s| StepJson {
            part_id: &s.part_id,
            kind: s.kind,
            goal: r(match s.kind {
                JointKind::Revolute => s.goal.to_degrees(),
                JointKind::Prismatic => s.goal,
            }),
            base_pose: (&s.base_pose).into(),
            waypoints: s
                .trajectory
                .waypoints
                .iter()
                .map(|w| [r(w.x), r(w.y), r(w.z)])
                .collect(),
            reach_count: s.reach_count,
        })
        .collect();
    let diagnostics = plan
        .diagnostics
        .iter()
        .map(|d| RejectionJson {
            order: &d.order,
            step: d.step,
            part_id: &d.part_id,
            reason: d.reason,
            detail: &d.detail,
        })
        .collect();
    let doc = PlanJson {
        feasible: plan.feasible,
        start: (&plan.start).into(),
        order_index: plan.order_index,
        candidates_evaluated: plan.candidates_evaluated,
        steps,
        diagnostics,
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
