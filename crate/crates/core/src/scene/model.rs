use std::collections::{BTreeMap, HashSet};
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ensure_unit, obb_intersects, rodrigues_rotation, OrientedBox, RigidTransform, Vec3,
};

/// Maximum revolute state (90 degrees), also the default upper limit.
pub const REVOLUTE_MAX: f64 = FRAC_PI_2;
/// Maximum prismatic state (15 cm), also the default upper limit.
pub const PRISMATIC_MAX: f64 = 0.15;
/// Handles must sit within this distance of their part's surface.
pub const HANDLE_SURFACE_TOL: f64 = 0.01;

const LIMIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

impl JointKind {
    pub fn max_state(self) -> f64 {
        match self {
            JointKind::Revolute => REVOLUTE_MAX,
            JointKind::Prismatic => PRISMATIC_MAX,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
        }
    }
}

impl std::fmt::Display for JointKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One-DoF joint between a mobile part and the static base.
///
/// Revolute joints rotate about the line through `pivot` along `axis`;
/// prismatic joints translate along `axis` and carry no pivot. The state is in
/// radians or meters respectively; positive states open the part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointModel {
    pub kind: JointKind,
    pub axis: Vec3,
    pub pivot: Option<Vec3>,
    pub limit_min: f64,
    pub limit_max: f64,
    pub state: f64,
}

impl JointModel {
    pub fn revolute(axis: Vec3, pivot: Vec3) -> Result<Self> {
        let j = JointModel {
            kind: JointKind::Revolute,
            axis,
            pivot: Some(pivot),
            limit_min: 0.0,
            limit_max: REVOLUTE_MAX,
            state: 0.0,
        };
        j.validate()?;
        Ok(j)
    }

    pub fn prismatic(axis: Vec3) -> Result<Self> {
        let j = JointModel {
            kind: JointKind::Prismatic,
            axis,
            pivot: None,
            limit_min: 0.0,
            limit_max: PRISMATIC_MAX,
            state: 0.0,
        };
        j.validate()?;
        Ok(j)
    }

    pub fn with_limits(mut self, min: f64, max: f64) -> Result<Self> {
        self.limit_min = min;
        self.limit_max = max;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_unit(&self.axis, "joint axis")?;
        match (self.kind, self.pivot) {
            (JointKind::Revolute, None) => {
                return Err(Error::Validation("revolute joint requires a pivot".into()))
            }
            (JointKind::Prismatic, Some(_)) => {
                return Err(Error::Validation(
                    "prismatic joint must not carry a pivot".into(),
                ))
            }
            _ => {}
        }
        if !(self.limit_min.is_finite() && self.limit_max.is_finite())
            || self.limit_min > self.limit_max
        {
            return Err(Error::Validation(format!(
                "joint limits [{}, {}] are not an interval",
                self.limit_min, self.limit_max
            )));
        }
        if !self.within_limits(self.state) {
            return Err(Error::Validation(format!(
                "joint state {} outside limits [{}, {}]",
                self.state, self.limit_min, self.limit_max
            )));
        }
        Ok(())
    }

    pub fn within_limits(&self, theta: f64) -> bool {
        theta >= self.limit_min - LIMIT_TOL && theta <= self.limit_max + LIMIT_TOL
    }

    pub fn clamp(&self, theta: f64) -> f64 {
        theta.clamp(self.limit_min, self.limit_max)
    }

    /// Rigid motion taking the part from state 0 to state `theta`, without
    /// limit checks.
    pub fn motion(&self, theta: f64) -> RigidTransform {
        match self.kind {
            JointKind::Prismatic => RigidTransform::from_translation(self.axis * theta),
            JointKind::Revolute => {
                let r = rodrigues_rotation(&self.axis, theta).expect("validated unit axis");
                RigidTransform::about_pivot(r, &self.pivot.expect("revolute pivot"))
            }
        }
    }

    /// Instantaneous direction in which `point` (on the part) moves when the
    /// joint opens. `None` for points on a revolute axis.
    pub fn motion_direction(&self, point: &Vec3) -> Option<Vec3> {
        match self.kind {
            JointKind::Prismatic => Some(self.axis),
            JointKind::Revolute => {
                let v = self
                    .axis
                    .cross(&(point - self.pivot.expect("revolute pivot")));
                let n = v.norm();
                (n > 1e-9).then(|| v / n)
            }
        }
    }

    /// Distance of `point` from the rotation axis (revolute) or 1 (prismatic):
    /// the ratio between grasp-point travel and joint travel.
    pub fn lever_arm(&self, point: &Vec3) -> f64 {
        match self.kind {
            JointKind::Prismatic => 1.0,
            JointKind::Revolute => self
                .axis
                .cross(&(point - self.pivot.expect("pivot")))
                .norm(),
        }
    }
}

/// A movable part: its geometry at state 0, its joint and its handle.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilePart {
    pub id: String,
    pub shape: OrientedBox,
    pub joint: JointModel,
    pub handle: Vec3,
}

/// Rigid motion of `part` at joint state `theta` relative to its state-0 pose.
pub fn part_pose_at(part: &MobilePart, theta: f64) -> Result<RigidTransform> {
    let j = &part.joint;
    if !j.within_limits(theta) {
        return Err(Error::LimitViolation {
            part: part.id.clone(),
            value: theta,
            min: j.limit_min,
            max: j.limit_max,
        });
    }
    Ok(j.motion(theta))
}

impl MobilePart {
    pub fn shape_at(&self, theta: f64) -> Result<OrientedBox> {
        Ok(self.shape.transformed(&part_pose_at(self, theta)?))
    }

    pub fn handle_at(&self, theta: f64) -> Result<Vec3> {
        Ok(part_pose_at(self, theta)?.apply(&self.handle))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorBounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl FloorBounds {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticBaseMap {
    pub obstacles: Vec<OrientedBox>,
    pub floor_bounds: FloorBounds,
}

/// Scene-level articulation model: static base map plus mobile parts, each
/// attached to the base by a single joint.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicScene {
    pub base: StaticBaseMap,
    pub parts: Vec<MobilePart>,
}

impl KinematicScene {
    pub fn part(&self, id: &str) -> Result<&MobilePart> {
        self.parts
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::UnknownPart(id.to_string()))
    }

    pub fn part_index(&self, id: &str) -> Result<usize> {
        self.parts
            .iter()
            .position(|p| p.id == id)
            .ok_or_else(|| Error::UnknownPart(id.to_string()))
    }

    /// Checks the scene invariants; the error names the offending item.
    pub fn validate(&self) -> Result<()> {
        let b = &self.base.floor_bounds;
        if !(b.min[0] < b.max[0] && b.min[1] < b.max[1]) {
            return Err(Error::Validation(
                "base.floor_bounds: min must be below max".into(),
            ));
        }
        for (i, o) in self.base.obstacles.iter().enumerate() {
            let tol = 1e-9;
            if o.corners().iter().any(|c| {
                c.x < b.min[0] - tol
                    || c.x > b.max[0] + tol
                    || c.y < b.min[1] - tol
                    || c.y > b.max[1] + tol
            }) {
                return Err(Error::Validation(format!(
                    "base.obstacles[{i}]: footprint leaves the floor bounds"
                )));
            }
        }
        let mut seen = HashSet::new();
        for (i, p) in self.parts.iter().enumerate() {
            if p.id.is_empty() {
                return Err(Error::Validation(format!(
                    "parts[{i}].id: empty identifier"
                )));
            }
            if !seen.insert(p.id.as_str()) {
                return Err(Error::Validation(format!(
                    "parts[{i}].id: duplicate id `{}`",
                    p.id
                )));
            }
            p.joint
                .validate()
                .map_err(|e| Error::Validation(format!("parts[{i}].joint ({}): {e}", p.id)))?;
            let d = p.shape.distance_to_surface(&p.handle);
            if d > HANDLE_SURFACE_TOL + 1e-12 {
                return Err(Error::Validation(format!(
                    "parts[{i}].handle ({}): {d:.4} m from the part surface",
                    p.id
                )));
            }
        }
        for (i, a) in self.parts.iter().enumerate() {
            for b in &self.parts[i + 1..] {
                if obb_intersects(&a.shape, &b.shape, 0.0) {
                    return Err(Error::Validation(format!(
                        "parts `{}` and `{}` overlap at state 0",
                        a.id, b.id
                    )));
                }
            }
        }
        let grid = crate::sim::nav_grid(
            self,
            &SceneState::zeros(self),
            crate::sim::DEFAULT_GRID_RESOLUTION,
            crate::sim::DEFAULT_ROBOT_RADIUS,
        );
        let reach = ArmReach::default();
        for p in &self.parts {
            if !grid.any_free_within(p.handle.x, p.handle.y, reach.r_max) {
                return Err(Error::Validation(format!(
                    "part `{}`: handle not reachable from free floor space",
                    p.id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
}

impl BasePose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    /// Pose at `(x, y)` facing the horizontal projection of `target`.
    pub fn facing(x: f64, y: f64, target: &Vec3) -> Self {
        Self {
            x,
            y,
            heading: (target.y - y).atan2(target.x - x),
        }
    }

    pub fn horizontal_distance(&self, p: &Vec3) -> f64 {
        ((p.x - self.x).powi(2) + (p.y - self.y).powi(2)).sqrt()
    }
}

/// Desk-scale stand-in for the arm configuration space: a waypoint is
/// reachable from a base pose when its horizontal distance lies in
/// `[r_min, r_max]` and its height in `[z_min, z_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmReach {
    pub r_min: f64,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for ArmReach {
    fn default() -> Self {
        Self {
            r_min: 0.35,
            r_max: 0.95,
            z_min: 0.1,
            z_max: 1.2,
        }
    }
}

impl ArmReach {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.r_min && self.r_min < self.r_max && self.z_min <= self.z_max) {
            return Err(Error::Validation(format!("invalid arm reach {self:?}")));
        }
        Ok(())
    }

    pub fn reaches(&self, base: &BasePose, p: &Vec3) -> bool {
        let d = base.horizontal_distance(p);
        d >= self.r_min && d <= self.r_max && p.z >= self.z_min && p.z <= self.z_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub base_pose: BasePose,
    pub arm_reach: ArmReach,
    pub grasp_active: bool,
    pub gripper_open: bool,
}

impl RobotState {
    pub fn at(base_pose: BasePose) -> Self {
        Self {
            base_pose,
            arm_reach: ArmReach::default(),
            grasp_active: false,
            gripper_open: true,
        }
    }
}

/// Joint state of every part, keyed by part id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneState {
    pub joint_states: BTreeMap<String, f64>,
}

impl SceneState {
    /// States as recorded in the scene's joint models.
    pub fn initial(scene: &KinematicScene) -> Self {
        Self {
            joint_states: scene
                .parts
                .iter()
                .map(|p| (p.id.clone(), p.joint.state))
                .collect(),
        }
    }

    /// Every part closed.
    pub fn zeros(scene: &KinematicScene) -> Self {
        Self {
            joint_states: scene.parts.iter().map(|p| (p.id.clone(), 0.0)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Result<f64> {
        self.joint_states
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownPart(id.to_string()))
    }

    /// State of `id`, defaulting to 0 for parts not tracked.
    pub fn get_or_zero(&self, id: &str) -> f64 {
        self.joint_states.get(id).copied().unwrap_or(0.0)
    }

    /// New state with `id` set to `theta`, checked against the joint limits.
    pub fn with(&self, scene: &KinematicScene, id: &str, theta: f64) -> Result<SceneState> {
        let part = scene.part(id)?;
        part_pose_at(part, theta)?;
        let mut next = self.clone();
        next.joint_states.insert(id.to_string(), theta);
        Ok(next)
    }

    pub fn validate(&self, scene: &KinematicScene) -> Result<()> {
        for (id, theta) in &self.joint_states {
            part_pose_at(scene.part(id)?, *theta)?;
        }
        Ok(())
    }
}

/// Ordered goal: part id and the minimum state it must reach.
pub type Goal = Vec<(String, f64)>;

/// True iff every referenced part's state is at least its threshold
/// (inclusive).
pub fn goal_satisfied(state: &SceneState, goal: &[(String, f64)]) -> Result<bool> {
    let mut ok = true;
    for (id, threshold) in goal {
        ok &= state.get(id)? >= *threshold;
    }
    Ok(ok)
}
