//! Exploratory interaction under unknown kinematics: visit each handle, pull
//! along the locally estimated surface normal, detect failed attempts,
//! reposition heuristically and collect pre/post observation pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    cloud_displacement, estimate_normals, fit_dominant_plane, KdTree, PointCloud, Vec3,
    DEFAULT_NORMAL_K,
};
use crate::scene::{ArmReach, BasePose, KinematicScene, RobotState, SceneState};
use crate::sim::{
    attempt_pull, nav_grid, part_at_grasp, render_observation, Camera, Observation, OccupancyGrid,
    SimConfig, SimRng,
};

/// Nominal base speed used for the simulated clock (m/s).
const NAV_SPEED: f64 = 0.25;
const PULL_SECONDS: f64 = 0.5;
const OBSERVE_SECONDS: f64 = 0.2;
const GRASP_SECONDS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationConfig {
    /// Micro-interactions per attempt.
    pub max_steps: usize,
    /// Minimum chamfer displacement (m) that counts as motion.
    pub failure_threshold: f64,
    pub reposition_distance: f64,
    pub retreat_distance: f64,
    pub max_attempts: usize,
    /// Radians.
    pub rotation_classify_threshold: f64,
    /// Radius of the neighbourhood used for the pull direction.
    pub compliance_radius: f64,
    pub compliance_min_points: usize,
    /// Crop radius of the recorded pre/post observations.
    pub record_view_radius: f64,
    /// Repositioned bases snap to a free cell within this radius.
    pub snap_radius: f64,
    pub arm_reach: ArmReach,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            max_steps: 20,
            failure_threshold: 0.02,
            reposition_distance: 0.30,
            retreat_distance: 0.5,
            max_attempts: 4,
            rotation_classify_threshold: 5f64.to_radians(),
            compliance_radius: 0.15,
            compliance_min_points: 20,
            record_view_radius: 0.5,
            snap_radius: 0.5,
            arm_reach: ArmReach::default(),
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.failure_threshold,
            self.reposition_distance,
            self.retreat_distance,
            self.rotation_classify_threshold,
            self.compliance_radius,
            self.record_view_radius,
            self.snap_radius,
        ];
        if self.max_steps == 0 || self.max_attempts == 0 || positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Validation(
                "exploration parameters must be positive and max_attempts >= 1".into(),
            ));
        }
        self.arm_reach.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointClass {
    /// Counter-clockwise about world +z, seen from above.
    RevoluteLeft,
    RevoluteRight,
    Prismatic,
    Unknown,
}

impl JointClass {
    pub fn is_revolute(self) -> bool {
        matches!(self, JointClass::RevoluteLeft | JointClass::RevoluteRight)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JointClass::RevoluteLeft => "revolute-left",
            JointClass::RevoluteRight => "revolute-right",
            JointClass::Prismatic => "prismatic",
            JointClass::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    Navigation,
    Manipulation,
}

/// Annotated interaction hotspot.
#[derive(Debug, Clone, PartialEq)]
pub struct HandleAnnotation {
    pub id: String,
    pub position: Vec3,
}

/// Handles of every part at the scene's recorded joint states.
pub fn scene_handles(scene: &KinematicScene) -> Vec<HandleAnnotation> {
    scene
        .parts
        .iter()
        .map(|p| HandleAnnotation {
            id: p.id.clone(),
            position: p.joint.motion(p.joint.state).apply(&p.handle),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationRecord {
    pub part_id: String,
    pub pre: Observation,
    pub post: Observation,
    pub attempts_used: usize,
    pub classified_kind: JointClass,
    pub succeeded: bool,
    pub failure: Option<FailureCategory>,
    /// Chamfer displacement between `pre` and `post`.
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Navigate {
        to: BasePose,
        reachable: bool,
    },
    Observe {
        purpose: String,
        points: usize,
    },
    Grasp {
        point: [f64; 3],
        part: Option<String>,
    },
    Pull {
        step: usize,
        direction: [f64; 3],
        advanced: f64,
        slipped: bool,
    },
    Failure {
        reason: String,
    },
    Classify {
        kind: JointClass,
    },
    Reposition {
        kind: JointClass,
        to: BasePose,
    },
    Retreat {
        to: BasePose,
    },
    /// Parts moved back to their initial states after a handle.
    Restore,
    Outcome {
        succeeded: bool,
        attempts: usize,
        displacement: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplorationEvent {
    /// Simulated seconds since the start of the run.
    pub t: f64,
    pub handle: String,
    pub attempt: usize,
    /// Joint states of all parts after the event.
    pub states: std::collections::BTreeMap<String, f64>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FailureBreakdown {
    pub success: usize,
    pub navigation: usize,
    pub manipulation: usize,
    pub estimation: usize,
}

impl FailureBreakdown {
    pub fn from_records(records: &[ExplorationRecord]) -> Self {
        let mut b = FailureBreakdown::default();
        for r in records {
            match (r.succeeded, r.failure) {
                (true, _) => b.success += 1,
                (false, Some(FailureCategory::Navigation)) => b.navigation += 1,
                (false, _) => b.manipulation += 1,
            }
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationOutput {
    pub records: Vec<ExplorationRecord>,
    pub events: Vec<ExplorationEvent>,
    /// Joint states at the end; every part is restored after its record.
    pub final_state: SceneState,
    pub final_base: BasePose,
}

fn horizontal_unit(v: &Vec3) -> Option<Vec3> {
    let h = Vec3::new(v.x, v.y, 0.0);
    let n = h.norm();
    (n > 1e-9).then(|| h / n)
}

/// Pull direction at `grasp`: the outward (viewpoint-facing) surface normal
/// averaged over the points within 6 cm of the grasp, with per-point normals
/// estimated inside the `radius` neighbourhood.
pub fn compliance_action(
    obs: &Observation,
    grasp: &Vec3,
    radius: f64,
    min_points: usize,
) -> Result<Vec3> {
    let local: Vec<Vec3> = obs
        .cloud
        .points
        .iter()
        .copied()
        .filter(|p| (p - grasp).norm() <= radius)
        .collect();
    if local.len() < min_points.max(3) {
        return Err(Error::NoAction(format!(
            "{} points near the grasp (need {})",
            local.len(),
            min_points
        )));
    }
    let k = DEFAULT_NORMAL_K.min(local.len() - 1);
    let cloud = PointCloud::new(local);
    let normals = estimate_normals(&cloud, k, &obs.viewpoint)?;
    let near = 0.06f64.min(radius);
    let mut sum = Vec3::zeros();
    for (p, n) in cloud.points.iter().zip(&normals) {
        if let Some(n) = n {
            if (p - grasp).norm() <= near {
                sum += n;
            }
        }
    }
    if sum.norm() < 1e-9 {
        sum = normals.iter().flatten().sum();
    }
    let len = sum.norm();
    if len < 1e-9 {
        return Err(Error::NoAction(
            "no consistent surface normal at the grasp".into(),
        ));
    }
    Ok(sum / len)
}

/// True when the part did not move measurably: the chamfer displacement is
/// strictly below `threshold`. Empty observations count as failures.
pub fn detect_failure(pre: &Observation, current: &Observation, threshold: f64) -> bool {
    match cloud_displacement(&pre.cloud, &current.cloud) {
        Ok(d) => d < threshold,
        Err(_) => true,
    }
}

/// Points of `a` farther than `tol` from every point of `b` and within
/// `radius` of `center`.
fn displaced_subset(
    a: &PointCloud,
    b: &PointCloud,
    tol: f64,
    center: &Vec3,
    radius: f64,
) -> Vec<Vec3> {
    if b.is_empty() {
        return Vec::new();
    }
    let tree = KdTree::new(&b.points);
    a.points
        .iter()
        .copied()
        .filter(|p| (p - center).norm() <= radius)
        .filter(|p| tree.nearest(p).is_some_and(|n| n.dist_sq > tol * tol))
        .collect()
}

const DISPLACED_TOL: f64 = 0.015;
const DISPLACED_RADIUS: f64 = 0.25;
const PLANE_INLIER_TOL: f64 = 0.01;
const MIN_PLANE_POINTS: usize = 10;

/// Classifies the motion between two observations from the dominant planes
/// of their displaced points: normals further apart than `threshold` mean
/// revolute. The rotation sense (counter-clockwise about world +z seen from
/// above is "left") comes from the hotspot chord when the hotspot moved,
/// since a grasp point on a swinging part drifts toward the hinge side; the
/// plane normals decide it otherwise.
pub fn classify_joint(pre: &Observation, current: &Observation, threshold: f64) -> JointClass {
    let a = displaced_subset(
        &pre.cloud,
        &current.cloud,
        DISPLACED_TOL,
        &pre.hotspot,
        DISPLACED_RADIUS,
    );
    let b = displaced_subset(
        &current.cloud,
        &pre.cloud,
        DISPLACED_TOL,
        &current.hotspot,
        DISPLACED_RADIUS,
    );
    if a.len() < MIN_PLANE_POINTS || b.len() < MIN_PLANE_POINTS {
        return JointClass::Unknown;
    }
    let (Some(pa), Some(pb)) = (
        fit_dominant_plane(&a, PLANE_INLIER_TOL),
        fit_dominant_plane(&b, PLANE_INLIER_TOL),
    ) else {
        return JointClass::Unknown;
    };
    let n1 = if pa.normal.dot(&(pre.viewpoint - pa.centroid)) < 0.0 {
        -pa.normal
    } else {
        pa.normal
    };
    let n2 = if n1.dot(&pb.normal) < 0.0 {
        -pb.normal
    } else {
        pb.normal
    };
    let angle = n1.dot(&n2).clamp(-1.0, 1.0).acos();
    if angle <= threshold {
        return JointClass::Prismatic;
    }
    let chord = current.hotspot - pre.hotspot;
    let turn = if chord.norm() > 0.01 {
        n1.cross(&chord).z
    } else {
        n1.cross(&n2).z
    };
    if turn >= 0.0 {
        JointClass::RevoluteLeft
    } else {
        JointClass::RevoluteRight
    }
}

/// New base pose `distance` from the hotspot. Prismatic (and unknown)
/// motion retreats straight back along the line from the hotspot to the
/// robot; revolute motion moves diagonally toward the side of the rotation
/// (left of the face for counter-clockwise). The target snaps to the
/// nearest free cell within `snap_radius`.
pub fn reposition_base(
    kind: JointClass,
    hotspot: &Vec3,
    robot: &RobotState,
    distance: f64,
    grid: &OccupancyGrid,
    snap_radius: f64,
) -> Result<BasePose> {
    let b = &robot.base_pose;
    let away = horizontal_unit(&Vec3::new(b.x - hotspot.x, b.y - hotspot.y, 0.0))
        .unwrap_or_else(|| Vec3::new(-b.heading.cos(), -b.heading.sin(), 0.0));
    let left = Vec3::z().cross(&away);
    let dir = match kind {
        JointClass::RevoluteLeft => (away + left).normalize(),
        JointClass::RevoluteRight => (away - left).normalize(),
        JointClass::Prismatic | JointClass::Unknown => away,
    };
    let target = hotspot + dir * distance;
    let p = grid
        .nearest_free(target.x, target.y, snap_radius)
        .ok_or(Error::RepositionFailed {
            radius: snap_radius,
        })?;
    Ok(BasePose::facing(p[0], p[1], hotspot))
}

/// Why an attempt stopped before completing its micro-steps.
#[derive(Debug, Clone, PartialEq)]
enum Interruption {
    NoAction(String),
    GraspFailure,
    Slip,
    BaseCollision,
    OutOfReach,
}

impl Interruption {
    fn reason(&self) -> String {
        match self {
            Interruption::NoAction(m) => format!("no action: {m}"),
            Interruption::GraspFailure => "grasp failure".into(),
            Interruption::Slip => "gripper slipped".into(),
            Interruption::BaseCollision => "part would hit the base".into(),
            Interruption::OutOfReach => "next grasp point out of reach".into(),
        }
    }
}

/// Mutable run context threaded through the exploration of one scene.
struct Explorer<'a> {
    scene: &'a KinematicScene,
    sim: &'a SimConfig,
    cfg: &'a ExplorationConfig,
    rng: &'a mut SimRng,
    state: SceneState,
    robot: RobotState,
    clock: f64,
    events: Vec<ExplorationEvent>,
    handle: String,
    attempt: usize,
}

impl Explorer<'_> {
    fn log(&mut self, dt: f64, kind: EventKind) {
        self.clock += dt;
        self.events.push(ExplorationEvent {
            t: (self.clock * 1e6).round() / 1e6,
            handle: self.handle.clone(),
            attempt: self.attempt,
            states: self.state.joint_states.clone(),
            kind,
        });
    }

    fn grid(&self) -> OccupancyGrid {
        nav_grid(
            self.scene,
            &self.state,
            self.sim.grid_resolution,
            self.sim.robot_radius,
        )
    }

    fn camera(&self, crop_center: Vec3, radius: f64) -> Camera {
        let b = &self.robot.base_pose;
        Camera::new(
            Vec3::new(b.x, b.y, self.sim.camera_height),
            crop_center,
            radius,
        )
    }

    fn observe(
        &mut self,
        crop_center: Vec3,
        radius: f64,
        hotspot: Vec3,
        purpose: &str,
    ) -> Observation {
        let camera = self.camera(crop_center, radius);
        self.observe_with(camera, hotspot, purpose)
    }

    fn observe_with(&mut self, camera: Camera, hotspot: Vec3, purpose: &str) -> Observation {
        let obs = render_observation(
            self.scene,
            &self.state,
            &camera,
            hotspot,
            self.sim,
            self.rng,
        )
        .unwrap_or_else(|_| Observation {
            cloud: PointCloud::default(),
            hotspot,
            viewpoint: camera.viewpoint,
            sources: Vec::new(),
        });
        self.log(
            OBSERVE_SECONDS,
            EventKind::Observe {
                purpose: purpose.into(),
                points: obs.cloud.len(),
            },
        );
        obs
    }

    /// Current base pose, moved to the nearest free cell when a part opened
    /// over it (local navigation is exact, so the base can always back off).
    fn unstuck_base(&self, grid: &OccupancyGrid) -> BasePose {
        let b = self.robot.base_pose;
        if grid.is_free_at(b.x, b.y) {
            return b;
        }
        match grid.nearest_free(b.x, b.y, self.cfg.snap_radius) {
            Some(p) => BasePose::new(p[0], p[1], b.heading),
            None => b,
        }
    }

    fn navigate(&mut self, to: BasePose) -> bool {
        let grid = self.grid();
        let from = self.unstuck_base(&grid);
        let reachable = grid.check_path(&from, &to);
        let dist = ((to.x - self.robot.base_pose.x).powi(2)
            + (to.y - self.robot.base_pose.y).powi(2))
        .sqrt();
        if reachable {
            self.robot.base_pose = to;
        }
        self.log(dist / NAV_SPEED, EventKind::Navigate { to, reachable });
        reachable
    }

    /// Runs up to `max_steps` compliant pulls from the current grasp point.
    /// Returns the updated grasp point and the interruption, if any.
    fn attempt(&mut self, mut grasp: Vec3) -> (Vec3, Option<Interruption>) {
        let part = part_at_grasp(self.scene, &self.state, &grasp);
        self.robot.grasp_active = part.is_some();
        self.robot.gripper_open = part.is_none();
        self.log(
            GRASP_SECONDS,
            EventKind::Grasp {
                point: [grasp.x, grasp.y, grasp.z],
                part: part.clone(),
            },
        );
        let reach = self.cfg.arm_reach;
        // Only the outer radius and height band are enforced here: the front
        // base stands closer than the inner radius of the annulus.
        if self.robot.base_pose.horizontal_distance(&grasp) > reach.r_max
            || grasp.z < reach.z_min
            || grasp.z > reach.z_max
        {
            return (grasp, Some(Interruption::OutOfReach));
        }
        let Some(part_id) = part else {
            return (grasp, Some(Interruption::GraspFailure));
        };
        let part = self.scene.part(&part_id).expect("part found at grasp");
        for step in 1..=self.cfg.max_steps {
            let obs = self.observe(grasp, self.sim.view_radius, grasp, "step");
            let dir = match compliance_action(
                &obs,
                &grasp,
                self.cfg.compliance_radius,
                self.cfg.compliance_min_points,
            ) {
                Ok(d) => d,
                Err(e) => return (grasp, Some(Interruption::NoAction(e.to_string()))),
            };
            let out = match attempt_pull(self.scene, &self.state, &part_id, &grasp, &dir, self.sim)
            {
                Ok(o) => o,
                Err(_) => return (grasp, Some(Interruption::GraspFailure)),
            };
            self.log(
                PULL_SECONDS,
                EventKind::Pull {
                    step,
                    direction: [dir.x, dir.y, dir.z],
                    advanced: out.advanced,
                    slipped: out.slipped,
                },
            );
            if out.slipped {
                return (grasp, Some(Interruption::Slip));
            }
            if out.advanced.abs() <= 1e-12 {
                // Joint stopped moving: treat as the end of travel.
                return (grasp, None);
            }
            let theta = self.state.get_or_zero(&part_id);
            let next_theta = out.new_state.get_or_zero(&part_id);
            let step_motion = part
                .joint
                .motion(next_theta)
                .compose(&part.joint.motion(theta).inverse());
            let next_grasp = step_motion.apply(&grasp);
            let b = self.robot.base_pose;
            let next_shape = part.shape.transformed(&part.joint.motion(next_theta));
            if next_shape.contains(&Vec3::new(b.x, b.y, next_shape.center.z), 0.0) {
                return (grasp, Some(Interruption::BaseCollision));
            }
            if b.horizontal_distance(&next_grasp) > reach.r_max {
                return (grasp, Some(Interruption::OutOfReach));
            }
            self.state = out.new_state;
            grasp = next_grasp;
        }
        (grasp, None)
    }

    /// Returns every part touched during this handle to its initial state so
    /// an opened part does not occlude or block the next handle.
    fn restore(&mut self) {
        let initial = SceneState::initial(self.scene);
        if self.state != initial {
            self.state = initial;
            self.log(GRASP_SECONDS, EventKind::Restore);
        }
    }

    fn empty_record(
        &mut self,
        h: &HandleAnnotation,
        failure: FailureCategory,
        attempts: usize,
    ) -> ExplorationRecord {
        let empty = Observation {
            cloud: PointCloud::default(),
            hotspot: h.position,
            viewpoint: Vec3::zeros(),
            sources: Vec::new(),
        };
        self.log(
            0.0,
            EventKind::Outcome {
                succeeded: false,
                attempts,
                displacement: 0.0,
            },
        );
        ExplorationRecord {
            part_id: h.id.clone(),
            pre: empty.clone(),
            post: empty,
            attempts_used: attempts,
            classified_kind: JointClass::Unknown,
            succeeded: false,
            failure: Some(failure),
            displacement: 0.0,
        }
    }

    fn explore_handle(&mut self, h: &HandleAnnotation) -> ExplorationRecord {
        self.handle = h.id.clone();
        self.attempt = 0;
        let c_pre = h.position;
        let snap = self.cfg.snap_radius;

        // Approach anywhere near the handle, look, then stand in front of it.
        let grid = self.grid();
        let Some(p) = grid.nearest_free(c_pre.x, c_pre.y, self.cfg.arm_reach.r_max) else {
            self.log(
                0.0,
                EventKind::Failure {
                    reason: "no free floor near the handle".into(),
                },
            );
            return self.empty_record(h, FailureCategory::Navigation, 0);
        };
        if !self.navigate(BasePose::facing(p[0], p[1], &c_pre)) {
            return self.empty_record(h, FailureCategory::Navigation, 0);
        }
        let look = self.observe(c_pre, self.sim.view_radius, c_pre, "approach");
        let b = self.robot.base_pose;
        let toward_robot =
            horizontal_unit(&Vec3::new(b.x - c_pre.x, b.y - c_pre.y, 0.0)).unwrap_or(Vec3::y());
        let normal = compliance_action(
            &look,
            &c_pre,
            self.cfg.compliance_radius,
            self.cfg.compliance_min_points,
        )
        .ok()
        .and_then(|n| horizontal_unit(&n))
        .unwrap_or(toward_robot);
        let target = c_pre + normal * self.cfg.reposition_distance;
        let Some(p) = grid.nearest_free(target.x, target.y, snap) else {
            self.log(
                0.0,
                EventKind::Failure {
                    reason: "no free base in front of the handle".into(),
                },
            );
            return self.empty_record(h, FailureCategory::Navigation, 0);
        };
        if !self.navigate(BasePose::facing(p[0], p[1], &c_pre)) {
            return self.empty_record(h, FailureCategory::Navigation, 0);
        }

        let pre = self.observe(c_pre, self.cfg.record_view_radius, c_pre, "pre");
        let mut grasp = c_pre;
        let mut classified = JointClass::Unknown;
        let mut attempts_used = 0;
        let mut failure = None;
        for attempt in 1..=self.cfg.max_attempts {
            self.attempt = attempt;
            attempts_used = attempt;
            let start = grasp;
            let o_start = self.observe(start, self.sim.view_radius, start, "attempt-pre");
            let (g, interruption) = self.attempt(grasp);
            grasp = g;
            self.robot.grasp_active = false;
            self.robot.gripper_open = true;
            let o_end = self.observe(start, self.sim.view_radius, grasp, "attempt-end");
            let moved = !detect_failure(&o_start, &o_end, self.cfg.failure_threshold);
            let kind = if moved {
                classify_joint(&o_start, &o_end, self.cfg.rotation_classify_threshold)
            } else {
                JointClass::Unknown
            };
            if kind != JointClass::Unknown {
                classified = kind;
                self.log(0.0, EventKind::Classify { kind });
            }
            if let Some(i) = &interruption {
                self.log(0.0, EventKind::Failure { reason: i.reason() });
            } else if !moved {
                self.log(
                    0.0,
                    EventKind::Failure {
                        reason: "no displacement".into(),
                    },
                );
            }
            if moved && interruption.is_none() {
                failure = None;
                break;
            }
            failure = Some(FailureCategory::Manipulation);
            if attempt == self.cfg.max_attempts {
                break;
            }
            let grid = self.grid();
            let hint = if kind == JointClass::Unknown {
                classified
            } else {
                kind
            };
            match reposition_base(
                hint,
                &grasp,
                &self.robot,
                self.cfg.reposition_distance,
                &grid,
                snap,
            ) {
                Ok(to) => {
                    self.log(0.0, EventKind::Reposition { kind: hint, to });
                    if !self.navigate(to) {
                        failure = Some(FailureCategory::Navigation);
                        break;
                    }
                }
                Err(e) => {
                    self.log(
                        0.0,
                        EventKind::Failure {
                            reason: e.to_string(),
                        },
                    );
                    break;
                }
            }
        }

        // Step back and take the post-interaction view.
        let b = self.robot.base_pose;
        let back =
            horizontal_unit(&Vec3::new(b.x - grasp.x, b.y - grasp.y, 0.0)).unwrap_or(Vec3::zeros());
        let target = Vec3::new(b.x, b.y, 0.0) + back * self.cfg.retreat_distance;
        let grid = self.grid();
        if let Some(p) = grid.nearest_free(target.x, target.y, snap) {
            let to = BasePose::facing(p[0], p[1], &c_pre);
            if grid.check_path(&self.unstuck_base(&grid), &to) {
                self.robot.base_pose = to;
                let dist = ((to.x - b.x).powi(2) + (to.y - b.y).powi(2)).sqrt();
                self.log(dist / NAV_SPEED, EventKind::Retreat { to });
            }
        }
        // Cover the part where it started and where the grasp ended up.
        let camera = self
            .camera(c_pre, self.cfg.record_view_radius)
            .with_extra_center(grasp);
        let post = self.observe_with(camera, grasp, "post");
        let displacement = cloud_displacement(&pre.cloud, &post.cloud).unwrap_or(0.0);
        let succeeded = displacement >= self.cfg.failure_threshold;
        if succeeded {
            // The cumulative motion is the largest and most reliable signal.
            let overall = classify_joint(&pre, &post, self.cfg.rotation_classify_threshold);
            if overall != JointClass::Unknown {
                classified = overall;
            }
            failure = None;
        } else if failure.is_none() {
            failure = Some(FailureCategory::Manipulation);
        }
        self.log(
            0.0,
            EventKind::Outcome {
                succeeded,
                attempts: attempts_used,
                displacement,
            },
        );
        self.restore();
        ExplorationRecord {
            part_id: h.id.clone(),
            pre,
            post,
            attempts_used,
            classified_kind: classified,
            succeeded,
            failure,
            displacement,
        }
    }
}

/// Nearest free floor cell to the centre of the floor bounds.
pub fn default_start(scene: &KinematicScene, sim: &SimConfig) -> Result<BasePose> {
    let fb = &scene.base.floor_bounds;
    let grid = nav_grid(
        scene,
        &SceneState::initial(scene),
        sim.grid_resolution,
        sim.robot_radius,
    );
    let (cx, cy) = (0.5 * (fb.min[0] + fb.max[0]), 0.5 * (fb.min[1] + fb.max[1]));
    let r = (fb.max[0] - fb.min[0]).hypot(fb.max[1] - fb.min[1]);
    let p = grid
        .nearest_free(cx, cy, r)
        .ok_or(Error::RepositionFailed { radius: r })?;
    Ok(BasePose::new(p[0], p[1], 0.0))
}

/// Explores every handle in order against the hidden joints of `scene`,
/// starting from `start` with all parts at their recorded states.
pub fn explore_scene(
    scene: &KinematicScene,
    handles: &[HandleAnnotation],
    start: BasePose,
    sim: &SimConfig,
    cfg: &ExplorationConfig,
    rng: &mut SimRng,
) -> Result<ExplorationOutput> {
    if handles.is_empty() {
        return Err(Error::invalid("exploration needs at least one handle"));
    }
    sim.validate()?;
    cfg.validate()?;
    let mut robot = RobotState::at(start);
    robot.arm_reach = cfg.arm_reach;
    let mut ex = Explorer {
        scene,
        sim,
        cfg,
        rng,
        state: SceneState::initial(scene),
        robot,
        clock: 0.0,
        events: Vec::new(),
        handle: String::new(),
        attempt: 0,
    };
    let records = handles.iter().map(|h| ex.explore_handle(h)).collect();
    Ok(ExplorationOutput {
        records,
        events: ex.events,
        final_state: ex.state,
        final_base: ex.robot.base_pose,
    })
}

/// Heuristic interaction without a model: stand in front of the handle and
/// pull along the per-step surface normal until the motion stalls, slips or
/// becomes infeasible, for at most `max_steps` pulls. Returns the final
/// joint state of the grasped part.
#[allow(clippy::too_many_arguments)]
pub fn normal_following_open(
    scene: &KinematicScene,
    state: &SceneState,
    part_id: &str,
    start: BasePose,
    max_steps: usize,
    sim: &SimConfig,
    cfg: &ExplorationConfig,
    rng: &mut SimRng,
) -> Result<SceneState> {
    let part = scene.part(part_id)?;
    let handle = part.handle_at(state.get_or_zero(part_id))?;
    let cfg = ExplorationConfig {
        max_steps,
        ..cfg.clone()
    };
    let mut robot = RobotState::at(start);
    robot.arm_reach = cfg.arm_reach;
    let mut ex = Explorer {
        scene,
        sim,
        cfg: &cfg,
        rng,
        state: state.clone(),
        robot,
        clock: 0.0,
        events: Vec::new(),
        handle: part_id.to_string(),
        attempt: 1,
    };
    let grid = ex.grid();
    let look = ex.observe(handle, sim.view_radius, handle, "approach");
    let b = ex.robot.base_pose;
    let toward_robot =
        horizontal_unit(&Vec3::new(b.x - handle.x, b.y - handle.y, 0.0)).unwrap_or(Vec3::y());
    let normal = compliance_action(
        &look,
        &handle,
        cfg.compliance_radius,
        cfg.compliance_min_points,
    )
    .ok()
    .and_then(|n| horizontal_unit(&n))
    .unwrap_or(toward_robot);
    let target = handle + normal * cfg.reposition_distance;
    let p = grid
        .nearest_free(target.x, target.y, cfg.snap_radius)
        .ok_or(Error::RepositionFailed {
            radius: cfg.snap_radius,
        })?;
    ex.robot.base_pose = BasePose::facing(p[0], p[1], &handle);
    ex.attempt(handle);
    Ok(ex.state)
}
