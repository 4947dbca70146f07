//! Deterministic synthetic environment: renders point-cloud observations,
//! answers pull attempts against the hidden joints, and rasterizes the floor
//! for navigation.

mod grid;
mod render;

pub use grid::{
    nav_grid, nav_grid_with, OccupancyGrid, DEFAULT_GRID_RESOLUTION, DEFAULT_ROBOT_RADIUS,
};
pub use render::{render_observation, render_scene, Camera, Observation, SurfaceSource};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_between, ensure_unit, Vec3};
use crate::scene::{JointKind, KinematicScene, SceneState};

/// The single random stream threaded through a run.
pub type SimRng = ChaCha8Rng;

pub fn sim_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Grasps farther than this from the part's current handle fail.
pub const GRASP_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Points per square meter of visible surface.
    pub surface_point_density: f64,
    /// Isotropic Gaussian noise per coordinate (meters).
    pub noise_sigma: f64,
    pub dropout_prob: f64,
    /// Radians.
    pub slip_angle: f64,
    /// Joint advance per perfect pull, radians.
    pub revolute_step: f64,
    /// Joint advance per perfect pull, meters.
    pub prismatic_step: f64,
    pub rng_seed: u64,
    /// Observations keep points within this distance of the crop center.
    pub view_radius: f64,
    /// Sensor height above the base position.
    pub camera_height: f64,
    /// Drop points hidden behind other boxes in addition to back faces.
    pub occlusion: bool,
    pub grid_resolution: f64,
    pub robot_radius: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            surface_point_density: 5000.0,
            noise_sigma: 0.002,
            dropout_prob: 0.02,
            slip_angle: 60f64.to_radians(),
            revolute_step: 0.05,
            prismatic_step: 0.01,
            rng_seed: 0,
            view_radius: 0.55,
            camera_height: 1.05,
            occlusion: true,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            robot_radius: DEFAULT_ROBOT_RADIUS,
        }
    }
}

impl SimConfig {
    pub fn noiseless() -> Self {
        Self {
            noise_sigma: 0.0,
            dropout_prob: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        if !(self.surface_point_density > 0.0 && self.surface_point_density.is_finite()) {
            return bad("surface_point_density must be positive");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return bad("dropout_prob must lie in [0, 1)");
        }
        if !(self.slip_angle > 0.0 && self.slip_angle < std::f64::consts::FRAC_PI_2) {
            return bad("slip_angle must lie in (0, pi/2)");
        }
        if !(self.revolute_step > 0.0 && self.prismatic_step > 0.0) {
            return bad("step sizes must be positive");
        }
        if !(self.view_radius > 0.0 && self.grid_resolution > 0.0 && self.robot_radius >= 0.0) {
            return bad(
                "view_radius and grid_resolution must be positive, robot_radius non-negative",
            );
        }
        Ok(())
    }

    pub fn step_size(&self, kind: JointKind) -> f64 {
        match kind {
            JointKind::Revolute => self.revolute_step,
            JointKind::Prismatic => self.prismatic_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullOutcome {
    /// Joint change actually applied.
    pub advanced: f64,
    pub slipped: bool,
    pub new_state: SceneState,
}

/// Id of the part whose current handle is nearest to `grasp`, if within
/// [`GRASP_TOLERANCE`].
pub fn part_at_grasp(scene: &KinematicScene, state: &SceneState, grasp: &Vec3) -> Option<String> {
    scene
        .parts
        .iter()
        .filter_map(|p| {
            let theta = p.joint.clamp(state.get_or_zero(&p.id));
            let d = (p.joint.motion(theta).apply(&p.handle) - grasp).norm();
            (d <= GRASP_TOLERANCE).then_some((d, &p.id))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, id)| id.clone())
}

/// One compliant micro-pull at `grasp` along `direction`.
///
/// The joint advances by `step·cos(angle)` when the pull lies within the
/// slip cone around the grasp point's true motion direction; otherwise the
/// gripper slips and nothing moves.
pub fn attempt_pull(
    scene: &KinematicScene,
    state: &SceneState,
    part_id: &str,
    grasp: &Vec3,
    direction: &Vec3,
    config: &SimConfig,
) -> Result<PullOutcome> {
    let part = scene.part(part_id)?;
    ensure_unit(direction, "pull direction")?;
    let theta = state.get_or_zero(part_id);
    let handle = part.handle_at(theta)?;
    let gap = (handle - grasp).norm();
    if gap > GRASP_TOLERANCE {
        return Err(Error::GraspFailure(format!(
            "grasp {gap:.3} m from the handle of `{part_id}`"
        )));
    }
    let slipped = PullOutcome {
        advanced: 0.0,
        slipped: true,
        new_state: state.clone(),
    };
    let Some(t) = part.joint.motion_direction(grasp) else {
        return Ok(slipped);
    };
    let angle = angle_between(direction, &t);
    if angle > config.slip_angle {
        return Ok(slipped);
    }
    let next = part
        .joint
        .clamp(theta + config.step_size(part.joint.kind) * angle.cos());
    Ok(PullOutcome {
        advanced: next - theta,
        slipped: false,
        new_state: state.with(scene, part_id, next)?,
    })
}
