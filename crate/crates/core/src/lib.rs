//! Scene-level articulation modelling through simulated interaction, and
//! planning of multi-part interaction sequences.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod exploration;
pub mod fixtures;
pub mod geometry;
pub mod planner;
pub mod scene;
pub mod sim;

pub use error::{Error, Result};
pub use estimation::{EstimatedArticulation, EstimationConfig};
pub use exploration::{ExplorationConfig, ExplorationRecord, JointClass};
pub use geometry::{Mat3, OrientedBox, PointCloud, RigidTransform, Vec3};
pub use planner::{InteractionPlan, PlannerConfig};
pub use scene::{
    ArmReach, BasePose, Goal, JointKind, JointModel, KinematicScene, MobilePart, RobotState,
    SceneState, StaticBaseMap,
};
pub use sim::{Observation, SimConfig};
