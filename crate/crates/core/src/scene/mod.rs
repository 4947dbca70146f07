//! Scene-level articulation model, scene and robot state, and scene files.

mod io;
mod model;

pub use io::{
    load_scene, load_scene_with_sim, parse_scene_file, save_scene, save_scene_with_sim,
    scene_from_json, scene_to_json, BaseFile, BoundsFile, BoxFile, JointFile, PartFile, SceneFile,
    SCHEMA_VERSION,
};
pub use model::{
    goal_satisfied, part_pose_at, ArmReach, BasePose, FloorBounds, Goal, JointKind, JointModel,
    KinematicScene, MobilePart, RobotState, SceneState, StaticBaseMap, HANDLE_SURFACE_TOL,
    PRISMATIC_MAX, REVOLUTE_MAX,
};
