//! JSON scene files (`schema_version` 1). Lengths are meters; angles in the
//! file are degrees and are converted to radians on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{
    FloorBounds, JointKind, JointModel, KinematicScene, MobilePart, StaticBaseMap, PRISMATIC_MAX,
    REVOLUTE_MAX,
};
use crate::error::{Error, Result};
use crate::geometry::{yaw_rotation, OrientedBox, Vec3};
use crate::sim::SimConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub schema_version: u32,
    pub base: BaseFile,
    pub parts: Vec<PartFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BaseFile {
    #[serde(default)]
    pub obstacles: Vec<BoxFile>,
    pub floor_bounds: BoundsFile,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoxFile {
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    #[serde(default)]
    pub yaw_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PartFile {
    pub id: String,
    pub shape: BoxFile,
    pub joint: JointFile,
    pub handle: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JointFile {
    pub kind: JointKind,
    pub axis: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits_deg: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits_m: Option<[f64; 2]>,
    /// Current state in file units (degrees or meters); defaults to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<f64>,
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl BoxFile {
    fn to_box(&self, field: &str) -> Result<OrientedBox> {
        OrientedBox::new(
            v3(self.center),
            v3(self.half_extents),
            yaw_rotation(self.yaw_deg.to_radians()),
        )
        .map_err(|e| Error::Validation(format!("{field}: {e}")))
    }

    fn from_box(b: &OrientedBox, field: &str) -> Result<Self> {
        let yaw = b.orientation[(1, 0)].atan2(b.orientation[(0, 0)]);
        let residual = (b.orientation - yaw_rotation(yaw)).abs().max();
        if residual > 1e-9 {
            return Err(Error::Validation(format!(
                "{field}: orientation is not a pure yaw and cannot be stored"
            )));
        }
        Ok(BoxFile {
            center: arr(&b.center),
            half_extents: arr(&b.half_extents),
            yaw_deg: yaw.to_degrees(),
        })
    }
}

impl JointFile {
    fn to_joint(&self, field: &str) -> Result<JointModel> {
        let axis = v3(self.axis);
        let n = axis.norm();
        if !(n.is_finite() && n > 1e-9) {
            return Err(Error::Validation(format!(
                "{field}.axis: zero or non-finite vector"
            )));
        }
        let axis = axis / n;
        let (pivot, limits, state) = match self.kind {
            JointKind::Revolute => {
                if self.limits_m.is_some() {
                    return Err(Error::Validation(format!(
                        "{field}.limits_m: revolute joints take limits_deg"
                    )));
                }
                let pivot = self.pivot.ok_or_else(|| {
                    Error::Validation(format!("{field}.pivot: required for revolute joints"))
                })?;
                let lim = self
                    .limits_deg
                    .map(|l| [l[0].to_radians(), l[1].to_radians()])
                    .unwrap_or([0.0, REVOLUTE_MAX]);
                (Some(v3(pivot)), lim, self.state.unwrap_or(0.0).to_radians())
            }
            JointKind::Prismatic => {
                if self.pivot.is_some() {
                    return Err(Error::Validation(format!(
                        "{field}.pivot: prismatic joints carry no pivot"
                    )));
                }
                if self.limits_deg.is_some() {
                    return Err(Error::Validation(format!(
                        "{field}.limits_deg: prismatic joints take limits_m"
                    )));
                }
                let lim = self.limits_m.unwrap_or([0.0, PRISMATIC_MAX]);
                (None, lim, self.state.unwrap_or(0.0))
            }
        };
        let joint = JointModel {
            kind: self.kind,
            axis,
            pivot,
            limit_min: limits[0],
            limit_max: limits[1],
            state,
        };
        joint
            .validate()
            .map_err(|e| Error::Validation(format!("{field}: {e}")))?;
        Ok(joint)
    }

    fn from_joint(j: &JointModel) -> Self {
        match j.kind {
            JointKind::Revolute => JointFile {
                kind: j.kind,
                axis: arr(&j.axis),
                pivot: j.pivot.as_ref().map(arr),
                limits_deg: Some([j.limit_min.to_degrees(), j.limit_max.to_degrees()]),
                limits_m: None,
                state: Some(j.state.to_degrees()),
            },
            JointKind::Prismatic => JointFile {
                kind: j.kind,
                axis: arr(&j.axis),
                pivot: None,
                limits_deg: None,
                limits_m: Some([j.limit_min, j.limit_max]),
                state: Some(j.state),
            },
        }
    }
}

impl SceneFile {
    pub fn to_scene(&self) -> Result<KinematicScene> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "schema_version: expected {SCHEMA_VERSION}, found {}",
                self.schema_version
            )));
        }
        let obstacles = self
            .base
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, b)| b.to_box(&format!("base.obstacles[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let parts = self
            .parts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Ok(MobilePart {
                    id: p.id.clone(),
                    shape: p.shape.to_box(&format!("parts[{i}].shape"))?,
                    joint: p.joint.to_joint(&format!("parts[{i}].joint"))?,
                    handle: v3(p.handle),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scene = KinematicScene {
            base: StaticBaseMap {
                obstacles,
                floor_bounds: FloorBounds {
                    min: self.base.floor_bounds.min,
                    max: self.base.floor_bounds.max,
                },
            },
            parts,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn from_scene(scene: &KinematicScene, sim: Option<SimConfig>) -> Result<Self> {
        Ok(SceneFile {
            schema_version: SCHEMA_VERSION,
            base: BaseFile {
                obstacles: scene
                    .base
                    .obstacles
                    .iter()
                    .enumerate()
                    .map(|(i, b)| BoxFile::from_box(b, &format!("base.obstacles[{i}]")))
                    .collect::<Result<Vec<_>>>()?,
                floor_bounds: BoundsFile {
                    min: scene.base.floor_bounds.min,
                    max: scene.base.floor_bounds.max,
                },
            },
            parts: scene
                .parts
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    Ok(PartFile {
                        id: p.id.clone(),
                        shape: BoxFile::from_box(&p.shape, &format!("parts[{i}].shape"))?,
                        joint: JointFile::from_joint(&p.joint),
                        handle: arr(&p.handle),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            sim,
        })
    }
}

/// Parses scene JSON; errors name the offending field.
pub fn parse_scene_file(json: &str) -> Result<SceneFile> {
    let de = &mut serde_json::Deserializer::from_str(json);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::parse(path, e.into_inner().to_string())
    })
}

pub fn scene_from_json(json: &str) -> Result<(KinematicScene, Option<SimConfig>)> {
    let file = parse_scene_file(json)?;
    let scene = file.to_scene()?;
    if let Some(sim) = &file.sim {
        sim.validate()
            .map_err(|e| Error::Validation(format!("sim: {e}")))?;
    }
    Ok((scene, file.sim))
}

pub fn scene_to_json(scene: &KinematicScene, sim: Option<&SimConfig>) -> Result<String> {
    let file = SceneFile::from_scene(scene, sim.cloned())?;
    Ok(serde_json::to_string_pretty(&file).expect("scene file serializes"))
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<KinematicScene> {
    Ok(load_scene_with_sim(path)?.0)
}

pub fn load_scene_with_sim(path: impl AsRef<Path>) -> Result<(KinematicScene, Option<SimConfig>)> {
    let text = std::fs::read_to_string(path)?;
    scene_from_json(&text)
}

pub fn save_scene(scene: &KinematicScene, path: impl AsRef<Path>) -> Result<()> {
    save_scene_with_sim(scene, None, path)
}

pub fn save_scene_with_sim(
    scene: &KinematicScene,
    sim: Option<&SimConfig>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut text = scene_to_json(scene, sim)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
