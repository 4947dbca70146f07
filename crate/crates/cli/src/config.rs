use std::path::Path;

use artiscene::estimation::EstimationConfig;
use artiscene::exploration::ExplorationConfig;
use artiscene::planner::PlannerConfig;
use artiscene::scene::{JointKind, KinematicScene};
use artiscene::sim::SimConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::CommonArgs;
use crate::error::{CliError, CliResult};

/// Every tunable of a run after defaults, the scene file, `--config` and
/// flags have been applied (in that order).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub sim: SimConfig,
    pub exploration: ExplorationConfig,
    pub estimation: EstimationConfig,
    pub planner: PlannerConfig,
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl PipelineConfig {
    pub fn resolve(scene_sim: Option<SimConfig>, args: &CommonArgs) -> CliResult<Self> {
        let mut cfg = PipelineConfig {
            sim: scene_sim.unwrap_or_default(),
            ..Default::default()
        };
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let over: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let mut base = serde_json::to_value(&cfg)?;
            merge(&mut base, over);
            cfg = serde_path_to_error::deserialize(base).map_err(|e| {
                CliError::Validation(format!(
                    "{}: at `{}`: {}",
                    path.display(),
                    e.path(),
                    e.inner()
                ))
            })?;
        }
        cfg.sim.rng_seed = args.seed;
        cfg.planner.seed = args.seed;
        if let Some(s) = args.noise_sigma {
            cfg.sim.noise_sigma = s;
        }
        if let Some(m) = args.max_candidates {
            cfg.planner.max_candidates = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.sim.validate()?;
        self.exploration.validate()?;
        self.estimation.validate()?;
        self.planner.validate()?;
        Ok(())
    }
}

/// One goal entry in internal units (radians or meters).
#[derive(Debug, Clone, PartialEq)]
pub struct GoalEntry {
    pub part_id: String,
    pub threshold: f64,
}

/// Reads a goal spec: a JSON array of single-key objects
/// `{part_id: threshold}`, thresholds in degrees for revolute parts and
/// meters for prismatic ones. `spec` is inline JSON when it starts with `[`,
/// otherwise a file path.
pub fn parse_goal(spec: &str, scene: &KinematicScene) -> CliResult<Vec<GoalEntry>> {
    let text = if spec.trim_start().starts_with('[') {
        spec.to_string()
    } else {
        std::fs::read_to_string(Path::new(spec))
            .map_err(|e| CliError::Usage(format!("goal file {spec}: {e}")))?
    };
    let raw: Vec<serde_json::Map<String, Value>> =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("goal: {e}")))?;
    let mut out = Vec::with_capacity(raw.len());
    for (i, obj) in raw.into_iter().enumerate() {
        if obj.len() != 1 {
            return Err(CliError::Validation(format!(
                "goal[{i}]: expected exactly one `part_id: threshold` pair"
            )));
        }
        let (id, v) = obj.into_iter().next().expect("one entry");
        let value = v
            .as_f64()
            .ok_or_else(|| CliError::Validation(format!("goal[{i}].{id}: not a number")))?;
        let part = scene
            .part(&id)
            .map_err(|_| CliError::Validation(format!("goal[{i}]: unknown part `{id}`")))?;
        let threshold = match part.joint.kind {
            JointKind::Revolute => value.to_radians(),
            JointKind::Prismatic => value,
        };
        if !part.joint.within_limits(threshold) {
            return Err(CliError::Validation(format!(
                "goal[{i}].{id}: {value} outside the joint limits"
            )));
        }
        out.push(GoalEntry {
            part_id: id,
            threshold,
        });
    }
    Ok(out)
}
