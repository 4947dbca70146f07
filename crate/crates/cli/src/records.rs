//! On-disk exploration records: `records.json` plus one XYZ file per
//! observation under `observations/`.

use std::path::Path;

use artiscene::exploration::{ExplorationRecord, FailureCategory, JointClass};
use artiscene::geometry::{PointCloud, Vec3};
use artiscene::sim::Observation;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const RECORDS_FILE: &str = "records.json";
pub const OBSERVATION_DIR: &str = "observations";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationFile {
    /// Relative to the records directory.
    cloud: String,
    hotspot: [f64; 3],
    viewpoint: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordFile {
    part_id: String,
    succeeded: bool,
    classified_kind: JointClass,
    attempts_used: usize,
    failure: Option<FailureCategory>,
    displacement: f64,
    pre: ObservationFile,
    post: ObservationFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordsFile {
    records: Vec<RecordFile>,
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn save_observation(dir: &Path, name: String, obs: &Observation) -> CliResult<ObservationFile> {
    let rel = format!("{OBSERVATION_DIR}/{name}.xyz");
    obs.cloud.save_xyz(dir.join(&rel))?;
    Ok(ObservationFile {
        cloud: rel,
        hotspot: arr(&obs.hotspot),
        viewpoint: arr(&obs.viewpoint),
    })
}

/// Writes `records` under `dir` and returns the written paths, relative to
/// `dir`.
pub fn save_records(dir: &Path, records: &[ExplorationRecord]) -> CliResult<Vec<String>> {
    std::fs::create_dir_all(dir.join(OBSERVATION_DIR))?;
    let mut files = Vec::new();
    let mut out = Vec::new();
    for r in records {
        let pre = save_observation(dir, format!("{}_pre", r.part_id), &r.pre)?;
        let post = save_observation(dir, format!("{}_post", r.part_id), &r.post)?;
        files.push(pre.cloud.clone());
        files.push(post.cloud.clone());
        out.push(RecordFile {
            part_id: r.part_id.clone(),
            succeeded: r.succeeded,
            classified_kind: r.classified_kind,
            attempts_used: r.attempts_used,
            failure: r.failure,
            displacement: r.displacement,
            pre,
            post,
        });
    }
    let text = serde_json::to_string_pretty(&RecordsFile { records: out })?;
    std::fs::write(dir.join(RECORDS_FILE), text + "\n")?;
    files.insert(0, RECORDS_FILE.to_string());
    Ok(files)
}

fn load_observation(dir: &Path, f: &ObservationFile) -> CliResult<Observation> {
    Ok(Observation {
        cloud: PointCloud::load_xyz(dir.join(&f.cloud))?,
        hotspot: v3(f.hotspot),
        viewpoint: v3(f.viewpoint),
        sources: Vec::new(),
    })
}

pub fn load_records(dir: &Path) -> CliResult<Vec<ExplorationRecord>> {
    let path = dir.join(RECORDS_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let file: RecordsFile = serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Validation(format!(
            "{}: at `{}`: {}",
            path.display(),
            e.path(),
            e.inner()
        ))
    })?;
    file.records
        .into_iter()
        .map(|r| {
            Ok(ExplorationRecord {
                pre: load_observation(dir, &r.pre)?,
                post: load_observation(dir, &r.post)?,
                part_id: r.part_id,
                attempts_used: r.attempts_used,
                classified_kind: r.classified_kind,
                succeeded: r.succeeded,
                failure: r.failure,
                displacement: r.displacement,
            })
        })
        .collect()
}
