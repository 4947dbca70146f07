use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use artiscene::estimation::{
    articulation_errors, estimate_articulation, estimated_scene, register_to_scene,
    EstimatedArticulation,
};
use artiscene::exploration::{
    default_start, explore_scene, normal_following_open, scene_handles, FailureBreakdown,
};
use artiscene::fixtures;
use artiscene::geometry::PointCloud;
use artiscene::planner::{
    execute_plan, plan_scene, plan_to_json, round_sig, ExecutionConfig, InteractionPlan,
};
use artiscene::scene::{
    load_scene, load_scene_with_sim, save_scene, save_scene_with_sim, JointKind, KinematicScene,
    SceneState, StaticBaseMap,
};
use artiscene::sim::{sim_rng, SimConfig};
use serde::Serialize;

use crate::args::{Cli, Command, CommonArgs, FixtureName};
use crate::config::{parse_goal, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::records::{load_records, save_records};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BASE_MAP_FILE: &str = "base_map.json";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const BREAKDOWN_FILE: &str = "breakdown.json";
pub const ESTIMATES_FILE: &str = "estimates.json";
pub const ESTIMATED_SCENE_FILE: &str = "estimated_scene.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const PLAN_FILE: &str = "plan.json";
pub const PLAN_SUMMARY_FILE: &str = "plan_summary.txt";
pub const EXECUTION_FILE: &str = "execution.json";
pub const OPENING_FILE: &str = "opening.csv";
pub const BASELINE_FILE: &str = "baseline.csv";

/// Pulls allowed to the model-free baseline per part: enough for a full
/// opening with perfect pulls at the default step sizes.
const BASELINE_STEPS: usize = 40;

/// What a command read, wrote and how long each stage took.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub config: PipelineConfig,
    /// Stage name → files written, relative to the output directory.
    pub outputs: BTreeMap<String, Vec<String>>,
    pub wall_clock_s: BTreeMap<String, f64>,
}

impl RunManifest {
    fn new(command: &str, seed: u64, config: PipelineConfig) -> Self {
        Self {
            command: command.into(),
            inputs: BTreeMap::new(),
            seed,
            config,
            outputs: BTreeMap::new(),
            wall_clock_s: BTreeMap::new(),
        }
    }

    fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.into(), path.display().to_string());
    }

    fn stage(&mut self, name: &str, started: Instant, files: Vec<String>) {
        self.wall_clock_s
            .insert(name.into(), started.elapsed().as_secs_f64());
        self.outputs.insert(name.into(), files);
    }

    fn write(&self, dir: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

/// Creates `dir`, refusing to reuse a non-empty one without `force`.
fn prepare_out(dir: &Path, force: bool) -> CliResult<()> {
    if dir.is_file() {
        return Err(CliError::Usage(format!("{} is a file", dir.display())));
    }
    if !force && dir.read_dir().is_ok_and(|mut d| d.next().is_some()) {
        return Err(CliError::Usage(format!(
            "{} is not empty; pass --force to overwrite",
            dir.display()
        )));
    }
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn load_input_scene(path: &Path) -> CliResult<(KinematicScene, Option<SimConfig>)> {
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "scene file {} not found",
            path.display()
        )));
    }
    Ok(load_scene_with_sim(path)?)
}

fn num(x: f64) -> String {
    round_sig(x, 9).to_string()
}

fn rel(prefix: &str, files: Vec<String>) -> Vec<String> {
    files.into_iter().map(|f| format!("{prefix}/{f}")).collect()
}

// ---------------------------------------------------------------- explore

fn explore_stage(
    scene: &KinematicScene,
    cfg: &PipelineConfig,
    out: &Path,
) -> CliResult<Vec<String>> {
    let start = default_start(scene, &cfg.sim)?;
    let mut rng = sim_rng(cfg.sim.rng_seed);
    let run = explore_scene(
        scene,
        &scene_handles(scene),
        start,
        &cfg.sim,
        &cfg.exploration,
        &mut rng,
    )?;
    let mut files = save_records(out, &run.records)?;
    let mut events = String::new();
    for e in &run.events {
        events.push_str(&serde_json::to_string(e)?);
        events.push('\n');
    }
    std::fs::write(out.join(EVENTS_FILE), events)?;
    let breakdown = FailureBreakdown::from_records(&run.records);
    std::fs::write(
        out.join(BREAKDOWN_FILE),
        serde_json::to_string_pretty(&breakdown)? + "\n",
    )?;
    let base_only = KinematicScene {
        base: scene.base.clone(),
        parts: Vec::new(),
    };
    save_scene(&base_only, out.join(BASE_MAP_FILE))?;
    files.extend([EVENTS_FILE, BREAKDOWN_FILE, BASE_MAP_FILE].map(String::from));
    Ok(files)
}

pub fn cmd_explore(scene_path: &Path, common: &CommonArgs) -> CliResult<RunManifest> {
    let (scene, sim) = load_input_scene(scene_path)?;
    let cfg = PipelineConfig::resolve(sim, common)?;
    prepare_out(&common.out, common.force)?;
    let mut m = RunManifest::new("explore", common.seed, cfg.clone());
    m.input("scene", scene_path);
    let t = Instant::now();
    let files = explore_stage(&scene, &cfg, &common.out)?;
    m.stage("explore", t, files);
    m.write(&common.out)?;
    Ok(m)
}

// --------------------------------------------------------------- estimate

#[derive(Serialize)]
struct EstimateJson {
    part_id: String,
    kind: JointKind,
    axis: [f64; 3],
    pivot: Option<[f64; 3]>,
    /// Degrees or meters.
    observed_delta: f64,
    confidence: f64,
    mobile_points: usize,
}

#[derive(Serialize)]
struct EstimationFailure {
    part_id: String,
    reason: String,
}

#[derive(Serialize)]
struct EstimatesFile {
    estimates: Vec<EstimateJson>,
    failures: Vec<EstimationFailure>,
}

fn a3(v: &artiscene::geometry::Vec3) -> [f64; 3] {
    [round_sig(v.x, 9), round_sig(v.y, 9), round_sig(v.z, 9)]
}

fn estimate_stage(
    records_dir: &Path,
    truth: Option<&KinematicScene>,
    cfg: &PipelineConfig,
    out: &Path,
) -> CliResult<(KinematicScene, Vec<String>)> {
    let records = load_records(records_dir)?;
    let base_path = records_dir.join(BASE_MAP_FILE);
    let base: StaticBaseMap = if base_path.is_file() {
        load_scene(&base_path)?.base
    } else if let Some(t) = truth {
        t.base.clone()
    } else {
        return Err(CliError::Usage(format!(
            "{} missing and no --truth scene given",
            base_path.display()
        )));
    };
    // The registration target: every recorded view of the untouched scene.
    let mut base_cloud = PointCloud::default();
    for r in &records {
        base_cloud.extend(&r.pre.cloud);
    }
    let mut estimates: Vec<EstimatedArticulation> = Vec::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in records.iter().filter(|r| r.succeeded) {
        let attempt = estimate_articulation(r, &cfg.estimation).and_then(|e| {
            register_to_scene(
                &e,
                &r.pre.cloud,
                &base_cloud,
                cfg.estimation.max_registration_residual,
            )
        });
        match attempt {
            Ok((e, _)) => {
                rows.push(EstimateJson {
                    part_id: e.part_id.clone(),
                    kind: e.kind,
                    axis: a3(&e.axis),
                    pivot: e.pivot.as_ref().map(a3),
                    observed_delta: round_sig(
                        match e.kind {
                            JointKind::Revolute => e.observed_delta.to_degrees(),
                            JointKind::Prismatic => e.observed_delta,
                        },
                        9,
                    ),
                    confidence: round_sig(e.confidence, 9),
                    mobile_points: e.part_cloud.len(),
                });
                estimates.push(e);
            }
            Err(err) => failures.push(EstimationFailure {
                part_id: r.part_id.clone(),
                reason: err.to_string(),
            }),
        }
    }
    let scene = estimated_scene(&base, &estimates)?;
    save_scene(&scene, out.join(ESTIMATED_SCENE_FILE))?;
    let mut breakdown = FailureBreakdown::from_records(&records);
    breakdown.success -= failures.len();
    breakdown.estimation = failures.len();
    std::fs::write(
        out.join(ESTIMATES_FILE),
        serde_json::to_string_pretty(&EstimatesFile {
            estimates: rows,
            failures,
        })? + "\n",
    )?;
    std::fs::write(
        out.join(BREAKDOWN_FILE),
        serde_json::to_string_pretty(&breakdown)? + "\n",
    )?;
    let mut files: Vec<String> = [ESTIMATED_SCENE_FILE, ESTIMATES_FILE, BREAKDOWN_FILE]
        .map(String::from)
        .to_vec();
    if let Some(truth) = truth {
        write_metrics(&out.join(METRICS_FILE), truth, &estimates)?;
        files.push(METRICS_FILE.into());
    }
    Ok((scene, files))
}

/// One row per true part: kinds and, when the kinds agree, the axis angle
/// error and (revolute) axis line distance.
fn write_metrics(
    path: &Path,
    truth: &KinematicScene,
    estimates: &[EstimatedArticulation],
) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "part_id",
        "kind_true",
        "kind_est",
        "angle_err_deg",
        "trans_err_m",
    ])?;
    for p in &truth.parts {
        let est = estimates.iter().find(|e| e.part_id == p.id);
        let (kind_est, angle, trans) = match est {
            None => ("none".to_string(), String::new(), String::new()),
            Some(e) => match articulation_errors(e.kind, &e.axis, e.pivot.as_ref(), &p.joint) {
                None => (e.kind.to_string(), String::new(), String::new()),
                Some(err) => (
                    e.kind.to_string(),
                    num(err.angle_err_deg),
                    err.trans_err_m.map(num).unwrap_or_default(),
                ),
            },
        };
        w.write_record([
            p.id.as_str(),
            p.joint.kind.as_str(),
            &kind_est,
            &angle,
            &trans,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_estimate(
    records_dir: &Path,
    truth_path: Option<&Path>,
    common: &CommonArgs,
) -> CliResult<RunManifest> {
    let truth = truth_path.map(load_input_scene).transpose()?;
    let cfg = PipelineConfig::resolve(truth.as_ref().and_then(|t| t.1.clone()), common)?;
    if !records_dir.is_dir() {
        return Err(CliError::Usage(format!(
            "records directory {} not found",
            records_dir.display()
        )));
    }
    prepare_out(&common.out, common.force)?;
    let mut m = RunManifest::new("estimate", common.seed, cfg.clone());
    m.input("records", records_dir);
    if let Some(p) = truth_path {
        m.input("truth", p);
    }
    let t = Instant::now();
    let (_, files) = estimate_stage(records_dir, truth.as_ref().map(|t| &t.0), &cfg, &common.out)?;
    m.stage("estimate", t, files);
    m.write(&common.out)?;
    Ok(m)
}

// ------------------------------------------------------------------- plan

fn plan_summary(plan: &InteractionPlan) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "feasible: {}", plan.feasible);
    let _ = writeln!(s, "order: {}", plan.order().join(" -> "));
    let _ = writeln!(s, "candidates evaluated: {}", plan.candidates_evaluated);
    for step in &plan.steps {
        let _ = writeln!(
            s,
            "  {}: base ({:.3}, {:.3}), {} of {} waypoints in reach",
            step.part_id,
            step.base_pose.x,
            step.base_pose.y,
            step.reach_count,
            step.trajectory.waypoints.len()
        );
    }
    if !plan.diagnostics.is_empty() {
        let _ = writeln!(s, "rejected:");
        for d in &plan.diagnostics {
            let _ = writeln!(
                s,
                "  [{}] step {} ({}): {}: {}",
                d.order.join(", "),
                d.step + 1,
                d.part_id,
                d.reason.as_str(),
                d.detail
            );
        }
    }
    s
}

fn plan_stage(
    scene: &KinematicScene,
    goal: &[(String, f64)],
    cfg: &PipelineConfig,
    out: &Path,
) -> CliResult<(InteractionPlan, Vec<String>)> {
    let plan = plan_scene(scene, &SceneState::zeros(scene), goal, &cfg.planner)?;
    std::fs::write(out.join(PLAN_FILE), plan_to_json(&plan)?)?;
    std::fs::write(out.join(PLAN_SUMMARY_FILE), plan_summary(&plan))?;
    Ok((plan, vec![PLAN_FILE.into(), PLAN_SUMMARY_FILE.into()]))
}

pub fn cmd_plan(scene_path: &Path, goal: &str, common: &CommonArgs) -> CliResult<RunManifest> {
    let (scene, sim) = load_input_scene(scene_path)?;
    let cfg = PipelineConfig::resolve(sim, common)?;
    let goal: Vec<(String, f64)> = parse_goal(goal, &scene)?
        .into_iter()
        .map(|g| (g.part_id, g.threshold))
        .collect();
    prepare_out(&common.out, common.force)?;
    let mut m = RunManifest::new("plan", common.seed, cfg.clone());
    m.input("scene", scene_path);
    let t = Instant::now();
    let (_, files) = plan_stage(&scene, &goal, &cfg, &common.out)?;
    m.stage("plan", t, files);
    m.write(&common.out)?;
    Ok(m)
}

// ---------------------------------------------------------------- run-all

#[derive(Serialize)]
struct PartOutcome {
    part_id: String,
    kind: JointKind,
    /// Degrees or meters, in the true joint's units.
    goal: f64,
    reached: f64,
    opening_degree: f64,
    status: String,
}

fn display_state(kind: JointKind, v: f64) -> f64 {
    match kind {
        JointKind::Revolute => v.to_degrees(),
        JointKind::Prismatic => v,
    }
}

fn write_opening_csv(path: &Path, rows: &[PartOutcome]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "part_id",
        "kind",
        "goal",
        "reached",
        "opening_degree",
        "status",
    ])?;
    for r in rows {
        w.write_record([
            r.part_id.as_str(),
            r.kind.as_str(),
            &num(r.goal),
            &num(r.reached),
            &num(r.opening_degree),
            &r.status,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_run_all(
    scene_path: &Path,
    goal_spec: &str,
    baseline: bool,
    common: &CommonArgs,
) -> CliResult<RunManifest> {
    let (truth, sim) = load_input_scene(scene_path)?;
    let cfg = PipelineConfig::resolve(sim, common)?;
    let goal = parse_goal(goal_spec, &truth)?;
    prepare_out(&common.out, common.force)?;
    let out = &common.out;
    let mut m = RunManifest::new("run-all", common.seed, cfg.clone());
    m.input("scene", scene_path);

    let explore_dir = out.join("explore");
    std::fs::create_dir_all(&explore_dir)?;
    let t = Instant::now();
    let files = explore_stage(&truth, &cfg, &explore_dir)?;
    m.stage("explore", t, rel("explore", files));

    let estimate_dir = out.join("estimate");
    std::fs::create_dir_all(&estimate_dir)?;
    let t = Instant::now();
    let (est, files) = estimate_stage(&explore_dir, Some(&truth), &cfg, &estimate_dir)?;
    m.stage("estimate", t, rel("estimate", files));

    // Goals carry over as fractions of each joint's range, so a misjudged
    // joint kind still receives a goal in its own units.
    let mut planned_goal = Vec::new();
    for g in &goal {
        if let Ok(p) = est.part(&g.part_id) {
            let frac = g.threshold / truth.part(&g.part_id)?.joint.limit_max;
            planned_goal.push((g.part_id.clone(), frac * p.joint.limit_max));
        }
    }
    let plan_dir = out.join("plan");
    std::fs::create_dir_all(&plan_dir)?;
    let t = Instant::now();
    let (plan, files) = plan_stage(&est, &planned_goal, &cfg, &plan_dir)?;
    m.stage("plan", t, rel("plan", files));

    let t = Instant::now();
    let zeros = SceneState::zeros(&truth);
    let report = execute_plan(&truth, &zeros, &plan, &ExecutionConfig::from_sim(&cfg.sim))?;
    let rows: Vec<PartOutcome> = goal
        .iter()
        .map(|g| {
            let part = truth.part(&g.part_id)?;
            let kind = part.joint.kind;
            let executed = report.parts.iter().find(|p| p.part_id == g.part_id);
            let status = match executed {
                Some(e) => e.stopped.clone().unwrap_or_else(|| "completed".into()),
                None if est.part(&g.part_id).is_err() => "no model".into(),
                None if !plan.feasible => "plan infeasible".into(),
                None => "already satisfied".into(),
            };
            let reached = report.final_state.get_or_zero(&g.part_id);
            Ok(PartOutcome {
                part_id: g.part_id.clone(),
                kind,
                goal: display_state(kind, g.threshold),
                reached: display_state(kind, reached),
                opening_degree: reached / part.joint.limit_max,
                status,
            })
        })
        .collect::<CliResult<_>>()?;
    std::fs::write(
        out.join(EXECUTION_FILE),
        serde_json::to_string_pretty(&rows)? + "\n",
    )?;
    write_opening_csv(&out.join(OPENING_FILE), &rows)?;
    m.stage(
        "execute",
        t,
        vec![EXECUTION_FILE.into(), OPENING_FILE.into()],
    );

    if baseline {
        let t = Instant::now();
        let start = default_start(&truth, &cfg.sim)?;
        let mut rng = sim_rng(cfg.sim.rng_seed);
        let mut rows = Vec::new();
        for g in &goal {
            let part = truth.part(&g.part_id)?;
            let kind = part.joint.kind;
            let (reached, status) = match normal_following_open(
                &truth,
                &zeros,
                &g.part_id,
                start,
                BASELINE_STEPS,
                &cfg.sim,
                &cfg.exploration,
                &mut rng,
            ) {
                Ok(s) => (s.get_or_zero(&g.part_id), "completed".to_string()),
                Err(e) => (0.0, e.to_string()),
            };
            rows.push(PartOutcome {
                part_id: g.part_id.clone(),
                kind,
                goal: display_state(kind, g.threshold),
                reached: display_state(kind, reached),
                opening_degree: reached / part.joint.limit_max,
                status,
            });
        }
        write_opening_csv(&out.join(BASELINE_FILE), &rows)?;
        m.stage("baseline", t, vec![BASELINE_FILE.into()]);
    }
    m.write(out)?;
    Ok(m)
}

// ---------------------------------------------------------------- fixture

pub fn cmd_fixture(name: FixtureName, out: &Path, noiseless: bool, force: bool) -> CliResult<()> {
    if out.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} exists; pass --force to overwrite",
            out.display()
        )));
    }
    let scene = match name {
        FixtureName::MinimalDrawer => fixtures::minimal_drawer(),
        FixtureName::Kitchen => fixtures::kitchen(),
        FixtureName::OrderingCorner => fixtures::ordering_corner(),
        FixtureName::BlockedAisle => fixtures::blocked_aisle(),
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    if noiseless {
        save_scene_with_sim(&scene, Some(&SimConfig::noiseless()), out)?;
    } else {
        save_scene(&scene, out)?;
    }
    Ok(())
}

/// Dispatches a parsed command line.
pub fn run(cli: Cli) -> CliResult<Option<RunManifest>> {
    match cli.command {
        Command::Explore { scene, common } => cmd_explore(&scene, &common).map(Some),
        Command::Estimate {
            records,
            truth,
            common,
        } => cmd_estimate(&records, truth.as_deref(), &common).map(Some),
        Command::Plan {
            scene,
            goal,
            common,
        } => cmd_plan(&scene, &goal, &common).map(Some),
        Command::RunAll {
            scene,
            goal,
            baseline,
            common,
        } => cmd_run_all(&scene, &goal, baseline, &common).map(Some),
        Command::Fixture {
            name,
            out,
            noiseless,
            force,
        } => cmd_fixture(name, &out, noiseless, force).map(|_| None),
    }
}
