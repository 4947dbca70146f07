use artiscene::fixtures;
use artiscene::geometry::{obb_intersects, Vec3};
use artiscene::planner::{
    base_samples, check_order, enumerate_orders, execute_plan, plan_scene, plan_to_json,
    prismatic_trajectory, revolute_trajectory, round_sig, sample_part_sweep, select_base,
    ExecutionConfig, InteractionPlan, PlannerConfig, RejectReason,
};
use artiscene::scene::{
    goal_satisfied, BasePose, JointKind, JointModel, KinematicScene, SceneState,
};
use artiscene::sim::nav_grid;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn arb_unit() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_filter_map("non-zero axis", |(x, y, z)| {
        let v = Vec3::new(x, y, z);
        (v.norm() > 0.1).then(|| v.normalize())
    })
}

fn arb_point() -> impl Strategy<Value = Vec3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn horizontal(base: &BasePose, p: &Vec3) -> f64 {
    (p.x - base.x).hypot(p.y - base.y)
}

/// Checks a feasible plan without the planner's own helpers: goals covered
/// once each, waypoints on the true handle path, every waypoint within reach
/// of its base, bases on free floor, sweeps clear of everything else, and
/// the goal met once all steps are applied.
fn validate_plan(
    scene: &KinematicScene,
    state: &SceneState,
    goal: &[(String, f64)],
    plan: &InteractionPlan,
    cfg: &PlannerConfig,
) {
    assert!(plan.feasible);
    let pending: Vec<&String> = goal
        .iter()
        .filter(|(id, g)| state.get_or_zero(id) < *g)
        .map(|(id, _)| id)
        .collect();
    let mut planned: Vec<&String> = plan.steps.iter().map(|s| &s.part_id).collect();
    planned.sort();
    let mut expect = pending.clone();
    expect.sort();
    assert_eq!(planned, expect);

    let mut committed = state.clone();
    for step in &plan.steps {
        let part = scene.part(&step.part_id).unwrap();
        let from = committed.get_or_zero(&part.id);
        let wps = &step.trajectory.waypoints;
        assert_eq!(wps.len(), cfg.k + 1);
        for (i, w) in wps.iter().enumerate() {
            let theta = from + (step.goal - from) * i as f64 / cfg.k as f64;
            assert!((w - part.handle_at(theta).unwrap()).norm() < 1e-9);
            let d = horizontal(&step.base_pose, w);
            let r = &cfg.arm_reach;
            assert!(d >= r.r_min && d <= r.r_max && w.z >= r.z_min && w.z <= r.z_max);
        }
        let grid = nav_grid(scene, &committed, cfg.grid_resolution, cfg.robot_radius);
        assert!(grid.is_free_at(step.base_pose.x, step.base_pose.y));
        let mut env = scene.base.obstacles.clone();
        for other in scene.parts.iter().filter(|p| p.id != part.id) {
            env.push(other.shape_at(committed.get_or_zero(&other.id)).unwrap());
        }
        for j in 0..cfg.n_configs {
            let s = part
                .shape_at(part.joint.limit_max * j as f64 / (cfg.n_configs - 1) as f64)
                .unwrap();
            assert!(env.iter().all(|e| !obb_intersects(&s, e, cfg.margin)));
        }
        committed.joint_states.insert(part.id.clone(), step.goal);
    }
    assert!(goal_satisfied(&committed, goal).unwrap());
}

fn full_goal(scene: &KinematicScene, ids: &[&str]) -> Vec<(String, f64)> {
    ids.iter()
        .map(|id| (id.to_string(), scene.part(id).unwrap().joint.limit_max))
        .collect()
}

proptest! {
    #[test]
    fn revolute_waypoints_keep_radius_and_height(
        u in arb_unit(), q in arb_point(), p in arb_point(), f in 0.0..=1.0f64, k in 1..25usize,
    ) {
        let j = JointModel::revolute(u, q).unwrap();
        let t = revolute_trajectory(&p, &j, f * j.limit_max, k).unwrap();
        prop_assert_eq!(t.waypoints.len(), k + 1);
        prop_assert_eq!(t.waypoints[0], p);
        let d0 = p - q;
        let (h0, r0) = (d0.dot(&u), (d0 - u * d0.dot(&u)).norm());
        for w in &t.waypoints {
            let d = w - q;
            prop_assert!((d.dot(&u) - h0).abs() < 1e-9);
            prop_assert!(((d - u * d.dot(&u)).norm() - r0).abs() < 1e-9);
        }
        // Equal angular steps give equal chords.
        let chords: Vec<f64> = t.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
        for c in &chords {
            prop_assert!((c - chords[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn prismatic_waypoints_are_affine(u in arb_unit(), p in arb_point(), f in 0.0..=1.0f64, k in 1..25usize) {
        let j = JointModel::prismatic(u).unwrap();
        let g = f * j.limit_max;
        let t = prismatic_trajectory(&p, &j, g, k).unwrap();
        for (i, w) in t.waypoints.iter().enumerate() {
            prop_assert!((w - (p + u * (g * i as f64 / k as f64))).norm() < 1e-12);
        }
        prop_assert!((t.waypoints[k] - (p + u * g)).norm() < 1e-12);
    }

    #[test]
    fn goals_beyond_the_limits_are_rejected(u in arb_unit(), p in arb_point(), over in 1e-6..1.0f64) {
        let r = JointModel::revolute(u, Vec3::zeros()).unwrap();
        prop_assert!(revolute_trajectory(&p, &r, r.limit_max + over, 4).is_err());
        prop_assert!(revolute_trajectory(&p, &r, -over, 4).is_err());
        let s = JointModel::prismatic(u).unwrap();
        prop_assert!(prismatic_trajectory(&p, &s, s.limit_max + over, 4).is_err());
    }

    #[test]
    fn base_samples_stay_in_the_disc_and_extend_by_prefix(
        c in arb_point(), range in 0.1..2.0f64, n in 1..300usize, seed in any::<u64>(),
    ) {
        let s = base_samples(&c, n, range, seed);
        prop_assert_eq!(s.len(), n);
        for p in &s {
            prop_assert!((p[0] - c.x).hypot(p[1] - c.y) <= range + 1e-12);
        }
        prop_assert_eq!(&base_samples(&c, n + 10, range, seed)[..n], &s[..]);
    }

    #[test]
    fn sampled_orders_are_distinct_permutations(n in 7..10usize, max in 1..60usize, seed in any::<u64>()) {
        let orders = enumerate_orders(n, max, seed);
        prop_assert_eq!(orders.len(), max);
        let mut seen = std::collections::HashSet::new();
        for o in &orders {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
            prop_assert!(seen.insert(o.clone()));
        }
        prop_assert_eq!(enumerate_orders(n, max, seed), orders);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The plan is infeasible exactly when no order of the pending parts
    /// passes; a feasible plan validates independently.
    #[test]
    fn infeasible_iff_no_order_passes(
        corner in any::<bool>(),
        mask in 1..8u8,
        fracs in prop::collection::vec(0.3..=1.0f64, 3),
        seed in 0..4u64,
    ) {
        let (scene, start) = if corner {
            (fixtures::ordering_corner(), None)
        } else {
            (fixtures::blocked_aisle(), Some(fixtures::blocked_aisle_start()))
        };
        let cfg = PlannerConfig { seed, start, ..PlannerConfig::default() };
        let state = SceneState::zeros(&scene);
        let goal: Vec<(String, f64)> = scene
            .parts
            .iter()
            .zip(&fracs)
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, (p, f))| (p.id.clone(), f * p.joint.limit_max))
            .collect();
        let plan = plan_scene(&scene, &state, &goal, &cfg).unwrap();
        let start = plan.start;
        let any_passes = enumerate_orders(goal.len(), cfg.max_candidates, seed).iter().any(|perm| {
            let order: Vec<(String, f64)> = perm.iter().map(|&i| goal[i].clone()).collect();
            check_order(&scene, &state, &order, &start, &cfg).unwrap().is_ok()
        });
        prop_assert_eq!(plan.feasible, any_passes);
        prop_assert_eq!(plan.candidates_evaluated, plan.diagnostics.len() + plan.feasible as usize);
        if plan.feasible {
            validate_plan(&scene, &state, &goal, &plan, &cfg);
        }
    }
}

#[test]
fn kitchen_plan_validates() {
    let scene = fixtures::kitchen();
    let state = SceneState::zeros(&scene);
    let ids: Vec<&str> = scene.parts.iter().map(|p| p.id.as_str()).collect();
    let goal = full_goal(&scene, &ids);
    let cfg = PlannerConfig::default();
    let plan = plan_scene(&scene, &state, &goal, &cfg).unwrap();
    assert!(plan.feasible, "{:?}", plan.diagnostics);
    validate_plan(&scene, &state, &goal, &plan, &cfg);
}

#[test]
fn ordering_corner_needs_door_before_drawer() {
    let scene = fixtures::ordering_corner();
    let state = SceneState::zeros(&scene);
    let cfg = PlannerConfig::default();
    let plan = plan_scene(&scene, &state, &full_goal(&scene, &["a", "b", "c"]), &cfg).unwrap();
    let order = plan.order();
    let pos = |id| order.iter().position(|o| *o == id).unwrap();
    assert!(pos("b") < pos("a"));
    // The first candidate (a, b, c) fails when the door swings into the
    // open drawer.
    assert!(plan.order_index.unwrap() > 0);
    let r = &plan.diagnostics[0];
    assert_eq!(
        (r.step, r.part_id.as_str(), r.reason),
        (1, "b", RejectReason::PartCollision)
    );
}

#[test]
fn partially_open_parts_plan_the_remainder() {
    let scene = fixtures::minimal_drawer();
    let mut state = SceneState::zeros(&scene);
    state.joint_states.insert("drawer".into(), 0.05);
    let cfg = PlannerConfig::default();
    let plan = plan_scene(&scene, &state, &[("drawer".into(), 0.15)], &cfg).unwrap();
    let t = &plan.steps[0].trajectory;
    let part = scene.part("drawer").unwrap();
    assert!((t.waypoints[0] - part.handle_at(0.05).unwrap()).norm() < 1e-12);
    assert!((t.waypoints[cfg.k] - part.handle_at(0.15).unwrap()).norm() < 1e-12);
    // Already satisfied goals produce no steps.
    let done = plan_scene(&scene, &state, &[("drawer".into(), 0.05)], &cfg).unwrap();
    assert!(done.feasible && done.steps.is_empty());
}

#[test]
fn select_base_is_deterministic_and_counts_reach() {
    let scene = fixtures::kitchen();
    let state = SceneState::zeros(&scene);
    let cfg = PlannerConfig::default();
    let grid = nav_grid(&scene, &state, cfg.grid_resolution, cfg.robot_radius);
    for part in &scene.parts {
        let traj = match part.joint.kind {
            JointKind::Revolute => revolute_trajectory(&part.handle, &part.joint, FRAC_PI_2, cfg.k),
            JointKind::Prismatic => prismatic_trajectory(&part.handle, &part.joint, 0.15, cfg.k),
        }
        .unwrap();
        let a = select_base(&traj, &grid, &cfg.arm_reach, 200, 1.2, 9).unwrap();
        let b = select_base(&traj, &grid, &cfg.arm_reach, 200, 1.2, 9).unwrap();
        assert_eq!(a, b);
        let r = &cfg.arm_reach;
        let count = |pose: &BasePose| {
            traj.waypoints
                .iter()
                .filter(|w| {
                    let d = horizontal(pose, w);
                    d >= r.r_min && d <= r.r_max && w.z >= r.z_min && w.z <= r.z_max
                })
                .count()
        };
        assert_eq!(a.reach_count, count(&a.pose));
        // No free sample reaches more waypoints.
        let c = traj.centroid();
        for p in base_samples(&c, 200, 1.2, 9) {
            if grid.is_free_at(p[0], p[1]) {
                assert!(count(&BasePose::facing(p[0], p[1], &c)) <= a.reach_count);
            }
        }
        // More samples can only help.
        let more = select_base(&traj, &grid, &cfg.arm_reach, 400, 1.2, 9).unwrap();
        assert!(more.reach_count >= a.reach_count);
    }
}

#[test]
fn sweeps_start_closed_and_prismatic_boxes_are_congruent() {
    let scene = fixtures::kitchen();
    for part in &scene.parts {
        let sweep = sample_part_sweep(part, 6).unwrap();
        assert_eq!(sweep.len(), 6);
        assert_eq!(sweep[0], part.shape_at(0.0).unwrap());
        assert_eq!(sweep[5], part.shape_at(part.joint.limit_max).unwrap());
        if part.joint.kind == JointKind::Prismatic {
            for b in &sweep {
                assert_eq!(b.half_extents, part.shape.half_extents);
                let off = b.center - sweep[0].center;
                assert!(off.cross(&part.joint.axis).norm() < 1e-12);
            }
        }
    }
    assert!(sample_part_sweep(&scene.parts[0], 1).is_err());
}

#[test]
fn plan_json_is_stable_and_rounded() {
    let scene = fixtures::ordering_corner();
    let state = SceneState::zeros(&scene);
    let cfg = PlannerConfig::default();
    let goal = full_goal(&scene, &["a", "b", "c"]);
    let a = plan_to_json(&plan_scene(&scene, &state, &goal, &cfg).unwrap()).unwrap();
    let b = plan_to_json(&plan_scene(&scene, &state, &goal, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(a.ends_with('\n'));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["feasible"], true);
    assert_eq!(v["steps"].as_array().unwrap().len(), 3);
    assert!(!v["diagnostics"].as_array().unwrap().is_empty());
    assert_eq!(round_sig(0.1 + 0.2, 9), 0.3);
    assert_eq!(round_sig(-1e-20, 9).to_bits(), (-1e-20f64).to_bits());
}

#[test]
fn executing_the_true_model_reaches_every_goal() {
    let scene = fixtures::kitchen();
    let state = SceneState::zeros(&scene);
    let ids: Vec<&str> = scene.parts.iter().map(|p| p.id.as_str()).collect();
    let plan = plan_scene(
        &scene,
        &state,
        &full_goal(&scene, &ids),
        &PlannerConfig::default(),
    )
    .unwrap();
    let report = execute_plan(&scene, &state, &plan, &ExecutionConfig::default()).unwrap();
    for p in &report.parts {
        assert!(p.opening_degree > 0.95, "{p:?}");
    }
}
