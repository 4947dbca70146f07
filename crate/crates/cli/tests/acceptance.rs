//! Acceptance gate. Runs criteria 1–9 and prints one PASS/FAIL line each;
//! exits non-zero if any criterion fails.
//!
//! Every check is made against an oracle written here, independently of the
//! library code under test: quaternion rotations, brute-force point sampling
//! for box overlap, a polygon-distance occupancy raster with its own flood
//! fill, and synthetic rigid motions with known screw parameters.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use artiscene::estimation::{fit_screw, line_distance};
use artiscene::exploration::{
    default_start, explore_scene, scene_handles, ExplorationConfig, JointClass,
};
use artiscene::fixtures;
use artiscene::geometry::{
    angle_between, obb_intersects, obb_separation, rodrigues_rotation, Mat3, OrientedBox,
    PointCloud, RigidTransform, Vec3,
};
use artiscene::planner::{
    check_order, plan_scene, planner_start, prismatic_trajectory, revolute_trajectory,
    PlannerConfig, RejectReason, Rejection,
};
use artiscene::scene::{BasePose, JointKind, JointModel, KinematicScene, MobilePart, SceneState};
use artiscene::sim::{sim_rng, SimConfig};
use nalgebra::{Unit, UnitQuaternion};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

fn random_point(rng: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

/// Rotation about `axis` by `angle` through a unit quaternion.
fn quat_rotation(axis: &Vec3, angle: f64) -> Mat3 {
    UnitQuaternion::from_axis_angle(&Unit::new_normalize(*axis), angle)
        .to_rotation_matrix()
        .into_inner()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// ------------------------------------------------------------ criterion 1

fn rotation_group() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = Instant::now();
    let mut worst = 0f64;
    for i in 0..1000 {
        let u = random_unit(&mut rng);
        let phi = rng.random_range(-2.0 * PI..2.0 * PI);
        let r = rodrigues_rotation(&u, phi).map_err(|e| e.to_string())?;
        let errs = [
            (r.transpose() * r - Mat3::identity()).abs().max(),
            (r.determinant() - 1.0).abs(),
            (r * u - u).norm(),
            (r.trace() - (1.0 + 2.0 * phi.cos())).abs(),
            (r - quat_rotation(&u, phi)).abs().max(),
        ];
        let e = errs.iter().copied().fold(0.0, f64::max);
        check(e <= 1e-9, || {
            format!("sample {i}: error {e:.3e} (axis {u:?}, angle {phi})")
        })?;
        worst = worst.max(e);
    }
    let dt = t.elapsed().as_secs_f64();
    check(dt < 1.0, || format!("took {dt:.3} s"))?;
    Ok(format!("1000 samples, worst error {worst:.2e}, {dt:.3} s"))
}

// ------------------------------------------------------------ criterion 2

fn trajectories() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f64;
    for n in 0..1000 {
        let p = random_point(&mut rng, 1.5);
        let u = random_unit(&mut rng);
        let k = rng.random_range(1..=20usize);
        if n % 2 == 0 {
            let q = random_point(&mut rng, 1.0);
            let joint = JointModel::revolute(u, q).map_err(|e| e.to_string())?;
            let g = rng.random_range(0.0..=joint.limit_max);
            let traj = revolute_trajectory(&p, &joint, g, k).map_err(|e| e.to_string())?;
            check(traj.waypoints.len() == k + 1, || {
                format!("joint {n}: {} waypoints", traj.waypoints.len())
            })?;
            let radius = |w: &Vec3| {
                let d = w - q;
                (d - u * d.dot(&u)).norm()
            };
            let (r0, h0) = (radius(&p), (p - q).dot(&u));
            for (i, w) in traj.waypoints.iter().enumerate() {
                let expect = quat_rotation(&u, i as f64 * g / k as f64) * (p - q) + q;
                let e = (w - expect)
                    .norm()
                    .max((radius(w) - r0).abs())
                    .max(((w - q).dot(&u) - h0).abs());
                check(e <= 1e-9, || {
                    format!("revolute joint {n}, waypoint {i}: error {e:.3e}")
                })?;
                worst = worst.max(e);
            }
            check((traj.waypoints[0] - p).norm() <= 1e-9, || {
                format!("revolute joint {n}: first waypoint moved")
            })?;
        } else {
            let joint = JointModel::prismatic(u).map_err(|e| e.to_string())?;
            let g = rng.random_range(0.0..=joint.limit_max);
            let traj = prismatic_trajectory(&p, &joint, g, k).map_err(|e| e.to_string())?;
            check(traj.waypoints.len() == k + 1, || {
                format!("joint {n}: {} waypoints", traj.waypoints.len())
            })?;
            let e_end = (traj.waypoints[k] - (p + u * g))
                .norm()
                .max((traj.waypoints[0] - p).norm());
            check(e_end <= 1e-9, || {
                format!("prismatic joint {n}: endpoint error {e_end:.3e}")
            })?;
            for (i, pair) in traj.waypoints.windows(2).enumerate() {
                let e = (pair[1] - pair[0] - u * (g / k as f64)).norm();
                check(e <= 1e-9, || {
                    format!("prismatic joint {n}, step {i}: spacing error {e:.3e}")
                })?;
                worst = worst.max(e);
            }
            worst = worst.max(e_end);
        }
    }
    // Hand-evaluated quarter circle: p=(1,0,0) about z through the origin,
    // a quarter turn in two steps.
    let joint = JointModel::revolute(Vec3::z(), Vec3::zeros()).map_err(|e| e.to_string())?;
    let traj = revolute_trajectory(&Vec3::x(), &joint, FRAC_PI_2, 2).map_err(|e| e.to_string())?;
    let h = 2f64.sqrt() / 2.0;
    let expect = [Vec3::x(), Vec3::new(h, h, 0.0), Vec3::y()];
    // Exact up to the last bit of sin/cos.
    let ulp_tol = 4.0 * f64::EPSILON;
    for (i, (w, e)) in traj.waypoints.iter().zip(&expect).enumerate() {
        let d = (w - e).abs().max();
        check(d <= ulp_tol, || {
            format!("quarter circle waypoint {i}: {w:?} vs {e:?}")
        })?;
    }
    Ok(format!(
        "1000 joints, worst error {worst:.2e}; quarter circle within {ulp_tol:.1e}"
    ))
}

// ------------------------------------------------------------ criterion 3

/// An asymmetric synthetic part: a block with a smaller knob on one corner.
fn synthetic_part(rng: &mut ChaCha8Rng) -> Vec<OrientedBox> {
    let half = Vec3::new(
        rng.random_range(0.1..0.3),
        rng.random_range(0.08..0.25),
        rng.random_range(0.05..0.2),
    );
    let orient = quat_rotation(&random_unit(rng), rng.random_range(0.0..PI));
    let center = random_point(rng, 0.5);
    let body = OrientedBox::new(center, half, orient).expect("valid body");
    let knob_half = Vec3::new(0.04, 0.03, 0.05);
    let knob_local = Vec3::new(0.6 * half.x, 0.5 * half.y, half.z + knob_half.z);
    let knob =
        OrientedBox::new(center + orient * knob_local, knob_half, orient).expect("valid knob");
    vec![body, knob]
}

/// Area-weighted uniform samples on the surfaces of `boxes`.
fn sample_surface(boxes: &[OrientedBox], n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let mut faces = Vec::new();
    for b in boxes {
        let h = b.half_extents;
        for axis in 0..3 {
            let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
            for sign in [-1.0, 1.0] {
                faces.push((b, axis, a1, a2, sign, 4.0 * h[a1] * h[a2]));
            }
        }
    }
    let total: f64 = faces.iter().map(|f| f.5).sum();
    (0..n)
        .map(|_| {
            let mut pick = rng.random_range(0.0..total);
            let f = faces
                .iter()
                .find(|f| {
                    pick -= f.5;
                    pick <= 0.0
                })
                .unwrap_or(faces.last().expect("faces"));
            let (b, axis, a1, a2, sign, _) = *f;
            let h = b.half_extents;
            let mut l = Vec3::zeros();
            l[axis] = sign * h[axis];
            l[a1] = rng.random_range(-h[a1]..h[a1]);
            l[a2] = rng.random_range(-h[a2]..h[a2]);
            b.from_local(&l)
        })
        .collect()
}

struct SyntheticJoint {
    kind: JointKind,
    axis: Vec3,
    pivot: Option<Vec3>,
    motion: RigidTransform,
}

fn synthetic_joint(kind: JointKind, centroid: &Vec3, rng: &mut ChaCha8Rng) -> SyntheticJoint {
    let axis = random_unit(rng);
    match kind {
        JointKind::Revolute => {
            // Pivot 0.2–0.6 m from the part, off the axis through it.
            let off = random_unit(rng);
            let off = (off - axis * off.dot(&axis)).normalize();
            let pivot = centroid + off * rng.random_range(0.2..0.6);
            let angle = rng.random_range(30f64.to_radians()..90f64.to_radians());
            SyntheticJoint {
                kind,
                axis,
                pivot: Some(pivot),
                motion: RigidTransform::about_pivot(quat_rotation(&axis, angle), &pivot),
            }
        }
        JointKind::Prismatic => SyntheticJoint {
            kind,
            axis,
            pivot: None,
            motion: RigidTransform::from_translation(axis * rng.random_range(0.08..0.15)),
        },
    }
}

fn screw_errors(
    fit_kind: JointKind,
    axis: &Vec3,
    pivot: Option<&Vec3>,
    j: &SyntheticJoint,
) -> (bool, f64, f64) {
    let axis_err = angle_between(axis, &j.axis);
    let pivot_err = match (pivot, j.pivot) {
        (Some(p), Some(q)) => line_distance(p, axis, &q, &j.axis),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    (fit_kind == j.kind, axis_err, pivot_err)
}

fn screw_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kinds = |i: usize| {
        if i.is_multiple_of(2) {
            JointKind::Revolute
        } else {
            JointKind::Prismatic
        }
    };

    let (mut worst_axis, mut worst_pivot) = (0f64, 0f64);
    for i in 0..100 {
        let part = synthetic_part(&mut rng);
        let pre = sample_surface(&part, 2048, &mut rng);
        let c = pre.iter().sum::<Vec3>() / pre.len() as f64;
        let j = synthetic_joint(kinds(i), &c, &mut rng);
        let post: Vec<Vec3> = pre.iter().map(|p| j.motion.apply(p)).collect();
        let fit = fit_screw(&PointCloud::new(pre), &PointCloud::new(post), 10)
            .map_err(|e| format!("noiseless joint {i}: {e}"))?;
        let (kind_ok, ea, ep) = screw_errors(fit.kind, &fit.axis, fit.pivot.as_ref(), &j);
        check(kind_ok, || {
            format!(
                "noiseless joint {i}: {:?} classified {:?}",
                j.kind, fit.kind
            )
        })?;
        check(ea < 1e-6 && ep < 1e-6, || {
            format!("noiseless joint {i}: axis error {ea:.3e} rad, pivot error {ep:.3e} m")
        })?;
        worst_axis = worst_axis.max(ea);
        worst_pivot = worst_pivot.max(ep);
    }

    // Independent surface samples in each view, both perturbed.
    let noise = Normal::new(0.0, 0.005).expect("valid sigma");
    let jitter = |v: Vec3, rng: &mut ChaCha8Rng| {
        v + Vec3::new(noise.sample(rng), noise.sample(rng), noise.sample(rng))
    };
    // 100 revolute trials carry both metrics; 50 prismatic ones add an axis
    // check for the other kind.
    let (mut axis_errs, mut pivot_errs, mut slide_errs) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..150 {
        let kind = if i < 100 {
            JointKind::Revolute
        } else {
            JointKind::Prismatic
        };
        let part = synthetic_part(&mut rng);
        let pre = sample_surface(&part, 2048, &mut rng);
        let c = pre.iter().sum::<Vec3>() / pre.len() as f64;
        let j = synthetic_joint(kind, &c, &mut rng);
        let post: Vec<Vec3> = sample_surface(&part, 2048, &mut rng)
            .into_iter()
            .map(|p| jitter(j.motion.apply(&p), &mut rng))
            .collect();
        let pre: Vec<Vec3> = pre.into_iter().map(|p| jitter(p, &mut rng)).collect();
        let (ea, ep) = match fit_screw(&PointCloud::new(pre), &PointCloud::new(post), 10) {
            Ok(fit) => {
                let (_, ea, ep) = screw_errors(fit.kind, &fit.axis, fit.pivot.as_ref(), &j);
                (ea, ep)
            }
            Err(_) => (PI, f64::INFINITY),
        };
        match kind {
            JointKind::Revolute => {
                axis_errs.push(ea.to_degrees());
                pivot_errs.push(ep);
            }
            JointKind::Prismatic => slide_errs.push(ea.to_degrees()),
        }
    }
    let (ma, mp, ms) = (median(axis_errs), median(pivot_errs), median(slide_errs));
    let dt = t.elapsed().as_secs_f64();
    check(ma < 5.0 && mp < 0.05, || {
        format!("noisy median axis error {ma:.3}°, pivot error {mp:.4} m")
    })?;
    check(ms < 5.0, || {
        format!("noisy prismatic median axis error {ms:.3}°")
    })?;
    check(dt < 60.0, || format!("took {dt:.1} s"))?;
    Ok(format!(
        "noiseless worst {worst_axis:.1e} rad / {worst_pivot:.1e} m; σ=5 mm over 100 trials median {ma:.2}° / {mp:.4} m (prismatic {ms:.2}°); {dt:.1} s"
    ))
}

// ------------------------------------------------------------ criterion 4

fn expected_class(part: &MobilePart) -> JointClass {
    match part.joint.kind {
        JointKind::Prismatic => JointClass::Prismatic,
        // Opening turns counter-clockwise seen from above when the axis
        // points up.
        JointKind::Revolute if part.joint.axis.z > 0.0 => JointClass::RevoluteLeft,
        JointKind::Revolute => JointClass::RevoluteRight,
    }
}

fn kitchen_exploration() -> Outcome {
    let scene = fixtures::kitchen();
    let kinds: Vec<_> = scene.parts.iter().map(|p| p.joint.kind).collect();
    let n_pris = kinds.iter().filter(|k| **k == JointKind::Prismatic).count();
    check(scene.parts.len() == 9 && n_pris == 4, || {
        format!(
            "kitchen has {} parts, {n_pris} prismatic",
            scene.parts.len()
        )
    })?;
    let mut summary = Vec::new();
    for seed in 0..5 {
        let t = Instant::now();
        let sim = SimConfig {
            rng_seed: seed,
            ..SimConfig::default()
        };
        let start = default_start(&scene, &sim).map_err(|e| e.to_string())?;
        let out = explore_scene(
            &scene,
            &scene_handles(&scene),
            start,
            &sim,
            &ExplorationConfig::default(),
            &mut sim_rng(seed),
        )
        .map_err(|e| format!("seed {seed}: {e}"))?;
        let good = out
            .records
            .iter()
            .filter(|r| {
                let part = scene.part(&r.part_id).expect("record of a scene part");
                r.succeeded && r.classified_kind == expected_class(part)
            })
            .count();
        let dt = t.elapsed().as_secs_f64();
        check(good >= 8, || format!("seed {seed}: {good}/9 correct"))?;
        check(dt < 60.0, || format!("seed {seed}: took {dt:.1} s"))?;
        summary.push(format!("{good}/9 in {dt:.1} s"));
    }
    Ok(format!("seeds 0–4: {}", summary.join(", ")))
}

// ------------------------------------------------------------ criterion 5

/// Point-sampling overlap oracle: a grid of `n³` points over the part of `a`
/// that can meet `b` (the clip of `a` to `b`'s bounds in `a`'s frame), each
/// tested for containment in `b`; then the same with the roles swapped.
fn sampled_overlap(a: &OrientedBox, b: &OrientedBox, margin: f64, n: usize) -> bool {
    let one_way = |a: &OrientedBox, b: &OrientedBox| {
        let a = a.inflated(margin);
        let b = b.inflated(margin);
        let (mut lo, mut hi) = (-a.half_extents, a.half_extents);
        let corners = b.corners().map(|c| a.to_local(&c));
        for k in 0..3 {
            let cmin = corners.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min);
            let cmax = corners
                .iter()
                .map(|c| c[k])
                .fold(f64::NEG_INFINITY, f64::max);
            lo[k] = lo[k].max(cmin);
            hi[k] = hi[k].min(cmax);
            if lo[k] > hi[k] {
                return false;
            }
        }
        let at = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let p = a.from_local(&Vec3::new(at(0, i), at(1, j), at(2, l)));
                    if b.contains(&p, 0.0) {
                        return true;
                    }
                }
            }
        }
        false
    };
    one_way(a, b) || one_way(b, a)
}

fn obb_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let random_box = |rng: &mut ChaCha8Rng| {
        let half = Vec3::new(
            rng.random_range(0.02..0.5),
            rng.random_range(0.02..0.5),
            rng.random_range(0.02..0.5),
        );
        let r = quat_rotation(&random_unit(rng), rng.random_range(0.0..PI));
        OrientedBox::new(random_point(rng, 0.8), half, r).expect("valid box")
    };
    let (mut agree, mut hits, mut worst) = (0usize, 0usize, 0f64);
    let total = 10_000;
    for i in 0..total {
        let a = random_box(&mut rng);
        let b = random_box(&mut rng);
        let sat = obb_intersects(&a, &b, 0.0);
        let mut oracle = sampled_overlap(&a, &b, 0.0, 12);
        if sat && !oracle {
            oracle = sampled_overlap(&a, &b, 0.0, 64);
        }
        hits += sat as usize;
        if sat == oracle {
            agree += 1;
            continue;
        }
        let depth = obb_separation(&a, &b, 0.0).abs();
        check(depth <= 1e-3, || {
            format!("pair {i}: SAT {sat}, sampling {oracle}, separation {depth:.3e} m")
        })?;
        worst = worst.max(depth);
    }
    let rate = agree as f64 / total as f64;
    check(rate >= 0.995, || format!("agreement {:.2}%", 100.0 * rate))?;
    Ok(format!(
        "{:.2}% agreement over {total} pairs ({hits} overlapping); worst disagreement {worst:.1e} m from contact",
        100.0 * rate
    ))
}

// ------------------------------------------------------------ criterion 6

fn permutations_of(ids: &[&str]) -> Vec<Vec<String>> {
    if ids.len() <= 1 {
        return vec![ids.iter().map(|s| s.to_string()).collect()];
    }
    let mut out = Vec::new();
    for (i, first) in ids.iter().enumerate() {
        let mut rest = ids.to_vec();
        rest.remove(i);
        for mut tail in permutations_of(&rest) {
            tail.insert(0, first.to_string());
            out.push(tail);
        }
    }
    out
}

fn full_goal(scene: &KinematicScene, order: &[String]) -> Vec<(String, f64)> {
    order
        .iter()
        .map(|id| (id.clone(), scene.part(id).expect("part").joint.limit_max))
        .collect()
}

/// Brute-force collision verdict for opening the parts fully in `order`:
/// each part, sampled at `n_configs` states from closed to open, must stay
/// clear of the base map and of every other part at its current state.
fn brute_force_collision_free(
    scene: &KinematicScene,
    order: &[String],
    n_configs: usize,
    margin: f64,
) -> bool {
    let mut state = SceneState::zeros(scene);
    for id in order {
        let part = scene.part(id).expect("part");
        let mut env: Vec<OrientedBox> = scene.base.obstacles.clone();
        for other in scene.parts.iter().filter(|p| &p.id != id) {
            env.push(
                other
                    .shape_at(state.get_or_zero(&other.id))
                    .expect("state within limits"),
            );
        }
        for j in 0..n_configs {
            let theta = part.joint.limit_max * j as f64 / (n_configs - 1) as f64;
            let shape = part.shape_at(theta).expect("within limits");
            if env.iter().any(|e| sampled_overlap(&shape, e, margin, 12)) {
                return false;
            }
        }
        state.joint_states.insert(id.clone(), part.joint.limit_max);
    }
    true
}

fn ordering_oracle() -> Outcome {
    let scene = fixtures::ordering_corner();
    let zeros = SceneState::zeros(&scene);
    let cfg = PlannerConfig::default();
    let start = planner_start(&scene, &zeros, &cfg).map_err(|e| e.to_string())?;
    let orders = permutations_of(&["a", "b", "c"]);
    let mut verdicts = Vec::new();
    for order in &orders {
        let planner = check_order(&scene, &zeros, &full_goal(&scene, order), &start, &cfg)
            .map_err(|e| e.to_string())?
            .is_ok();
        let oracle = brute_force_collision_free(&scene, order, cfg.n_configs, cfg.margin);
        check(planner == oracle, || {
            format!("order {order:?}: planner {planner}, brute force {oracle}")
        })?;
        let pos = |id: &str| order.iter().position(|o| o == id).expect("in order");
        check(oracle == (pos("b") < pos("a")), || {
            format!("order {order:?}: brute force {oracle} contradicts the b-before-a constraint")
        })?;
        verdicts.push(planner);
    }
    let n_feasible = verdicts.iter().filter(|v| **v).count();
    let oracle_fraction = n_feasible as f64 / orders.len() as f64;

    let goal = full_goal(&scene, &["a".into(), "b".into(), "c".into()]);
    let plan = plan_scene(&scene, &zeros, &goal, &cfg).map_err(|e| e.to_string())?;
    let chosen: Vec<String> = plan.order().iter().map(|s| s.to_string()).collect();
    let idx = orders.iter().position(|o| *o == chosen);
    check(plan.feasible && idx.is_some_and(|i| verdicts[i]), || {
        format!("plan feasible={} with order {chosen:?}", plan.feasible)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let draws = 1000;
    let mut ids = ["a", "b", "c"];
    let mut successes = 0;
    for _ in 0..draws {
        ids.shuffle(&mut rng);
        let i = orders
            .iter()
            .position(|o| o.iter().map(String::as_str).eq(ids.iter().copied()))
            .expect("a permutation");
        successes += verdicts[i] as usize;
    }
    let random_fraction = successes as f64 / draws as f64;
    let gap = (random_fraction - oracle_fraction).abs();
    check(gap <= 0.03, || {
        format!("random-order success {random_fraction:.3} vs oracle fraction {oracle_fraction:.3}")
    })?;
    Ok(format!(
        "{n_feasible}/6 orders feasible, all verdicts match; plan {chosen:?}; random orders succeed {:.1}% (oracle {:.1}%)",
        100.0 * random_fraction,
        100.0 * oracle_fraction
    ))
}

// ------------------------------------------------------------ criterion 7

/// Occupancy raster built from point-to-footprint distances, with its own
/// 4-connected flood fill.
struct Raster {
    origin: [f64; 2],
    res: f64,
    nx: usize,
    ny: usize,
    free: Vec<bool>,
}

fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Distance from `p` to the convex polygon `hull` (counter-clockwise); zero
/// inside.
fn polygon_distance(p: [f64; 2], hull: &[[f64; 2]]) -> f64 {
    let n = hull.len();
    let mut inside = true;
    let mut d = f64::INFINITY;
    for i in 0..n {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let (px, py) = (p[0] - a[0], p[1] - a[1]);
        if ex * py - ey * px < 0.0 {
            inside = false;
        }
        let t = ((px * ex + py * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
        d = d.min((px - t * ex).hypot(py - t * ey));
    }
    if inside {
        0.0
    } else {
        d
    }
}

impl Raster {
    fn new(
        scene: &KinematicScene,
        state: &SceneState,
        extra: &[OrientedBox],
        res: f64,
        radius: f64,
    ) -> Self {
        let fb = &scene.base.floor_bounds;
        let nx = ((fb.max[0] - fb.min[0]) / res).round() as usize;
        let ny = ((fb.max[1] - fb.min[1]) / res).round() as usize;
        let mut boxes: Vec<OrientedBox> = scene.base.obstacles.clone();
        for p in &scene.parts {
            boxes.push(p.shape_at(state.get_or_zero(&p.id)).expect("within limits"));
        }
        boxes.extend_from_slice(extra);
        let hulls: Vec<_> = boxes
            .iter()
            .map(|b| convex_hull(b.corners().iter().map(|c| [c.x, c.y]).collect()))
            .collect();
        let mut r = Raster {
            origin: fb.min,
            res,
            nx,
            ny,
            free: vec![false; nx * ny],
        };
        for j in 0..ny {
            for i in 0..nx {
                let c = r.center(i, j);
                r.free[j * nx + i] = hulls.iter().all(|h| polygon_distance(c, h) > radius);
            }
        }
        r
    }

    fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.res,
            self.origin[1] + (j as f64 + 0.5) * self.res,
        ]
    }

    fn nearest_free(&self, x: f64, y: f64, within: f64) -> Option<usize> {
        (0..self.nx * self.ny)
            .filter(|&k| self.free[k])
            .map(|k| {
                let c = self.center(k % self.nx, k / self.nx);
                ((c[0] - x).hypot(c[1] - y), k)
            })
            .filter(|(d, _)| *d <= within)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, k)| k)
    }

    fn flood(&self, seed: usize) -> Vec<bool> {
        let mut seen = vec![false; self.free.len()];
        seen[seed] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k % self.nx, k / self.nx);
            let mut next = Vec::with_capacity(4);
            if i > 0 {
                next.push(k - 1);
            }
            if i + 1 < self.nx {
                next.push(k + 1);
            }
            if j > 0 {
                next.push(k - self.nx);
            }
            if j + 1 < self.ny {
                next.push(k + self.nx);
            }
            for n in next {
                if self.free[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }
}

/// Whether step `r.step` of the rejected order is genuinely blocked: no floor
/// cell is (a) clear of the part's swept volume, (b) within arm reach of every
/// waypoint of the opening motion, (c) connected to the start before the
/// part moves, and (d) still connected to the start once it is open.
fn flood_fill_blocked(
    scene: &KinematicScene,
    r: &Rejection,
    start: &BasePose,
    cfg: &PlannerConfig,
) -> bool {
    let mut before = SceneState::zeros(scene);
    for id in &r.order[..r.step] {
        before
            .joint_states
            .insert(id.clone(), scene.part(id).expect("part").joint.limit_max);
    }
    let part = scene.part(&r.part_id).expect("part");
    let goal = part.joint.limit_max;
    let mut after = before.clone();
    after.joint_states.insert(part.id.clone(), goal);
    let sweep: Vec<OrientedBox> = (0..cfg.n_configs)
        .map(|j| {
            part.shape_at(goal * j as f64 / (cfg.n_configs - 1) as f64)
                .expect("within limits")
        })
        .collect();
    let waypoints: Vec<Vec3> = (0..=cfg.k)
        .map(|i| {
            part.handle_at(goal * i as f64 / cfg.k as f64)
                .expect("within limits")
        })
        .collect();

    let (res, rad) = (cfg.grid_resolution, cfg.robot_radius);
    let stand = Raster::new(scene, &before, &sweep, res, rad);
    let pre = Raster::new(scene, &before, &[], res, rad);
    let post = Raster::new(scene, &after, &[], res, rad);
    let reach = &cfg.arm_reach;
    let (Some(pre_home), Some(post_home)) = (
        pre.nearest_free(start.x, start.y, 1.0),
        post.nearest_free(start.x, start.y, 1.0),
    ) else {
        return true;
    };
    let (pre_cc, post_cc) = (pre.flood(pre_home), post.flood(post_home));
    !(0..stand.free.len()).any(|k| {
        let c = stand.center(k % stand.nx, k / stand.nx);
        stand.free[k]
            && pre_cc[k]
            && post_cc[k]
            && waypoints.iter().all(|w| {
                let d = (w.x - c[0]).hypot(w.y - c[1]);
                d >= reach.r_min && d <= reach.r_max && w.z >= reach.z_min && w.z <= reach.z_max
            })
    })
}

fn blocked_aisle() -> Outcome {
    let scene = fixtures::blocked_aisle();
    let zeros = SceneState::zeros(&scene);
    let start = fixtures::blocked_aisle_start();
    let ids = ["dishwasher", "drawer", "door"];
    let mut rejections: Vec<(PlannerConfig, Rejection)> = Vec::new();
    let mut plans = 0;
    for seed in 0..5 {
        let cfg = PlannerConfig {
            seed,
            start: Some(start),
            ..PlannerConfig::default()
        };
        for goal_order in permutations_of(&ids) {
            let goal = full_goal(&scene, &goal_order);
            let plan = plan_scene(&scene, &zeros, &goal, &cfg).map_err(|e| e.to_string())?;
            check(plan.feasible, || {
                format!("seed {seed}, goal {goal_order:?}: no feasible plan")
            })?;
            check(plan.order().last() == Some(&"dishwasher"), || {
                format!(
                    "seed {seed}, goal {goal_order:?}: plan order {:?}",
                    plan.order()
                )
            })?;
            plans += 1;
            rejections.extend(plan.diagnostics.into_iter().map(|r| (cfg.clone(), r)));
        }
        for order in permutations_of(&ids) {
            let goal = full_goal(&scene, &order);
            if let Err(r) =
                check_order(&scene, &zeros, &goal, &start, &cfg).map_err(|e| e.to_string())?
            {
                rejections.push((cfg.clone(), r));
            }
        }
    }
    check(!rejections.is_empty(), || "no order was rejected".into())?;
    for (cfg, r) in &rejections {
        check(r.reason == RejectReason::PathBlocked, || {
            format!(
                "order {:?} rejected for {:?}: {}",
                r.order, r.reason, r.detail
            )
        })?;
        check(flood_fill_blocked(&scene, r, &start, cfg), || {
            format!(
                "order {:?}, step {} (`{}`): flood fill finds a usable base",
                r.order, r.step, r.part_id
            )
        })?;
    }
    Ok(format!(
        "{plans} plans all leave the dishwasher last; {} rejections confirmed blocked by flood fill",
        rejections.len()
    ))
}

// ------------------------------------------------------------ criteria 8, 9

fn artiscene(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_artiscene"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "artiscene {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn kitchen_goal() -> String {
    let parts: Vec<String> = fixtures::kitchen()
        .parts
        .iter()
        .map(|p| {
            let v = match p.joint.kind {
                JointKind::Revolute => p.joint.limit_max.to_degrees(),
                JointKind::Prismatic => p.joint.limit_max,
            };
            format!("{{\"{}\": {v}}}", p.id)
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

/// (part_id, kind, opening_degree) rows of an opening table.
fn read_opening(path: &Path) -> Result<Vec<(String, String, f64)>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    r.records()
        .map(|row| {
            let row = row.map_err(|e| e.to_string())?;
            let deg = row[4].parse::<f64>().map_err(|e| e.to_string())?;
            Ok((row[0].to_string(), row[1].to_string(), deg))
        })
        .collect()
}

fn opening_degree() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scene = dir.path().join("kitchen.json");
    let out = dir.path().join("run");
    artiscene(&[
        "fixture",
        "kitchen",
        "--noiseless",
        "--out",
        scene.to_str().unwrap(),
    ])?;
    artiscene(&[
        "run-all",
        "--scene",
        scene.to_str().unwrap(),
        "--goal",
        &kitchen_goal(),
        "--baseline",
        "--out",
        out.to_str().unwrap(),
    ])?;
    let ours = read_opening(&out.join("opening.csv"))?;
    let base = read_opening(&out.join("baseline.csv"))?;
    check(ours.len() == 9, || {
        format!("{} parts in the opening table", ours.len())
    })?;
    for (id, _, d) in &ours {
        check(*d >= 0.95, || format!("`{id}` opened to {d:.3}"))?;
    }
    let revolute_mean = |rows: &[(String, String, f64)]| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.1 == "revolute")
            .map(|r| r.2)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (m_ours, m_base) = (revolute_mean(&ours), revolute_mean(&base));
    let min = ours.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    check(m_base < m_ours, || {
        format!("baseline revolute mean {m_base:.3} vs {m_ours:.3}")
    })?;
    Ok(format!(
        "minimum opening {min:.3}; revolute mean {m_ours:.3} vs heuristic {m_base:.3}"
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scene = dir.path().join("kitchen.json");
    artiscene(&["fixture", "kitchen", "--out", scene.to_str().unwrap()])?;
    let goal = kitchen_goal();
    let run = |name: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let out = dir.path().join(name);
        artiscene(&[
            "run-all",
            "--scene",
            scene.to_str().unwrap(),
            "--goal",
            &goal,
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ])?;
        let read = |p: &Path| std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()));
        Ok((
            read(&out.join("plan/plan.json"))?,
            read(&out.join("estimate/metrics.csv"))?,
        ))
    };
    let (plan1, metrics1) = run("first")?;
    let (plan2, metrics2) = run("second")?;
    check(plan1 == plan2, || "plan.json differs between runs".into())?;
    check(metrics1 == metrics2, || {
        "metrics.csv differs between runs".into()
    })?;
    Ok(format!(
        "seed 7 twice: plan.json ({} bytes) and metrics.csv ({} bytes) identical",
        plan1.len(),
        metrics1.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("rotation group", rotation_group),
        ("trajectories", trajectories),
        ("screw estimator", screw_oracle),
        ("kitchen exploration", kitchen_exploration),
        ("box overlap", obb_oracle),
        ("ordering", ordering_oracle),
        ("path blocking", blocked_aisle),
        ("opening degree", opening_degree),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS — {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL — {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
