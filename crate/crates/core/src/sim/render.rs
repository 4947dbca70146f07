//! Synthetic depth-sensor observations of box scenes.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{SimConfig, SimRng};
use crate::error::{Error, Result};
use crate::geometry::{OrientedBox, PointCloud, Vec3};
use crate::scene::{KinematicScene, SceneState};

/// Which scene box a rendered point was sampled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceSource {
    Obstacle(usize),
    Part(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub viewpoint: Vec3,
    /// Points farther than `crop_radius` from here (and from
    /// `extra_center`, when set) are not returned.
    pub crop_center: Vec3,
    pub crop_radius: f64,
    pub extra_center: Option<Vec3>,
}

impl Camera {
    pub fn new(viewpoint: Vec3, crop_center: Vec3, crop_radius: f64) -> Self {
        Self {
            viewpoint,
            crop_center,
            crop_radius,
            extra_center: None,
        }
    }

    /// Keeps points near either center.
    pub fn with_extra_center(mut self, center: Vec3) -> Self {
        self.extra_center = Some(center);
        self
    }

    fn centers(&self) -> Vec<Vec3> {
        std::iter::once(self.crop_center)
            .chain(self.extra_center)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// World-frame points.
    pub cloud: PointCloud,
    /// Current grasp/contact point.
    pub hotspot: Vec3,
    pub viewpoint: Vec3,
    /// Per-point provenance; empty for observations loaded from disk.
    pub sources: Vec<SurfaceSource>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic in-cell offset in `[-0.35, 0.35]` for a lattice site.
fn jitter(key: u64, face: usize, i: usize, j: usize, which: u64) -> f64 {
    let h = splitmix(
        key.wrapping_mul(0x1000_0000_01b3)
            ^ splitmix((face as u64) << 48 ^ (i as u64) << 24 ^ j as u64)
            ^ which,
    );
    ((h >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.7
}

/// True iff the segment from `from` to `to` passes through the interior of
/// `b` before reaching `to`.
fn segment_blocked(b: &OrientedBox, from: &Vec3, to: &Vec3) -> bool {
    let o = b.to_local(from);
    let d = b.to_local(to) - o;
    let (mut t0, mut t1): (f64, f64) = (0.0, 1.0 - 1e-7);
    for k in 0..3 {
        let h = b.half_extents[k] - 1e-9;
        if d[k].abs() < 1e-15 {
            if o[k].abs() >= h {
                return false;
            }
            continue;
        }
        let (mut a, mut c) = ((-h - o[k]) / d[k], (h - o[k]) / d[k]);
        if a > c {
            std::mem::swap(&mut a, &mut c);
        }
        t0 = t0.max(a);
        t1 = t1.min(c);
        if t0 >= t1 {
            return false;
        }
    }
    true
}

/// Every scene box at `state`, with its provenance and a stable lattice key.
fn scene_boxes(
    scene: &KinematicScene,
    state: &SceneState,
) -> Vec<(OrientedBox, SurfaceSource, u64)> {
    let mut out: Vec<_> = scene
        .base
        .obstacles
        .iter()
        .enumerate()
        .map(|(i, b)| (*b, SurfaceSource::Obstacle(i), 2 * i as u64))
        .collect();
    for (i, p) in scene.parts.iter().enumerate() {
        let theta = p.joint.clamp(state.get_or_zero(&p.id));
        out.push((
            p.shape.transformed(&p.joint.motion(theta)),
            SurfaceSource::Part(i),
            2 * i as u64 + 1,
        ));
    }
    out
}

/// Samples visible box surfaces inside the camera's crop sphere.
///
/// Each face carries a body-fixed jittered lattice at the configured density,
/// so points on a moving part move rigidly with it. Back faces are culled
/// and, when `config.occlusion` is set, points hidden behind other boxes are
/// dropped. Noise and dropout draw from `rng`.
pub fn render_scene(
    scene: &KinematicScene,
    state: &SceneState,
    camera: &Camera,
    config: &SimConfig,
    rng: &mut SimRng,
) -> Result<(PointCloud, Vec<SurfaceSource>)> {
    let boxes = scene_boxes(scene, state);
    let vp = camera.viewpoint;
    if let Some((_, src, _)) = boxes.iter().find(|(b, _, _)| b.contains(&vp, 0.0)) {
        return Err(Error::InvalidViewpoint(format!(
            "viewpoint ({:.3}, {:.3}, {:.3}) lies inside {src:?}",
            vp.x, vp.y, vp.z
        )));
    }
    let spacing = 1.0 / config.surface_point_density.sqrt();
    let radius = camera.crop_radius;
    let mut points = Vec::new();
    let mut sources = Vec::new();

    let centers = camera.centers();
    for (bi, (b, src, key)) in boxes.iter().enumerate() {
        let h = b.half_extents;
        let vl = b.to_local(&vp);
        let locals: Vec<Vec3> = centers.iter().map(|c| b.to_local(c)).collect();
        for (ci, cl) in locals.iter().enumerate() {
            for face in 0..6 {
                let a = face / 2;
                let s = if face % 2 == 0 { 1.0 } else { -1.0 };
                if s * vl[a] <= h[a] {
                    continue;
                }
                let plane_gap = (cl[a] - s * h[a]).abs();
                if plane_gap > radius {
                    continue;
                }
                let reach = (radius * radius - plane_gap * plane_gap).sqrt();
                let (u, v) = ((a + 1) % 3, (a + 2) % 3);
                let nu = ((2.0 * h[u] / spacing).round() as usize).max(1);
                let nv = ((2.0 * h[v] / spacing).round() as usize).max(1);
                let (du, dv) = (2.0 * h[u] / nu as f64, 2.0 * h[v] / nv as f64);
                let range = |c: f64, hh: f64, d: f64, n: usize| {
                    let lo = ((c - reach + hh) / d - 1.0).floor().max(0.0) as usize;
                    let hi = (((c + reach + hh) / d + 1.0).ceil().max(0.0) as usize).min(n);
                    lo..hi
                };
                for i in range(cl[u], h[u], du, nu) {
                    for j in range(cl[v], h[v], dv, nv) {
                        let mut pl = Vec3::zeros();
                        pl[a] = s * h[a];
                        pl[u] = -h[u] + (i as f64 + 0.5 + jitter(*key, face, i, j, 0)) * du;
                        pl[v] = -h[v] + (j as f64 + 0.5 + jitter(*key, face, i, j, 1)) * dv;
                        if (pl - cl).norm() > radius
                            || locals[..ci].iter().any(|o| (pl - o).norm() <= radius)
                        {
                            continue;
                        }
                        let p = b.from_local(&pl);
                        if config.occlusion
                            && boxes
                                .iter()
                                .enumerate()
                                .any(|(oi, (o, _, _))| oi != bi && segment_blocked(o, &vp, &p))
                        {
                            continue;
                        }
                        points.push(p);
                        sources.push(*src);
                    }
                }
            }
        }
    }

    let noise = (config.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, config.noise_sigma).expect("finite sigma"));
    let mut out_pts = Vec::with_capacity(points.len());
    let mut out_src = Vec::with_capacity(points.len());
    for (p, src) in points.into_iter().zip(sources) {
        if config.dropout_prob > 0.0 && rng.random::<f64>() < config.dropout_prob {
            continue;
        }
        let p = match &noise {
            Some(n) => p + Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng)),
            None => p,
        };
        out_pts.push(p);
        out_src.push(src);
    }
    Ok((PointCloud::new(out_pts), out_src))
}

/// Renders an observation with the given hotspot. Fails when nothing is
/// visible or the viewpoint lies inside a box.
pub fn render_observation(
    scene: &KinematicScene,
    state: &SceneState,
    camera: &Camera,
    hotspot: Vec3,
    config: &SimConfig,
    rng: &mut SimRng,
) -> Result<Observation> {
    let (cloud, sources) = render_scene(scene, state, camera, config, rng)?;
    if cloud.is_empty() {
        return Err(Error::InvalidViewpoint(
            "no surface visible from the viewpoint".into(),
        ));
    }
    Ok(Observation {
        cloud,
        hotspot,
        viewpoint: camera.viewpoint,
        sources,
    })
}
