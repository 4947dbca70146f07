//! Oriented boxes and the separating-axis overlap test.

use super::rotation::{is_rotation, yaw_rotation, Mat3, Vec3};
use super::transform::RigidTransform;
use crate::error::{Error, Result};

/// Box with center, strictly positive half extents and an orientation whose
/// columns are the box axes expressed in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub orientation: Mat3,
}

impl OrientedBox {
    pub fn new(center: Vec3, half_extents: Vec3, orientation: Mat3) -> Result<Self> {
        if half_extents.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::invalid(format!(
                "half extents must be strictly positive, got {half_extents:?}"
            )));
        }
        if !is_rotation(&orientation, 1e-9) {
            return Err(Error::invalid("box orientation must be a proper rotation"));
        }
        Ok(Self {
            center,
            half_extents,
            orientation,
        })
    }

    pub fn axis_aligned(center: Vec3, half_extents: Vec3) -> Result<Self> {
        Self::new(center, half_extents, Mat3::identity())
    }

    pub fn with_yaw(center: Vec3, half_extents: Vec3, yaw: f64) -> Result<Self> {
        Self::new(center, half_extents, yaw_rotation(yaw))
    }

    pub fn axis(&self, i: usize) -> Vec3 {
        self.orientation.column(i).into_owned()
    }

    pub fn inflated(&self, margin: f64) -> OrientedBox {
        OrientedBox {
            half_extents: self.half_extents.add_scalar(margin),
            ..*self
        }
    }

    pub fn transformed(&self, t: &RigidTransform) -> OrientedBox {
        OrientedBox {
            center: t.apply(&self.center),
            half_extents: self.half_extents,
            orientation: t.rotation * self.orientation,
        }
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.orientation.transpose() * (p - self.center)
    }

    pub fn from_local(&self, p: &Vec3) -> Vec3 {
        self.center + self.orientation * p
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let mut out = [Vec3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let s = Vec3::new(
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            );
            *c = self.from_local(&self.half_extents.component_mul(&s));
        }
        out
    }

    /// Containment in the box grown by `margin` on every face.
    pub fn contains(&self, p: &Vec3, margin: f64) -> bool {
        let l = self.to_local(p);
        (0..3).all(|i| l[i].abs() <= self.half_extents[i] + margin)
    }

    /// Euclidean distance from `p` to the box surface (zero on the surface,
    /// positive both inside and outside).
    pub fn distance_to_surface(&self, p: &Vec3) -> f64 {
        let l = self.to_local(p);
        let d = l.abs() - self.half_extents;
        if d.iter().all(|v| *v <= 0.0) {
            -d.max()
        } else {
            d.map(|v| v.max(0.0)).norm()
        }
    }

    /// Support radius of the box projected onto unit direction `l`.
    fn projected_radius(&self, l: &Vec3) -> f64 {
        (0..3)
            .map(|i| self.half_extents[i] * self.axis(i).dot(l).abs())
            .sum()
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.product()
    }
}

fn candidate_axes<'a>(a: &'a OrientedBox, b: &'a OrientedBox) -> impl Iterator<Item = Vec3> + 'a {
    let faces = (0..3).map(|i| a.axis(i)).chain((0..3).map(|i| b.axis(i)));
    let edges = (0..3).flat_map(move |i| {
        (0..3).filter_map(move |j| {
            let c = a.axis(i).cross(&b.axis(j));
            let n = c.norm();
            // Parallel edge pairs are already covered by the face axes.
            (n > 1e-9).then(|| c / n)
        })
    });
    faces.chain(edges)
}

/// Largest separating gap over the 15 candidate axes after growing both boxes
/// by `margin`. Positive values mean the boxes are disjoint (and are a lower
/// bound on their distance); non-positive values are minus the penetration
/// depth.
pub fn obb_separation(a: &OrientedBox, b: &OrientedBox, margin: f64) -> f64 {
    let a = a.inflated(margin);
    let b = b.inflated(margin);
    let d = b.center - a.center;
    candidate_axes(&a, &b)
        .map(|l| d.dot(&l).abs() - a.projected_radius(&l) - b.projected_radius(&l))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Whether the two boxes, each grown by `margin`, overlap.
pub fn obb_intersects(a: &OrientedBox, b: &OrientedBox, margin: f64) -> bool {
    obb_separation(a, b, margin) <= 0.0
}
