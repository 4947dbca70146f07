//! Built-in scenes used by tests, benches and the CLI.

use crate::geometry::{OrientedBox, Vec3};
use crate::scene::{FloorBounds, JointModel, KinematicScene, MobilePart, StaticBaseMap};

/// Panel thickness of drawer fronts and doors.
pub const PANEL_THICKNESS: f64 = 0.02;
/// Gap between a counter carcass and the panels mounted in front of it.
pub const CARCASS_GAP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hinge {
    /// Hinge on the panel's low-`t` edge; the door opens counter-clockwise.
    Low,
    /// Hinge on the high-`t` edge; the door opens clockwise.
    High,
}

/// A vertical counter front. `origin` lies on the front plane at floor
/// height, `outward` is the horizontal unit normal pointing into the room and
/// `t = outward × z` runs along the front.
#[derive(Debug, Clone, Copy)]
pub struct Facade {
    pub origin: Vec3,
    pub outward: Vec3,
}

impl Facade {
    pub fn new(origin: Vec3, outward: Vec3) -> Self {
        Self {
            origin,
            outward: outward.normalize(),
        }
    }

    pub fn tangent(&self) -> Vec3 {
        self.outward.cross(&Vec3::z())
    }

    fn yaw(&self) -> f64 {
        let t = self.tangent();
        t.y.atan2(t.x)
    }

    /// World point at coordinate `s` along the front, `d` outward and
    /// height `z`.
    pub fn at(&self, s: f64, d: f64, z: f64) -> Vec3 {
        self.origin + self.tangent() * s + self.outward * d + Vec3::new(0.0, 0.0, z)
    }

    fn panel(&self, s: [f64; 2], z: [f64; 2]) -> OrientedBox {
        let center = self.at(
            0.5 * (s[0] + s[1]),
            -0.5 * PANEL_THICKNESS,
            0.5 * (z[0] + z[1]),
        );
        let half = Vec3::new(
            0.5 * (s[1] - s[0]),
            0.5 * PANEL_THICKNESS,
            0.5 * (z[1] - z[0]),
        );
        OrientedBox::with_yaw(center, half, self.yaw()).expect("positive panel extents")
    }

    /// Carcass box spanning `s` along the front and `depth` behind it, set
    /// back by [`CARCASS_GAP`] from the panels.
    pub fn carcass(&self, s: [f64; 2], depth: f64, height: f64) -> OrientedBox {
        let back = CARCASS_GAP + PANEL_THICKNESS;
        let center = self.at(0.5 * (s[0] + s[1]), -back - 0.5 * depth, 0.5 * height);
        let half = Vec3::new(0.5 * (s[1] - s[0]), 0.5 * depth, 0.5 * height);
        OrientedBox::with_yaw(center, half, self.yaw()).expect("positive carcass extents")
    }

    /// Drawer front pulled straight out; the handle sits at the centre of
    /// the front face.
    pub fn drawer(&self, id: &str, s: [f64; 2], z: [f64; 2]) -> MobilePart {
        MobilePart {
            id: id.into(),
            shape: self.panel(s, z),
            joint: JointModel::prismatic(self.outward).expect("unit outward"),
            handle: self.at(0.5 * (s[0] + s[1]), 0.0, 0.5 * (z[0] + z[1])),
        }
    }

    /// Door hinged on its front edge; the handle sits 5 cm from the free
    /// edge at `handle_z`.
    pub fn door(
        &self,
        id: &str,
        s: [f64; 2],
        z: [f64; 2],
        hinge: Hinge,
        handle_z: f64,
    ) -> MobilePart {
        let (hinge_s, handle_s, axis) = match hinge {
            Hinge::Low => (s[0], s[1] - 0.05, Vec3::z()),
            Hinge::High => (s[1], s[0] + 0.05, -Vec3::z()),
        };
        let pivot = self.at(hinge_s, 0.0, 0.0);
        MobilePart {
            id: id.into(),
            shape: self.panel(s, z),
            joint: JointModel::revolute(axis, pivot).expect("unit axis"),
            handle: self.at(handle_s, 0.0, handle_z),
        }
    }

    /// Flap hinged on its bottom edge that folds down into the room, like a
    /// dishwasher door; the handle sits 5 cm below the top edge.
    pub fn flap(&self, id: &str, s: [f64; 2], z: [f64; 2]) -> MobilePart {
        let mid = 0.5 * (s[0] + s[1]);
        MobilePart {
            id: id.into(),
            shape: self.panel(s, z),
            joint: JointModel::revolute(-self.tangent(), self.at(mid, 0.0, z[0]))
                .expect("unit axis"),
            handle: self.at(mid, 0.0, z[1] - 0.05),
        }
    }
}

/// One drawer in front of a small cabinet.
pub fn minimal_drawer() -> KinematicScene {
    let f = Facade::new(Vec3::new(1.0, 0.0, 0.0), Vec3::y());
    KinematicScene {
        base: StaticBaseMap {
            obstacles: vec![f.carcass([0.0, 0.8], 0.5, 0.9)],
            floor_bounds: FloorBounds {
                min: [0.5, -0.8],
                max: [2.5, 1.6],
            },
        },
        parts: vec![f.drawer("drawer", [0.1, 0.7], [0.55, 0.8])],
    }
}

/// A single counter run with 4 drawers (two stacks of two) and 5 doors
/// facing a 2 m aisle.
pub fn kitchen() -> KinematicScene {
    let f = Facade::new(Vec3::new(0.0, 0.0, 0.0), Vec3::y());
    let upper = [0.55, 0.8];
    let lower = [0.25, 0.5];
    let door_z = [0.1, 0.8];
    let parts = vec![
        f.drawer("drawer_1", [0.3, 0.9], upper),
        f.drawer("drawer_2", [0.3, 0.9], lower),
        f.door("door_1", [1.0, 1.45], door_z, Hinge::Low, 0.6),
        f.door("door_2", [1.55, 2.0], door_z, Hinge::High, 0.6),
        f.drawer("drawer_3", [2.1, 2.7], upper),
        f.drawer("drawer_4", [2.1, 2.7], lower),
        f.door("door_3", [2.8, 3.25], door_z, Hinge::Low, 0.6),
        f.door("door_4", [3.35, 3.8], door_z, Hinge::High, 0.6),
        f.door("door_5", [3.9, 4.35], door_z, Hinge::Low, 0.6),
    ];
    KinematicScene {
        base: StaticBaseMap {
            obstacles: vec![f.carcass([0.2, 4.45], 0.55, 0.9)],
            floor_bounds: FloorBounds {
                min: [0.0, -0.8],
                max: [4.7, 2.0],
            },
        },
        parts,
    }
}

/// Corner fixture with one ordering constraint. Drawer `a` on the side wall
/// pulls out into the swing arc of door `b`, so `b` must open before `a`;
/// drawer `c` is independent.
pub fn ordering_corner() -> KinematicScene {
    let front = Facade::new(Vec3::new(0.0, 0.0, 0.0), Vec3::y());
    let side = Facade::new(Vec3::new(1.6, 0.05, 0.0), -Vec3::x());
    KinematicScene {
        base: StaticBaseMap {
            obstacles: vec![
                front.carcass([-1.0, 1.5], 0.55, 0.9),
                side.carcass([0.0, 1.0], 0.55, 0.9),
            ],
            floor_bounds: FloorBounds {
                min: [-1.0, -0.8],
                max: [2.3, 2.2],
            },
        },
        parts: vec![
            side.drawer("a", [0.05, 0.45], [0.45, 0.75]),
            front.door("b", [1.0, 1.45], [0.1, 0.8], Hinge::Low, 0.6),
            front.drawer("c", [-0.5, 0.1], [0.55, 0.8]),
        ],
    }
}

/// Galley aisle whose dishwasher flap, once down, blocks the way to the far
/// end: a drawer and a door past the dishwasher, start at the near end.
pub fn blocked_aisle() -> KinematicScene {
    let f = Facade::new(Vec3::new(0.0, 0.0, 0.0), Vec3::y());
    KinematicScene {
        base: StaticBaseMap {
            obstacles: vec![
                f.carcass([0.0, 3.4], 0.55, 0.9),
                // Opposite wall, 1.2 m from the fronts.
                OrientedBox::axis_aligned(Vec3::new(1.8, 1.25, 1.0), Vec3::new(1.8, 0.05, 1.0))
                    .expect("positive wall extents"),
            ],
            floor_bounds: FloorBounds {
                min: [0.0, -0.7],
                max: [3.6, 1.3],
            },
        },
        parts: vec![
            f.flap("dishwasher", [1.2, 1.65], [0.15, 0.8]),
            f.drawer("drawer", [2.2, 2.8], [0.55, 0.8]),
            f.door("door", [2.9, 3.35], [0.1, 0.8], Hinge::Low, 0.6),
        ],
    }
}

/// Robot pose at the near end of [`blocked_aisle`].
pub fn blocked_aisle_start() -> crate::scene::BasePose {
    crate::scene::BasePose::new(0.5, 0.6, 0.0)
}
