//! Camera models, 9-DoF similarity transforms, rotations and projection.
//!
//! Conventions used throughout the crate:
//!
//! * world space is right-handed with `+z` up;
//! * camera-view space follows the pinhole convention `x` right, `y` down,
//!   `z` forward;
//! * pixel `(0, 0)` is the top-left corner of the top-left pixel, so pixel
//!   centers sit at half-integer coordinates and the image center of a
//!   `W x H` image is `(W / 2, H / 2)`;
//! * the canonical up axis of every CAD model is `+z`.

mod camera;
pub mod hull;
mod rotation;

pub use camera::{backproject, project, world_to_camera, CameraFrame, GeometryError, Intrinsics};
pub use rotation::{
    geodesic_angle, quat_from_wxyz, quat_to_wxyz, rot_z, rotation_angle_deg, symmetric_rotation_error,
    Symmetry, CONTINUOUS_SYMMETRY_ORDER,
};
pub(crate) use rotation::best_z_angle;

use nalgebra::{Matrix3, UnitQuaternion, Vector2, Vector3};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Quat = UnitQuaternion<f64>;

/// Near-plane depth (meters) below which a point is treated as behind the camera.
pub const NEAR_PLANE: f64 = 0.1;

/// Translation, rotation and anisotropic scale mapping canonical CAD space to world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose9DoF {
    pub translation: Vec3,
    pub rotation: Quat,
    pub scale: Vec3,
}

impl Pose9DoF {
    pub fn new(translation: Vec3, rotation: Quat, scale: Vec3) -> Self {
        Self {
            translation,
            rotation,
            scale,
        }
    }

    pub fn identity() -> Self {
        Self::new(Vec3::zeros(), Quat::identity(), Vec3::repeat(1.0))
    }

    pub fn is_valid(&self) -> bool {
        self.translation.iter().all(|v| v.is_finite())
            && self.scale.iter().all(|v| v.is_finite() && *v > 0.0)
            && self.rotation.coords.iter().all(|v| v.is_finite())
            && (self.rotation.coords.norm() - 1.0).abs() < 1e-9
    }

    /// Same pose with the quaternion sign chosen so that `w >= 0`.
    pub fn canonical(mut self) -> Self {
        if self.rotation.w < 0.0 {
            self.rotation = Quat::new_unchecked(-self.rotation.into_inner());
        }
        self
    }

    /// `h(v) = t + R (s ⊙ v)`.
    pub fn object_to_world(&self, v: &Vec3) -> Vec3 {
        self.translation + self.rotation * self.scale.component_mul(v)
    }
}

/// Free-function form of [`Pose9DoF::object_to_world`].
pub fn object_to_world(pose: &Pose9DoF, v: &Vec3) -> Vec3 {
    pose.object_to_world(v)
}

/// Axis-aligned 2D box in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2 {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl Box2 {
    pub fn new(left: f64, top: f64, right: f64, bottom: f64) -> Self {
        Self {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn sides(&self) -> [f64; 4] {
        [self.left, self.right, self.top, self.bottom]
    }

    pub fn is_valid(&self) -> bool {
        self.sides().iter().all(|v| v.is_finite()) && self.left < self.right && self.top < self.bottom
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.left + self.right), 0.5 * (self.top + self.bottom))
    }

    pub fn iou(&self, other: &Box2) -> f64 {
        let iw = (self.right.min(other.right) - self.left.max(other.left)).max(0.0);
        let ih = (self.bottom.min(other.bottom) - self.top.max(other.top)).max(0.0);
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Tight box around a non-empty point set.
    pub fn enclosing<'a>(points: impl IntoIterator<Item = &'a Vec2>) -> Option<Box2> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = Box2::new(first.x, first.y, first.x, first.y);
        for p in it {
            b.left = b.left.min(p.x);
            b.right = b.right.max(p.x);
            b.top = b.top.min(p.y);
            b.bottom = b.bottom.max(p.y);
        }
        Some(b)
    }
}

/// Projected amodal box of a posed vertex set; vertices closer than
/// [`NEAR_PLANE`] are left out. `None` when fewer than 3 vertices survive.
pub fn projected_box(frame: &CameraFrame, pose: &Pose9DoF, vertices: &[Vec3]) -> Option<Box2> {
    let pts: Vec<Vec2> = vertices
        .iter()
        .filter_map(|v| {
            let pc = frame.world_to_camera(&pose.object_to_world(v));
            (pc.z > NEAR_PLANE).then(|| frame.intrinsics.project_unchecked(&pc))
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    Box2::enclosing(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn object_to_world_identity() {
        let p = Pose9DoF::identity();
        assert_eq!(p.object_to_world(&Vec3::new(1.0, 2.0, 3.0)), Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn object_center_maps_to_translation() {
        let p = Pose9DoF::new(Vec3::new(1.0, 0.0, 0.0), Quat::identity(), Vec3::repeat(2.0));
        assert_eq!(object_to_world(&p, &Vec3::zeros()), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn object_to_world_rotates_after_scaling() {
        let p = Pose9DoF::new(
            Vec3::zeros(),
            Quat::from_axis_angle(&Vec3::z_axis(), FRAC_PI_2),
            Vec3::new(1.0, 1.0, 1.0),
        );
        assert_relative_eq!(p.object_to_world(&Vec3::x()), Vec3::y(), epsilon = 1e-12);

        // scale acts on canonical axes before the rotation
        let p = Pose9DoF::new(
            Vec3::zeros(),
            Quat::from_axis_angle(&Vec3::z_axis(), FRAC_PI_2),
            Vec3::new(2.0, 3.0, 1.0),
        );
        assert_relative_eq!(p.object_to_world(&Vec3::x()), Vec3::new(0.0, 2.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn box_iou_basics() {
        let a = Box2::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(a.iou(&a), 1.0);
        let b = Box2::new(5.0, 0.0, 15.0, 10.0);
        assert_relative_eq!(a.iou(&b), 50.0 / 150.0);
        let c = Box2::new(20.0, 20.0, 30.0, 30.0);
        assert_eq!(a.iou(&c), 0.0);
    }
}
