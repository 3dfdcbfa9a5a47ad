use nalgebra::Matrix3;
use thiserror::Error;

use super::{Mat3, Vec2, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point has non-positive camera depth {0}")]
    NonPositiveDepth(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid extrinsics: {0}")]
    InvalidExtrinsics(String),
}

/// Zero-skew pinhole intrinsics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    /// Accepts a full 3x3 matrix; any skew or a bottom row other than
    /// `(0, 0, 1)` is rejected.
    pub fn from_matrix(k: &Mat3) -> Result<Self, GeometryError> {
        if k[(0, 1)] != 0.0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "non-zero skew {}",
                k[(0, 1)]
            )));
        }
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 || k[(2, 2)] != 1.0 {
            return Err(GeometryError::InvalidIntrinsics(
                "matrix must be upper-triangular with K[2][2] = 1".into(),
            ));
        }
        Self::new(k[(0, 0)], k[(1, 1)], k[(0, 2)], k[(1, 2)])
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx.is_finite() && self.fy.is_finite() && self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got ({}, {})",
                self.fx, self.fy
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("non-finite principal point".into()));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Mat3 {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Perspective division without the depth check.
    #[inline]
    pub fn project_unchecked(&self, p: &Vec3) -> Vec2 {
        Vec2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// `K^-1 (u, v, 1)`: the camera-space ray through a pixel with unit depth.
    #[inline]
    pub fn ray(&self, pixel: &Vec2) -> Vec3 {
        Vec3::new((pixel.x - self.cx) / self.fx, (pixel.y - self.cy) / self.fy, 1.0)
    }
}

/// One calibrated video frame: intrinsics and world-to-camera extrinsics
/// `p_cam = e_t + E_R p_world`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraFrame {
    pub frame_index: u32,
    pub intrinsics: Intrinsics,
    pub rotation: Mat3,
    pub translation: Vec3,
    pub width: u32,
    pub height: u32,
}

impl CameraFrame {
    pub fn new(
        frame_index: u32,
        intrinsics: Intrinsics,
        rotation: Mat3,
        translation: Vec3,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let f = Self {
            frame_index,
            intrinsics,
            rotation,
            translation,
            width,
            height,
        };
        f.validate()?;
        Ok(f)
    }

    /// Camera at `eye` looking at `target`, with world `+z` as up.
    pub fn look_at(
        frame_index: u32,
        intrinsics: Intrinsics,
        eye: &Vec3,
        target: &Vec3,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::InvalidExtrinsics("eye coincides with target".into()))?;
        let right = forward
            .cross(&Vec3::z())
            .try_normalize(1e-9)
            .ok_or_else(|| GeometryError::InvalidExtrinsics("viewing direction parallel to up".into()))?;
        let down = forward.cross(&right);
        let rotation = Mat3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye);
        Self::new(frame_index, intrinsics, rotation, translation, width, height)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        self.intrinsics.validate()?;
        if self.rotation.iter().chain(self.translation.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidExtrinsics("non-finite entry".into()));
        }
        let err = (self.rotation.transpose() * self.rotation - Mat3::identity()).norm();
        if err >= 1e-6 {
            return Err(GeometryError::InvalidExtrinsics(format!(
                "rotation is not orthonormal (|E_R^T E_R - I| = {err:.3e})"
            )));
        }
        if self.rotation.determinant() < 0.0 {
            return Err(GeometryError::InvalidExtrinsics("rotation has negative determinant".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::InvalidIntrinsics("image size must be positive".into()));
        }
        Ok(())
    }

    /// Camera center in world coordinates, `-E_R^T e_t`.
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn image_center(&self) -> Vec2 {
        Vec2::new(self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    pub fn contains_pixel(&self, p: &Vec2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width as f64 && p.y <= self.height as f64
    }

    #[inline]
    pub fn world_to_camera(&self, p_world: &Vec3) -> Vec3 {
        self.translation + self.rotation * p_world
    }

    pub fn project(&self, p_camera: &Vec3) -> Result<Vec2, GeometryError> {
        if !(p_camera.z > 0.0) {
            return Err(GeometryError::NonPositiveDepth(p_camera.z));
        }
        Ok(self.intrinsics.project_unchecked(p_camera))
    }

    /// World point that projects to `pixel` at camera depth `depth`:
    /// `E_R^T (K^-1 (depth u, depth v, depth) - e_t)`.
    pub fn backproject(&self, pixel: &Vec2, depth: f64) -> Result<Vec3, GeometryError> {
        if !(depth > 0.0) {
            return Err(GeometryError::NonPositiveDepth(depth));
        }
        Ok(self.backproject_unchecked(pixel, depth))
    }

    #[inline]
    pub fn backproject_unchecked(&self, pixel: &Vec2, depth: f64) -> Vec3 {
        self.rotation.transpose() * (self.intrinsics.ray(pixel) * depth - self.translation)
    }
}

/// Free-function forms of the frame methods.
pub fn world_to_camera(frame: &CameraFrame, p_world: &Vec3) -> Vec3 {
    frame.world_to_camera(p_world)
}

pub fn project(frame: &CameraFrame, p_camera: &Vec3) -> Result<Vec2, GeometryError> {
    frame.project(p_camera)
}

pub fn backproject(frame: &CameraFrame, pixel: &Vec2, depth: f64) -> Result<Vec3, GeometryError> {
    frame.backproject(pixel, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Quat;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn frame(rotation: Mat3, translation: Vec3) -> CameraFrame {
        let k = Intrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap();
        CameraFrame::new(0, k, rotation, translation, 100, 100).unwrap()
    }

    #[test]
    fn world_to_camera_examples() {
        let f = frame(Mat3::identity(), Vec3::zeros());
        assert_eq!(f.world_to_camera(&Vec3::new(1.0, 2.0, 3.0)), Vec3::new(1.0, 2.0, 3.0));
        let f = frame(Mat3::identity(), Vec3::new(0.0, 0.0, -1.0));
        assert_eq!(f.world_to_camera(&Vec3::new(0.0, 0.0, 3.0)), Vec3::new(0.0, 0.0, 2.0));
    }

    #[test]
    fn project_examples() {
        let f = frame(Mat3::identity(), Vec3::zeros());
        assert_eq!(f.project(&Vec3::new(0.0, 0.0, 1.0)).unwrap(), Vec2::new(50.0, 50.0));
        assert_eq!(f.project(&Vec3::new(1.0, 0.0, 2.0)).unwrap(), Vec2::new(100.0, 50.0));
        assert!(matches!(
            f.project(&Vec3::new(0.0, 0.0, -1.0)),
            Err(GeometryError::NonPositiveDepth(_))
        ));
        assert!(f.project(&Vec3::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn backproject_examples() {
        let f = frame(Mat3::identity(), Vec3::zeros());
        assert_eq!(f.backproject(&Vec2::new(50.0, 50.0), 1.0).unwrap(), Vec3::new(0.0, 0.0, 1.0));
        let f = frame(Mat3::identity(), Vec3::new(0.0, 0.0, -1.0));
        assert_eq!(f.backproject(&Vec2::new(50.0, 50.0), 2.0).unwrap(), Vec3::new(0.0, 0.0, 3.0));
        assert!(f.backproject(&Vec2::new(50.0, 50.0), 0.0).is_err());
    }

    #[test]
    fn skew_is_rejected() {
        let mut k = Intrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap().matrix();
        k[(0, 1)] = 0.5;
        assert!(Intrinsics::from_matrix(&k).is_err());
    }

    #[test]
    fn non_orthonormal_extrinsics_rejected() {
        let k = Intrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap();
        let r = Mat3::identity() * 1.01;
        assert!(CameraFrame::new(0, k, r, Vec3::zeros(), 10, 10).is_err());
    }

    #[test]
    fn look_at_puts_target_on_optical_axis() {
        let k = Intrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap();
        let f = CameraFrame::look_at(0, k, &Vec3::new(3.0, 1.0, 1.5), &Vec3::new(0.0, 0.0, 0.5), 640, 480)
            .unwrap();
        let pc = f.world_to_camera(&Vec3::new(0.0, 0.0, 0.5));
        assert_relative_eq!(pc.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(pc.y, 0.0, epsilon = 1e-12);
        assert!(pc.z > 0.0);
        // world up projects upwards in the image (negative y)
        let above = f.world_to_camera(&Vec3::new(0.0, 0.0, 1.0));
        assert!(f.project(&above).unwrap().y < 240.0);
        assert_relative_eq!(f.center(), Vec3::new(3.0, 1.0, 1.5), epsilon = 1e-12);
    }

    fn arb_rotation() -> impl Strategy<Value = Mat3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_filter_map("degenerate", |(w, x, y, z)| {
            let q = nalgebra::Quaternion::new(w, x, y, z);
            (q.norm() > 0.1).then(|| Quat::from_quaternion(q).to_rotation_matrix().into_inner())
        })
    }

    proptest! {
        #[test]
        fn backproject_inverts_projection(
            r in arb_rotation(),
            tx in -2.0f64..2.0, ty in -2.0f64..2.0, tz in -2.0f64..2.0,
            px in -3.0f64..3.0, py in -3.0f64..3.0, pz in 0.1f64..10.0,
        ) {
            let f = frame(r, Vec3::new(tx, ty, tz));
            let p_cam = Vec3::new(px, py, pz);
            let p_world = f.rotation.transpose() * (p_cam - f.translation);
            let pixel = f.project(&f.world_to_camera(&p_world)).unwrap();
            let back = f.backproject(&pixel, pz).unwrap();
            prop_assert!((back - p_world).norm() < 1e-9);
            let again = f.project(&f.world_to_camera(&back)).unwrap();
            prop_assert!((again - pixel).norm() < 1e-9);
        }

        #[test]
        fn world_to_camera_is_isometry(
            r in arb_rotation(),
            a in prop::array::uniform3(-5.0f64..5.0),
            b in prop::array::uniform3(-5.0f64..5.0),
        ) {
            let f = frame(r, Vec3::new(0.3, -0.2, 1.0));
            let (a, b) = (Vec3::from(a), Vec3::from(b));
            let d0 = (a - b).norm();
            let d1 = (f.world_to_camera(&a) - f.world_to_camera(&b)).norm();
            prop_assert!((d0 - d1).abs() < 1e-9);
        }
    }
}
