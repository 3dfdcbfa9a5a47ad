use std::f64::consts::PI;

use nalgebra::{Quaternion, Rotation3};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Mat3, Quat, Vec3};

/// Sentinel `symmetry_order` for continuous rotational symmetry about the
/// canonical up axis. Files may also spell it `"continuous"`.
pub const CONTINUOUS_SYMMETRY_ORDER: u32 = u32::MAX;

/// Rotational symmetry of a CAD model about its canonical `+z` axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Symmetry {
    #[default]
    None,
    /// Invariant under rotations by `2π k / m`, `m >= 2`.
    Discrete(u32),
    Continuous,
}

impl Symmetry {
    /// `None` for order 0, which is not a valid order.
    pub fn from_order(order: u32) -> Option<Self> {
        match order {
            0 => None,
            1 => Some(Symmetry::None),
            CONTINUOUS_SYMMETRY_ORDER => Some(Symmetry::Continuous),
            m => Some(Symmetry::Discrete(m)),
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            Symmetry::None => 1,
            Symmetry::Discrete(m) => *m,
            Symmetry::Continuous => CONTINUOUS_SYMMETRY_ORDER,
        }
    }

    /// Canonical-space symmetry rotations `Rz(2π k / m)`; a single identity
    /// for asymmetric and continuous symmetry (the latter is handled in closed form).
    pub fn discrete_rotations(&self) -> Vec<Mat3> {
        match self {
            Symmetry::Discrete(m) => (0..*m).map(|k| rot_z(2.0 * PI * k as f64 / *m as f64)).collect(),
            _ => vec![Mat3::identity()],
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OrderRepr {
    Order(u32),
    Named(String),
}

impl Serialize for Symmetry {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Symmetry::Continuous => OrderRepr::Named("continuous".into()),
            s => OrderRepr::Order(s.order()),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Symmetry {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        match OrderRepr::deserialize(de)? {
            OrderRepr::Named(n) if n == "continuous" => Ok(Symmetry::Continuous),
            OrderRepr::Named(n) => Err(D::Error::custom(format!("unknown symmetry {n:?}"))),
            OrderRepr::Order(m) => Symmetry::from_order(m).ok_or_else(|| D::Error::custom("symmetry order must be >= 1")),
        }
    }
}

pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Angle `θ*` maximising `tr(P Rz(θ))`, i.e. the best continuous-symmetry
/// alignment for `P = A^T B` when minimising `|A - B Rz(θ)|_F`.
pub(crate) fn best_z_angle(p: &Mat3) -> f64 {
    let a = p[(0, 0)] + p[(1, 1)];
    let b = p[(0, 1)] - p[(1, 0)];
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        b.atan2(a)
    }
}

pub fn quat_from_wxyz(q: [f64; 4]) -> Quat {
    Quat::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]))
}

pub fn quat_to_wxyz(q: &Quat) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Rotation angle of a rotation matrix, degrees.
pub fn rotation_angle_deg(m: &Mat3) -> f64 {
    let q = Quat::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*m));
    quat_angle_deg(&q)
}

fn quat_angle_deg(q: &Quat) -> f64 {
    let v = Vec3::new(q.i, q.j, q.k).norm();
    (2.0 * v.atan2(q.w.abs())).to_degrees()
}

/// Geodesic distance between two rotations in degrees, in `[0, 180]`.
pub fn geodesic_angle(q1: &Quat, q2: &Quat) -> f64 {
    quat_angle_deg(&(q1.inverse() * q2))
}

/// Smallest geodesic angle (degrees) between `result` and `truth` once the
/// symmetry orbit `result · Rz(θ)` of the object is taken into account.
pub fn symmetric_rotation_error(result: &Quat, truth: &Quat, symmetry: Symmetry) -> f64 {
    match symmetry {
        Symmetry::None => geodesic_angle(result, truth),
        Symmetry::Discrete(m) => (0..m)
            .map(|k| {
                let s = Quat::from_axis_angle(&Vec3::z_axis(), 2.0 * PI * k as f64 / m as f64);
                geodesic_angle(&(result * s), truth)
            })
            .fold(f64::INFINITY, f64::min),
        Symmetry::Continuous => {
            // minimise |truth - result Rz(θ)|, equivalently the angle of truth^T result Rz(θ)
            let p = truth.to_rotation_matrix().into_inner().transpose() * result.to_rotation_matrix().into_inner();
            let theta = best_z_angle(&p);
            let s = Quat::from_axis_angle(&Vec3::z_axis(), theta);
            geodesic_angle(&(result * s), truth)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn arb_quat() -> impl Strategy<Value = Quat> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter_map("degenerate", |(w, x, y, z)| {
                let q = Quaternion::new(w, x, y, z);
                (q.norm() > 0.1).then(|| Quat::from_quaternion(q))
            })
    }

    #[test]
    fn geodesic_examples() {
        let i = Quat::identity();
        assert_eq!(geodesic_angle(&i, &i), 0.0);
        let y90 = Quat::from_axis_angle(&Vec3::y_axis(), PI / 2.0);
        assert_relative_eq!(geodesic_angle(&i, &y90), 90.0, epsilon = 1e-12);
        let neg = Quat::new_unchecked(-y90.into_inner());
        assert_relative_eq!(geodesic_angle(&y90, &neg), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetry_orders() {
        assert_eq!(Symmetry::from_order(0), None);
        assert_eq!(Symmetry::from_order(1), Some(Symmetry::None));
        assert_eq!(Symmetry::from_order(4), Some(Symmetry::Discrete(4)));
        assert_eq!(Symmetry::from_order(CONTINUOUS_SYMMETRY_ORDER), Some(Symmetry::Continuous));
        assert_eq!(Symmetry::Discrete(3).discrete_rotations().len(), 3);
    }

    #[test]
    fn symmetry_absorbs_up_axis_rotations() {
        let truth = Quat::from_euler_angles(0.1, -0.2, 0.7);
        let flipped = truth * Quat::from_axis_angle(&Vec3::z_axis(), PI);
        assert!(geodesic_angle(&flipped, &truth) > 179.0);
        assert!(symmetric_rotation_error(&flipped, &truth, Symmetry::Discrete(2)) < 1e-9);
        assert!(symmetric_rotation_error(&flipped, &truth, Symmetry::Discrete(4)) < 1e-9);
        let spun = truth * Quat::from_axis_angle(&Vec3::z_axis(), 1.234);
        assert!(symmetric_rotation_error(&spun, &truth, Symmetry::Continuous) < 1e-6);
        // a tilt is not absorbed
        let tilted = truth * Quat::from_axis_angle(&Vec3::x_axis(), 0.3);
        assert_relative_eq!(
            symmetric_rotation_error(&tilted, &truth, Symmetry::Continuous),
            0.3f64.to_degrees(),
            epsilon = 1e-6
        );
    }

    proptest! {
        #[test]
        fn geodesic_is_a_metric(a in arb_quat(), b in arb_quat(), c in arb_quat()) {
            let ab = geodesic_angle(&a, &b);
            prop_assert!((0.0..=180.0 + 1e-9).contains(&ab));
            prop_assert!((ab - geodesic_angle(&b, &a)).abs() < 1e-9);
            prop_assert!(ab <= geodesic_angle(&a, &c) + geodesic_angle(&c, &b) + 1e-9);
        }

        #[test]
        fn symmetric_error_invariant_under_orbit(a in arb_quat(), b in arb_quat(), m in 2u32..7, k in 0u32..7) {
            let s = Quat::from_axis_angle(&Vec3::z_axis(), 2.0 * PI * (k % m) as f64 / m as f64);
            let e0 = symmetric_rotation_error(&a, &b, Symmetry::Discrete(m));
            let e1 = symmetric_rotation_error(&(a * s), &b, Symmetry::Discrete(m));
            prop_assert!((e0 - e1).abs() < 1e-7);
            let c0 = symmetric_rotation_error(&a, &b, Symmetry::Continuous);
            let spin = Quat::from_axis_angle(&Vec3::z_axis(), 0.37 * k as f64);
            let c1 = symmetric_rotation_error(&(a * spin), &b, Symmetry::Continuous);
            prop_assert!((c0 - c1).abs() < 1e-5);
            prop_assert!(c0 <= e0 + 1e-7);
        }
    }
}
