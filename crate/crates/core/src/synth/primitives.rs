use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

/// Parametric solids with closed triangle surfaces, in metres, centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    Box {
        size: [f64; 3],
    },
    /// Prism over a regular polygon with `segments` sides.
    Cylinder {
        radius: f64,
        height: f64,
        segments: u32,
    },
    /// Chair-like profile in the x-z plane extruded along y: a seat slab of
    /// `seat_height` with a backrest of depth `back_depth` at `-x`.
    LShape {
        size: [f64; 3],
        seat_height: f64,
        back_depth: f64,
    },
    Mesh {
        vertices: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
    },
}

impl Primitive {
    pub fn max_extent(&self) -> f64 {
        match self {
            Primitive::Box { size } | Primitive::LShape { size, .. } => size.iter().cloned().fold(0.0, f64::max),
            Primitive::Cylinder { radius, height, .. } => (2.0 * radius).max(*height),
            Primitive::Mesh { vertices, .. } => {
                let mut ext = 0.0f64;
                for axis in 0..3 {
                    let lo = vertices.iter().map(|v| v[axis]).fold(f64::INFINITY, f64::min);
                    let hi = vertices.iter().map(|v| v[axis]).fold(f64::NEG_INFINITY, f64::max);
                    ext = ext.max(hi - lo);
                }
                ext
            }
        }
    }

    pub fn mesh(&self) -> (Vec<Vec3>, Vec<[usize; 3]>) {
        match self {
            Primitive::Box { size } => {
                let h = Vec3::from(*size) / 2.0;
                let profile = [(-h.x, -h.z), (h.x, -h.z), (h.x, h.z), (-h.x, h.z)];
                extrude_y(&profile, h.y)
            }
            Primitive::Cylinder { radius, height, segments } => {
                let n = (*segments).max(3) as usize;
                let h = height / 2.0;
                let mut v = Vec::with_capacity(2 * n + 2);
                for z in [-h, h] {
                    for k in 0..n {
                        let a = std::f64::consts::TAU * k as f64 / n as f64;
                        v.push(Vec3::new(radius * a.cos(), radius * a.sin(), z));
                    }
                }
                v.push(Vec3::new(0.0, 0.0, -h));
                v.push(Vec3::new(0.0, 0.0, h));
                let (cb, ct) = (2 * n, 2 * n + 1);
                let mut f = Vec::with_capacity(4 * n);
                for k in 0..n {
                    let k1 = (k + 1) % n;
                    f.push([cb, k1, k]);
                    f.push([ct, n + k, n + k1]);
                    f.push([k, k1, n + k1]);
                    f.push([k, n + k1, n + k]);
                }
                (v, f)
            }
            Primitive::LShape {
                size,
                seat_height,
                back_depth,
            } => {
                let h = Vec3::from(*size) / 2.0;
                let seat = -h.z + seat_height.clamp(0.0, size[2]);
                let back = -h.x + back_depth.clamp(0.0, size[0]);
                let profile = [(-h.x, -h.z), (h.x, -h.z), (h.x, seat), (back, seat), (back, h.z), (-h.x, h.z)];
                extrude_y(&profile, h.y)
            }
            Primitive::Mesh { vertices, faces } => (vertices.iter().map(|v| Vec3::from(*v)).collect(), faces.clone()),
        }
    }
}

/// Extrudes an x-z polygon between `y = -half` and `y = +half`. Caps are
/// fans from vertex 0, which must see every other vertex.
fn extrude_y(profile: &[(f64, f64)], half: f64) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let n = profile.len();
    let mut v = Vec::with_capacity(2 * n);
    for y in [-half, half] {
        for &(x, z) in profile {
            v.push(Vec3::new(x, y, z));
        }
    }
    let mut f = Vec::new();
    for k in 1..n - 1 {
        f.push([0, k, k + 1]);
        f.push([n, n + k + 1, n + k]);
    }
    for k in 0..n {
        let k1 = (k + 1) % n;
        f.push([k, n + k, n + k1]);
        f.push([k, n + k1, k1]);
    }
    (v, f)
}
