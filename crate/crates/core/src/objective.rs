//! Per-frame objective terms and their weighted total.
//!
//! Every term is an L1 (or, for rotations, Frobenius) penalty on a residual.
//! The public term functions evaluate the exact penalties and return
//! subgradients (zero at exact kinks). The solver can additionally ask for a
//! Huber-smoothed penalty through [`Smoothing`]; a zero smoothing width
//! reproduces the exact terms.

use std::collections::BTreeMap;

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{CadModel, Observation, SceneInput};
use crate::geometry::hull::convex_hull;
use crate::geometry::{best_z_angle, rot_z, CameraFrame, Mat3, Pose9DoF, Quat, Symmetry, Vec2, Vec3, NEAR_PLANE};

/// Models above this vertex count are reduced to their convex-hull boundary
/// before projecting boxes.
pub const HULL_REDUCTION_THRESHOLD: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("fewer than 3 vertices lie in front of the camera")]
    AllVerticesBehindCamera,
    #[error("observation in frame {0} has no scale prediction but the recognition-scale weight is positive")]
    MissingScalePrediction(u32),
    #[error("no auxiliary variables for frame {0}")]
    MissingAux(u32),
    #[error("frame {0} not found in scene")]
    MissingFrame(u32),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

/// Per-frame auxiliary unknowns: image-space center and camera depth of the object center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxPerFrame {
    pub kappa: Vec2,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveWeights {
    pub a_t: f64,
    pub a_kappa: f64,
    pub a_rotation: f64,
    pub a_scale_box: f64,
    pub a_scale_rec: f64,
}

impl ObjectiveWeights {
    /// Weights of the four multi-view terms, without the recognition-scale term.
    pub const MULTI_VIEW: ObjectiveWeights = ObjectiveWeights {
        a_t: 20.0,
        a_kappa: 3.0,
        a_rotation: 0.1,
        a_scale_box: 3.0,
        a_scale_rec: 0.0,
    };

    pub const ZERO: ObjectiveWeights = ObjectiveWeights {
        a_t: 0.0,
        a_kappa: 0.0,
        a_rotation: 0.0,
        a_scale_box: 0.0,
        a_scale_rec: 0.0,
    };

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        let all = [self.a_t, self.a_kappa, self.a_rotation, self.a_scale_box, self.a_scale_rec];
        if all.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(ObjectiveError::InvalidWeights("weights must be finite and >= 0".into()));
        }
        if self.a_t <= 0.0 && self.a_kappa <= 0.0 {
            return Err(ObjectiveError::InvalidWeights("one of a_t, a_kappa must be positive".into()));
        }
        Ok(())
    }
}

impl Default for ObjectiveWeights {
    /// [`ObjectiveWeights::MULTI_VIEW`] plus the recognition-scale term. Its
    /// residual is unitless while the box residual is in pixels, hence the
    /// large weight.
    fn default() -> Self {
        ObjectiveWeights {
            a_scale_rec: 100.0,
            ..Self::MULTI_VIEW
        }
    }
}

/// Huber widths per residual unit; zero means the exact L1 / Frobenius penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    pub pixels: f64,
    pub meters: f64,
    pub rotation: f64,
    pub scale: f64,
}

impl Smoothing {
    pub const NONE: Smoothing = Smoothing {
        pixels: 0.0,
        meters: 0.0,
        rotation: 0.0,
        scale: 0.0,
    };

    /// All widths scaled from a pixel width, with 1 px ~ 1 cm ~ 0.01 rotation/scale units.
    pub fn from_pixels(px: f64) -> Smoothing {
        Smoothing {
            pixels: px,
            meters: 0.01 * px,
            rotation: 0.01 * px,
            scale: 0.01 * px,
        }
    }
}

/// Penalty value and derivative for a scalar residual.
#[inline]
fn penalty(r: f64, delta: f64) -> (f64, f64) {
    let a = r.abs();
    if delta > 0.0 && a <= delta {
        (r * r / (2.0 * delta), r / delta)
    } else if delta > 0.0 {
        (a - 0.5 * delta, r.signum())
    } else if r == 0.0 {
        (0.0, 0.0)
    } else {
        (a, r.signum())
    }
}

/// Gradient with respect to the pose unknowns. `quaternion` is taken with
/// respect to the raw (unnormalised) `[w, x, y, z]` components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseGradient {
    pub translation: Vec3,
    pub quaternion: Vector4<f64>,
    pub scale: Vec3,
}

impl PoseGradient {
    pub fn zeros() -> Self {
        PoseGradient {
            translation: Vec3::zeros(),
            quaternion: Vector4::zeros(),
            scale: Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxGradient {
    pub kappa: Vec2,
    pub beta: f64,
}

/// Rotation matrix of the normalised quaternion and `dR/dq̂_k` for `k = w, x, y, z`.
pub(crate) fn rotation_and_jacobian(q: &Vector4<f64>) -> (Mat3, [Mat3; 4]) {
    let n = q.norm();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    let r = Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    );
    let dw = Mat3::new(0.0, -2.0 * z, 2.0 * y, 2.0 * z, 0.0, -2.0 * x, -2.0 * y, 2.0 * x, 0.0);
    let dx = Mat3::new(0.0, 2.0 * y, 2.0 * z, 2.0 * y, -4.0 * x, -2.0 * w, 2.0 * z, 2.0 * w, -4.0 * x);
    let dy = Mat3::new(-4.0 * y, 2.0 * x, 2.0 * w, 2.0 * x, 0.0, 2.0 * z, -2.0 * w, 2.0 * z, -4.0 * y);
    let dz = Mat3::new(-4.0 * z, -2.0 * w, 2.0 * x, 2.0 * w, -4.0 * z, 2.0 * y, 2.0 * x, 2.0 * y, 0.0);
    (r, [dw, dx, dy, dz])
}

/// Chains `dL/dR` through the normalised quaternion back to the raw quaternion.
pub(crate) fn quaternion_gradient(q: &Vector4<f64>, d_rot: &Mat3, jac: &[Mat3; 4]) -> Vector4<f64> {
    let g_hat = Vector4::new(
        d_rot.component_mul(&jac[0]).sum(),
        d_rot.component_mul(&jac[1]).sum(),
        d_rot.component_mul(&jac[2]).sum(),
        d_rot.component_mul(&jac[3]).sum(),
    );
    let n = q.norm();
    let q_hat = q / n;
    (g_hat - q_hat * q_hat.dot(&g_hat)) / n
}

pub(crate) fn raw_quat(q: &Quat) -> Vector4<f64> {
    Vector4::new(q.w, q.i, q.j, q.k)
}

/// `l_κ = |κ - ĉ|_1`; returns the value and `dl/dκ`.
pub fn center_term(obs: &Observation, aux: &AuxPerFrame) -> (f64, Vec2) {
    center_term_smoothed(obs, aux, &Smoothing::NONE)
}

pub fn center_term_smoothed(obs: &Observation, aux: &AuxPerFrame, sm: &Smoothing) -> (f64, Vec2) {
    let (vx, gx) = penalty(aux.kappa.x - obs.center.x, sm.pixels);
    let (vy, gy) = penalty(aux.kappa.y - obs.center.y, sm.pixels);
    (vx + vy, Vec2::new(gx, gy))
}

/// Gradient of the translation term with respect to `κ`, `β` and `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationGradient {
    pub aux: AuxGradient,
    pub translation: Vec3,
}

/// `l_t = |backproject(κ, β) - t|_1`.
pub fn translation_term(frame: &CameraFrame, aux: &AuxPerFrame, t: &Vec3) -> (f64, TranslationGradient) {
    translation_term_smoothed(frame, aux, t, &Smoothing::NONE)
}

pub fn translation_term_smoothed(
    frame: &CameraFrame,
    aux: &AuxPerFrame,
    t: &Vec3,
    sm: &Smoothing,
) -> (f64, TranslationGradient) {
    let k = &frame.intrinsics;
    let ray = k.ray(&aux.kappa);
    let x = frame.backproject_unchecked(&aux.kappa, aux.beta);
    let r = x - t;
    let mut value = 0.0;
    let mut g = Vec3::zeros();
    for i in 0..3 {
        let (v, d) = penalty(r[i], sm.meters);
        value += v;
        g[i] = d;
    }
    // dX/dβ = E_R^T ray, dX/dκ = E_R^T diag(β/fx, β/fy, 0)
    let gc = frame.rotation * g;
    (
        value,
        TranslationGradient {
            aux: AuxGradient {
                kappa: Vec2::new(gc.x * aux.beta / k.fx, gc.y * aux.beta / k.fy),
                beta: gc.dot(&ray),
            },
            translation: -g,
        },
    )
}

/// `l_R = min_k |R^i - E_R R S_k|_F` over the symmetry rotations `S_k` of the
/// object; `q` is the raw quaternion of `R`.
pub fn rotation_term(frame: &CameraFrame, obs: &Observation, q: &Vector4<f64>, symmetry: Symmetry) -> (f64, Vector4<f64>) {
    let (r, jac) = rotation_and_jacobian(q);
    let (value, d_rot) = rotation_term_matrix(frame, obs, &r, symmetry, &Smoothing::NONE);
    (value, quaternion_gradient(q, &d_rot, &jac))
}

/// Rotation term on a rotation matrix; returns the value and `dl/dR`.
pub(crate) fn rotation_term_matrix(
    frame: &CameraFrame,
    obs: &Observation,
    r: &Mat3,
    symmetry: Symmetry,
    sm: &Smoothing,
) -> (f64, Mat3) {
    let m = obs.rotation.to_rotation_matrix().into_inner();
    let b = frame.rotation * r;
    let s = match symmetry {
        Symmetry::None => Mat3::identity(),
        Symmetry::Continuous => rot_z(best_z_angle(&(m.transpose() * b))),
        Symmetry::Discrete(_) => {
            let mut best = (f64::INFINITY, Mat3::identity());
            for s in symmetry.discrete_rotations() {
                let d = (m - b * s).norm_squared();
                if d < best.0 {
                    best = (d, s);
                }
            }
            best.1
        }
    };
    let d = m - b * s;
    let norm = d.norm();
    let (value, dv) = penalty(norm, sm.rotation);
    if norm == 0.0 {
        return (value, Mat3::zeros());
    }
    // d|D|/dB = -D / |D|, dB/dR through E_R and S
    let d_b = -d * (dv / norm);
    (value, frame.rotation.transpose() * d_b * s.transpose())
}

/// Box-side residuals of a posed vertex set; the extremal vertices and their
/// camera coordinates are kept for gradients.
struct ProjectedBox {
    sides: [f64; 4],
    extremal: [(Vec3, Vec3); 4],
}

fn project_box(frame: &CameraFrame, rot_cam: &Mat3, offset: &Vec3, scale: &Vec3, vertices: &[Vec3]) -> Option<ProjectedBox> {
    let k = &frame.intrinsics;
    let mut count = 0;
    let mut sides = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    let mut extremal = [(Vec3::zeros(), Vec3::zeros()); 4];
    for v in vertices {
        let sv = scale.component_mul(v);
        let p = rot_cam * sv + offset;
        if p.z <= NEAR_PLANE {
            continue;
        }
        count += 1;
        let u = k.fx * p.x / p.z + k.cx;
        let w = k.fy * p.y / p.z + k.cy;
        if u < sides[0] {
            sides[0] = u;
            extremal[0] = (*v, p);
        }
        if u > sides[1] {
            sides[1] = u;
            extremal[1] = (*v, p);
        }
        if w < sides[2] {
            sides[2] = w;
            extremal[2] = (*v, p);
        }
        if w > sides[3] {
            sides[3] = w;
            extremal[3] = (*v, p);
        }
    }
    (count >= 3).then_some(ProjectedBox { sides, extremal })
}

/// Value and gradients (translation, `dl/dR`, scale) of the box-scale term.
pub(crate) fn scale_box_term_matrix(
    frame: &CameraFrame,
    obs: &Observation,
    t: &Vec3,
    r: &Mat3,
    s: &Vec3,
    vertices: &[Vec3],
    sm: &Smoothing,
) -> Result<(f64, Vec3, Mat3, Vec3), ObjectiveError> {
    let rot_cam = frame.rotation * r;
    let offset = frame.translation + frame.rotation * t;
    let pb = project_box(frame, &rot_cam, &offset, s, vertices).ok_or(ObjectiveError::AllVerticesBehindCamera)?;
    let target = [obs.bbox.left, obs.bbox.right, obs.bbox.top, obs.bbox.bottom];
    let k = &frame.intrinsics;
    let mut value = 0.0;
    let mut g_t_cam = Vec3::zeros();
    let mut g_r = Mat3::zeros();
    let mut g_s = Vec3::zeros();
    for (side, goal) in target.iter().enumerate() {
        let (pv, dv) = penalty(pb.sides[side] - goal, sm.pixels);
        value += pv;
        if dv == 0.0 {
            continue;
        }
        let (v, p) = pb.extremal[side];
        // d(side)/dp_cam
        let gp = if side < 2 {
            Vec3::new(k.fx / p.z, 0.0, -k.fx * p.x / (p.z * p.z))
        } else {
            Vec3::new(0.0, k.fy / p.z, -k.fy * p.y / (p.z * p.z))
        } * dv;
        g_t_cam += gp;
        // p = E_R (t + R (s ⊙ v)) + e_t
        let g_world = frame.rotation.transpose() * gp;
        let sv = s.component_mul(&v);
        g_r += g_world * sv.transpose();
        g_s += (rot_cam.transpose() * gp).component_mul(&v);
    }
    Ok((value, frame.rotation.transpose() * g_t_cam, g_r, g_s))
}

/// `l_{s,b} = d_box(box of projected vertices, b̂)`: L1 distance over the
/// left, right, top and bottom sides. Vertices within [`NEAR_PLANE`] of the
/// camera are excluded.
pub fn scale_box_term(
    frame: &CameraFrame,
    obs: &Observation,
    t: &Vec3,
    q: &Vector4<f64>,
    s: &Vec3,
    vertices: &[Vec3],
) -> Result<(f64, PoseGradient), ObjectiveError> {
    let (r, jac) = rotation_and_jacobian(q);
    let (value, g_t, g_r, g_s) = scale_box_term_matrix(frame, obs, t, &r, s, vertices, &Smoothing::NONE)?;
    Ok((
        value,
        PoseGradient {
            translation: g_t,
            quaternion: quaternion_gradient(q, &g_r, &jac),
            scale: g_s,
        },
    ))
}

/// `l_s = |s - s^i|_1`.
pub fn scale_rec_term(obs: &Observation, s: &Vec3) -> Result<(f64, Vec3), ObjectiveError> {
    scale_rec_term_smoothed(obs, s, &Smoothing::NONE)
}

pub fn scale_rec_term_smoothed(obs: &Observation, s: &Vec3, sm: &Smoothing) -> Result<(f64, Vec3), ObjectiveError> {
    let pred = obs.scale.ok_or(ObjectiveError::MissingScalePrediction(obs.frame_index))?;
    let mut value = 0.0;
    let mut g = Vec3::zeros();
    for i in 0..3 {
        let (v, d) = penalty(s[i] - pred[i], sm.scale);
        value += v;
        g[i] = d;
    }
    Ok((value, g))
}

/// Vertices used for box projection: the model itself, or its convex-hull
/// boundary when it has more than [`HULL_REDUCTION_THRESHOLD`] vertices.
pub fn box_vertices(model: &CadModel) -> Vec<Vec3> {
    if model.vertices.len() > HULL_REDUCTION_THRESHOLD {
        if let Some(h) = convex_hull(&model.vertices) {
            return h.boundary_points.iter().map(|&i| model.vertices[i]).collect();
        }
    }
    model.vertices.clone()
}

/// Unweighted per-term sums over all frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TermBreakdown {
    pub translation: f64,
    pub center: f64,
    pub rotation: f64,
    pub scale_box: f64,
    pub scale_rec: f64,
    /// Frames whose box term was skipped because the object was behind the camera.
    pub skipped_box_frames: u32,
}

/// Observations of one object paired with their frames, plus the model
/// geometry and symmetry they are solved against.
#[derive(Debug, Clone)]
pub struct ObjectProblem<'a> {
    pub items: Vec<(&'a CameraFrame, &'a Observation)>,
    pub vertices: Vec<Vec3>,
    pub symmetry: Symmetry,
}

/// Offsets into the flat variable vector `[t(3), q(4), s(3), (κx, κy, β) per observation]`.
pub(crate) const T_OFF: usize = 0;
pub(crate) const Q_OFF: usize = 3;
pub(crate) const S_OFF: usize = 7;
pub(crate) const AUX_OFF: usize = 10;

impl<'a> ObjectProblem<'a> {
    /// Pairs each observation with its frame; fails on a dangling frame index.
    pub fn new(
        scene: &'a SceneInput,
        observations: &[&'a Observation],
        vertices: Vec<Vec3>,
        symmetry: Symmetry,
    ) -> Result<Self, ObjectiveError> {
        let items = observations
            .iter()
            .map(|o| {
                scene
                    .frame(o.frame_index)
                    .map(|f| (f, *o))
                    .ok_or(ObjectiveError::MissingFrame(o.frame_index))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ObjectProblem {
            items,
            vertices,
            symmetry,
        })
    }

    pub fn n_vars(&self) -> usize {
        AUX_OFF + 3 * self.items.len()
    }

    /// Weighted objective at the flat point `x`; writes the gradient into `grad`
    /// (same layout, scale gradient with respect to `s`).
    pub(crate) fn evaluate(
        &self,
        x: &[f64],
        grad: &mut [f64],
        weights: &ObjectiveWeights,
        sm: &Smoothing,
        breakdown: Option<&mut TermBreakdown>,
    ) -> Result<f64, ObjectiveError> {
        debug_assert_eq!(x.len(), self.n_vars());
        grad.iter_mut().for_each(|g| *g = 0.0);
        let t = Vec3::new(x[T_OFF], x[T_OFF + 1], x[T_OFF + 2]);
        let q = Vector4::new(x[Q_OFF], x[Q_OFF + 1], x[Q_OFF + 2], x[Q_OFF + 3]);
        let s = Vec3::new(x[S_OFF], x[S_OFF + 1], x[S_OFF + 2]);
        let (r, jac) = rotation_and_jacobian(&q);

        let mut terms = TermBreakdown::default();
        let mut g_t = Vec3::zeros();
        let mut g_r = Mat3::zeros();
        let mut g_s = Vec3::zeros();
        for (i, (frame, obs)) in self.items.iter().enumerate() {
            let o = AUX_OFF + 3 * i;
            let aux = AuxPerFrame {
                kappa: Vec2::new(x[o], x[o + 1]),
                beta: x[o + 2],
            };
            if weights.a_kappa > 0.0 {
                let (v, g) = center_term_smoothed(obs, &aux, sm);
                terms.center += v;
                grad[o] += weights.a_kappa * g.x;
                grad[o + 1] += weights.a_kappa * g.y;
            }
            if weights.a_t > 0.0 {
                let (v, g) = translation_term_smoothed(frame, &aux, &t, sm);
                terms.translation += v;
                grad[o] += weights.a_t * g.aux.kappa.x;
                grad[o + 1] += weights.a_t * g.aux.kappa.y;
                grad[o + 2] += weights.a_t * g.aux.beta;
                g_t += weights.a_t * g.translation;
            }
            if weights.a_rotation > 0.0 {
                let (v, g) = rotation_term_matrix(frame, obs, &r, self.symmetry, sm);
                terms.rotation += v;
                g_r += weights.a_rotation * g;
            }
            if weights.a_scale_box > 0.0 {
                match scale_box_term_matrix(frame, obs, &t, &r, &s, &self.vertices, sm) {
                    Ok((v, gt, gr, gs)) => {
                        terms.scale_box += v;
                        g_t += weights.a_scale_box * gt;
                        g_r += weights.a_scale_box * gr;
                        g_s += weights.a_scale_box * gs;
                    }
                    Err(ObjectiveError::AllVerticesBehindCamera) => terms.skipped_box_frames += 1,
                    Err(e) => return Err(e),
                }
            }
            if weights.a_scale_rec > 0.0 {
                let (v, g) = scale_rec_term_smoothed(obs, &s, sm)?;
                terms.scale_rec += v;
                g_s += weights.a_scale_rec * g;
            }
        }
        let g_q = quaternion_gradient(&q, &g_r, &jac);
        grad[T_OFF..T_OFF + 3].copy_from_slice(g_t.as_slice());
        grad[Q_OFF..Q_OFF + 4].copy_from_slice(g_q.as_slice());
        grad[S_OFF..S_OFF + 3].copy_from_slice(g_s.as_slice());
        let value = weights.a_t * terms.translation
            + weights.a_kappa * terms.center
            + weights.a_rotation * terms.rotation
            + weights.a_scale_box * terms.scale_box
            + weights.a_scale_rec * terms.scale_rec;
        if let Some(b) = breakdown {
            *b = terms;
        }
        Ok(value)
    }

    pub(crate) fn pack(&self, vars: &ObjectVariables) -> Result<Vec<f64>, ObjectiveError> {
        let mut x = vec![0.0; self.n_vars()];
        x[T_OFF..T_OFF + 3].copy_from_slice(vars.pose.translation.as_slice());
        x[Q_OFF..Q_OFF + 4].copy_from_slice(raw_quat(&vars.pose.rotation).as_slice());
        x[S_OFF..S_OFF + 3].copy_from_slice(vars.pose.scale.as_slice());
        for (i, (_, obs)) in self.items.iter().enumerate() {
            let a = vars.aux.get(&obs.frame_index).ok_or(ObjectiveError::MissingAux(obs.frame_index))?;
            let o = AUX_OFF + 3 * i;
            x[o] = a.kappa.x;
            x[o + 1] = a.kappa.y;
            x[o + 2] = a.beta;
        }
        Ok(x)
    }
}

/// Unknowns of one object: its pose and one auxiliary triple per observed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectVariables {
    pub pose: Pose9DoF,
    pub aux: BTreeMap<u32, AuxPerFrame>,
}

/// Full gradient of [`total_objective`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveGradient {
    pub pose: PoseGradient,
    pub aux: BTreeMap<u32, AuxGradient>,
}

/// Weighted sum of all terms over the object's frames. Frames where the
/// object is entirely behind the camera contribute every term except the box term.
pub fn total_objective(
    problem: &ObjectProblem<'_>,
    vars: &ObjectVariables,
    weights: &ObjectiveWeights,
) -> Result<(f64, ObjectiveGradient), ObjectiveError> {
    let x = problem.pack(vars)?;
    let mut g = vec![0.0; x.len()];
    let value = problem.evaluate(&x, &mut g, weights, &Smoothing::NONE, None)?;
    let aux = problem
        .items
        .iter()
        .enumerate()
        .map(|(i, (_, o))| {
            let k = AUX_OFF + 3 * i;
            (
                o.frame_index,
                AuxGradient {
                    kappa: Vec2::new(g[k], g[k + 1]),
                    beta: g[k + 2],
                },
            )
        })
        .collect();
    Ok((
        value,
        ObjectiveGradient {
            pose: PoseGradient {
                translation: Vec3::new(g[0], g[1], g[2]),
                quaternion: Vector4::new(g[3], g[4], g[5], g[6]),
                scale: Vec3::new(g[7], g[8], g[9]),
            },
            aux,
        },
    ))
}
