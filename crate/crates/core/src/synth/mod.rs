//! Seeded synthetic scenes: ground-truth objects, camera trajectories, exact
//! per-frame observations and a parameterised noise model.
//!
//! All randomness comes from `ChaCha8Rng`. Object sampling uses the stream
//! seeded with `seed`; observation noise for frame `f` and object `o` uses the
//! independent stream `(f << 32) | o` of a second generator, so a given
//! observation's noise does not depend on what else is visible.

mod primitives;

pub use primitives::Primitive;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{CadModel, GroundTruthObject, ModelVote, Observation, SceneInput};
use crate::geometry::{projected_box, rot_z, CameraFrame, Intrinsics, Pose9DoF, Quat, Symmetry, Vec3, NEAR_PLANE};

const NOISE_STREAM_KEY: u64 = 0x6a09_e667_f3bc_c908;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

fn infeasible<T>(msg: impl Into<String>) -> Result<T, SynthError> {
    Err(SynthError::InfeasibleSpec(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSpec {
    pub class_id: String,
    pub model_id: String,
    pub primitive: Primitive,
    #[serde(default)]
    pub symmetry: Symmetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// Uniform in an axis-aligned box.
    Box { min: [f64; 3], max: [f64; 3] },
    /// Uniform angle, uniform radius in `radius`, uniform height in `z`.
    Ring { center: [f64; 3], radius: [f64; 2], z: [f64; 2] },
    Explicit { translations: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseRanges {
    pub placement: Placement,
    /// Minimum center distance between objects, m.
    pub min_separation: f64,
    pub yaw_deg: [f64; 2],
    /// Maximum tilt away from upright, degrees.
    pub tilt_deg: f64,
    /// Per-axis multiplier range applied to the template's natural size.
    pub scale: [f64; 2],
}

impl Default for PoseRanges {
    fn default() -> Self {
        PoseRanges {
            placement: Placement::Box {
                min: [-0.5, -0.5, 0.0],
                max: [0.5, 0.5, 0.0],
            },
            min_separation: 0.0,
            yaw_deg: [-180.0, 180.0],
            tilt_deg: 0.0,
            scale: [0.8, 1.2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Look {
    Inward,
    Outward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    /// Circle of `radius` at `height` around `center`; inward cameras look at
    /// the center at `target_height`, outward cameras at the point
    /// `target_distance` further out at `target_height`.
    Orbit {
        center: [f64; 3],
        radius: f64,
        height: f64,
        start_deg: f64,
        sweep_deg: f64,
        look: Look,
        target_height: f64,
        #[serde(default = "default_target_distance")]
        target_distance: f64,
        n_frames: u32,
    },
    Line {
        start: [f64; 3],
        end: [f64; 3],
        target: [f64; 3],
        n_frames: u32,
    },
    Waypoints { eyes: Vec<[f64; 3]>, targets: Vec<[f64; 3]> },
}

fn default_target_distance() -> f64 {
    2.0
}

impl Trajectory {
    pub fn n_frames(&self) -> u32 {
        match self {
            Trajectory::Orbit { n_frames, .. } | Trajectory::Line { n_frames, .. } => *n_frames,
            Trajectory::Waypoints { eyes, .. } => eyes.len() as u32,
        }
    }

    /// `(eye, target)` per frame.
    pub fn eyes_and_targets(&self) -> Result<Vec<(Vec3, Vec3)>, SynthError> {
        let n = self.n_frames();
        let lerp = |i: u32| if n <= 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
        Ok(match self {
            Trajectory::Orbit {
                center,
                radius,
                height,
                start_deg,
                sweep_deg,
                look,
                target_height,
                target_distance,
                ..
            } => {
                // a full turn is split evenly without repeating the first view
                let denom = if (sweep_deg.abs() - 360.0).abs() < 1e-9 { n.max(1) as f64 } else { (n.max(2) - 1) as f64 };
                (0..n)
                    .map(|i| {
                        let a = (start_deg + sweep_deg * i as f64 / denom).to_radians();
                        let dir = Vec3::new(a.cos(), a.sin(), 0.0);
                        let c = Vec3::from(*center);
                        let eye = Vec3::new(c.x, c.y, *height) + dir * *radius;
                        let target = match look {
                            Look::Inward => Vec3::new(c.x, c.y, *target_height),
                            Look::Outward => Vec3::new(c.x, c.y, *target_height) + dir * (radius + target_distance),
                        };
                        (eye, target)
                    })
                    .collect()
            }
            Trajectory::Line { start, end, target, .. } => (0..n)
                .map(|i| {
                    let (a, b) = (Vec3::from(*start), Vec3::from(*end));
                    (a + (b - a) * lerp(i), Vec3::from(*target))
                })
                .collect(),
            Trajectory::Waypoints { eyes, targets } => {
                if eyes.len() != targets.len() {
                    return Err(SynthError::InvalidSpec("waypoint eyes and targets differ in length".into()));
                }
                eyes.iter().zip(targets).map(|(e, t)| (Vec3::from(*e), Vec3::from(*t))).collect()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraSpec {
    fn default() -> Self {
        CameraSpec {
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        }
    }
}

/// Frames `first..=last` in which an object is never emitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiddenRange {
    pub object: usize,
    pub first_frame: u32,
    pub last_frame: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisibilitySpec {
    /// Vertices that must project inside the image with camera depth > 0.1 m.
    pub min_vertices_in_image: u32,
    /// Each object needs at least this many emitted observations.
    pub min_observations: u32,
    pub hidden: Vec<HiddenRange>,
}

impl Default for VisibilitySpec {
    fn default() -> Self {
        VisibilitySpec {
            min_vertices_in_image: 1,
            min_observations: 1,
            hidden: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreModel {
    pub floor: f64,
    pub slope: f64,
}

impl Default for ScoreModel {
    fn default() -> Self {
        ScoreModel { floor: 0.05, slope: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// px
    pub center_sigma: f64,
    /// degrees
    pub rotation_sigma: f64,
    /// px per side
    pub box_sigma: f64,
    /// relative
    pub scale_sigma: f64,
    pub score_model: ScoreModel,
    pub dropout_rate: f64,
    pub vote_error_rate: f64,
}

impl NoiseSpec {
    pub fn noiseless(&self) -> NoiseSpec {
        NoiseSpec {
            score_model: self.score_model,
            ..NoiseSpec::default()
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let sig = [self.center_sigma, self.rotation_sigma, self.box_sigma, self.scale_sigma];
        if sig.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(SynthError::InvalidSpec("noise sigmas must be finite and >= 0".into()));
        }
        for p in [self.dropout_rate, self.vote_error_rate] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::InvalidSpec("probabilities must be in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_objects: usize,
    pub templates: Vec<TemplateSpec>,
    #[serde(default)]
    pub poses: PoseRanges,
    pub trajectory: Trajectory,
    #[serde(default)]
    pub camera: CameraSpec,
    #[serde(default)]
    pub visibility: VisibilitySpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    /// Emit `scale` predictions on observations.
    #[serde(default = "yes")]
    pub scale_predictions: bool,
    /// Emit the ground-truth object index as `track_id`.
    #[serde(default)]
    pub track_ids: bool,
    /// Length of deterministic per-model embeddings; 0 disables them.
    #[serde(default)]
    pub embedding_dim: usize,
}

fn yes() -> bool {
    true
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.trajectory.n_frames() == 0 {
            return Err(SynthError::InvalidSpec("n_frames must be >= 1".into()));
        }
        if self.templates.is_empty() {
            return Err(SynthError::InvalidSpec("at least one template is required".into()));
        }
        let p = &self.poses;
        if !(p.scale[0] > 0.0 && p.scale[0] <= p.scale[1]) || p.yaw_deg[0] > p.yaw_deg[1] || p.tilt_deg < 0.0 {
            return Err(SynthError::InvalidSpec("degenerate pose ranges".into()));
        }
        let c = &self.camera;
        Intrinsics::new(c.fx, c.fy, c.cx, c.cy).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        if c.width == 0 || c.height == 0 {
            return Err(SynthError::InvalidSpec("image size must be positive".into()));
        }
        self.noise.validate()
    }
}

/// Generated scene with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthScene {
    pub scene: SceneInput,
    pub ground_truth: Vec<GroundTruthObject>,
}

/// Builds the CAD database of a spec, in template order.
pub fn build_models(spec: &SynthSpec) -> Result<Vec<CadModel>, SynthError> {
    let mut models = Vec::with_capacity(spec.templates.len());
    for (i, t) in spec.templates.iter().enumerate() {
        let (v, f) = t.primitive.mesh();
        let mut m = CadModel::normalized(&t.model_id, &t.class_id, v, f, t.symmetry)
            .map_err(|e| SynthError::InvalidSpec(format!("template {i}: {e}")))?;
        if spec.embedding_dim > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let e: Vec<f64> = (0..spec.embedding_dim).map(|_| rng.sample(StandardNormal)).collect();
            m.embedding = Some(e);
        }
        models.push(m);
    }
    Ok(models)
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    r[0] + (r[1] - r[0]) * rng.random::<f64>()
}

fn sample_objects(spec: &SynthSpec, models: &[CadModel], rng: &mut ChaCha8Rng) -> Result<Vec<GroundTruthObject>, SynthError> {
    let p = &spec.poses;
    let mut out: Vec<GroundTruthObject> = Vec::with_capacity(spec.n_objects);
    for i in 0..spec.n_objects {
        let ti = rng.random_range(0..spec.templates.len());
        let template = &spec.templates[ti];
        let model = &models[ti];
        let mut translation = None;
        for _ in 0..1000 {
            let t = match &p.placement {
                Placement::Box { min, max } => {
                    Vec3::new(uniform(rng, [min[0], max[0]]), uniform(rng, [min[1], max[1]]), uniform(rng, [min[2], max[2]]))
                }
                Placement::Ring { center, radius, z } => {
                    let a = rng.random::<f64>() * std::f64::consts::TAU;
                    let r = uniform(rng, *radius);
                    Vec3::new(center[0] + r * a.cos(), center[1] + r * a.sin(), center[2] + uniform(rng, *z))
                }
                Placement::Explicit { translations } => match translations.get(i) {
                    Some(t) => Vec3::from(*t),
                    None => return Err(SynthError::InvalidSpec("fewer explicit translations than objects".into())),
                },
            };
            if out.iter().all(|o| (o.pose.translation - t).norm() >= p.min_separation) {
                translation = Some(t);
                break;
            }
            if matches!(p.placement, Placement::Explicit { .. }) {
                break;
            }
        }
        let Some(translation) = translation else {
            return infeasible(format!("cannot place object {i} with min_separation {}", p.min_separation));
        };
        let yaw = uniform(rng, p.yaw_deg).to_radians();
        let tilt_axis_angle = rng.random::<f64>() * std::f64::consts::TAU;
        let tilt = (p.tilt_deg * rng.random::<f64>()).to_radians();
        let axis = nalgebra::Unit::new_normalize(Vec3::new(tilt_axis_angle.cos(), tilt_axis_angle.sin(), 0.0));
        let rotation = Quat::from_axis_angle(&axis, tilt) * Quat::from_axis_angle(&Vec3::z_axis(), yaw);
        let natural = template.primitive.max_extent();
        let mut jitter = [uniform(rng, p.scale), uniform(rng, p.scale), uniform(rng, p.scale)];
        if matches!(template.symmetry, Symmetry::Continuous) || template.symmetry.order() >= 3 {
            // symmetry rotations would otherwise swap unequal horizontal axes
            jitter[1] = jitter[0];
        }
        let scale = Vec3::new(natural * jitter[0], natural * jitter[1], natural * jitter[2]);
        out.push(GroundTruthObject {
            class_id: model.class_id.clone(),
            cad_model_id: model.id.clone(),
            pose: Pose9DoF::new(translation, rotation, scale).canonical(),
        });
    }
    Ok(out)
}

fn build_frames(spec: &SynthSpec, eyes: &[(Vec3, Vec3)]) -> Result<Vec<CameraFrame>, SynthError> {
    let c = &spec.camera;
    let k = Intrinsics::new(c.fx, c.fy, c.cx, c.cy).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    eyes.iter()
        .enumerate()
        .map(|(i, (eye, target))| {
            CameraFrame::look_at(i as u32, k, eye, target, c.width, c.height)
                .map_err(|e| SynthError::InvalidSpec(format!("frame {i}: {e}")))
        })
        .collect()
}

/// True if the object center is in front of the camera, at least three
/// vertices clear the near plane, and `min_in_image` vertices project inside the image.
pub fn is_visible(frame: &CameraFrame, pose: &Pose9DoF, vertices: &[Vec3], min_in_image: u32) -> bool {
    if frame.world_to_camera(&pose.translation).z <= NEAR_PLANE {
        return false;
    }
    let mut in_front = 0;
    let mut inside = 0;
    for v in vertices {
        let p = frame.world_to_camera(&pose.object_to_world(v));
        if p.z <= NEAR_PLANE {
            continue;
        }
        in_front += 1;
        if frame.contains_pixel(&frame.intrinsics.project_unchecked(&p)) {
            inside += 1;
        }
    }
    in_front >= 3 && inside >= min_in_image
}

/// Exact observation of a ground-truth object, or `None` if it cannot be
/// projected (center or box behind the camera).
pub fn render_observation(frame: &CameraFrame, gt: &GroundTruthObject, model: &CadModel) -> Option<Observation> {
    let pc = frame.world_to_camera(&gt.pose.translation);
    let center = frame.project(&pc).ok()?;
    let bbox = projected_box(frame, &gt.pose, &model.vertices)?;
    let rotation = Quat::from_matrix(&(frame.rotation * gt.pose.rotation.to_rotation_matrix().into_inner()));
    Some(Observation {
        frame_index: frame.frame_index,
        class_id: gt.class_id.clone(),
        score: 1.0,
        bbox,
        center,
        rotation: Pose9DoF::new(Vec3::zeros(), rotation, Vec3::repeat(1.0)).canonical().rotation,
        scale: Some(gt.pose.scale),
        model_vote: Some(ModelVote {
            cad_model_id: gt.cad_model_id.clone(),
            embedding: model.embedding.clone().unwrap_or_default(),
        }),
        track_id: None,
    })
}

fn noise_rng(seed: u64, frame: u32, object: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ NOISE_STREAM_KEY);
    rng.set_stream(((frame as u64) << 32) | object as u64);
    rng
}

/// Perturbs an exact observation. Every call draws the same number of
/// variates, whatever the sigmas.
fn perturb(
    mut obs: Observation,
    noise: &NoiseSpec,
    rng: &mut ChaCha8Rng,
    wrong_models: &[&CadModel],
) -> Option<Observation> {
    let mut z = [0.0f64; 13];
    for zi in z.iter_mut() {
        *zi = StandardNormal.sample(rng);
    }
    let u_drop: f64 = rng.random();
    let u_vote: f64 = rng.random();
    let u_pick: f64 = rng.random();

    let (mut zsum, mut nz) = (0.0, 0usize);
    if noise.center_sigma > 0.0 {
        obs.center.x += noise.center_sigma * z[0];
        obs.center.y += noise.center_sigma * z[1];
        zsum += z[0] + z[1];
        nz += 2;
    }
    if noise.rotation_sigma > 0.0 {
        let axis = Vec3::new(z[2], z[3], z[4]);
        if let Some(axis) = nalgebra::Unit::try_new(axis, 1e-12) {
            let angle = (noise.rotation_sigma * z[5]).abs().to_radians();
            obs.rotation = Pose9DoF::new(Vec3::zeros(), Quat::from_axis_angle(&axis, angle) * obs.rotation, Vec3::repeat(1.0))
                .canonical()
                .rotation;
        }
        zsum += z[5];
        nz += 1;
    }
    if noise.box_sigma > 0.0 {
        let b = &mut obs.bbox;
        b.left += noise.box_sigma * z[6];
        b.right += noise.box_sigma * z[7];
        b.top += noise.box_sigma * z[8];
        b.bottom += noise.box_sigma * z[9];
        if b.left >= b.right {
            let c = (b.left + b.right) / 2.0;
            (b.left, b.right) = (c - 0.5, c + 0.5);
        }
        if b.top >= b.bottom {
            let c = (b.top + b.bottom) / 2.0;
            (b.top, b.bottom) = (c - 0.5, c + 0.5);
        }
        zsum += z[6..10].iter().sum::<f64>();
        nz += 4;
    }
    if noise.scale_sigma > 0.0 {
        if let Some(s) = obs.scale.as_mut() {
            for i in 0..3 {
                s[i] *= (1.0 + noise.scale_sigma * z[10 + i]).max(0.1);
            }
        }
        zsum += z[10..13].iter().sum::<f64>();
        nz += 3;
    }
    // z-score of the summed perturbation draws
    let total = if nz > 0 { zsum / (nz as f64).sqrt() } else { 0.0 };
    let sm = &noise.score_model;
    obs.score = (1.0 - sm.slope * total.abs()).max(sm.floor).clamp(0.0, 1.0);
    if u_vote < noise.vote_error_rate && !wrong_models.is_empty() {
        let m = wrong_models[((u_pick * wrong_models.len() as f64) as usize).min(wrong_models.len() - 1)];
        obs.model_vote = Some(ModelVote {
            cad_model_id: m.id.clone(),
            embedding: m.embedding.clone().unwrap_or_default(),
        });
    }
    (u_drop >= noise.dropout_rate).then_some(obs)
}

/// Candidate wrong votes for a model: same-class alternatives if any, else all other models.
fn wrong_vote_pool<'m>(models: &'m [CadModel], truth: &CadModel) -> Vec<&'m CadModel> {
    let same: Vec<&CadModel> = models.iter().filter(|m| m.class_id == truth.class_id && m.id != truth.id).collect();
    if same.is_empty() {
        models.iter().filter(|m| m.id != truth.id).collect()
    } else {
        same
    }
}

fn render_all(
    spec: &SynthSpec,
    frames: &[CameraFrame],
    gt: &[GroundTruthObject],
    models: &[CadModel],
) -> Result<Vec<Observation>, SynthError> {
    let by_id: BTreeMap<&str, &CadModel> = models.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut observations = Vec::new();
    let mut per_object = vec![0u32; gt.len()];
    let mut ever_visible = vec![false; gt.len()];
    for f in frames {
        for (oi, g) in gt.iter().enumerate() {
            let model = by_id[g.cad_model_id.as_str()];
            let mut rng = noise_rng(spec.seed, f.frame_index, oi);
            if !is_visible(f, &g.pose, &model.vertices, spec.visibility.min_vertices_in_image) {
                continue;
            }
            let hidden = spec
                .visibility
                .hidden
                .iter()
                .any(|h| h.object == oi && (h.first_frame..=h.last_frame).contains(&f.frame_index));
            if hidden {
                continue;
            }
            ever_visible[oi] = true;
            let Some(mut obs) = render_observation(f, g, model) else { continue };
            if !spec.scale_predictions {
                obs.scale = None;
            }
            if spec.track_ids {
                obs.track_id = Some(oi as u32);
            }
            let pool = wrong_vote_pool(models, model);
            if let Some(obs) = perturb(obs, &spec.noise, &mut rng, &pool) {
                per_object[oi] += 1;
                observations.push(obs);
            }
        }
    }
    for (oi, n) in per_object.iter().enumerate() {
        if !ever_visible[oi] {
            return infeasible(format!("object {oi} is never visible"));
        }
        if *n < spec.visibility.min_observations {
            return infeasible(format!(
                "object {oi} has {n} observations, fewer than the required {}",
                spec.visibility.min_observations
            ));
        }
    }
    Ok(observations)
}

/// Generates a scene and its ground truth; identical specs give identical output.
pub fn generate(spec: &SynthSpec) -> Result<SynthScene, SynthError> {
    spec.validate()?;
    let models = build_models(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ground_truth = sample_objects(spec, &models, &mut rng)?;
    let frames = build_frames(spec, &spec.trajectory.eyes_and_targets()?)?;
    let observations = render_all(spec, &frames, &ground_truth, &models)?;
    let scene = SceneInput {
        frames,
        observations,
        cad_db: models,
    };
    Ok(SynthScene { scene, ground_truth })
}

/// Two single-frame scenes, one with the object at `(s, depth)` and one at
/// `(2s, 2·depth)` along the same ray, with identical observations.
///
/// The world is re-centred on the camera (`e_t = 0`) so the doubled
/// configuration is exact in floating point. Scale predictions are omitted.
pub fn ambiguity_pair(spec: &SynthSpec) -> Result<(SynthScene, SynthScene), SynthError> {
    spec.validate()?;
    if spec.trajectory.n_frames() != 1 || spec.n_objects != 1 {
        return Err(SynthError::InvalidSpec("ambiguity pairs need one frame and one object".into()));
    }
    let models = build_models(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gt_a = sample_objects(spec, &models, &mut rng)?;
    let (eye, target) = spec.trajectory.eyes_and_targets()?[0];
    gt_a[0].pose.translation -= eye;
    let frames = build_frames(spec, &[(Vec3::zeros(), target - eye)])?;
    let pc = frames[0].world_to_camera(&gt_a[0].pose.translation);
    if pc.z <= NEAR_PLANE {
        return infeasible("object center is not in front of the camera");
    }
    let mut gt_b = gt_a.clone();
    gt_b[0].pose.translation *= 2.0;
    gt_b[0].pose.scale *= 2.0;
    let sub = SynthSpec {
        scale_predictions: false,
        ..spec.clone()
    };
    let make = |gt: Vec<GroundTruthObject>| -> Result<SynthScene, SynthError> {
        let observations = render_all(&sub, &frames, &gt, &models)?;
        Ok(SynthScene {
            scene: SceneInput {
                frames: frames.clone(),
                observations,
                cad_db: models.clone(),
            },
            ground_truth: gt,
        })
    };
    Ok((make(gt_a)?, make(gt_b)?))
}

/// Camera looking at `target` from `eye` rotated by `angle_deg` about the
/// vertical axis through `target`.
pub fn orbit_view(frame_index: u32, base: &CameraFrame, target: &Vec3, angle_deg: f64) -> Result<CameraFrame, SynthError> {
    let rel = base.center() - target;
    let eye = target + rot_z(angle_deg.to_radians()) * rel;
    CameraFrame::look_at(frame_index, base.intrinsics, &eye, target, base.width, base.height)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

#[cfg(test)]
mod tests;
