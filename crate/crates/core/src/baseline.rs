//! Single-frame baselines: each detection is lifted to 3D on its own, either
//! with class-average scale and depth or with its predicted scale and the depth
//! that best explains its box. Duplicates across frames are then removed by
//! clustering, keeping the top-scored detection per cluster.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{cluster_alignments, ClusterItem, ClusterParams};
use crate::datamodel::{AlignmentResult, CadModel, GroundTruthObject, Observation, SceneInput};
use crate::geometry::{Pose9DoF, Quat, Vec3};
use crate::objective::{box_vertices, total_objective, AuxPerFrame, ObjectProblem, ObjectVariables, ObjectiveWeights};
use crate::retrieval::vote_model;
use crate::solver::derive_depth_single_frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineVariant {
    /// Class-average scale and depth.
    ClassAvg,
    /// Predicted scale, depth from the box.
    ScalePred,
}

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("no class statistics for class {0:?}")]
    MissingClassStats(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassStat {
    pub scale: [f64; 3],
    /// Mean camera depth of the object center, m.
    pub depth: f64,
    pub n_objects: usize,
}

/// Per-class averages over a training set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassStats(pub BTreeMap<String, ClassStat>);

impl ClassStats {
    /// Averages ground-truth scales per class, and center depths over every
    /// frame where the center projects into the image.
    pub fn from_ground_truth<'a>(scenes: impl IntoIterator<Item = (&'a SceneInput, &'a [GroundTruthObject])>) -> Self {
        let mut acc: BTreeMap<String, (Vec3, usize, f64, usize)> = BTreeMap::new();
        for (scene, gt) in scenes {
            for g in gt {
                let e = acc.entry(g.class_id.clone()).or_insert((Vec3::zeros(), 0, 0.0, 0));
                e.0 += g.pose.scale;
                e.1 += 1;
                for f in &scene.frames {
                    let pc = f.world_to_camera(&g.pose.translation);
                    if f.project(&pc).ok().is_some_and(|p| f.contains_pixel(&p)) {
                        e.2 += pc.z;
                        e.3 += 1;
                    }
                }
            }
        }
        ClassStats(
            acc.into_iter()
                .filter(|(_, (_, _, _, nd))| *nd > 0)
                .map(|(c, (s, n, d, nd))| {
                    let s = s / n as f64;
                    (
                        c,
                        ClassStat {
                            scale: [s.x, s.y, s.z],
                            depth: d / nd as f64,
                            n_objects: n,
                        },
                    )
                })
                .collect(),
        )
    }
}

/// One lifted detection.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleFrameAlignment {
    pub observation: usize,
    pub cad_model_id: String,
    pub pose: Pose9DoF,
    pub depth: f64,
    pub objective: f64,
}

fn model_for<'s>(scene: &'s SceneInput, o: &Observation) -> Option<&'s CadModel> {
    match vote_model(std::iter::once(o)) {
        Ok(id) => scene.model(&id),
        Err(_) => scene.cad_db.iter().find(|m| m.class_id == o.class_id),
    }
}

/// Lifts one observation. `Ok(None)` when it cannot be lifted (no model, no
/// scale, or no depth explains the box).
pub fn lift_observation(
    scene: &SceneInput,
    index: usize,
    variant: BaselineVariant,
    stats: Option<&ClassStats>,
    weights: &ObjectiveWeights,
) -> Result<Option<SingleFrameAlignment>, BaselineError> {
    let o = &scene.observations[index];
    let Some(frame) = scene.frame(o.frame_index) else {
        return Ok(None);
    };
    let Some(model) = model_for(scene, o) else {
        return Ok(None);
    };
    let stat = || {
        stats
            .and_then(|s| s.0.get(&o.class_id))
            .ok_or_else(|| BaselineError::MissingClassStats(o.class_id.clone()))
    };
    let rotation = Quat::from_matrix(&(frame.rotation.transpose() * o.rotation.to_rotation_matrix().into_inner()));
    let vertices = box_vertices(model);
    let (scale, depth) = match variant {
        BaselineVariant::ClassAvg => {
            let s = stat()?;
            (Vec3::from(s.scale), s.depth)
        }
        BaselineVariant::ScalePred => {
            let scale = match o.scale {
                Some(s) => s,
                None => Vec3::from(stat()?.scale),
            };
            match derive_depth_single_frame(frame, o, &scale, &rotation, &vertices) {
                Ok(d) => (scale, d),
                Err(e) => {
                    log::debug!("observation {index} not lifted: {e}");
                    return Ok(None);
                }
            }
        }
    };
    let pose = Pose9DoF::new(frame.backproject_unchecked(&o.center, depth), rotation, scale);
    let problem = ObjectProblem::new(scene, &[o], vertices, model.symmetry).ok();
    let vars = ObjectVariables {
        pose,
        aux: BTreeMap::from([(
            o.frame_index,
            AuxPerFrame {
                kappa: o.center,
                beta: depth,
            },
        )]),
    };
    // the recognition-scale term needs a prediction
    let w = if o.scale.is_none() {
        ObjectiveWeights {
            a_scale_rec: 0.0,
            ..*weights
        }
    } else {
        *weights
    };
    let objective = problem
        .and_then(|p| total_objective(&p, &vars, &w).ok())
        .map_or(f64::NAN, |(v, _)| v);
    Ok(Some(SingleFrameAlignment {
        observation: index,
        cad_model_id: model.id.clone(),
        pose,
        depth,
        objective,
    }))
}

/// Lifts every observation and keeps the top-scored member of each cluster.
pub fn run_baseline(
    scene: &SceneInput,
    variant: BaselineVariant,
    stats: Option<&ClassStats>,
    weights: &ObjectiveWeights,
    cluster: &ClusterParams,
) -> Result<Vec<AlignmentResult>, BaselineError> {
    let mut lifted = Vec::new();
    for i in 0..scene.observations.len() {
        if let Some(a) = lift_observation(scene, i, variant, stats, weights)? {
            lifted.push(a);
        }
    }
    let items: Vec<ClusterItem> = lifted
        .iter()
        .map(|a| {
            let o = &scene.observations[a.observation];
            ClusterItem {
                id: a.observation as u32,
                class_id: o.class_id.clone(),
                score: o.score,
                pose: a.pose,
                symmetry: scene.model(&a.cad_model_id).map(|m| m.symmetry).unwrap_or_default(),
            }
        })
        .collect();
    let by_obs: BTreeMap<usize, &SingleFrameAlignment> = lifted.iter().map(|a| (a.observation, a)).collect();
    Ok(cluster_alignments(&items, cluster)
        .iter()
        .enumerate()
        .map(|(k, members)| {
            let a = by_obs[&(members[0] as usize)];
            let o = &scene.observations[a.observation];
            AlignmentResult {
                object_id: k as u32,
                cad_model_id: a.cad_model_id.clone(),
                class_id: o.class_id.clone(),
                pose: a.pose.canonical(),
                score: o.score,
                n_supporting_frames: 1,
                final_objective: a.objective,
            }
        })
        .collect())
}
