//! Grouping detections into physical objects: an IoU tracker within the
//! video, greedy seeded clustering of per-track alignments, and a final
//! solve per cluster over the union of its observations.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{AlignmentResult, CadModel, Observation, SceneInput};
use crate::geometry::{symmetric_rotation_error, Pose9DoF, Symmetry, Vec3};
use crate::objective::{box_vertices, ObjectiveWeights};
use crate::retrieval::vote_model;
use crate::solver::{solve_object_with, InitStrategy, SolveReport, SolverConfig, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerParams {
    pub iou_threshold: f64,
    /// A track closes once this many frame indices pass without a match.
    pub max_gap: u32,
    /// Group by the observations' own `track_id` when every observation has one.
    pub use_track_ids: bool,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            iou_threshold: 0.3,
            max_gap: 30,
            use_track_ids: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    /// m
    pub translation_radius: f64,
    /// degrees
    pub rotation_radius: f64,
    /// relative, max over axes of `|s1 - s2| / max(s1, s2)`
    pub scale_radius: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            translation_radius: 0.40,
            rotation_radius: 40.0,
            scale_radius: 0.40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssociationParams {
    pub tracker: TrackerParams,
    pub cluster: ClusterParams,
    /// Share of `max_iterations` spent on per-track solves used only for clustering.
    pub track_iteration_fraction: f64,
    /// Clusters observed in fewer distinct frames are not reported.
    pub min_cluster_frames: usize,
}

impl Default for AssociationParams {
    fn default() -> Self {
        AssociationParams {
            tracker: TrackerParams::default(),
            cluster: ClusterParams::default(),
            track_iteration_fraction: 0.25,
            min_cluster_frames: 1,
        }
    }
}

/// Observations of one object linked across frames, as indices into `scene.observations`.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u32,
    pub observations: Vec<usize>,
    pub class_id: String,
    pub max_score: f64,
}

impl Track {
    pub fn observations<'a>(&self, scene: &'a SceneInput) -> Vec<&'a Observation> {
        self.observations.iter().map(|&i| &scene.observations[i]).collect()
    }
}

/// Links detections frame by frame. Every observation ends up in exactly one
/// class-pure track; track ids follow creation order.
pub fn build_tracks(scene: &SceneInput, params: &TrackerParams) -> Vec<Track> {
    let obs = &scene.observations;
    if params.use_track_ids && !obs.is_empty() && obs.iter().all(|o| o.track_id.is_some()) {
        let mut groups: BTreeMap<(u32, &str), Vec<usize>> = BTreeMap::new();
        for (i, o) in obs.iter().enumerate() {
            groups.entry((o.track_id.expect("checked"), o.class_id.as_str())).or_default().push(i);
        }
        return groups
            .into_values()
            .enumerate()
            .map(|(k, mut idx)| {
                idx.sort_by_key(|&i| (obs[i].frame_index, i));
                make_track(k as u32, idx, obs)
            })
            .collect();
    }

    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by_key(|&i| (obs[i].frame_index, i));
    // (track id, observation indices, last frame)
    let mut tracks: Vec<(Vec<usize>, u32)> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let frame = obs[order[start]].frame_index;
        let end = start + order[start..].iter().take_while(|&&i| obs[i].frame_index == frame).count();
        open.retain(|&t| frame - tracks[t].1 <= params.max_gap);
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for &t in &open {
            let last = &obs[*tracks[t].0.last().expect("tracks are non-empty")];
            for &i in &order[start..end] {
                if obs[i].class_id != last.class_id || tracks[t].1 == frame {
                    continue;
                }
                let iou = last.bbox.iou(&obs[i].bbox);
                if iou >= params.iou_threshold {
                    pairs.push((iou, t, i));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_tracks = BTreeSet::new();
        let mut used_obs = BTreeSet::new();
        for (_, t, i) in pairs {
            if used_tracks.contains(&t) || used_obs.contains(&i) {
                continue;
            }
            used_tracks.insert(t);
            used_obs.insert(i);
            tracks[t].0.push(i);
            tracks[t].1 = frame;
        }
        for &i in &order[start..end] {
            if !used_obs.contains(&i) {
                tracks.push((vec![i], frame));
                open.push(tracks.len() - 1);
            }
        }
        start = end;
    }
    tracks
        .into_iter()
        .enumerate()
        .map(|(k, (idx, _))| make_track(k as u32, idx, obs))
        .collect()
}

fn make_track(track_id: u32, observations: Vec<usize>, obs: &[Observation]) -> Track {
    let max_score = observations.iter().map(|&i| obs[i].score).fold(f64::NEG_INFINITY, f64::max);
    Track {
        track_id,
        class_id: obs[observations[0]].class_id.clone(),
        observations,
        max_score,
    }
}

/// One solved candidate for clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterItem {
    pub id: u32,
    pub class_id: String,
    pub score: f64,
    pub pose: Pose9DoF,
    pub symmetry: Symmetry,
}

/// `max_i |a_i - b_i| / max(a_i, b_i)`.
pub fn relative_scale_distance(a: &Vec3, b: &Vec3) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs() / a[i].max(b[i])).fold(0.0, f64::max)
}

/// Greedy seeded clustering: the highest-scoring remaining item (lowest id on
/// ties) absorbs every remaining item of its class within all three radii.
/// Returns clusters of ids, seed first, in seed order.
pub fn cluster_alignments(items: &[ClusterItem], params: &ClusterParams) -> Vec<Vec<u32>> {
    let mut pool: Vec<&ClusterItem> = items.iter().collect();
    pool.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
    let mut clusters = Vec::new();
    while !pool.is_empty() {
        let seed = pool.remove(0);
        let mut members = vec![seed.id];
        pool.retain(|c| {
            let near = c.class_id == seed.class_id
                && (c.pose.translation - seed.pose.translation).norm() <= params.translation_radius
                && symmetric_rotation_error(&c.pose.rotation, &seed.pose.rotation, seed.symmetry) <= params.rotation_radius
                && relative_scale_distance(&c.pose.scale, &seed.pose.scale) <= params.scale_radius;
            if near {
                members.push(c.id);
            }
            !near
        });
        clusters.push(members);
    }
    clusters
}

/// Output of [`integrate_scene`], with diagnostics for dropped objects.
#[derive(Debug, Clone, Default)]
pub struct Integration {
    pub results: Vec<AlignmentResult>,
    pub reports: Vec<SolveReport>,
    pub tracks: Vec<Track>,
    /// Track ids per output object, seed first.
    pub clusters: Vec<Vec<u32>>,
    /// Per-track solves used for clustering (`None` where the solve failed).
    pub track_solutions: Vec<Option<(Pose9DoF, SolveReport)>>,
    pub failures: Vec<String>,
}

/// Previous poses keyed by seed track id, plus finished results keyed by the
/// exact observation set they were solved over.
#[derive(Debug, Clone, Default)]
pub struct WarmState {
    pub poses: BTreeMap<u32, Pose9DoF>,
    pub solved: BTreeMap<Vec<usize>, (AlignmentResult, SolveReport)>,
}

fn model_for<'s>(scene: &'s SceneInput, observations: &[&Observation], class_id: &str) -> Option<&'s CadModel> {
    match vote_model(observations.iter().copied()) {
        Ok(id) => scene.model(&id),
        // without votes, fall back to the first model of the class
        Err(_) => scene.cad_db.iter().find(|m| m.class_id == class_id),
    }
}

/// Drops the recognition-scale term for objects whose observations do not all predict scale.
fn effective_weights(weights: &ObjectiveWeights, observations: &[&Observation]) -> ObjectiveWeights {
    if weights.a_scale_rec > 0.0 && observations.iter().any(|o| o.scale.is_none()) {
        ObjectiveWeights {
            a_scale_rec: 0.0,
            ..*weights
        }
    } else {
        *weights
    }
}

struct Geometry<'s> {
    model: &'s CadModel,
    vertices: Vec<Vec3>,
}

fn geometry_cache(scene: &SceneInput) -> BTreeMap<&str, Geometry<'_>> {
    scene
        .cad_db
        .iter()
        .map(|m| {
            (
                m.id.as_str(),
                Geometry {
                    model: m,
                    vertices: box_vertices(m),
                },
            )
        })
        .collect()
}

fn solve_group<'s>(
    scene: &'s SceneInput,
    geometry: &BTreeMap<&str, Geometry<'s>>,
    observations: &[&'s Observation],
    class_id: &str,
    weights: &ObjectiveWeights,
    config: &SolverConfig,
    warm: Option<&Pose9DoF>,
) -> Result<(&'s CadModel, Pose9DoF, SolveReport), String> {
    let model = model_for(scene, observations, class_id).ok_or_else(|| format!("no CAD model for class {class_id}"))?;
    let g = &geometry[model.id.as_str()];
    let w = effective_weights(weights, observations);
    let (vars, report) = solve_object_with(scene, observations, &w, config, &g.vertices, g.model.symmetry, warm, None)
        .map_err(|e: SolverError| e.to_string())?;
    Ok((model, vars.pose, report))
}

/// Full pipeline: tracks, per-track solves, clustering, and one final solve per cluster.
pub fn integrate_scene(
    scene: &SceneInput,
    weights: &ObjectiveWeights,
    config: &SolverConfig,
    params: &AssociationParams,
) -> Integration {
    integrate_scene_warm(scene, weights, config, params, &WarmState::default())
}

/// As [`integrate_scene`], reusing results whose observation set is unchanged
/// and warm-starting clusters whose seed track was solved before.
pub fn integrate_scene_warm(
    scene: &SceneInput,
    weights: &ObjectiveWeights,
    config: &SolverConfig,
    params: &AssociationParams,
    warm: &WarmState,
) -> Integration {
    let tracks = build_tracks(scene, &params.tracker);
    if tracks.is_empty() {
        return Integration::default();
    }
    let geometry = geometry_cache(scene);
    let track_config = SolverConfig {
        max_iterations: ((config.max_iterations as f64 * params.track_iteration_fraction).ceil() as usize).max(1),
        // the reduced budget needs a start near the answer
        init: InitStrategy::Observations,
        ..config.clone()
    };
    let track_solutions: Vec<Result<(&CadModel, Pose9DoF, SolveReport), String>> = tracks
        .par_iter()
        .map(|t| {
            let obs = t.observations(scene);
            solve_group(scene, &geometry, &obs, &t.class_id, weights, &track_config, warm.poses.get(&t.track_id))
        })
        .collect();

    let mut failures = Vec::new();
    let mut items = Vec::new();
    for (t, s) in tracks.iter().zip(&track_solutions) {
        match s {
            Ok((model, pose, _)) => items.push(ClusterItem {
                id: t.track_id,
                class_id: t.class_id.clone(),
                score: t.max_score,
                pose: *pose,
                symmetry: model.symmetry,
            }),
            Err(e) => {
                log::warn!("track {} dropped: {e}", t.track_id);
                failures.push(format!("track {}: {e}", t.track_id));
            }
        }
    }
    let mut clusters = cluster_alignments(&items, &params.cluster);
    clusters.retain(|members| {
        let frames: BTreeSet<u32> = members
            .iter()
            .flat_map(|&id| tracks[id as usize].observations.iter().map(|&i| scene.observations[i].frame_index))
            .collect();
        let keep = frames.len() >= params.min_cluster_frames;
        if !keep {
            log::debug!("cluster seeded by track {} skipped: {} frames", members[0], frames.len());
        }
        keep
    });

    let solved: Vec<Result<(AlignmentResult, SolveReport), String>> = clusters
        .par_iter()
        .enumerate()
        .map(|(k, members)| {
            let mut idx: Vec<usize> = members
                .iter()
                .flat_map(|&id| tracks[id as usize].observations.iter().copied())
                .collect();
            idx.sort_unstable();
            let score = members.iter().map(|&id| tracks[id as usize].max_score).fold(f64::NEG_INFINITY, f64::max);
            let class_id = tracks[members[0] as usize].class_id.clone();
            let object_id = k as u32;
            if let Some((r, rep)) = warm.solved.get(&idx) {
                return Ok((
                    AlignmentResult {
                        object_id,
                        score,
                        ..r.clone()
                    },
                    rep.clone(),
                ));
            }
            let obs: Vec<&Observation> = idx.iter().map(|&i| &scene.observations[i]).collect();
            // start from the previous session's pose, else from the seed track's solve
            let start = warm.poses.get(&members[0]).or_else(|| {
                track_solutions[members[0] as usize]
                    .as_ref()
                    .ok()
                    .map(|(_, p, _)| p)
            });
            let (model, pose, report) = solve_group(scene, &geometry, &obs, &class_id, weights, config, start)?;
            let frames: BTreeSet<u32> = obs.iter().map(|o| o.frame_index).collect();
            Ok((
                AlignmentResult {
                    object_id,
                    cad_model_id: model.id.clone(),
                    class_id,
                    pose: pose.canonical(),
                    score,
                    n_supporting_frames: frames.len() as u32,
                    final_objective: report.final_objective,
                },
                report,
            ))
        })
        .collect();

    let mut results = Vec::new();
    let mut reports = Vec::new();
    let mut kept = Vec::new();
    for (members, r) in clusters.into_iter().zip(solved) {
        match r {
            Ok((res, rep)) => {
                results.push(AlignmentResult {
                    object_id: results.len() as u32,
                    ..res
                });
                reports.push(rep);
                kept.push(members);
            }
            Err(e) => {
                log::warn!("cluster seeded by track {} dropped: {e}", members[0]);
                failures.push(format!("cluster {}: {e}", members[0]));
            }
        }
    }
    Integration {
        results,
        reports,
        tracks,
        clusters: kept,
        track_solutions: track_solutions.into_iter().map(|s| s.ok().map(|(_, p, r)| (p, r))).collect(),
        failures,
    }
}

/// Observation-index key of a cluster, as used by [`WarmState::solved`].
pub fn cluster_key(tracks: &[Track], members: &[u32]) -> Vec<usize> {
    let mut idx: Vec<usize> = members
        .iter()
        .flat_map(|&id| tracks[id as usize].observations.iter().copied())
        .collect();
    idx.sort_unstable();
    idx
}

#[cfg(test)]
pub(crate) mod tests;
