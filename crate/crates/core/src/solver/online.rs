//! Incremental operation: the scene grows chunk by chunk and every update
//! re-runs the association pipeline over everything seen so far, reusing
//! unchanged objects and warm-starting the rest.

use thiserror::Error;

use crate::association::{cluster_key, integrate_scene_warm, AssociationParams, Integration, WarmState};
use crate::datamodel::{AlignmentResult, CadModel, FormatError, Observation, SceneInput};
use crate::geometry::CameraFrame;
use crate::objective::ObjectiveWeights;

use super::SolverConfig;

#[derive(Debug, Error)]
pub enum OnlineError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("frame {got} does not follow the last seen frame {last}")]
    OutOfOrder { last: u32, got: u32 },
}

#[derive(Debug, Clone)]
pub struct OnlineSession {
    scene: SceneInput,
    weights: ObjectiveWeights,
    config: SolverConfig,
    params: AssociationParams,
    warm: WarmState,
    last: Integration,
}

impl OnlineSession {
    pub fn new(cad_db: Vec<CadModel>, weights: ObjectiveWeights, config: SolverConfig, params: AssociationParams) -> Self {
        OnlineSession {
            scene: SceneInput {
                cad_db,
                ..SceneInput::default()
            },
            weights,
            config,
            params,
            warm: WarmState::default(),
            last: Integration::default(),
        }
    }

    pub fn scene(&self) -> &SceneInput {
        &self.scene
    }

    pub fn results(&self) -> &[AlignmentResult] {
        &self.last.results
    }

    pub fn integration(&self) -> &Integration {
        &self.last
    }

    /// Appends a chunk and re-solves. On error the session is left unchanged.
    pub fn update(&mut self, frames: Vec<CameraFrame>, observations: Vec<Observation>) -> Result<&Integration, OnlineError> {
        let mut last = self.scene.frames.last().map(|f| f.frame_index);
        for f in &frames {
            if let Some(l) = last {
                if f.frame_index <= l {
                    return Err(OnlineError::OutOfOrder {
                        last: l,
                        got: f.frame_index,
                    });
                }
            }
            last = Some(f.frame_index);
        }
        let mut next = self.scene.clone();
        next.frames.extend(frames);
        next.observations.extend(observations);
        next.validate()?;
        self.scene = next;

        let out = integrate_scene_warm(&self.scene, &self.weights, &self.config, &self.params, &self.warm);
        let mut warm = WarmState::default();
        for (t, s) in out.tracks.iter().zip(&out.track_solutions) {
            if let Some((pose, _)) = s {
                warm.poses.insert(t.track_id, *pose);
            }
        }
        for ((r, rep), members) in out.results.iter().zip(&out.reports).zip(&out.clusters) {
            warm.poses.insert(members[0], r.pose);
            warm.solved.insert(cluster_key(&out.tracks, members), (r.clone(), rep.clone()));
        }
        self.warm = warm;
        self.last = out;
        Ok(&self.last)
    }
}

/// One update of `session` with a new chunk; returns the current alignments.
pub fn solve_incremental(
    session: &mut OnlineSession,
    frames: Vec<CameraFrame>,
    observations: Vec<Observation>,
) -> Result<Vec<AlignmentResult>, OnlineError> {
    Ok(session.update(frames, observations)?.results.clone())
}

/// Splits a scene into consecutive chunks of `frames_per_chunk` frames with their observations.
pub fn chunk_scene(scene: &SceneInput, frames_per_chunk: usize) -> Vec<(Vec<CameraFrame>, Vec<Observation>)> {
    scene
        .frames
        .chunks(frames_per_chunk.max(1))
        .map(|fs| {
            let (lo, hi) = (fs[0].frame_index, fs[fs.len() - 1].frame_index);
            let obs = scene
                .observations
                .iter()
                .filter(|o| (lo..=hi).contains(&o.frame_index))
                .cloned()
                .collect();
            (fs.to_vec(), obs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::integrate_scene;
    use crate::synth::generate;

    fn session(scene: &SceneInput) -> OnlineSession {
        OnlineSession::new(
            scene.cad_db.clone(),
            ObjectiveWeights::default(),
            SolverConfig::default(),
            AssociationParams::default(),
        )
    }

    fn gap_scene() -> SceneInput {
        generate(&crate::association::tests::gap_spec(Some((30, 64)))).unwrap().scene
    }

    #[test]
    fn empty_frames_leave_poses_unchanged() {
        let scene = gap_scene();
        let mut s = session(&scene);
        let (head, tail) = scene.frames.split_at(80);
        let obs: Vec<_> = scene.observations.iter().filter(|o| o.frame_index < 80).cloned().collect();
        let before = solve_incremental(&mut s, head.to_vec(), obs).unwrap();
        let after = solve_incremental(&mut s, tail.to_vec(), vec![]).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn object_appears_when_first_seen() {
        let scene = gap_scene();
        let mut s = session(&scene);
        // the object is hidden from frame 30 on, re-appearing at 65
        let chunks = chunk_scene(&SceneInput {
            observations: scene.observations.iter().filter(|o| o.frame_index >= 40).cloned().collect(),
            ..scene.clone()
        }, 40);
        let first = solve_incremental(&mut s, chunks[0].0.clone(), chunks[0].1.clone()).unwrap();
        assert!(first.is_empty());
        let second = solve_incremental(&mut s, chunks[1].0.clone(), chunks[1].1.clone()).unwrap();
        assert_eq!(second.len(), 1);
    }

    #[test]
    fn chunked_matches_batch() {
        let scene = gap_scene();
        let batch = integrate_scene(&scene, &ObjectiveWeights::default(), &SolverConfig::default(), &AssociationParams::default());
        let mut s = session(&scene);
        for (frames, obs) in chunk_scene(&scene, 20) {
            solve_incremental(&mut s, frames, obs).unwrap();
        }
        let online = s.results();
        assert_eq!(online.len(), batch.results.len());
        for (a, b) in online.iter().zip(&batch.results) {
            assert_eq!(a.cad_model_id, b.cad_model_id);
            let scale = b.final_objective.abs().max(1e-6);
            assert!((a.final_objective - b.final_objective).abs() <= 0.01 * scale + 1e-6, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn out_of_order_frames_are_rejected() {
        let scene = gap_scene();
        let mut s = session(&scene);
        s.update(scene.frames[5..10].to_vec(), vec![]).unwrap();
        assert!(matches!(s.update(scene.frames[0..2].to_vec(), vec![]), Err(OnlineError::OutOfOrder { .. })));
        assert_eq!(s.scene().frames.len(), 5);
    }
}
