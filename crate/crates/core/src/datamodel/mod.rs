//! Scene, observation, CAD model and result types, plus their file formats.
//!
//! A scene is a directory holding newline-delimited JSON files:
//! `frames.jsonl`, `observations.jsonl`, `models.jsonl` and optionally
//! `ground_truth.jsonl`. Every file starts with a header record naming the
//! format and its units (meters, degrees, pixels); each following line is one
//! record. See `wire` for the record layouts.

mod mesh;
mod wire;

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{Box2, CameraFrame, Pose9DoF, Quat, Symmetry, Vec2, Vec3};

pub use mesh::export_scene_mesh;
pub use wire::{
    load_alignments, load_ground_truth, load_models, load_scene, load_scene_with_warnings, read_jsonl, save_alignments,
    save_ground_truth, save_scene, wire_observation_json, write_jsonl, FRAMES_FILE, GROUND_TRUTH_FILE, MODELS_FILE, OBSERVATIONS_FILE,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: parse error: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("validation error at {field}: {message}")]
    Validation { field: String, message: String },
    #[error("dangling reference: {0}")]
    DanglingReference(String),
}

impl FormatError {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        FormatError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Shape-code vote of one detection: the nearest database model and the raw embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelVote {
    pub cad_model_id: String,
    pub embedding: Vec<f64>,
}

/// One detection of one object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub frame_index: u32,
    pub class_id: String,
    pub score: f64,
    /// Amodal 2D box, pixels.
    pub bbox: Box2,
    /// Projected 3D object center, pixels.
    pub center: Vec2,
    /// Predicted rotation, CAD to camera-view space.
    pub rotation: Quat,
    /// Predicted CAD-to-world scaling.
    pub scale: Option<Vec3>,
    pub model_vote: Option<ModelVote>,
    pub track_id: Option<u32>,
}

impl Observation {
    pub fn validate(&self, field: &str) -> Result<(), FormatError> {
        if !self.bbox.is_valid() {
            return Err(FormatError::validation(
                format!("{field}.box"),
                "expected finite left < right and top < bottom",
            ));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(FormatError::validation(format!("{field}.score"), "must lie in [0, 1]"));
        }
        if !self.center.iter().all(|v| v.is_finite()) {
            return Err(FormatError::validation(format!("{field}.center"), "non-finite"));
        }
        if !self.rotation.coords.iter().all(|v| v.is_finite()) {
            return Err(FormatError::validation(format!("{field}.rotation"), "non-finite"));
        }
        if let Some(s) = &self.scale {
            if !s.iter().all(|v| v.is_finite() && *v > 0.0) {
                return Err(FormatError::validation(format!("{field}.scale"), "components must be > 0"));
            }
        }
        if let Some(v) = &self.model_vote {
            if v.embedding.iter().any(|x| !x.is_finite()) {
                return Err(FormatError::validation(format!("{field}.model_vote.embedding"), "non-finite"));
            }
        }
        if self.class_id.is_empty() {
            return Err(FormatError::validation(format!("{field}.class_id"), "empty"));
        }
        Ok(())
    }
}

/// Largest axis extent every canonical model is normalized to.
pub const CANONICAL_EXTENT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CadModel {
    pub id: String,
    pub class_id: String,
    /// Canonical-space vertices: bounding box centered at the origin, largest
    /// extent [`CANONICAL_EXTENT`].
    pub vertices: Vec<Vec3>,
    /// Optional closed triangle surface over `vertices`.
    pub faces: Vec<[usize; 3]>,
    pub symmetry: Symmetry,
    pub embedding: Option<Vec<f64>>,
}

impl CadModel {
    /// Recenters and rescales arbitrary vertices into canonical space.
    pub fn normalized(
        id: impl Into<String>,
        class_id: impl Into<String>,
        vertices: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        symmetry: Symmetry,
    ) -> Result<Self, FormatError> {
        let (lo, hi) = bounds(&vertices).ok_or_else(|| FormatError::validation("vertices", "empty"))?;
        let extent = (hi - lo).max();
        if !(extent > 0.0) {
            return Err(FormatError::validation("vertices", "zero extent"));
        }
        let center = (lo + hi) / 2.0;
        let k = CANONICAL_EXTENT / extent;
        let vertices = vertices.iter().map(|v| (v - center) * k).collect();
        let m = CadModel {
            id: id.into(),
            class_id: class_id.into(),
            vertices,
            faces,
            symmetry,
            embedding: None,
        };
        m.validate("model")?;
        Ok(m)
    }

    pub fn is_vertically_symmetric(&self) -> bool {
        self.symmetry != Symmetry::None
    }

    /// Axis-aligned canonical bounds `(min, max)`.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        bounds(&self.vertices).unwrap_or((Vec3::zeros(), Vec3::zeros()))
    }

    pub fn validate(&self, field: &str) -> Result<(), FormatError> {
        if self.id.is_empty() {
            return Err(FormatError::validation(format!("{field}.id"), "empty"));
        }
        if self.vertices.len() < 3 {
            return Err(FormatError::validation(format!("{field}.vertices"), "need at least 3 vertices"));
        }
        if self.vertices.iter().flat_map(|v| v.iter()).any(|x| !x.is_finite()) {
            return Err(FormatError::validation(format!("{field}.vertices"), "non-finite"));
        }
        let (lo, hi) = self.bounds();
        let center = (lo + hi) / 2.0;
        if center.norm() > 1e-6 {
            return Err(FormatError::validation(
                format!("{field}.vertices"),
                format!("bounding box not centered at the origin (center {:?})", center.as_slice()),
            ));
        }
        let extent = (hi - lo).max();
        if (extent - CANONICAL_EXTENT).abs() > 1e-6 {
            return Err(FormatError::validation(
                format!("{field}.vertices"),
                format!("largest extent {extent} differs from {CANONICAL_EXTENT}"),
            ));
        }
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i >= self.vertices.len())) {
            return Err(FormatError::validation(
                format!("{field}.faces"),
                format!("face {f:?} references a missing vertex"),
            ));
        }
        Ok(())
    }
}

fn bounds(vertices: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = vertices.first()?;
    Some(vertices.iter().fold((*first, *first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneInput {
    /// Sorted by strictly increasing `frame_index`.
    pub frames: Vec<CameraFrame>,
    pub observations: Vec<Observation>,
    pub cad_db: Vec<CadModel>,
}

impl SceneInput {
    pub fn frame(&self, frame_index: u32) -> Option<&CameraFrame> {
        self.frames
            .binary_search_by_key(&frame_index, |f| f.frame_index)
            .ok()
            .map(|i| &self.frames[i])
    }

    pub fn model(&self, id: &str) -> Option<&CadModel> {
        self.cad_db.iter().find(|m| m.id == id)
    }

    /// Checks every invariant of the contained records and cross references.
    pub fn validate(&self) -> Result<(), FormatError> {
        for (i, f) in self.frames.iter().enumerate() {
            f.validate()
                .map_err(|e| FormatError::validation(format!("frames[{i}]"), e.to_string()))?;
        }
        for (i, w) in self.frames.windows(2).enumerate() {
            if w[1].frame_index <= w[0].frame_index {
                return Err(FormatError::validation(
                    format!("frames[{}].frame_index", i + 1),
                    "frame indices must be strictly increasing",
                ));
            }
        }
        let mut ids = BTreeMap::new();
        let mut model_dim = None;
        for (i, m) in self.cad_db.iter().enumerate() {
            m.validate(&format!("models[{i}]"))?;
            if ids.insert(m.id.as_str(), i).is_some() {
                return Err(FormatError::validation(format!("models[{i}].id"), "duplicate model id"));
            }
            if let Some(e) = &m.embedding {
                check_dim(&mut model_dim, e.len(), &format!("models[{i}].embedding"))?;
            }
        }
        let mut vote_dim = None;
        for (i, o) in self.observations.iter().enumerate() {
            let field = format!("observations[{i}]");
            o.validate(&field)?;
            if self.frame(o.frame_index).is_none() {
                return Err(FormatError::DanglingReference(format!(
                    "{field}.frame_index = {} not found in frames",
                    o.frame_index
                )));
            }
            if let Some(v) = &o.model_vote {
                if !ids.contains_key(v.cad_model_id.as_str()) {
                    return Err(FormatError::DanglingReference(format!(
                        "{field}.model_vote.cad_model_id = {:?} not found in models",
                        v.cad_model_id
                    )));
                }
                if !v.embedding.is_empty() {
                    check_dim(&mut vote_dim, v.embedding.len(), &format!("{field}.model_vote.embedding"))?;
                }
            }
        }
        Ok(())
    }
}

fn check_dim(expected: &mut Option<usize>, got: usize, field: &str) -> Result<(), FormatError> {
    match expected {
        Some(d) if *d != got => Err(FormatError::validation(
            field,
            format!("embedding length {got} differs from {d} used elsewhere in the scene"),
        )),
        _ => {
            *expected = Some(got);
            Ok(())
        }
    }
}

/// Final output for one physical object.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub object_id: u32,
    pub cad_model_id: String,
    pub class_id: String,
    pub pose: Pose9DoF,
    pub score: f64,
    pub n_supporting_frames: u32,
    pub final_objective: f64,
}

impl AlignmentResult {
    pub fn validate(&self, field: &str) -> Result<(), FormatError> {
        let finite = self.score.is_finite()
            && self.final_objective.is_finite()
            && self.pose.translation.iter().chain(self.pose.scale.iter()).all(|v| v.is_finite())
            && self.pose.rotation.coords.iter().all(|v| v.is_finite());
        if !finite {
            return Err(FormatError::validation(field, "non-finite value"));
        }
        if !self.pose.is_valid() {
            return Err(FormatError::validation(format!("{field}.pose"), "invalid pose"));
        }
        if self.n_supporting_frames < 1 {
            return Err(FormatError::validation(format!("{field}.n_supporting_frames"), "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthObject {
    pub class_id: String,
    pub cad_model_id: String,
    pub pose: Pose9DoF,
}

impl GroundTruthObject {
    pub fn validate(&self, field: &str) -> Result<(), FormatError> {
        if !self.pose.is_valid() {
            return Err(FormatError::validation(format!("{field}.pose"), "invalid pose"));
        }
        Ok(())
    }
}
