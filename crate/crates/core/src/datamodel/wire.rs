//! Newline-delimited JSON records.
//!
//! Line 1 of every file is a header such as
//! `{"format":"mvalign/observations","version":1,"units":{"length":"m","angle":"deg","image":"px"}}`.
//! Quaternions are written `[w, x, y, z]` with `w >= 0`; boxes are
//! `[left, top, right, bottom]`. Unknown top-level fields are reported as
//! warnings and otherwise ignored.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Quaternion;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{AlignmentResult, CadModel, FormatError, GroundTruthObject, ModelVote, Observation, SceneInput};
use crate::geometry::{
    Box2, CameraFrame, Intrinsics, Mat3, Pose9DoF, Quat, Symmetry, Vec2, Vec3, CONTINUOUS_SYMMETRY_ORDER,
};

pub const FRAMES_FILE: &str = "frames.jsonl";
pub const OBSERVATIONS_FILE: &str = "observations.jsonl";
pub const MODELS_FILE: &str = "models.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";

const VERSION: u64 = 1;

/// A record type with a fixed set of known top-level fields.
pub trait Record: Serialize + DeserializeOwned {
    const FORMAT: &'static str;
    const FIELDS: &'static [&'static str];
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u64,
    units: Units,
}

#[derive(Serialize, Deserialize)]
struct Units {
    length: String,
    angle: String,
    image: String,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    frame_index: u32,
    k: [[f64; 3]; 3],
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    width: u32,
    height: u32,
}

impl Record for FrameRecord {
    const FORMAT: &'static str = "mvalign/frames";
    const FIELDS: &'static [&'static str] = &["frame_index", "k", "rotation", "translation", "width", "height"];
}

#[derive(Serialize, Deserialize)]
struct VoteRecord {
    cad_model_id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    embedding: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ObservationRecord {
    frame_index: u32,
    class_id: String,
    score: f64,
    #[serde(rename = "box")]
    bbox: [f64; 4],
    center: [f64; 2],
    rotation: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model_vote: Option<VoteRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    track_id: Option<u32>,
}

impl Record for ObservationRecord {
    const FORMAT: &'static str = "mvalign/observations";
    const FIELDS: &'static [&'static str] = &[
        "frame_index",
        "class_id",
        "score",
        "box",
        "center",
        "rotation",
        "scale",
        "model_vote",
        "track_id",
    ];
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OrderRecord {
    Order(u32),
    Named(String),
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    id: String,
    class_id: String,
    is_vertically_symmetric: bool,
    symmetry_order: OrderRecord,
    vertices: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    faces: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
}

impl Record for ModelRecord {
    const FORMAT: &'static str = "mvalign/models";
    const FIELDS: &'static [&'static str] = &[
        "id",
        "class_id",
        "is_vertically_symmetric",
        "symmetry_order",
        "vertices",
        "faces",
        "embedding",
    ];
}

#[derive(Serialize, Deserialize)]
struct AlignmentRecord {
    object_id: u32,
    cad_model_id: String,
    class_id: String,
    translation: [f64; 3],
    rotation: [f64; 4],
    scale: [f64; 3],
    score: f64,
    n_supporting_frames: u32,
    final_objective: f64,
}

impl Record for AlignmentRecord {
    const FORMAT: &'static str = "mvalign/alignments";
    const FIELDS: &'static [&'static str] = &[
        "object_id",
        "cad_model_id",
        "class_id",
        "translation",
        "rotation",
        "scale",
        "score",
        "n_supporting_frames",
        "final_objective",
    ];
}

#[derive(Serialize, Deserialize)]
struct GroundTruthRecord {
    class_id: String,
    cad_model_id: String,
    translation: [f64; 3],
    rotation: [f64; 4],
    scale: [f64; 3],
}

impl Record for GroundTruthRecord {
    const FORMAT: &'static str = "mvalign/ground_truth";
    const FIELDS: &'static [&'static str] = &["class_id", "cad_model_id", "translation", "rotation", "scale"];
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a header line followed by one JSON line per record.
pub fn write_jsonl<T: Serialize>(path: &Path, format: &str, records: &[T]) -> Result<(), FormatError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let header = Header {
        format: format.to_string(),
        version: VERSION,
        units: Units {
            length: "m".into(),
            angle: "deg".into(),
            image: "px".into(),
        },
    };
    let mut emit = |v: String| writeln!(w, "{v}").map_err(io_err(path));
    emit(serde_json::to_string(&header).expect("header serializes"))?;
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| FormatError::validation(format, e.to_string()))?;
        emit(line)?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a header-prefixed JSONL file, returning `(line number, record)` pairs.
/// Unknown top-level fields are appended to `warnings`.
pub fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
    format: &str,
    known_fields: &[&str],
    warnings: &mut Vec<String>,
) -> Result<Vec<(usize, T)>, FormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |line: usize, message: String| FormatError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (hline, htext) = lines.next().ok_or_else(|| parse_err(1, "missing header record".into()))?;
    let header: Header = serde_json::from_str(htext).map_err(|e| parse_err(hline, format!("bad header: {e}")))?;
    if header.format != format {
        return Err(parse_err(
            hline,
            format!("expected format {format:?}, found {:?}", header.format),
        ));
    }
    if header.version != VERSION {
        return Err(parse_err(hline, format!("unsupported version {}", header.version)));
    }

    let mut out = Vec::new();
    for (line, raw) in lines {
        let value: Value = serde_json::from_str(raw).map_err(|e| parse_err(line, e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(parse_err(line, "record is not a JSON object".into()));
        };
        let map: Map<String, Value> = map
            .into_iter()
            .filter(|(k, _)| {
                let known = known_fields.contains(&k.as_str());
                if !known {
                    let w = format!("{}:{line}: ignoring unknown field {k:?}", path.display());
                    log::warn!("{w}");
                    warnings.push(w);
                }
                known
            })
            .collect();
        let rec = serde_json::from_value(Value::Object(map)).map_err(|e| parse_err(line, e.to_string()))?;
        out.push((line, rec));
    }
    Ok(out)
}

fn read_records<T: Record>(path: &Path, warnings: &mut Vec<String>) -> Result<Vec<(usize, T)>, FormatError> {
    read_jsonl(path, T::FORMAT, T::FIELDS, warnings)
}

fn write_records<T: Record>(path: &Path, records: &[T]) -> Result<(), FormatError> {
    write_jsonl(path, T::FORMAT, records)
}

fn quat_from_wire(q: [f64; 4], field: &str) -> Result<Quat, FormatError> {
    if q.iter().any(|v| !v.is_finite()) {
        return Err(FormatError::validation(field, "non-finite quaternion"));
    }
    let mut c = Quaternion::new(q[0], q[1], q[2], q[3]);
    let n = c.norm();
    if n < 1e-9 {
        return Err(FormatError::validation(field, "zero quaternion"));
    }
    // leave already-unit quaternions bit-for-bit untouched
    if (n * n - 1.0).abs() > 1e-12 {
        c /= n;
    }
    if c.w < 0.0 {
        c = -c;
    }
    Ok(Quat::new_unchecked(c))
}

fn quat_to_wire(q: &Quat) -> [f64; 4] {
    let s = if q.w < 0.0 { -1.0 } else { 1.0 };
    [s * q.w, s * q.i, s * q.j, s * q.k]
}

fn mat_from_rows(m: [[f64; 3]; 3]) -> Mat3 {
    Mat3::new(
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    )
}

fn mat_to_rows(m: &Mat3) -> [[f64; 3]; 3] {
    [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ]
}

fn pose_from_wire(t: [f64; 3], r: [f64; 4], s: [f64; 3], field: &str) -> Result<Pose9DoF, FormatError> {
    let pose = Pose9DoF::new(Vec3::from(t), quat_from_wire(r, &format!("{field}.rotation"))?, Vec3::from(s));
    if !pose.translation.iter().all(|v| v.is_finite()) {
        return Err(FormatError::validation(format!("{field}.translation"), "non-finite"));
    }
    if !pose.scale.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(FormatError::validation(format!("{field}.scale"), "components must be finite and > 0"));
    }
    Ok(pose)
}

fn frame_from_wire(r: FrameRecord, field: &str) -> Result<CameraFrame, FormatError> {
    let k = Intrinsics::from_matrix(&mat_from_rows(r.k))
        .map_err(|e| FormatError::validation(format!("{field}.k"), e.to_string()))?;
    CameraFrame::new(
        r.frame_index,
        k,
        mat_from_rows(r.rotation),
        Vec3::from(r.translation),
        r.width,
        r.height,
    )
    .map_err(|e| FormatError::validation(format!("{field}.rotation"), e.to_string()))
}

fn frame_to_wire(f: &CameraFrame) -> FrameRecord {
    FrameRecord {
        frame_index: f.frame_index,
        k: mat_to_rows(&f.intrinsics.matrix()),
        rotation: mat_to_rows(&f.rotation),
        translation: f.translation.into(),
        width: f.width,
        height: f.height,
    }
}

fn observation_from_wire(r: ObservationRecord, field: &str) -> Result<Observation, FormatError> {
    let [l, t, rr, b] = r.bbox;
    let o = Observation {
        frame_index: r.frame_index,
        class_id: r.class_id,
        score: r.score,
        bbox: Box2::new(l, t, rr, b),
        center: Vec2::from(r.center),
        rotation: quat_from_wire(r.rotation, &format!("{field}.rotation"))?,
        scale: r.scale.map(Vec3::from),
        model_vote: r.model_vote.map(|v| ModelVote {
            cad_model_id: v.cad_model_id,
            embedding: v.embedding,
        }),
        track_id: r.track_id,
    };
    o.validate(field)?;
    Ok(o)
}

fn observation_to_wire(o: &Observation) -> ObservationRecord {
    ObservationRecord {
        frame_index: o.frame_index,
        class_id: o.class_id.clone(),
        score: o.score,
        bbox: [o.bbox.left, o.bbox.top, o.bbox.right, o.bbox.bottom],
        center: o.center.into(),
        rotation: quat_to_wire(&o.rotation),
        scale: o.scale.map(Into::into),
        model_vote: o.model_vote.as_ref().map(|v| VoteRecord {
            cad_model_id: v.cad_model_id.clone(),
            embedding: v.embedding.clone(),
        }),
        track_id: o.track_id,
    }
}

fn model_from_wire(r: ModelRecord, field: &str) -> Result<CadModel, FormatError> {
    let order = match r.symmetry_order {
        OrderRecord::Order(m) => m,
        OrderRecord::Named(s) if s == "continuous" => CONTINUOUS_SYMMETRY_ORDER,
        OrderRecord::Named(s) => {
            return Err(FormatError::validation(
                format!("{field}.symmetry_order"),
                format!("expected an integer >= 1 or \"continuous\", found {s:?}"),
            ))
        }
    };
    let symmetry = Symmetry::from_order(order)
        .ok_or_else(|| FormatError::validation(format!("{field}.symmetry_order"), "must be >= 1"))?;
    if r.is_vertically_symmetric != (symmetry != Symmetry::None) {
        return Err(FormatError::validation(
            format!("{field}.is_vertically_symmetric"),
            "inconsistent with symmetry_order",
        ));
    }
    let m = CadModel {
        id: r.id,
        class_id: r.class_id,
        vertices: r.vertices.into_iter().map(Vec3::from).collect(),
        faces: r.faces,
        symmetry,
        embedding: r.embedding,
    };
    m.validate(field)?;
    Ok(m)
}

fn model_to_wire(m: &CadModel) -> ModelRecord {
    ModelRecord {
        id: m.id.clone(),
        class_id: m.class_id.clone(),
        is_vertically_symmetric: m.is_vertically_symmetric(),
        symmetry_order: match m.symmetry {
            Symmetry::Continuous => OrderRecord::Named("continuous".into()),
            s => OrderRecord::Order(s.order()),
        },
        vertices: m.vertices.iter().map(|v| (*v).into()).collect(),
        faces: m.faces.clone(),
        embedding: m.embedding.clone(),
    }
}

/// Loads and fully validates a scene directory.
pub fn load_scene(dir: &Path) -> Result<SceneInput, FormatError> {
    load_scene_with_warnings(dir).map(|(s, _)| s)
}

/// Like [`load_scene`], also returning the forward-compatibility warnings.
pub fn load_scene_with_warnings(dir: &Path) -> Result<(SceneInput, Vec<String>), FormatError> {
    let mut warnings = Vec::new();
    let mut frames = read_records::<FrameRecord>(&dir.join(FRAMES_FILE), &mut warnings)?
        .into_iter()
        .enumerate()
        .map(|(i, (_, r))| frame_from_wire(r, &format!("frames[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    frames.sort_by_key(|f| f.frame_index);
    let observations = read_records::<ObservationRecord>(&dir.join(OBSERVATIONS_FILE), &mut warnings)?
        .into_iter()
        .enumerate()
        .map(|(i, (_, r))| observation_from_wire(r, &format!("observations[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let cad_db = read_records::<ModelRecord>(&dir.join(MODELS_FILE), &mut warnings)?
        .into_iter()
        .enumerate()
        .map(|(i, (_, r))| model_from_wire(r, &format!("models[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let scene = SceneInput {
        frames,
        observations,
        cad_db,
    };
    scene.validate()?;
    Ok((scene, warnings))
}

/// Writes a scene directory (creating it if needed) and, when given, its ground truth.
pub fn save_scene(dir: &Path, scene: &SceneInput, ground_truth: Option<&[GroundTruthObject]>) -> Result<(), FormatError> {
    scene.validate()?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_records(&dir.join(FRAMES_FILE), &scene.frames.iter().map(frame_to_wire).collect::<Vec<_>>())?;
    write_records(
        &dir.join(OBSERVATIONS_FILE),
        &scene.observations.iter().map(observation_to_wire).collect::<Vec<_>>(),
    )?;
    write_records(&dir.join(MODELS_FILE), &scene.cad_db.iter().map(model_to_wire).collect::<Vec<_>>())?;
    if let Some(gt) = ground_truth {
        save_ground_truth(&dir.join(GROUND_TRUTH_FILE), gt)?;
    }
    Ok(())
}

pub fn save_alignments(path: &Path, results: &[AlignmentResult]) -> Result<(), FormatError> {
    let records = results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.validate(&format!("alignments[{i}]"))?;
            Ok(AlignmentRecord {
                object_id: r.object_id,
                cad_model_id: r.cad_model_id.clone(),
                class_id: r.class_id.clone(),
                translation: r.pose.translation.into(),
                rotation: quat_to_wire(&r.pose.rotation),
                scale: r.pose.scale.into(),
                score: r.score,
                n_supporting_frames: r.n_supporting_frames,
                final_objective: r.final_objective,
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    write_records(path, &records)
}

pub fn load_alignments(path: &Path) -> Result<Vec<AlignmentResult>, FormatError> {
    let mut warnings = Vec::new();
    read_records::<AlignmentRecord>(path, &mut warnings)?
        .into_iter()
        .enumerate()
        .map(|(i, (_, r))| {
            let field = format!("alignments[{i}]");
            let a = AlignmentResult {
                object_id: r.object_id,
                cad_model_id: r.cad_model_id,
                class_id: r.class_id,
                pose: pose_from_wire(r.translation, r.rotation, r.scale, &field)?,
                score: r.score,
                n_supporting_frames: r.n_supporting_frames,
                final_objective: r.final_objective,
            };
            a.validate(&field)?;
            Ok(a)
        })
        .collect()
}

pub fn save_ground_truth(path: &Path, gt: &[GroundTruthObject]) -> Result<(), FormatError> {
    let records = gt
        .iter()
        .enumerate()
        .map(|(i, g)| {
            g.validate(&format!("ground_truth[{i}]"))?;
            Ok(GroundTruthRecord {
                class_id: g.class_id.clone(),
                cad_model_id: g.cad_model_id.clone(),
                translation: g.pose.translation.into(),
                rotation: quat_to_wire(&g.pose.rotation),
                scale: g.pose.scale.into(),
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    write_records(path, &records)
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruthObject>, FormatError> {
    let mut warnings = Vec::new();
    read_records::<GroundTruthRecord>(path, &mut warnings)?
        .into_iter()
        .enumerate()
        .map(|(i, (_, r))| {
            let field = format!("ground_truth[{i}]");
            Ok(GroundTruthObject {
                class_id: r.class_id,
                cad_model_id: r.cad_model_id,
                pose: pose_from_wire(r.translation, r.rotation, r.scale, &field)?,
            })
        })
        .collect()
}

/// Loads a models file on its own, checking each model and id uniqueness.
pub fn load_models(path: &Path) -> Result<Vec<CadModel>, FormatError> {
    let mut warnings = Vec::new();
    let models = read_records::<ModelRecord>(path, &mut warnings)?
        .into_iter()
        .enumerate()
        .map(|(i, (_, r))| model_from_wire(r, &format!("models[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let scene = SceneInput {
        cad_db: models,
        ..SceneInput::default()
    };
    scene.validate()?;
    Ok(scene.cad_db)
}

/// The exact JSONL line an observation is written as.
pub fn wire_observation_json(o: &Observation) -> String {
    serde_json::to_string(&observation_to_wire(o)).expect("observation records serialize")
}
