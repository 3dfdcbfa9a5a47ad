//! 9-DoF accuracy protocol, threshold sweeps and oriented-box detection scores.
//!
//! A ground-truth object counts as accurately aligned when a result of the
//! same class is within 20 cm, 20° and 20% scale of it at the same time.

mod iou;
mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{AlignmentResult, CadModel, GroundTruthObject};
use crate::geometry::{symmetric_rotation_error, Symmetry, Vec3};

pub use iou::{box_iou_prf, oriented_box, oriented_box_iou, OrientedBox, PrfRow, DEFAULT_IOU_SAMPLES, DEFAULT_IOU_THRESHOLDS};
pub use report::{render_text, write_report, write_sweep_csv, REPORT_JSON, REPORT_TXT, SWEEP_CSV};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("{0} threshold grid must be strictly increasing and non-negative")]
    InvalidGrid(&'static str),
    #[error("unknown CAD model {0:?}")]
    UnknownModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccuracyThresholds {
    /// m
    pub translation: f64,
    /// degrees
    pub rotation: f64,
    /// relative, per axis
    pub scale: f64,
}

impl Default for AccuracyThresholds {
    fn default() -> Self {
        AccuracyThresholds {
            translation: 0.20,
            rotation: 20.0,
            scale: 0.20,
        }
    }
}

impl AccuracyThresholds {
    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, v) in [("translation", self.translation), ("rotation", self.rotation), ("scale", self.scale)] {
            if !(v > 0.0) {
                return Err(EvalError::InvalidThresholds(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn accepts(&self, e: &ObjectErrors) -> bool {
        e.translation <= self.translation && e.rotation <= self.rotation && e.scale <= self.scale
    }
}

/// Class → rotational symmetry used when measuring rotation error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymmetryTable(pub BTreeMap<String, Symmetry>);

impl Default for SymmetryTable {
    fn default() -> Self {
        SymmetryTable(BTreeMap::from([
            ("table".to_string(), Symmetry::Discrete(4)),
            ("trashbin".to_string(), Symmetry::Continuous),
        ]))
    }
}

impl SymmetryTable {
    /// Classes missing from the table are asymmetric.
    pub fn get(&self, class_id: &str) -> Symmetry {
        self.0.get(class_id).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectErrors {
    /// m
    pub translation: f64,
    /// degrees, symmetry absorbed
    pub rotation: f64,
    /// max over axes of `|s_res - s_gt| / s_gt`
    pub scale: f64,
}

impl ObjectErrors {
    pub fn between(result: &AlignmentResult, gt: &GroundTruthObject, symmetry: Symmetry) -> Self {
        ObjectErrors {
            translation: (result.pose.translation - gt.pose.translation).norm(),
            rotation: symmetric_rotation_error(&result.pose.rotation, &gt.pose.rotation, symmetry),
            scale: relative_scale_error(&result.pose.scale, &gt.pose.scale),
        }
    }
}

pub fn relative_scale_error(result: &Vec3, gt: &Vec3) -> f64 {
    (0..3).map(|i| (result[i] - gt[i]).abs() / gt[i]).fold(0.0, f64::max)
}

/// Outcome for one ground-truth object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub gt_index: usize,
    pub class_id: String,
    /// `object_id` of the matched result.
    pub result: Option<u32>,
    pub errors: Option<ObjectErrors>,
    pub accurate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub n_gt: usize,
    pub n_accurate: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub thresholds: AccuracyThresholds,
    pub per_class: BTreeMap<String, ClassAccuracy>,
    /// Unweighted mean over classes present in the ground truth.
    pub class_avg: f64,
    /// Accurate objects over all ground-truth objects.
    pub global_avg: f64,
    pub matches: Vec<MatchRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<SweepCurve>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub box_prf: Vec<PrfRow>,
}

/// One-to-one matching of ground truth to results: repeatedly takes the
/// same-class pair with the smallest translation error among unused ones.
/// Returns `(gt index, result index)` pairs.
pub fn match_objects(results: &[AlignmentResult], gt: &[GroundTruthObject]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (g, o) in gt.iter().enumerate() {
        for (r, res) in results.iter().enumerate() {
            if res.class_id == o.class_id {
                pairs.push(((res.pose.translation - o.pose.translation).norm(), g, r));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gt_used = vec![false; gt.len()];
    let mut res_used = vec![false; results.len()];
    let mut out = Vec::new();
    for (_, g, r) in pairs {
        if !gt_used[g] && !res_used[r] {
            gt_used[g] = true;
            res_used[r] = true;
            out.push((g, r));
        }
    }
    out.sort_unstable();
    out
}

fn match_records(results: &[AlignmentResult], gt: &[GroundTruthObject], symmetry: &SymmetryTable) -> Vec<MatchRecord> {
    let mut records: Vec<MatchRecord> = gt
        .iter()
        .enumerate()
        .map(|(i, o)| MatchRecord {
            gt_index: i,
            class_id: o.class_id.clone(),
            result: None,
            errors: None,
            accurate: false,
        })
        .collect();
    for (g, r) in match_objects(results, gt) {
        let rec = &mut records[g];
        rec.result = Some(results[r].object_id);
        rec.errors = Some(ObjectErrors::between(&results[r], &gt[g], symmetry.get(&gt[g].class_id)));
    }
    records
}

/// `(per class, class average, global average)` of `records` under `thresholds`.
fn accuracies(records: &[MatchRecord], thresholds: &AccuracyThresholds) -> (BTreeMap<String, ClassAccuracy>, f64, f64) {
    let mut per_class: BTreeMap<String, ClassAccuracy> = BTreeMap::new();
    let mut total = 0;
    for r in records {
        let c = per_class.entry(r.class_id.clone()).or_insert(ClassAccuracy {
            n_gt: 0,
            n_accurate: 0,
            accuracy: 0.0,
        });
        c.n_gt += 1;
        if r.errors.as_ref().is_some_and(|e| thresholds.accepts(e)) {
            c.n_accurate += 1;
            total += 1;
        }
    }
    for c in per_class.values_mut() {
        c.accuracy = c.n_accurate as f64 / c.n_gt as f64;
    }
    let class_avg = if per_class.is_empty() {
        0.0
    } else {
        per_class.values().map(|c| c.accuracy).sum::<f64>() / per_class.len() as f64
    };
    let global_avg = if records.is_empty() {
        0.0
    } else {
        total as f64 / records.len() as f64
    };
    (per_class, class_avg, global_avg)
}

/// Joint-threshold accuracy per class and overall.
pub fn match_and_score(
    results: &[AlignmentResult],
    gt: &[GroundTruthObject],
    thresholds: &AccuracyThresholds,
    symmetry: &SymmetryTable,
) -> Result<EvalReport, EvalError> {
    thresholds.validate()?;
    let mut matches = match_records(results, gt, symmetry);
    for m in &mut matches {
        m.accurate = m.errors.as_ref().is_some_and(|e| thresholds.accepts(e));
    }
    let (per_class, class_avg, global_avg) = accuracies(&matches, thresholds);
    Ok(EvalReport {
        thresholds: *thresholds,
        per_class,
        class_avg,
        global_avg,
        matches,
        sweeps: Vec::new(),
        box_prf: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transformation {
    Translation,
    Rotation,
    Scale,
}

impl Transformation {
    pub fn name(&self) -> &'static str {
        match self {
            Transformation::Translation => "translation",
            Transformation::Rotation => "rotation",
            Transformation::Scale => "scale",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrids {
    /// m
    pub translation: Vec<f64>,
    /// degrees
    pub rotation: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Default for SweepGrids {
    fn default() -> Self {
        let grid = |n: usize, step: f64| (0..=n).map(|i| i as f64 * step).collect::<Vec<_>>();
        SweepGrids {
            translation: grid(50, 0.01),
            rotation: grid(45, 1.0),
            scale: grid(50, 0.01),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub class_avg: f64,
    pub global_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub transformation: Transformation,
    pub points: Vec<SweepPoint>,
}

/// Accuracy as one threshold varies over its grid, the other two held at `base`.
pub fn sweep_curves(
    results: &[AlignmentResult],
    gt: &[GroundTruthObject],
    base: &AccuracyThresholds,
    grids: &SweepGrids,
    symmetry: &SymmetryTable,
) -> Result<Vec<SweepCurve>, EvalError> {
    let records = match_records(results, gt, symmetry);
    let kinds = [
        (Transformation::Translation, &grids.translation),
        (Transformation::Rotation, &grids.rotation),
        (Transformation::Scale, &grids.scale),
    ];
    kinds
        .into_iter()
        .map(|(kind, grid)| {
            if grid.iter().any(|v| !(*v >= 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(EvalError::InvalidGrid(kind.name()));
            }
            let points = grid
                .iter()
                .map(|&v| {
                    let mut th = *base;
                    match kind {
                        Transformation::Translation => th.translation = v,
                        Transformation::Rotation => th.rotation = v,
                        Transformation::Scale => th.scale = v,
                    }
                    let (_, class_avg, global_avg) = accuracies(&records, &th);
                    SweepPoint {
                        threshold: v,
                        class_avg,
                        global_avg,
                    }
                })
                .collect();
            Ok(SweepCurve {
                transformation: kind,
                points,
            })
        })
        .collect()
}

/// Everything an evaluation run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub thresholds: AccuracyThresholds,
    pub symmetry: SymmetryTable,
    pub sweep: SweepGrids,
    pub iou_thresholds: Vec<f64>,
    pub iou_samples: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            thresholds: AccuracyThresholds::default(),
            symmetry: SymmetryTable::default(),
            sweep: SweepGrids::default(),
            iou_thresholds: DEFAULT_IOU_THRESHOLDS.to_vec(),
            iou_samples: DEFAULT_IOU_SAMPLES,
        }
    }
}

pub fn evaluate(
    results: &[AlignmentResult],
    gt: &[GroundTruthObject],
    cad_db: &[CadModel],
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let mut report = match_and_score(results, gt, &config.thresholds, &config.symmetry)?;
    report.sweeps = sweep_curves(results, gt, &config.thresholds, &config.sweep, &config.symmetry)?;
    report.box_prf = box_iou_prf(results, gt, cad_db, &config.iou_thresholds, config.iou_samples)?;
    Ok(report)
}
