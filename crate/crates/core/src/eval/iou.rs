use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::datamodel::{AlignmentResult, CadModel, GroundTruthObject};
use crate::geometry::{Mat3, Pose9DoF, Vec3};

pub const DEFAULT_IOU_THRESHOLDS: [f64; 3] = [0.25, 0.5, 0.7];
pub const DEFAULT_IOU_SAMPLES: usize = 100_000;
const IOU_SEED: u64 = 0x10u64;

/// World-space box: `center + axes * (u ⊙ half)`, `u ∈ [-1, 1]³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    pub axes: Mat3,
    pub half: Vec3,
}

impl OrientedBox {
    pub fn volume(&self) -> f64 {
        8.0 * self.half.product()
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let local = self.axes.transpose() * (p - self.center);
        (0..3).all(|i| local[i].abs() <= self.half[i] * (1.0 + 1e-9))
    }

    fn radius(&self) -> f64 {
        self.half.norm()
    }
}

/// Posed bounding box of a model's canonical bounds.
pub fn oriented_box(model: &CadModel, pose: &Pose9DoF) -> OrientedBox {
    let (lo, hi) = model.bounds();
    OrientedBox {
        center: pose.object_to_world(&((lo + hi) / 2.0)),
        axes: pose.rotation.to_rotation_matrix().into_inner(),
        half: pose.scale.component_mul(&((hi - lo) / 2.0)),
    }
}

/// Monte Carlo IoU: half the samples drawn in each box, the intersection
/// volume averaged over both estimates. Fixed seed, so the value depends only
/// on the two boxes.
pub fn oriented_box_iou(a: &OrientedBox, b: &OrientedBox, samples: usize) -> f64 {
    if (a.center - b.center).norm() > a.radius() + b.radius() {
        return 0.0;
    }
    let (va, vb) = (a.volume(), b.volume());
    if !(va > 0.0 && vb > 0.0) {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(IOU_SEED);
    let n = (samples / 2).max(1);
    let mut frac = |from: &OrientedBox, to: &OrientedBox| {
        let hits = (0..n)
            .filter(|_| {
                let u = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                to.contains(&(from.center + from.axes * u.component_mul(&from.half)))
            })
            .count();
        hits as f64 / n as f64
    };
    let inter = (va * frac(a, b) + vb * frac(b, a)) / 2.0;
    (inter / (va + vb - inter)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfRow {
    pub iou_threshold: f64,
    pub true_positives: usize,
    pub n_results: usize,
    pub n_gt: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Detection precision/recall/F1 at each IoU threshold. Results are taken in
/// decreasing score order and each claims the unclaimed same-class GT box of
/// highest IoU; it is a true positive when that IoU exceeds the threshold.
/// Empty result or GT sets score 0.
pub fn box_iou_prf(
    results: &[AlignmentResult],
    gt: &[GroundTruthObject],
    cad_db: &[CadModel],
    thresholds: &[f64],
    samples: usize,
) -> Result<Vec<PrfRow>, EvalError> {
    if thresholds.is_empty() {
        return Ok(Vec::new());
    }
    let model = |id: &str| cad_db.iter().find(|m| m.id == id).ok_or_else(|| EvalError::UnknownModel(id.to_string()));
    let rb = results
        .iter()
        .map(|r| Ok(oriented_box(model(&r.cad_model_id)?, &r.pose)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    let gb = gt
        .iter()
        .map(|g| Ok(oriented_box(model(&g.cad_model_id)?, &g.pose)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    let ious: Vec<Vec<f64>> = results
        .iter()
        .zip(&rb)
        .map(|(r, a)| {
            gt.iter()
                .zip(&gb)
                .map(|(g, b)| if g.class_id == r.class_id { oriented_box_iou(a, b, samples) } else { 0.0 })
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| results[b].score.total_cmp(&results[a].score).then(results[a].object_id.cmp(&results[b].object_id)));

    Ok(thresholds
        .iter()
        .map(|&th| {
            let mut claimed = vec![false; gt.len()];
            let mut tp = 0;
            for &r in &order {
                let best = (0..gt.len())
                    .filter(|&g| !claimed[g] && gt[g].class_id == results[r].class_id)
                    .max_by(|&a, &b| ious[r][a].total_cmp(&ious[r][b]).then(b.cmp(&a)));
                if let Some(g) = best {
                    if ious[r][g] > th {
                        claimed[g] = true;
                        tp += 1;
                    }
                }
            }
            let precision = if results.is_empty() { 0.0 } else { tp as f64 / results.len() as f64 };
            let recall = if gt.is_empty() { 0.0 } else { tp as f64 / gt.len() as f64 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            PrfRow {
                iou_threshold: th,
                true_positives: tp,
                n_results: results.len(),
                n_gt: gt.len(),
                precision,
                recall,
                f1,
            }
        })
        .collect())
}
