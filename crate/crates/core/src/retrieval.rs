//! CAD model selection: score-weighted votes, embedding lookup, and a voxel
//! IoU between canonical models.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::datamodel::{CadModel, Observation};
use crate::geometry::hull::convex_hull;
use crate::geometry::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetrievalError {
    #[error("no observation carries a model vote")]
    NoVotes,
    #[error("embedding dimension {query} does not match database dimension {database}")]
    DimensionMismatch { query: usize, database: usize },
    #[error("no database model has an embedding")]
    NoEmbeddings,
}

/// Accumulated vote weight per model id.
pub type VoteTally = BTreeMap<String, f64>;

/// Sum of detection scores per voted model. Scores are summed in sorted
/// order so the tally does not depend on observation order.
pub fn tally_votes<'a>(observations: impl IntoIterator<Item = &'a Observation>) -> VoteTally {
    let mut scores: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for o in observations {
        if let Some(v) = &o.model_vote {
            scores.entry(v.cad_model_id.clone()).or_default().push(o.score);
        }
    }
    scores
        .into_iter()
        .map(|(id, mut s)| {
            s.sort_by(f64::total_cmp);
            (id, s.iter().sum())
        })
        .collect()
}

/// Model with the largest score-weighted vote; exact ties go to the smallest id.
pub fn vote_model<'a>(observations: impl IntoIterator<Item = &'a Observation>) -> Result<String, RetrievalError> {
    let tally = tally_votes(observations);
    let mut best: Option<(&String, f64)> = None;
    // ascending id order, so only a strictly larger weight replaces the incumbent
    for (id, w) in &tally {
        if best.is_none_or(|(_, bw)| *w > bw) {
            best = Some((id, *w));
        }
    }
    best.map(|(id, _)| id.clone()).ok_or(RetrievalError::NoVotes)
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    1.0 - dot / (na * nb)
}

/// Database model closest to `embedding` in cosine distance; ties go to the smallest id.
pub fn nearest_model(embedding: &[f64], cad_db: &[CadModel]) -> Result<String, RetrievalError> {
    let mut best: Option<(f64, &str)> = None;
    for m in cad_db {
        let Some(e) = &m.embedding else { continue };
        if e.len() != embedding.len() {
            return Err(RetrievalError::DimensionMismatch {
                query: embedding.len(),
                database: e.len(),
            });
        }
        let d = cosine_distance(embedding, e);
        let better = match best {
            None => true,
            Some((bd, bid)) => d < bd || (d == bd && m.id.as_str() < bid),
        };
        if better {
            best = Some((d, &m.id));
        }
    }
    best.map(|(_, id)| id.to_string()).ok_or(RetrievalError::NoEmbeddings)
}

pub const DEFAULT_VOXEL_RESOLUTION: usize = 32;

/// Occupancy of the `res^3` grid over `[-0.5, 0.5]^3` (index `(i * res + j) * res + k`),
/// filled by ray parity along `+z` through each column center.
pub fn voxelize(model: &CadModel, res: usize) -> Vec<bool> {
    let faces: Vec<[usize; 3]> = if model.faces.is_empty() {
        convex_hull(&model.vertices).map(|h| h.faces).unwrap_or_default()
    } else {
        model.faces.clone()
    };
    let v = &model.vertices;
    let cell = 1.0 / res as f64;
    let center = |i: usize| -0.5 + (i as f64 + 0.5) * cell;
    // fixed irrational offsets keep rays off shared edges and vertices
    let (jx, jy) = (cell * 1.234_567e-6, cell * 2.718_281e-6);
    let mut grid = vec![false; res * res * res];
    let mut hits: Vec<f64> = Vec::new();
    for i in 0..res {
        for j in 0..res {
            let (x, y) = (center(i) + jx, center(j) + jy);
            hits.clear();
            for f in &faces {
                if let Some(z) = vertical_ray_hit(&v[f[0]], &v[f[1]], &v[f[2]], x, y) {
                    hits.push(z);
                }
            }
            if hits.is_empty() {
                continue;
            }
            hits.sort_by(f64::total_cmp);
            for k in 0..res {
                let z = center(k);
                let below = hits.partition_point(|h| *h < z);
                grid[(i * res + j) * res + k] = below % 2 == 1;
            }
        }
    }
    grid
}

/// Height at which the vertical line through `(x, y)` crosses triangle `abc`.
fn vertical_ray_hit(a: &Vec3, b: &Vec3, c: &Vec3, x: f64, y: f64) -> Option<f64> {
    let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    if det.abs() < 1e-15 {
        return None;
    }
    let u = ((x - a.x) * (c.y - a.y) - (c.x - a.x) * (y - a.y)) / det;
    let w = ((b.x - a.x) * (y - a.y) - (x - a.x) * (b.y - a.y)) / det;
    if u < 0.0 || w < 0.0 || u + w > 1.0 {
        return None;
    }
    Some(a.z + u * (b.z - a.z) + w * (c.z - a.z))
}

/// Intersection over union of the solid voxelizations of two models in
/// canonical space. Resolutions below 16 are raised to 16.
pub fn retrieval_iou(model_a: &CadModel, model_b: &CadModel, resolution: usize) -> f64 {
    let res = resolution.max(16);
    let a = voxelize(model_a, res);
    let b = voxelize(model_b, res);
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.iter().zip(&b) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    if union == 0 {
        // two empty voxelizations are identical
        return 1.0;
    }
    inter as f64 / union as f64
}
