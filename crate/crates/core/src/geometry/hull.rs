//! Incremental 3D convex hull.
//!
//! Used to cut large CAD vertex sets down to the points that can ever define
//! an extreme of a projected bounding box, and to close vertex-only models
//! for voxelisation.

use std::collections::HashSet;

use super::Vec3;

#[derive(Debug, Clone)]
pub struct ConvexHull {
    /// Indices of input points on the hull boundary (within tolerance). A
    /// superset of the strict hull vertices: coplanar boundary points are kept.
    pub boundary_points: Vec<usize>,
    /// Outward-oriented triangles over input point indices; a closed surface.
    pub faces: Vec<[usize; 3]>,
}

struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
    alive: bool,
}

impl Face {
    fn new(pts: &[Vec3], v: [usize; 3]) -> Self {
        let n = (pts[v[1]] - pts[v[0]]).cross(&(pts[v[2]] - pts[v[0]]));
        let normal = n.try_normalize(0.0).unwrap_or_else(Vec3::zeros);
        Face {
            v,
            normal,
            offset: normal.dot(&pts[v[0]]),
            alive: true,
        }
    }

    fn distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// `None` when the points are degenerate (fewer than four, or all coplanar).
pub fn convex_hull(points: &[Vec3]) -> Option<ConvexHull> {
    if points.len() < 4 {
        return None;
    }
    let (lo, hi) = points.iter().fold(
        (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    );
    let scale = (hi - lo).norm();
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let eps = 1e-9 * scale;

    let i0 = (0..points.len()).min_by(|&a, &b| points[a].x.total_cmp(&points[b].x))?;
    let i1 = farthest(points, |p| (p - points[i0]).norm())?;
    let axis = (points[i1] - points[i0]).normalize();
    let i2 = farthest(points, |p| {
        let d = p - points[i0];
        (d - axis * d.dot(&axis)).norm()
    })?;
    let plane_n = (points[i1] - points[i0]).cross(&(points[i2] - points[i0]));
    if plane_n.norm() <= eps * scale {
        return None;
    }
    let plane_n = plane_n.normalize();
    let i3 = farthest(points, |p| plane_n.dot(&(p - points[i0])).abs())?;
    if plane_n.dot(&(points[i3] - points[i0])).abs() <= eps {
        return None;
    }

    let inner = (points[i0] + points[i1] + points[i2] + points[i3]) / 4.0;
    let mut faces: Vec<Face> = Vec::new();
    for tri in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        let mut f = Face::new(points, tri);
        if f.distance(&inner) > 0.0 {
            f = Face::new(points, [tri[0], tri[2], tri[1]]);
        }
        faces.push(f);
    }

    let seeds = [i0, i1, i2, i3];
    for (pi, p) in points.iter().enumerate() {
        if seeds.contains(&pi) {
            continue;
        }
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive && f.distance(p) > eps)
            .map(|(i, _)| i)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for &fi in &visible {
            let v = faces[fi].v;
            for k in 0..3 {
                edges.insert((v[k], v[(k + 1) % 3]));
            }
        }
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &fi in &visible {
            let v = faces[fi].v;
            for k in 0..3 {
                let e = (v[k], v[(k + 1) % 3]);
                if !edges.contains(&(e.1, e.0)) {
                    horizon.push(e);
                }
            }
            faces[fi].alive = false;
        }
        for (a, b) in horizon {
            faces.push(Face::new(points, [a, b, pi]));
        }
    }

    let faces: Vec<Face> = faces.into_iter().filter(|f| f.alive).collect();
    let boundary_points = points
        .iter()
        .enumerate()
        .filter(|(_, p)| faces.iter().map(|f| f.distance(p)).fold(f64::NEG_INFINITY, f64::max) >= -eps)
        .map(|(i, _)| i)
        .collect();
    Some(ConvexHull {
        boundary_points,
        faces: faces.into_iter().map(|f| f.v).collect(),
    })
}

fn farthest(points: &[Vec3], dist: impl Fn(&Vec3) -> f64) -> Option<usize> {
    (0..points.len()).max_by(|&a, &b| dist(&points[a]).total_cmp(&dist(&points[b])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube_corners() -> Vec<Vec3> {
        let mut v = Vec::new();
        for x in [-0.5, 0.5] {
            for y in [-0.5, 0.5] {
                for z in [-0.5, 0.5] {
                    v.push(Vec3::new(x, y, z));
                }
            }
        }
        v
    }

    #[test]
    fn interior_points_are_dropped() {
        let mut pts = cube_corners();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            pts.push(Vec3::new(
                rng.random_range(-0.45..0.45),
                rng.random_range(-0.45..0.45),
                rng.random_range(-0.45..0.45),
            ));
        }
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.boundary_points, (0..8).collect::<Vec<_>>());
        assert_eq!(hull.faces.len(), 12);
    }

    #[test]
    fn hull_is_closed_and_outward() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec3> = (0..300)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let hull = convex_hull(&pts).unwrap();
        // every directed edge has its reverse
        let edges: HashSet<(usize, usize)> = hull
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f[k], f[(k + 1) % 3])))
            .collect();
        for &(a, b) in &edges {
            assert!(edges.contains(&(b, a)));
        }
        // every point lies on the inner side of every face
        for f in &hull.faces {
            let face = Face::new(&pts, *f);
            for p in &pts {
                assert!(face.distance(p) <= 1e-9);
            }
        }
        // divergence theorem: volume is positive
        let vol: f64 = hull
            .faces
            .iter()
            .map(|f| pts[f[0]].dot(&pts[f[1]].cross(&pts[f[2]])) / 6.0)
            .sum();
        assert!(vol > 0.0);
    }

    #[test]
    fn extreme_projection_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec3> = (0..1000)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5), rng.random::<f64>()))
            .collect();
        let hull = convex_hull(&pts).unwrap();
        for _ in 0..50 {
            let d = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let all = pts.iter().map(|p| p.dot(&d)).fold(f64::NEG_INFINITY, f64::max);
            let sub = hull.boundary_points.iter().map(|&i| pts[i].dot(&d)).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(all, sub);
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(convex_hull(&[Vec3::zeros(), Vec3::x(), Vec3::y()]).is_none());
        let flat: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert!(convex_hull(&flat).is_none());
    }
}
