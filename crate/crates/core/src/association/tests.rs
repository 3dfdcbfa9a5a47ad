use super::*;
use crate::geometry::{Box2, Quat, Vec2};
use crate::synth::{
    generate, CameraSpec, HiddenRange, Look, NoiseSpec, Placement, PoseRanges, Primitive, SynthScene, SynthSpec, TemplateSpec,
    Trajectory, VisibilitySpec,
};
use proptest::prelude::*;

fn det(frame: u32, class: &str, left: f64, score: f64) -> Observation {
    Observation {
        frame_index: frame,
        class_id: class.into(),
        score,
        bbox: Box2::new(left, 100.0, left + 100.0, 200.0),
        center: Vec2::new(left + 50.0, 150.0),
        rotation: Quat::identity(),
        scale: None,
        model_vote: None,
        track_id: None,
    }
}

fn scene_of(observations: Vec<Observation>) -> SceneInput {
    SceneInput {
        observations,
        ..SceneInput::default()
    }
}

#[test]
fn one_object_gives_one_track() {
    // consecutive boxes shift by 5 px: IoU ~0.9
    let obs = (0..20).map(|f| det(f, "chair", 5.0 * f as f64, 0.5)).collect();
    let tracks = build_tracks(&scene_of(obs), &TrackerParams::default());
    assert_eq!(tracks.len(), 1);
    assert_eq!(tracks[0].observations, (0..20).collect::<Vec<_>>());
    assert_eq!(tracks[0].class_id, "chair");
}

#[test]
fn disjoint_objects_give_two_tracks() {
    let mut obs = Vec::new();
    for f in 0..10 {
        obs.push(det(f, "chair", 0.0, 0.5));
        obs.push(det(f, "chair", 400.0, 0.6));
    }
    let tracks = build_tracks(&scene_of(obs), &TrackerParams::default());
    assert_eq!(tracks.len(), 2);
    for t in &tracks {
        assert_eq!(t.observations.len(), 10);
    }
    assert_eq!(tracks[1].max_score, 0.6);
}

#[test]
fn long_gap_splits_a_track() {
    let params = TrackerParams::default();
    let obs: Vec<_> = (0..5)
        .chain(5 + params.max_gap + 1..5 + params.max_gap + 6)
        .map(|f| det(f, "chair", 0.0, 0.5))
        .collect();
    assert_eq!(build_tracks(&scene_of(obs), &params).len(), 2);
    // a gap of exactly max_gap still links
    let obs: Vec<_> = [0, params.max_gap].iter().map(|&f| det(f, "chair", 0.0, 0.5)).collect();
    assert_eq!(build_tracks(&scene_of(obs), &params).len(), 1);
}

#[test]
fn tracks_are_class_pure() {
    let obs = (0..6).map(|f| det(f, if f % 2 == 0 { "chair" } else { "table" }, 0.0, 0.5)).collect();
    let tracks = build_tracks(&scene_of(obs), &TrackerParams::default());
    assert_eq!(tracks.len(), 2);
    assert!(tracks.iter().all(|t| t.observations.len() == 3));
}

#[test]
fn given_track_ids_are_used() {
    let obs: Vec<_> = (0..6)
        .map(|f| Observation {
            track_id: Some(f % 2),
            ..det(f, "chair", 0.0, 0.5)
        })
        .collect();
    let params = TrackerParams {
        use_track_ids: true,
        ..TrackerParams::default()
    };
    let tracks = build_tracks(&scene_of(obs), &params);
    assert_eq!(tracks.len(), 2);
    assert_eq!(tracks[0].observations, vec![0, 2, 4]);
}

#[test]
fn empty_scene_gives_nothing() {
    let scene = SceneInput::default();
    assert!(build_tracks(&scene, &TrackerParams::default()).is_empty());
    let out = integrate_scene(&scene, &ObjectiveWeights::default(), &SolverConfig::default(), &AssociationParams::default());
    assert!(out.results.is_empty());
}

fn item(id: u32, class: &str, score: f64, t: [f64; 3], yaw_deg: f64, s: f64) -> ClusterItem {
    ClusterItem {
        id,
        class_id: class.into(),
        score,
        pose: Pose9DoF::new(
            Vec3::from(t),
            Quat::from_axis_angle(&Vec3::z_axis(), yaw_deg.to_radians()),
            Vec3::repeat(s),
        ),
        symmetry: Symmetry::None,
    }
}

#[test]
fn clustering_examples() {
    let p = ClusterParams::default();
    let near = [item(0, "chair", 0.9, [0.0; 3], 0.0, 1.0), item(1, "chair", 0.5, [0.1, 0.0, 0.0], 5.0, 1.05)];
    assert_eq!(cluster_alignments(&near, &p), vec![vec![0, 1]]);
    let classes = [item(0, "chair", 0.9, [0.0; 3], 0.0, 1.0), item(1, "table", 0.5, [0.0; 3], 0.0, 1.0)];
    assert_eq!(cluster_alignments(&classes, &p).len(), 2);
    let far = [item(0, "chair", 0.9, [0.0; 3], 0.0, 1.0), item(1, "chair", 0.5, [0.5, 0.0, 0.0], 0.0, 1.0)];
    assert_eq!(cluster_alignments(&far, &p).len(), 2);
}

#[test]
fn clustering_seeds_by_score_then_id() {
    let p = ClusterParams::default();
    // 3 is near both 0 and 1, which are 0.6 m apart
    let items = [
        item(0, "chair", 0.5, [0.0; 3], 0.0, 1.0),
        item(1, "chair", 0.7, [0.6, 0.0, 0.0], 0.0, 1.0),
        item(3, "chair", 0.7, [0.3, 0.0, 0.0], 0.0, 1.0),
    ];
    assert_eq!(cluster_alignments(&items, &p), vec![vec![1, 3], vec![0]]);
}

#[test]
fn symmetric_objects_merge_across_the_orbit() {
    let mut a = item(0, "table", 0.9, [0.0; 3], 0.0, 1.0);
    let mut b = item(1, "table", 0.5, [0.0; 3], 90.0, 1.0);
    assert_eq!(cluster_alignments(&[a.clone(), b.clone()], &ClusterParams::default()).len(), 2);
    a.symmetry = Symmetry::Discrete(4);
    b.symmetry = Symmetry::Discrete(4);
    assert_eq!(cluster_alignments(&[a, b], &ClusterParams::default()).len(), 1);
}

#[test]
fn relative_scale_distance_is_max_over_axes() {
    let d = relative_scale_distance(&Vec3::new(1.0, 2.0, 1.0), &Vec3::new(1.0, 1.0, 0.9));
    assert!((d - 0.5).abs() < 1e-12);
}

proptest! {
    #[test]
    fn clusters_partition_the_items(
        raw in prop::collection::vec((0u8..3, 0.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -60.0f64..60.0, 0.5f64..1.5), 0..25)
    ) {
        let classes = ["chair", "table", "bin"];
        let items: Vec<_> = raw
            .iter()
            .enumerate()
            .map(|(i, &(c, score, x, y, yaw, s))| item(i as u32, classes[c as usize], score, [x, y, 0.0], yaw, s))
            .collect();
        let clusters = cluster_alignments(&items, &ClusterParams::default());
        let mut seen: Vec<u32> = clusters.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..items.len() as u32).collect::<Vec<_>>());
        prop_assert!(clusters.len() <= items.len());
        for c in &clusters {
            let seed = &items[c[0] as usize];
            prop_assert!(c.iter().all(|&id| items[id as usize].class_id == seed.class_id));
        }
        prop_assert_eq!(cluster_alignments(&items, &ClusterParams::default()), clusters);
    }
}

/// One cube seen along a 90-frame inward orbit, hidden over `hidden`.
pub(crate) fn gap_spec(hidden: Option<(u32, u32)>) -> SynthSpec {
    SynthSpec {
        seed: 3,
        n_objects: 1,
        templates: vec![TemplateSpec {
            class_id: "cabinet".into(),
            model_id: "cabinet_0".into(),
            primitive: Primitive::Box { size: [1.0, 0.6, 1.4] },
            symmetry: Symmetry::None,
        }],
        poses: PoseRanges {
            placement: Placement::Explicit {
                translations: vec![[0.0, 0.0, 0.7]],
            },
            yaw_deg: [20.0, 20.0],
            scale: [0.9, 0.9],
            ..PoseRanges::default()
        },
        trajectory: Trajectory::Orbit {
            center: [0.0, 0.0, 0.0],
            radius: 4.0,
            height: 1.6,
            start_deg: 0.0,
            sweep_deg: 180.0,
            look: Look::Inward,
            target_height: 0.7,
            target_distance: 2.0,
            n_frames: 90,
        },
        camera: CameraSpec::default(),
        visibility: VisibilitySpec {
            hidden: hidden
                .map(|(a, b)| {
                    vec![HiddenRange {
                        object: 0,
                        first_frame: a,
                        last_frame: b,
                    }]
                })
                .unwrap_or_default(),
            ..VisibilitySpec::default()
        },
        noise: NoiseSpec::default(),
        scale_predictions: true,
        track_ids: false,
        embedding_dim: 0,
    }
}

fn gap_scene() -> SynthScene {
    generate(&gap_spec(Some((30, 64)))).unwrap()
}

#[test]
fn split_track_is_merged_and_solved_over_both_fragments() {
    let s = gap_scene();
    let out = integrate_scene(&s.scene, &ObjectiveWeights::default(), &SolverConfig::default(), &AssociationParams::default());
    assert_eq!(out.tracks.len(), 2);
    assert_eq!(out.results.len(), 1);
    assert_eq!(out.clusters, vec![vec![0, 1]]);
    let r = &out.results[0];
    assert_eq!(r.n_supporting_frames as usize, s.scene.observations.len());
    assert_eq!(r.cad_model_id, "cabinet_0");
    let gt = s.ground_truth[0].pose;
    let merged = (r.pose.translation - gt.translation).norm();
    let best_fragment = out
        .track_solutions
        .iter()
        .map(|t| (t.as_ref().unwrap().0.translation - gt.translation).norm())
        .fold(f64::INFINITY, f64::min);
    assert!(merged <= best_fragment + 1e-6, "merged {merged} vs fragment {best_fragment}");
    // per-frame objective of the merged solve against the worst fragment
    let merged_avg = r.final_objective / out.reports[0].n_observations as f64;
    let worst_avg = out
        .track_solutions
        .iter()
        .map(|t| {
            let rep = &t.as_ref().unwrap().1;
            rep.final_objective / rep.n_observations as f64
        })
        .fold(0.0, f64::max);
    assert!(merged_avg <= worst_avg + 1e-9, "{merged_avg} vs {worst_avg}");
}

#[test]
fn integration_is_deterministic() {
    let s = gap_scene();
    let run = || integrate_scene(&s.scene, &ObjectiveWeights::default(), &SolverConfig::default(), &AssociationParams::default());
    assert_eq!(run().results, run().results);
}

#[test]
fn warm_state_reuses_unchanged_clusters() {
    let s = gap_scene();
    let (w, c, p) = (ObjectiveWeights::default(), SolverConfig::default(), AssociationParams::default());
    let first = integrate_scene(&s.scene, &w, &c, &p);
    let mut warm = WarmState::default();
    for ((r, rep), members) in first.results.iter().zip(&first.reports).zip(&first.clusters) {
        warm.solved.insert(cluster_key(&first.tracks, members), (r.clone(), rep.clone()));
    }
    let again = integrate_scene_warm(&s.scene, &w, &c, &p, &warm);
    assert_eq!(again.results, first.results);
}


#[test]
fn thinly_supported_clusters_are_not_reported() {
    let s = gap_scene();
    let n_frames = s.scene.observations.len();
    let (w, c) = (ObjectiveWeights::default(), SolverConfig::default());
    let at = |min_cluster_frames| {
        let p = AssociationParams {
            min_cluster_frames,
            ..AssociationParams::default()
        };
        integrate_scene(&s.scene, &w, &c, &p)
    };
    assert_eq!(at(n_frames).results.len(), 1);
    let none = at(n_frames + 1);
    assert!(none.results.is_empty());
    assert_eq!(none.tracks.len(), 2);
    assert!(none.failures.is_empty());
}
