use super::*;
use crate::geometry::symmetric_rotation_error;
use crate::synth::{
    ambiguity_pair, generate, render_observation, CameraSpec, Look, NoiseSpec, Placement, PoseRanges, Primitive, SynthScene, SynthSpec,
    TemplateSpec, Trajectory, VisibilitySpec,
};

fn spec(n_frames: u32, sweep: f64) -> SynthSpec {
    SynthSpec {
        seed: 11,
        n_objects: 1,
        templates: vec![TemplateSpec {
            class_id: "box".into(),
            model_id: "cube".into(),
            primitive: Primitive::Box { size: [1.0, 1.0, 1.0] },
            symmetry: Symmetry::None,
        }],
        poses: PoseRanges {
            placement: Placement::Explicit {
                translations: vec![[0.0, 0.0, 2.0]],
            },
            yaw_deg: [30.0, 30.0],
            scale: [1.0, 1.0],
            ..PoseRanges::default()
        },
        trajectory: Trajectory::Orbit {
            center: [0.0, 0.0, 0.0],
            radius: 4.0,
            height: 2.5,
            start_deg: 200.0,
            sweep_deg: sweep,
            look: Look::Inward,
            target_height: 2.0,
            target_distance: 2.0,
            n_frames,
        },
        camera: CameraSpec::default(),
        visibility: VisibilitySpec::default(),
        noise: NoiseSpec::default(),
        scale_predictions: true,
        track_ids: false,
        embedding_dim: 0,
    }
}

/// Quarter-circle scene with the ground-truth scale replaced by `(1.5, 1, 0.8)`.
fn quarter_circle_scene() -> SynthScene {
    let mut s = spec(5, 90.0);
    s.poses.scale = [1.0, 1.0];
    let mut scene = generate(&s).unwrap();
    scene.ground_truth[0].pose.scale = Vec3::new(1.5, 1.0, 0.8);
    rerender(&mut scene);
    scene
}

fn rerender(scene: &mut SynthScene) {
    let gt = scene.ground_truth[0].clone();
    let model = scene.scene.cad_db[0].clone();
    scene.scene.observations = scene
        .scene
        .frames
        .iter()
        .filter_map(|f| crate::synth::render_observation(f, &gt, &model))
        .collect();
}

fn solve(scene: &SynthScene, weights: &ObjectiveWeights, config: &SolverConfig) -> (Pose9DoF, SolveReport) {
    let refs: Vec<_> = scene.scene.observations.iter().collect();
    let m = &scene.scene.cad_db[0];
    solve_object(&scene.scene, &refs, weights, config, &m.vertices, m.symmetry).unwrap()
}

#[test]
fn noiseless_quarter_circle_recovery() {
    let scene = quarter_circle_scene();
    assert_eq!(scene.scene.observations.len(), 5);
    let gt = scene.ground_truth[0].pose;
    let start = std::time::Instant::now();
    let (pose, report) = solve(&scene, &ObjectiveWeights::default(), &SolverConfig::default());
    let dt = start.elapsed();
    let t_err = (pose.translation - gt.translation).norm();
    let r_err = symmetric_rotation_error(&pose.rotation, &gt.rotation, Symmetry::None);
    let s_err = (pose.scale - gt.scale).component_div(&gt.scale).abs().max();
    eprintln!("t {t_err:e} r {r_err:e} s {s_err:e} iters {} obj {:e} {dt:?}", report.iterations_used, report.final_objective);
    assert!(t_err <= 1e-3 && r_err <= 0.1 && s_err <= 1e-3);
    assert!(!report.ill_conditioned);
}

#[test]
fn noiseless_recovery_without_scale_predictions() {
    let mut scene = quarter_circle_scene();
    scene.scene.observations.iter_mut().for_each(|o| o.scale = None);
    let gt = scene.ground_truth[0].pose;
    let (pose, report) = solve(&scene, &ObjectiveWeights::MULTI_VIEW, &SolverConfig::default());
    let t_err = (pose.translation - gt.translation).norm();
    let r_err = symmetric_rotation_error(&pose.rotation, &gt.rotation, Symmetry::None);
    let s_err = (pose.scale - gt.scale).component_div(&gt.scale).abs().max();
    eprintln!("t {t_err:e} r {r_err:e} s {s_err:e} iters {}", report.iterations_used);
    assert!(t_err <= 1e-3 && r_err <= 0.1 && s_err <= 1e-3);
}

fn errors(pose: &Pose9DoF, gt: &Pose9DoF, sym: Symmetry) -> (f64, f64, f64) {
    (
        (pose.translation - gt.translation).norm(),
        symmetric_rotation_error(&pose.rotation, &gt.rotation, sym),
        (pose.scale - gt.scale).component_div(&gt.scale).abs().max(),
    )
}

fn templates() -> Vec<TemplateSpec> {
    vec![
        TemplateSpec {
            class_id: "chair".into(),
            model_id: "chair_a".into(),
            primitive: Primitive::LShape {
                size: [0.55, 0.5, 0.9],
                seat_height: 0.45,
                back_depth: 0.1,
            },
            symmetry: Symmetry::None,
        },
        TemplateSpec {
            class_id: "table".into(),
            model_id: "table_sq".into(),
            primitive: Primitive::Box { size: [1.0, 1.0, 0.75] },
            symmetry: Symmetry::Discrete(4),
        },
        TemplateSpec {
            class_id: "trashbin".into(),
            model_id: "bin".into(),
            primitive: Primitive::Cylinder {
                radius: 0.2,
                height: 0.6,
                segments: 16,
            },
            symmetry: Symmetry::Discrete(16),
        },
        TemplateSpec {
            class_id: "cabinet".into(),
            model_id: "cab".into(),
            primitive: Primitive::Box { size: [0.5, 1.2, 1.8] },
            symmetry: Symmetry::None,
        },
    ]
}

#[test]
fn noiseless_recovery_over_random_poses() {
    for seed in 0..100u64 {
        let mut s = spec(12, 120.0);
        s.seed = seed;
        s.templates = templates();
        s.poses = PoseRanges {
            placement: Placement::Box {
                min: [-0.5, -0.5, 0.3],
                max: [0.5, 0.5, 1.0],
            },
            yaw_deg: [-180.0, 180.0],
            tilt_deg: 10.0,
            scale: [0.7, 1.3],
            ..PoseRanges::default()
        };
        s.trajectory = Trajectory::Orbit {
            center: [0.0, 0.0, 0.0],
            radius: 3.0,
            height: 1.5,
            start_deg: 10.0 * seed as f64,
            sweep_deg: 120.0,
            look: Look::Inward,
            target_height: 0.6,
            target_distance: 2.0,
            n_frames: 12,
        };
        let scene = generate(&s).unwrap();
        let m = scene.scene.model(&scene.ground_truth[0].cad_model_id).unwrap();
        let refs: Vec<_> = scene.scene.observations.iter().collect();
        for weights in [ObjectiveWeights::default(), ObjectiveWeights::MULTI_VIEW] {
            let (pose, report) =
                solve_object(&scene.scene, &refs, &weights, &SolverConfig::default(), &m.vertices, m.symmetry).unwrap();
            let (t, r, sc) = errors(&pose, &scene.ground_truth[0].pose, m.symmetry);
            assert!(t <= 1e-3 && r <= 0.1 && sc <= 1e-3, "seed {seed} {} {weights:?}: {t:e} {r:e} {sc:e} {report:?}", m.id);
        }
    }
}

#[test]
fn gradient_direction_also_recovers() {
    let scene = quarter_circle_scene();
    let config = SolverConfig {
        direction: Direction::Gradient,
        max_iterations: 20000,
        ..SolverConfig::default()
    };
    let (pose, _) = solve(&scene, &ObjectiveWeights::default(), &config);
    let (t, r, s) = errors(&pose, &scene.ground_truth[0].pose, Symmetry::None);
    assert!(t <= 1e-3 && r <= 0.1 && s <= 1e-3, "{t:e} {r:e} {s:e}");
}

#[test]
fn zero_iterations_return_initialization() {
    let scene = quarter_circle_scene();
    let config = SolverConfig {
        max_iterations: 0,
        init: InitStrategy::Fixed,
        ..SolverConfig::default()
    };
    let (pose, report) = solve(&scene, &ObjectiveWeights::default(), &config);
    assert_eq!(pose, Pose9DoF::identity());
    assert_eq!(report.iterations_used, 0);

    let config = SolverConfig {
        init: InitStrategy::ObservedRotation,
        ..config
    };
    let (pose, _) = solve(&scene, &ObjectiveWeights::default(), &config);
    let o = &scene.scene.observations[0];
    let f = scene.scene.frame(o.frame_index).unwrap();
    let expected = Quat::from_matrix(&(f.rotation.transpose() * o.rotation.to_rotation_matrix().into_inner()));
    assert_eq!((pose.translation, pose.scale), (Vec3::zeros(), Vec3::repeat(1.0)));
    assert!(pose.rotation.angle_to(&expected) < 1e-12);
}

#[test]
fn fixed_initialization_recovers_moderate_rotations() {
    let scene = quarter_circle_scene();
    let config = SolverConfig {
        init: InitStrategy::Fixed,
        staged: true,
        ..SolverConfig::default()
    };
    let (pose, _) = solve(&scene, &ObjectiveWeights::default(), &config);
    let (t, r, s) = errors(&pose, &scene.ground_truth[0].pose, Symmetry::None);
    assert!(t <= 1e-3 && r <= 0.1 && s <= 1e-3, "{t:e} {r:e} {s:e}");
}

#[test]
fn no_observations_is_an_error() {
    let scene = quarter_circle_scene();
    let r = solve_object(&scene.scene, &[], &ObjectiveWeights::default(), &SolverConfig::default(), &[], Symmetry::None);
    assert_eq!(r.unwrap_err(), SolverError::NoObservations);
}

#[test]
fn missing_scale_prediction_is_reported() {
    let mut scene = quarter_circle_scene();
    scene.scene.observations[2].scale = None;
    let refs: Vec<_> = scene.scene.observations.iter().collect();
    let m = &scene.scene.cad_db[0];
    let r = solve_object(&scene.scene, &refs, &ObjectiveWeights::default(), &SolverConfig::default(), &m.vertices, m.symmetry);
    assert!(matches!(r, Err(SolverError::Objective(ObjectiveError::MissingScalePrediction(_)))));
}

#[test]
fn constraints_and_monotonicity_hold_every_iteration() {
    let scene = quarter_circle_scene();
    let refs: Vec<_> = scene.scene.observations.iter().collect();
    let m = &scene.scene.cad_db[0];
    let mut last: Option<(usize, f64, f64)> = None;
    let mut count = 0;
    let mut check = |e: &IterationEvent<'_>| {
        count += 1;
        assert!(e.betas.iter().all(|b| *b >= 0.1));
        let n = e.quaternion.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-9);
        if let Some((stage, px, f)) = last {
            if stage == e.stage && px == e.smoothing_px {
                assert!(e.objective <= f, "objective increased: {f} -> {}", e.objective);
            }
        }
        last = Some((e.stage, e.smoothing_px, e.objective));
    };
    solve_object_with(
        &scene.scene,
        &refs,
        &ObjectiveWeights::default(),
        &SolverConfig::default(),
        &m.vertices,
        m.symmetry,
        None,
        Some(&mut check),
    )
    .unwrap();
    assert!(count > 10);
}

#[test]
fn solves_are_bit_identical() {
    let mut s = spec(20, 90.0);
    s.noise = NoiseSpec {
        center_sigma: 3.0,
        rotation_sigma: 5.0,
        box_sigma: 4.0,
        scale_sigma: 0.1,
        ..NoiseSpec::default()
    };
    let scene = generate(&s).unwrap();
    let a = solve(&scene, &ObjectiveWeights::default(), &SolverConfig::default());
    let b = solve(&scene, &ObjectiveWeights::default(), &SolverConfig::default());
    assert_eq!(a, b);
}

fn ambiguity_spec() -> SynthSpec {
    let mut s = spec(1, 0.0);
    s.trajectory = Trajectory::Waypoints {
        eyes: vec![[-2.5, 0.4, 1.6]],
        targets: vec![[0.0, 0.0, 1.0]],
    };
    s.poses.placement = Placement::Explicit {
        translations: vec![[0.1, 0.1, 1.0]],
    };
    s.poses.scale = [0.8, 1.2];
    s.poses.yaw_deg = [40.0, 40.0];
    s
}

#[test]
fn single_frame_pair_has_equal_objectives() {
    let (a, b) = ambiguity_pair(&ambiguity_spec()).unwrap();
    let w = ObjectiveWeights::MULTI_VIEW;
    let (_, ra) = solve(&a, &w, &SolverConfig::default());
    let (_, rb) = solve(&b, &w, &SolverConfig::default());
    assert_eq!(ra.final_objective, rb.final_objective);
    assert!(ra.ill_conditioned && rb.ill_conditioned);
}

#[test]
fn second_view_resolves_scale_and_depth() {
    let (mut a, _) = ambiguity_pair(&ambiguity_spec()).unwrap();
    let gt = a.ground_truth[0].clone();
    let f2 = crate::synth::orbit_view(1, &a.scene.frames[0], &gt.pose.translation, 30.0).unwrap();
    let mut o = render_observation(&f2, &gt, &a.scene.cad_db[0]).unwrap();
    o.scale = None;
    a.scene.frames.push(f2);
    a.scene.observations.push(o);
    let (pose, report) = solve(&a, &ObjectiveWeights::MULTI_VIEW, &SolverConfig::default());
    let (t, _, s) = errors(&pose, &gt.pose, Symmetry::None);
    assert!(t <= 0.05 && s <= 0.05, "{t} {s}");
    assert!(!report.ill_conditioned);
}

#[test]
fn single_frame_depth_recovery() {
    let (a, b) = ambiguity_pair(&ambiguity_spec()).unwrap();
    let f = &a.scene.frames[0];
    let o = &a.scene.observations[0];
    let m = &a.scene.cad_db[0];
    let ga = a.ground_truth[0].pose;
    let depth_a = f.world_to_camera(&ga.translation).z;
    let da = derive_depth_single_frame(f, o, &ga.scale, &ga.rotation, &m.vertices).unwrap();
    assert!((da - depth_a).abs() <= 1e-3, "{da} {depth_a}");
    let db = derive_depth_single_frame(f, o, &(ga.scale * 2.0), &ga.rotation, &m.vertices).unwrap();
    assert!((db / da - 2.0).abs() <= 0.02);
    let depth_b = f.world_to_camera(&b.ground_truth[0].pose.translation).z;
    assert!((db - depth_b).abs() <= 2e-3);
}

#[test]
fn inconsistent_box_is_divergent() {
    let (a, _) = ambiguity_pair(&ambiguity_spec()).unwrap();
    let f = &a.scene.frames[0];
    let mut o = a.scene.observations[0].clone();
    // a sub-pixel box is only approached as the depth grows without bound
    let c = o.center;
    o.bbox = crate::geometry::Box2::new(c.x - 0.001, c.y - 0.001, c.x + 0.001, c.y + 0.001);
    let g = a.ground_truth[0].pose;
    let r = derive_depth_single_frame(f, &o, &g.scale, &g.rotation, &a.scene.cad_db[0].vertices);
    assert_eq!(r.unwrap_err(), SolverError::Divergent);
}

#[test]
fn more_views_never_hurt_translation_on_noiseless_data() {
    let scene = {
        let mut s = spec(8, 140.0);
        s.seed = 5;
        generate(&s).unwrap()
    };
    let gt = scene.ground_truth[0].pose;
    let m = &scene.scene.cad_db[0];
    let all: Vec<_> = scene.scene.observations.iter().collect();
    let two = vec![all[0], all[4]];
    let w = ObjectiveWeights::default();
    let c = SolverConfig::default();
    let (p2, _) = solve_object(&scene.scene, &two, &w, &c, &m.vertices, m.symmetry).unwrap();
    let (pn, _) = solve_object(&scene.scene, &all, &w, &c, &m.vertices, m.symmetry).unwrap();
    let e2 = (p2.translation - gt.translation).norm();
    let en = (pn.translation - gt.translation).norm();
    assert!(en <= e2 + 1e-6, "{en} > {e2}");
}

#[test]
fn subsample_is_uniform_and_keeps_ends() {
    let v: Vec<u32> = (0..100).collect();
    let s = subsample(&v, 40);
    assert_eq!(s.len(), 40);
    assert_eq!((s[0], s[39]), (0, 99));
    assert!(s.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(subsample(&v[..10], 40), v[..10].to_vec());
}

#[test]
fn warm_start_matches_cold_start() {
    let mut s = spec(30, 120.0);
    s.noise = NoiseSpec {
        center_sigma: 3.0,
        rotation_sigma: 5.0,
        box_sigma: 4.0,
        scale_sigma: 0.1,
        ..NoiseSpec::default()
    };
    let scene = generate(&s).unwrap();
    let m = &scene.scene.cad_db[0];
    let all: Vec<_> = scene.scene.observations.iter().collect();
    let w = ObjectiveWeights::default();
    let c = SolverConfig::default();
    let (prefix, _) = solve_object(&scene.scene, &all[..10], &w, &c, &m.vertices, m.symmetry).unwrap();
    let (_, cold) = solve_object_with(&scene.scene, &all, &w, &c, &m.vertices, m.symmetry, None, None).unwrap();
    let (_, warm) = solve_object_with(&scene.scene, &all, &w, &c, &m.vertices, m.symmetry, Some(&prefix), None).unwrap();
    assert!((warm.final_objective - cold.final_objective).abs() <= 0.01 * cold.final_objective, "{warm:?} {cold:?}");
}
