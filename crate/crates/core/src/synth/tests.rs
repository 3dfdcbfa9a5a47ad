use super::*;
use crate::datamodel::wire_observation_json;
use crate::objective::{total_objective, AuxPerFrame, ObjectProblem, ObjectVariables, ObjectiveWeights};

fn cube_template() -> TemplateSpec {
    TemplateSpec {
        class_id: "box".into(),
        model_id: "cube".into(),
        primitive: Primitive::Box { size: [1.0, 1.0, 1.0] },
        symmetry: Symmetry::None,
    }
}

fn cube_at(t: [f64; 3], n_frames: u32) -> SynthSpec {
    SynthSpec {
        seed: 7,
        n_objects: 1,
        templates: vec![cube_template()],
        poses: PoseRanges {
            placement: Placement::Explicit { translations: vec![t] },
            scale: [1.0, 1.0],
            yaw_deg: [0.0, 0.0],
            ..PoseRanges::default()
        },
        trajectory: Trajectory::Orbit {
            center: [t[0], t[1], 0.0],
            radius: 4.0,
            height: 3.0,
            start_deg: 0.0,
            sweep_deg: 360.0,
            look: Look::Inward,
            target_height: t[2],
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

fn noisy(mut spec: SynthSpec) -> SynthSpec {
    spec.noise = NoiseSpec {
        center_sigma: 3.0,
        rotation_sigma: 5.0,
        box_sigma: 4.0,
        scale_sigma: 0.1,
        dropout_rate: 0.1,
        vote_error_rate: 0.1,
        ..NoiseSpec::default()
    };
    spec
}

#[test]
fn noiseless_centers_are_exact_projections() {
    let s = generate(&cube_at([0.0, 0.0, 2.0], 8)).unwrap();
    assert_eq!(s.scene.observations.len(), 8);
    let t = s.ground_truth[0].pose.translation;
    assert_eq!(t, Vec3::new(0.0, 0.0, 2.0));
    for o in &s.scene.observations {
        let f = s.scene.frame(o.frame_index).unwrap();
        assert_eq!(o.center, f.project(&f.world_to_camera(&t)).unwrap());
        assert_eq!(o.score, 1.0);
    }
    s.scene.validate().unwrap();
}

#[test]
fn full_dropout_is_infeasible() {
    let mut spec = cube_at([0.0, 0.0, 2.0], 8);
    spec.noise.dropout_rate = 1.0;
    assert!(matches!(generate(&spec), Err(SynthError::InfeasibleSpec(_))));
}

#[test]
fn invisible_object_is_infeasible() {
    let mut spec = cube_at([0.0, 0.0, 2.0], 8);
    spec.poses.placement = Placement::Explicit {
        translations: vec![[0.0, 0.0, 200.0]],
    };
    assert!(matches!(generate(&spec), Err(SynthError::InfeasibleSpec(_))));
}

#[test]
fn zero_frames_rejected() {
    let mut spec = cube_at([0.0, 0.0, 2.0], 8);
    spec.trajectory = Trajectory::Waypoints { eyes: vec![], targets: vec![] };
    assert!(matches!(generate(&spec), Err(SynthError::InvalidSpec(_))));
}

#[test]
fn same_seed_is_bit_identical() {
    let spec = noisy(cube_at([0.0, 0.0, 2.0], 30));
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    assert_eq!(a.scene, b.scene);
    assert_eq!(a.ground_truth, b.ground_truth);
    let mut other = spec.clone();
    other.seed += 1;
    assert_ne!(generate(&other).unwrap().scene.observations, a.scene.observations);
}

#[test]
fn zero_sigma_noise_reproduces_noiseless_output() {
    let spec = cube_at([0.3, -0.2, 1.0], 12);
    let clean = generate(&spec).unwrap();
    for o in &clean.scene.observations {
        let f = clean.scene.frame(o.frame_index).unwrap();
        let exact = render_observation(f, &clean.ground_truth[0], &clean.scene.cad_db[0]).unwrap();
        assert_eq!(*o, exact);
    }
}

#[test]
fn noise_changes_observations_but_not_ground_truth() {
    let spec = cube_at([0.3, -0.2, 1.0], 40);
    let clean = generate(&spec).unwrap();
    let dirty = generate(&noisy(spec)).unwrap();
    assert_eq!(clean.ground_truth, dirty.ground_truth);
    assert!(dirty.scene.observations.len() < clean.scene.observations.len());
    assert!(dirty.scene.observations.iter().any(|o| o.score < 1.0));
    dirty.scene.validate().unwrap();
}

#[test]
fn noiseless_objective_vanishes_at_truth() {
    let mut spec = cube_at([0.3, -0.2, 1.0], 12);
    spec.poses.yaw_deg = [-180.0, 180.0];
    spec.poses.scale = [0.5, 1.5];
    spec.poses.tilt_deg = 10.0;
    let s = generate(&spec).unwrap();
    let gt = &s.ground_truth[0];
    let refs: Vec<_> = s.scene.observations.iter().collect();
    let p = ObjectProblem::new(&s.scene, &refs, s.scene.cad_db[0].vertices.clone(), Symmetry::None).unwrap();
    let aux = refs
        .iter()
        .map(|o| {
            let f = s.scene.frame(o.frame_index).unwrap();
            let pc = f.world_to_camera(&gt.pose.translation);
            (o.frame_index, AuxPerFrame { kappa: o.center, beta: pc.z })
        })
        .collect();
    let vars = ObjectVariables { pose: gt.pose, aux };
    let (v, _) = total_objective(&p, &vars, &ObjectiveWeights::default()).unwrap();
    assert!(v < 1e-9, "{v}");
}

#[test]
fn visibility_rule_holds() {
    let mut spec = noisy(cube_at([1.5, 0.0, 0.5], 40));
    spec.noise.dropout_rate = 0.0;
    let s = generate(&spec).unwrap();
    let g = &s.ground_truth[0];
    for o in &s.scene.observations {
        let f = s.scene.frame(o.frame_index).unwrap();
        let inside = s.scene.cad_db[0].vertices.iter().any(|v| {
            let p = f.world_to_camera(&g.pose.object_to_world(v));
            p.z > NEAR_PLANE && f.contains_pixel(&f.intrinsics.project_unchecked(&p))
        });
        assert!(inside);
    }
}

#[test]
fn hidden_ranges_remove_observations() {
    let mut spec = cube_at([0.0, 0.0, 1.0], 20);
    spec.visibility.hidden = vec![HiddenRange {
        object: 0,
        first_frame: 5,
        last_frame: 9,
    }];
    let s = generate(&spec).unwrap();
    let frames: Vec<u32> = s.scene.observations.iter().map(|o| o.frame_index).collect();
    assert_eq!(frames.len(), 15);
    assert!(frames.iter().all(|f| !(5..=9).contains(f)));
}

#[test]
fn symmetric_templates_get_equal_horizontal_scale() {
    let mut spec = cube_at([0.0, 0.0, 1.0], 8);
    spec.templates = vec![TemplateSpec {
        class_id: "trashbin".into(),
        model_id: "bin".into(),
        primitive: Primitive::Cylinder {
            radius: 0.2,
            height: 0.6,
            segments: 16,
        },
        symmetry: Symmetry::Continuous,
    }];
    spec.poses.scale = [0.5, 1.5];
    let s = generate(&spec).unwrap();
    let sc = s.ground_truth[0].pose.scale;
    assert_eq!(sc.x, sc.y);
}

#[test]
fn primitives_are_canonical_and_closed() {
    for p in [
        Primitive::Box { size: [0.4, 1.0, 0.7] },
        Primitive::Cylinder {
            radius: 0.3,
            height: 0.5,
            segments: 16,
        },
        Primitive::LShape {
            size: [0.5, 0.5, 0.9],
            seat_height: 0.45,
            back_depth: 0.1,
        },
    ] {
        let (v, f) = p.mesh();
        let m = CadModel::normalized("m", "c", v, f.clone(), Symmetry::None).unwrap();
        m.validate("m").unwrap();
        // every edge shared by exactly two faces, in opposite directions
        let mut edges = BTreeMap::new();
        for t in &f {
            for k in 0..3 {
                *edges.entry((t[k], t[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        for (&(a, b), &n) in &edges {
            assert_eq!(n, 1, "{p:?}");
            assert_eq!(edges.get(&(b, a)), Some(&1), "{p:?}");
        }
    }
}

fn ambiguity_spec() -> SynthSpec {
    let mut spec = cube_at([0.2, 0.1, 1.0], 1);
    spec.trajectory = Trajectory::Waypoints {
        eyes: vec![[-2.5, 0.3, 1.4]],
        targets: vec![[0.2, 0.1, 1.0]],
    };
    spec.poses.yaw_deg = [35.0, 35.0];
    spec.poses.scale = [0.6, 1.2];
    spec
}

#[test]
fn ambiguity_pair_observations_are_byte_identical() {
    let (a, b) = ambiguity_pair(&ambiguity_spec()).unwrap();
    assert_eq!(a.scene.observations.len(), 1);
    let ja: Vec<String> = a.scene.observations.iter().map(wire_observation_json).collect();
    let jb: Vec<String> = b.scene.observations.iter().map(wire_observation_json).collect();
    assert_eq!(ja, jb);
    assert!(a.scene.observations[0].scale.is_none());
    let (ga, gb) = (&a.ground_truth[0].pose, &b.ground_truth[0].pose);
    assert_eq!(gb.scale, ga.scale * 2.0);
    assert_eq!(gb.translation, ga.translation * 2.0);
    // boxes of s and 2s coincide
    let f = &a.scene.frames[0];
    let verts = &a.scene.cad_db[0].vertices;
    assert_eq!(projected_box(f, ga, verts), projected_box(f, gb, verts));
}

#[test]
fn offset_view_breaks_the_ambiguity() {
    let (a, b) = ambiguity_pair(&ambiguity_spec()).unwrap();
    let ta = a.ground_truth[0].pose.translation;
    let f2 = orbit_view(1, &a.scene.frames[0], &ta, 30.0).unwrap();
    let oa = render_observation(&f2, &a.ground_truth[0], &a.scene.cad_db[0]).unwrap();
    let ob = render_observation(&f2, &b.ground_truth[0], &b.scene.cad_db[0]).unwrap();
    assert_ne!(wire_observation_json(&oa), wire_observation_json(&ob));
}

#[test]
fn spec_json_round_trip() {
    let spec = noisy(cube_at([0.0, 0.0, 2.0], 30));
    let text = serde_json::to_string_pretty(&spec).unwrap();
    let back: SynthSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
}
