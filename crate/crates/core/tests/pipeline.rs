//! Cross-module integration tests: serialization round trips, discovery on
//! constructed scenes, and property-based invariants.

use proptest::prelude::*;

use ccd_core::cd::{discover, CdConfig, Variant};
use ccd_core::eval::{sweep, write_metrics_csv};
use ccd_core::extract::{extract_decisions, ExtractConfig};
use ccd_core::scene::{
    entity_projection, AgentId, AgentTrack, Decision, DecisionCausalGraph, DecisionSet, Goal,
    Scene, TimeGrid,
};
use ccd_core::sim::{simulate, simulate_from, BodyState, SimConfig};
use ccd_core::synth::{generate_synthetic_scene, SynthSpec};

fn body(x: f64, y: f64, speed: f64) -> BodyState {
    BodyState {
        x,
        y,
        heading: 0.0,
        speed,
        angular_velocity: 0.0,
        long_accel: 0.0,
        half_length: 2.25,
        half_width: 1.0,
    }
}

/// Scene of distant constant-speed agents: no decisions beyond fallbacks,
/// no candidates, empty graphs.
fn quiet_scene() -> Scene {
    let ids = [AgentId::from("p"), AgentId::from("q"), AgentId::from("r")];
    let initial = vec![
        (ids[0].clone(), body(0.0, 0.0, 20.0)),
        (ids[1].clone(), body(500.0, 40.0, 22.0)),
        (ids[2].clone(), body(-500.0, 80.0, 18.0)),
    ];
    let cfg = SimConfig { dt: 0.1, start_time: 0.0, horizon: 12.0, ttc_horizon: 20.0 };
    let trace = simulate_from(&initial, &DecisionSet::new(), &cfg).unwrap();
    let grid = TimeGrid::new(0.0, 0.1, trace.n_samples()).unwrap();
    let tracks = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let s = trace.agent(id).unwrap();
            AgentTrack {
                agent_id: id.clone(),
                first_step: 0,
                x: s.x.clone(),
                y: s.y.clone(),
                heading: s.heading.clone(),
                speed: s.speed.clone(),
                long_accel: s.accel.clone(),
                length: 4.5,
                width: 2.0,
                lane_id: i as i64,
            }
        })
        .collect();
    Scene {
        grid,
        tracks,
        roles: Default::default(),
        ground_truth: None,
        meta: Default::default(),
    }
}

#[test]
fn scene_json_round_trip_is_exact() {
    let scene = generate_synthetic_scene(11, &SynthSpec::default()).unwrap();
    let json = scene.to_json().unwrap();
    let back = Scene::from_json(&json).unwrap();
    assert_eq!(scene, back);
}

#[test]
fn quiet_scene_discovers_nothing() {
    let scene = quiet_scene();
    let d = discover(&scene, &CdConfig::default()).unwrap();
    assert!(d.candidates.is_empty());
    assert_eq!(d.entity_graph.edge_count(), 0);
    assert_eq!(d.decision_graph.links().len(), 0);
    // One fallback decision per agent.
    assert_eq!(d.decision_graph.decisions().len(), 3);
}

#[test]
fn discovery_is_deterministic() {
    let scene = generate_synthetic_scene(5, &SynthSpec::default()).unwrap();
    let cfg = CdConfig { variant: Variant::Hybrid, reward_threshold: 0.5, ..Default::default() };
    let a = discover(&scene, &cfg).unwrap();
    let b = discover(&scene, &cfg).unwrap();
    assert_eq!(a.entity_graph, b.entity_graph);
    assert_eq!(a.candidates, b.candidates);
}

#[test]
fn reward_variant_recovers_convoy_link_at_moderate_lambda() {
    let scene = generate_synthetic_scene(13, &SynthSpec::default()).unwrap();
    let cfg = CdConfig { variant: Variant::Reward, reward_threshold: 0.5, ..Default::default() };
    let d = discover(&scene, &cfg).unwrap();
    assert!(d.entity_graph.has_edge(&AgentId::from("head"), &AgentId::from("tail")));
    assert_eq!(d.entity_graph.edge_count(), 1);
}

#[test]
fn report_json_uses_documented_field_names() {
    let scene = generate_synthetic_scene(3, &SynthSpec::default()).unwrap();
    let cfg = CdConfig { variant: Variant::Agency, ..Default::default() };
    let d = discover(&scene, &cfg).unwrap();
    let report = d.to_report("synth-3", &cfg, Some("deadbeef".into()));
    let json = serde_json::to_string_pretty(&report).unwrap();
    for key in [
        "\"scene_id\"",
        "\"variant\"",
        "\"lambda_dR\"",
        "\"decision_links\"",
        "\"entity_edges\"",
        "\"candidates\"",
        "\"dR_plus\"",
        "\"dR_minus\"",
        "\"agency_flags\"",
        "\"accepted\"",
        "\"wall_time_s\"",
        "\"config_hash\"",
    ] {
        assert!(json.contains(key), "report JSON missing {key}");
    }
    let back: ccd_core::DiscoveryReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.entity_edges, report.entity_edges);
}

#[test]
fn simulate_rejects_bad_inputs() {
    let scene = generate_synthetic_scene(1, &SynthSpec::default()).unwrap();
    let decisions = DecisionSet::new();
    let off_grid = SimConfig { dt: 0.04, start_time: 0.017, horizon: 1.0, ttc_horizon: 20.0 };
    assert!(simulate(&scene, &decisions, &off_grid).is_err());

    let stranger = Decision::new(AgentId::from("ghost"), 1.0, Goal::new(10.0, 2.0).unwrap()).unwrap();
    let with_ghost = DecisionSet::from_decisions([stranger]).unwrap();
    let ok_cfg = SimConfig { dt: 0.04, start_time: 0.0, horizon: 1.0, ttc_horizon: 20.0 };
    assert!(simulate(&scene, &with_ghost, &ok_cfg).is_err());
}

#[test]
fn trace_csv_dump_has_expected_shape() {
    let scene = generate_synthetic_scene(2, &SynthSpec::default()).unwrap();
    let cfg = SimConfig { dt: scene.grid.dt, start_time: 0.0, horizon: 2.0, ttc_horizon: 20.0 };
    let decisions = DecisionSet::new();
    let trace = simulate(&scene, &decisions, &cfg).unwrap();
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "time,agent_id,x,y,speed,accel,ttc,cct");
    // 3 agents x 51 samples.
    assert_eq!(lines.count(), 3 * trace.n_samples());
}

#[test]
fn sweep_produces_one_row_per_cell_and_writes_csv() {
    let scenes: Vec<Scene> = (0..3)
        .map(|s| generate_synthetic_scene(s, &SynthSpec::default()).unwrap())
        .collect();
    let lambdas = [0.01, 0.5, 1.0];
    let base = CdConfig::default();

    let reward = sweep(&scenes, Variant::Reward, &lambdas, &base).unwrap();
    assert_eq!(reward.rows.len(), 3);
    assert!(reward.rows.iter().all(|r| r.lambda.is_some() && r.n_scenes == 3));

    let agency = sweep(&scenes, Variant::Agency, &lambdas, &base).unwrap();
    assert_eq!(agency.rows.len(), 1);
    assert!(agency.rows[0].lambda.is_none());
    assert!((agency.rows[0].f1_mean - 1.0).abs() < 1e-12);

    let mut buf = Vec::new();
    let rows: Vec<_> = reward.rows.iter().chain(&agency.rows).cloned().collect();
    write_metrics_csv(&rows, Some("cafe0123"), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# config_hash=cafe0123\n"));
    assert!(text.contains("variant,lambda,precision_mean,recall_mean,f1_mean"));
    assert_eq!(text.lines().count(), 1 + 1 + 4);
}

#[test]
fn skipped_scenes_without_ground_truth_are_counted() {
    let mut scenes =
        vec![generate_synthetic_scene(0, &SynthSpec::default()).unwrap(), quiet_scene()];
    scenes[1].ground_truth = None;
    let report = sweep(&scenes, Variant::Agency, &[], &CdConfig::default()).unwrap();
    assert_eq!(report.skipped_scenes, 1);
    assert_eq!(report.rows[0].n_scenes, 1);
}

/// Duplicate decision links between one agent pair collapse to one entity
/// edge, and projections never contain self-loops.
#[test]
fn entity_projection_properties_on_randomized_graphs() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let n_agents = rng.gen_range(2..5usize);
        let mut decisions = DecisionSet::new();
        let mut all = Vec::new();
        for a in 0..n_agents {
            let id = AgentId::new(format!("a{a}"));
            for k in 0..rng.gen_range(1..4usize) {
                let t = (a * 10 + k * 3) as f64 + rng.gen_range(0.0..1.0);
                let d = Decision::new(id.clone(), t, Goal::new(10.0, t + 1.0).unwrap()).unwrap();
                decisions.insert(d.clone()).unwrap();
                all.push(d);
            }
        }
        let mut links = Vec::new();
        for _ in 0..rng.gen_range(0..6usize) {
            let c = &all[rng.gen_range(0..all.len())];
            let e = &all[rng.gen_range(0..all.len())];
            if c.agent_id != e.agent_id && c.decision_time < e.decision_time {
                links.push((c.clone(), e.clone()));
            }
        }
        // Duplicate every link; the projected edge set must not change.
        let mut doubled = links.clone();
        doubled.extend(links.clone());

        let g1 = DecisionCausalGraph::new(decisions.clone(), links).unwrap();
        let g2 = DecisionCausalGraph::new(decisions.clone(), doubled).unwrap();
        let p1 = entity_projection(&g1);
        let p2 = entity_projection(&g2);
        assert_eq!(p1, p2);
        assert!(p1.edges().all(|(a, b)| a != b));
        assert_eq!(p1.node_count(), n_agents);
    }
}

fn track_from_segments(segments: &[(usize, f64)], v0: f64, dt: f64) -> (AgentTrack, TimeGrid) {
    let n: usize = segments.iter().map(|(len, _)| len).sum::<usize>().max(2);
    let mut accel = Vec::with_capacity(n);
    for (len, a) in segments {
        accel.extend(std::iter::repeat_n(*a, *len));
    }
    accel.resize(n, 0.0);
    let mut speed = vec![v0];
    let mut x = vec![0.0];
    for k in 0..n - 1 {
        let v_next = (speed[k] + accel[k] * dt).max(0.0);
        x.push(x[k] + 0.5 * (speed[k] + v_next) * dt);
        speed.push(v_next);
    }
    let grid = TimeGrid::new(0.0, dt, n).unwrap();
    let track = AgentTrack {
        agent_id: AgentId::from("t"),
        first_step: 0,
        y: vec![0.0; n],
        heading: vec![0.0; n],
        x,
        speed,
        long_accel: accel,
        length: 4.5,
        width: 2.0,
        lane_id: 1,
    };
    (track, grid)
}

proptest! {
    /// Raising either threshold never increases the number of extracted
    /// decisions, and every emitted decision clears the thresholds (the
    /// fallback excepted).
    #[test]
    fn extraction_monotone_and_threshold_respecting(
        segments in prop::collection::vec((2usize..50, -4.0f64..4.0), 1..6),
        v0 in 5.0f64..35.0,
        extra_dur in 0.0f64..3.0,
        extra_delta in 0.0f64..3.0,
    ) {
        let (track, grid) = track_from_segments(&segments, v0, 0.1);
        let base = ExtractConfig::default();
        let harder_dur = ExtractConfig { min_duration: base.min_duration + extra_dur, ..base };
        let harder_delta =
            ExtractConfig { min_speed_delta: base.min_speed_delta + extra_delta, ..base };

        let d0 = extract_decisions(&track, &grid, &base).unwrap();
        let d1 = extract_decisions(&track, &grid, &harder_dur).unwrap();
        let d2 = extract_decisions(&track, &grid, &harder_delta).unwrap();
        prop_assert!(d1.len() <= d0.len());
        prop_assert!(d2.len() <= d0.len());

        for (cfg, ds) in [(&base, &d0), (&harder_dur, &d1), (&harder_delta, &d2)] {
            // Output always satisfies decision-set ordering invariants.
            DecisionSet::from_decisions(ds.iter().cloned()).unwrap();
            for d in ds.iter() {
                let gap = d.goal.target_time - d.decision_time;
                if gap == 0.0 {
                    continue; // hold fallback
                }
                prop_assert!(gap >= cfg.min_duration - 1e-9);
                let k = grid.index_of(d.decision_time).unwrap();
                let delta = (track.speed[k] - d.goal.target_speed).abs();
                prop_assert!(delta >= cfg.min_speed_delta - 1e-9);
            }
        }
    }
}
