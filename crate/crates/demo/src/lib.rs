//! Browser demo for the causal-discovery pipeline.
//!
//! Exposes three operations to the static page in `www/`:
//! scene generation with extracted decisions, four-world counterfactual
//! simulation for one candidate link, and full discovery under all three
//! link tests. Inputs and outputs are JSON strings; the page does the
//! plotting.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use ccd_core::cd::{
    discover, enumerate_candidates, reward_at, run_worlds, CdConfig, Variant,
};
use ccd_core::extract::extract_all;
use ccd_core::scene::{AgentId, Decision, Scene};
use ccd_core::synth::{generate_synthetic_scene, SynthSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoParams {
    pub seed: u64,
    /// Sample scene parameters from the full generator ranges instead of
    /// the slider values.
    pub randomize: bool,
    pub head_speed: f64,
    pub headway_time: f64,
    pub brake_delta: f64,
    pub brake_start: f64,
    pub brake_duration: f64,
    pub follower_delay: f64,
    pub indep_speed: f64,
    pub lambda: f64,
    /// Candidate index for the four-world view.
    pub candidate: usize,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams {
            seed: 7,
            randomize: false,
            head_speed: 30.0,
            headway_time: 1.2,
            brake_delta: 10.0,
            brake_start: 4.0,
            brake_duration: 4.0,
            follower_delay: 0.8,
            indep_speed: 26.0,
            lambda: 0.5,
            candidate: 0,
        }
    }
}

fn spec_from(p: &DemoParams) -> SynthSpec {
    if p.randomize {
        SynthSpec::default()
    } else {
        let point = |v: f64| (v, v);
        SynthSpec {
            head_speed: point(p.head_speed),
            headway_time: point(p.headway_time),
            brake_delta: point(p.brake_delta),
            brake_start: point(p.brake_start),
            brake_duration: point(p.brake_duration),
            follower_delay: point(p.follower_delay),
            indep_speed: point(p.indep_speed),
            ..SynthSpec::default()
        }
    }
}

fn build_scene(p: &DemoParams) -> Result<Scene, String> {
    generate_synthetic_scene(p.seed, &spec_from(p)).map_err(|e| e.to_string())
}

fn cd_config(p: &DemoParams) -> CdConfig {
    CdConfig { reward_threshold: p.lambda.clamp(0.01, 1.0), ..CdConfig::default() }
}

#[derive(Serialize)]
struct TrackOut {
    id: String,
    role: String,
    lane_id: i64,
    x: Vec<f64>,
    y: Vec<f64>,
    speed: Vec<f64>,
    accel: Vec<f64>,
}

#[derive(Serialize)]
struct SceneOut {
    dt: f64,
    t_end: f64,
    certified: bool,
    vehicle_length: f64,
    tracks: Vec<TrackOut>,
    decisions: Vec<Decision>,
    candidates: Vec<CandidateOut>,
    params: serde_json::Value,
}

#[derive(Serialize)]
struct CandidateOut {
    cause_agent: String,
    effect_agent: String,
    t_cause: f64,
    t_effect: f64,
}

fn scene_overview_impl(params: &str) -> Result<String, String> {
    let p: DemoParams = serde_json::from_str(params).map_err(|e| e.to_string())?;
    let scene = build_scene(&p)?;
    let cfg = cd_config(&p);
    let decisions = extract_all(&scene, &cfg.extract).map_err(|e| e.to_string())?;
    let candidates = enumerate_candidates(&decisions)
        .into_iter()
        .map(|c| CandidateOut {
            cause_agent: c.cause.agent_id.to_string(),
            effect_agent: c.effect.agent_id.to_string(),
            t_cause: c.cause.decision_time,
            t_effect: c.effect.decision_time,
        })
        .collect();

    let out = SceneOut {
        dt: scene.grid.dt,
        t_end: scene.grid.t_end(),
        certified: scene.meta.collision_certified == Some(true),
        vehicle_length: scene.tracks[0].length,
        tracks: scene
            .tracks
            .iter()
            .map(|t| TrackOut {
                id: t.agent_id.to_string(),
                role: scene
                    .roles
                    .get(&t.agent_id)
                    .map(|r| format!("{r:?}"))
                    .unwrap_or_default(),
                lane_id: t.lane_id,
                x: t.x.clone(),
                y: t.y.clone(),
                speed: t.speed.clone(),
                accel: t.long_accel.clone(),
            })
            .collect(),
        decisions: decisions.iter().cloned().collect(),
        candidates,
        params: scene.meta.params.clone().unwrap_or_default(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct WorldOut {
    label: String,
    min_reward: f64,
    agency_loss: bool,
    collided: bool,
    t0: f64,
    dt: f64,
    agents: Vec<WorldAgentOut>,
    reward: Vec<f64>,
    collisions: Vec<(String, String, f64, f64)>,
}

#[derive(Serialize)]
struct WorldAgentOut {
    id: String,
    x: Vec<f64>,
    speed: Vec<f64>,
    cct: Vec<f64>,
}

#[derive(Serialize)]
struct WorldsOut {
    cause: Decision,
    effect: Decision,
    d_plus: f64,
    d_minus: f64,
    score: f64,
    xi_r: bool,
    xi_a: bool,
    xi_h: bool,
    patterns: serde_json::Value,
    agency: [bool; 4],
    worlds: Vec<WorldOut>,
}

fn counterfactual_worlds_impl(params: &str) -> Result<String, String> {
    let p: DemoParams = serde_json::from_str(params).map_err(|e| e.to_string())?;
    let scene = build_scene(&p)?;
    let cfg = cd_config(&p);
    let decisions = extract_all(&scene, &cfg.extract).map_err(|e| e.to_string())?;
    let candidates = enumerate_candidates(&decisions);
    if candidates.is_empty() {
        return Err("scene has no candidate links".to_owned());
    }
    let link = candidates
        .get(p.candidate.min(candidates.len() - 1))
        .expect("index clamped");

    let outcomes = run_worlds(&scene, &decisions, link, &cfg).map_err(|e| e.to_string())?;
    let reward = ccd_core::cd::reward_test(&outcomes, cfg.reward_threshold);
    let indicators = [
        outcomes[0].agency_loss,
        outcomes[1].agency_loss,
        outcomes[2].agency_loss,
        outcomes[3].agency_loss,
    ];
    let (xi_a, patterns) = ccd_core::cd::agency_test(indicators);
    let xi_h = ccd_core::cd::hybrid_test(&patterns, reward.accepted);

    let effect_agent = &link.effect.agent_id;
    let worlds = outcomes
        .iter()
        .map(|o| {
            let trace = &o.trace;
            let reward_series: Vec<f64> = (0..trace.n_samples())
                .map(|k| reward_at(trace, effect_agent, trace.time(k)))
                .collect();
            WorldOut {
                label: o.variant.label().to_owned(),
                min_reward: o.min_reward,
                agency_loss: o.agency_loss,
                collided: !trace.collisions.is_empty(),
                t0: trace.t0,
                dt: trace.dt,
                agents: trace
                    .agents
                    .iter()
                    .map(|(id, s)| WorldAgentOut {
                        id: id.to_string(),
                        x: s.x.clone(),
                        speed: s.speed.clone(),
                        cct: s.cct.clone(),
                    })
                    .collect(),
                reward: reward_series,
                collisions: trace
                    .collisions
                    .iter()
                    .map(|e| (e.a.to_string(), e.b.to_string(), e.onset, e.end))
                    .collect(),
            }
        })
        .collect();

    let out = WorldsOut {
        cause: link.cause.clone(),
        effect: link.effect.clone(),
        d_plus: reward.d_plus,
        d_minus: reward.d_minus,
        score: reward.score(),
        xi_r: reward.accepted,
        xi_a,
        xi_h,
        patterns: serde_json::to_value(patterns).map_err(|e| e.to_string())?,
        agency: indicators,
        worlds,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct DiscoveryOut {
    ground_truth: Vec<(String, String)>,
    agents: Vec<String>,
    variants: Vec<VariantOut>,
    candidates: Vec<serde_json::Value>,
}

#[derive(Serialize)]
struct VariantOut {
    variant: String,
    lambda: Option<f64>,
    edges: Vec<(String, String)>,
    matches_truth: bool,
}

fn discovery_report_impl(params: &str) -> Result<String, String> {
    let p: DemoParams = serde_json::from_str(params).map_err(|e| e.to_string())?;
    let scene = build_scene(&p)?;
    let truth = scene.ground_truth.clone().expect("synthetic scenes carry ground truth");

    let edges_of = |g: &ccd_core::scene::EntityCausalGraph| {
        g.edges().map(|(a, b)| (a.to_string(), b.to_string())).collect::<Vec<_>>()
    };

    let mut variants = Vec::new();
    let mut candidates = Vec::new();
    for variant in Variant::ALL {
        let cfg = CdConfig { variant, ..cd_config(&p) };
        let d = discover(&scene, &cfg).map_err(|e| e.to_string())?;
        variants.push(VariantOut {
            variant: variant.to_string(),
            lambda: variant.uses_lambda().then_some(cfg.reward_threshold),
            edges: edges_of(&d.entity_graph),
            matches_truth: d.entity_graph == truth,
        });
        if candidates.is_empty() {
            candidates = d
                .candidates
                .iter()
                .map(|c| serde_json::to_value(c).unwrap_or_default())
                .collect();
        }
    }

    let out = DiscoveryOut {
        ground_truth: edges_of(&truth),
        agents: scene.agent_ids().map(AgentId::to_string).collect(),
        variants,
        candidates,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Default slider values as JSON for page initialization.
#[wasm_bindgen]
pub fn default_params() -> String {
    serde_json::to_string(&DemoParams::default()).expect("params serialize")
}

/// Generate a scene and return tracks, extracted decisions and candidates.
#[wasm_bindgen]
pub fn scene_overview(params: &str) -> Result<String, JsValue> {
    scene_overview_impl(params).map_err(|e| JsValue::from_str(&e))
}

/// Simulate the four counterfactual worlds for one candidate link.
#[wasm_bindgen]
pub fn counterfactual_worlds(params: &str) -> Result<String, JsValue> {
    counterfactual_worlds_impl(params).map_err(|e| JsValue::from_str(&e))
}

/// Run all three link tests and return the discovered graphs.
#[wasm_bindgen]
pub fn discovery_report(params: &str) -> Result<String, JsValue> {
    discovery_report_impl(params).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overview_reports_three_tracks_and_candidates() {
        let params = default_params();
        let out = scene_overview_impl(&params).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["tracks"].as_array().unwrap().len(), 3);
        assert!(v["certified"].as_bool().unwrap());
        assert_eq!(v["candidates"].as_array().unwrap().len(), 3);
        // One scripted decision each for head and tail, one hold fallback
        // for the independent agent.
        assert_eq!(v["decisions"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn worlds_show_the_counterfactual_collision_pattern() {
        // Candidate 2 is head -> tail under the default ordering
        // (the independent agent's fallback decision sits at t = 0).
        let p = DemoParams { candidate: 2, ..DemoParams::default() };
        let out = counterfactual_worlds_impl(&serde_json::to_string(&p).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["cause"]["agent_id"], "head");
        assert_eq!(v["effect"]["agent_id"], "tail");
        // Agency loss only in the world without the tail's decision.
        assert_eq!(v["agency"], serde_json::json!([false, true, false, false]));
        assert!(v["xi_a"].as_bool().unwrap());
        assert_eq!(v["worlds"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn discovery_matches_ground_truth_on_defaults() {
        let out = discovery_report_impl(&default_params()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let variants = v["variants"].as_array().unwrap();
        assert_eq!(variants.len(), 3);
        for variant in variants {
            assert!(
                variant["matches_truth"].as_bool().unwrap(),
                "variant {} missed the truth",
                variant["variant"]
            );
        }
    }

    #[test]
    fn bad_params_are_reported_not_panicked() {
        assert!(scene_overview_impl("{ not json").is_err());
        let p = DemoParams { headway_time: -1.0, ..DemoParams::default() };
        assert!(scene_overview_impl(&serde_json::to_string(&p).unwrap()).is_err());
    }
}
