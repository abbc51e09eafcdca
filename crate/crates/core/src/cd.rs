//! Counterfactual causal discovery between agent decisions.
//!
//! For every ordered cross-agent decision pair (cause `C`, effect `E`) the
//! scene is re-simulated under four decision sets: the original, without
//! `E`, without `C`, and without either. The reward-based test thresholds
//! the decision-dependent advantage of `E`; the agency-based test matches
//! collision-onset patterns across the four worlds; the hybrid test combines
//! them. Accepted links form a decision-level graph that projects onto the
//! entity graph used for evaluation.

use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::error::{invalid, Result};
use crate::extract::{extract_all, ExtractConfig};
use crate::scene::{
    entity_projection, AgentId, Decision, DecisionCausalGraph, DecisionSet, EntityCausalGraph,
    Scene,
};
use crate::sim::{simulate, SimConfig, SimTrace};

/// Which causal-link test decides acceptance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Reward,
    Agency,
    Hybrid,
}

impl Variant {
    /// The pure agency test ignores the reward threshold.
    pub fn uses_lambda(&self) -> bool {
        !matches!(self, Variant::Agency)
    }

    pub const ALL: [Variant; 3] = [Variant::Reward, Variant::Agency, Variant::Hybrid];
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Reward => "reward",
            Variant::Agency => "agency",
            Variant::Hybrid => "hybrid",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reward" => Ok(Variant::Reward),
            "agency" => Ok(Variant::Agency),
            "hybrid" => Ok(Variant::Hybrid),
            other => Err(invalid(format!(
                "unknown variant {other:?}, expected reward|agency|hybrid"
            ))),
        }
    }
}

/// The four counterfactual decision sets, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WorldVariant {
    /// Original decisions (E and C both present).
    Original,
    /// Without the affected decision E.
    NoEffect,
    /// Without the causing decision C.
    NoCause,
    /// Without either decision.
    NoEither,
}

pub const WORLD_VARIANTS: [WorldVariant; 4] =
    [WorldVariant::Original, WorldVariant::NoEffect, WorldVariant::NoCause, WorldVariant::NoEither];

impl WorldVariant {
    pub fn label(&self) -> &'static str {
        match self {
            WorldVariant::Original => "EC",
            WorldVariant::NoEffect => "notE_C",
            WorldVariant::NoCause => "E_notC",
            WorldVariant::NoEither => "notE_notC",
        }
    }
}

/// An ordered cross-agent decision pair under test.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLink {
    pub cause: Decision,
    pub effect: Decision,
}

impl CandidateLink {
    pub fn new(cause: Decision, effect: Decision) -> Result<Self> {
        if cause.agent_id == effect.agent_id {
            return Err(invalid("candidate link within one agent".to_owned()));
        }
        if !(cause.decision_time < effect.decision_time) {
            return Err(invalid(format!(
                "candidate link must run forward in time: {} !< {}",
                cause.decision_time, effect.decision_time
            )));
        }
        Ok(CandidateLink { cause, effect })
    }
}

/// Outcome of simulating one counterfactual world.
#[derive(Debug, Clone)]
pub struct WorldOutcome {
    pub variant: WorldVariant,
    pub trace: SimTrace,
    /// Minimum reward of the effect agent over `(t_E, t_Omega]`.
    pub min_reward: f64,
    /// Agency-loss indicator over the same window.
    pub agency_loss: bool,
}

/// Discovery configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdConfig {
    pub variant: Variant,
    /// Acceptance threshold on the combined reward advantage.
    pub reward_threshold: f64,
    pub extract: ExtractConfig,
    /// Simulation step; defaults to the scene's native grid step.
    pub dt: Option<f64>,
    pub ttc_horizon: f64,
    /// Reproduce the literal published collision-reward polarity (rewarding
    /// collision states). Off by default; see `r_cct`.
    pub literal_cct_reward: bool,
    /// Count any collision-onset of the effect agent as agency loss, not
    /// only joint onsets with the cause agent.
    pub any_collision_agency: bool,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig {
            variant: Variant::Agency,
            reward_threshold: 1.0,
            extract: ExtractConfig::default(),
            dt: None,
            ttc_horizon: 20.0,
            literal_cct_reward: false,
            any_collision_agency: false,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reward_threshold > 0.0 && self.reward_threshold <= 1.0) {
            return Err(invalid(format!(
                "reward threshold must lie in (0, 1], got {}",
                self.reward_threshold
            )));
        }
        self.extract.validate()
    }
}

/// All ordered cross-agent decision pairs with a strict time gap, sorted by
/// cause time, effect time, then agent ids.
pub fn enumerate_candidates(decisions: &DecisionSet) -> Vec<CandidateLink> {
    let mut out = Vec::new();
    for cause_agent in decisions.agents() {
        for effect_agent in decisions.agents() {
            if cause_agent == effect_agent {
                continue;
            }
            for cause in decisions.for_agent(cause_agent) {
                for effect in decisions.for_agent(effect_agent) {
                    if cause.decision_time < effect.decision_time {
                        out.push(CandidateLink { cause: cause.clone(), effect: effect.clone() });
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| {
        a.cause
            .decision_time
            .total_cmp(&b.cause.decision_time)
            .then(a.effect.decision_time.total_cmp(&b.effect.decision_time))
            .then(a.cause.agent_id.cmp(&b.cause.agent_id))
            .then(a.effect.agent_id.cmp(&b.effect.agent_id))
    });
    out
}

/// Remove decisions from a set; the affected agents fall back to their
/// previous goal (or hold their initial speed when none precedes).
pub fn intervene(decisions: &DecisionSet, removed: &[&Decision]) -> Result<DecisionSet> {
    decisions.without(removed)
}

/// Reward factor for time-to-collision: saturates to 1 as ttc grows.
pub fn r_ttc(ttc: f64) -> f64 {
    1.0 - (-ttc).exp()
}

/// Reward factor for cumulative collision time.
///
/// The published step function rewards states with `cct > 0`, which
/// contradicts both the agency semantics (collision onset = agency loss) and
/// the stated purpose of the metric; the corrected polarity (reward 1 while
/// collision-free) is the default, with the literal form available for
/// reproduction runs.
pub fn r_cct(cct: f64, literal: bool) -> f64 {
    let reward_collided = if literal { 1.0 } else { 0.0 };
    if cct > 0.0 {
        reward_collided
    } else {
        1.0 - reward_collided
    }
}

/// Reward factor for speed: 0.5 at standstill, saturates to 1.
pub fn r_v(v: f64) -> f64 {
    1.0 - 0.5 * (-(0.1 * v).max(0.0)).exp()
}

/// Reward of one agent at time `t` in a trace, with the corrected collision
/// polarity.
pub fn reward_at(trace: &SimTrace, agent: &AgentId, t: f64) -> f64 {
    reward_at_with(trace, agent, t, false)
}

/// Reward with an explicit collision-reward polarity.
pub fn reward_at_with(trace: &SimTrace, agent: &AgentId, t: f64, literal_cct: bool) -> f64 {
    let Some(series) = trace.agent(agent) else {
        return 1.0;
    };
    let k = trace.index_at(t);
    if k < series.spawn {
        return 1.0;
    }
    r_ttc(series.ttc[k]) * r_cct(series.cct[k], literal_cct) * r_v(series.speed[k])
}

/// Minimum reward of `agent` over the sample window `(t_e, t_omega]`.
/// An empty window is neutral (1.0).
fn min_reward_after(
    trace: &SimTrace,
    agent: &AgentId,
    t_e: f64,
    t_omega: f64,
    literal_cct: bool,
) -> f64 {
    let Some(series) = trace.agent(agent) else {
        return 1.0;
    };
    let k_e = ((t_e - trace.t0) / trace.dt).round() as isize;
    let lo = (k_e + 1).max(series.spawn as isize) as usize;
    let hi = trace.index_at(t_omega);
    let mut min = 1.0f64;
    for k in lo..=hi.min(trace.n_samples().saturating_sub(1)) {
        let r = r_ttc(series.ttc[k]) * r_cct(series.cct[k], literal_cct) * r_v(series.speed[k]);
        min = min.min(r);
    }
    min
}

/// Agency-loss indicator: true iff the effect and cause agents' cumulative
/// collision times cross from zero to positive at the same step within
/// `(t_e, t_omega]`. With `any_collision`, a crossing of the effect agent
/// alone suffices.
pub fn agency_indicator(
    trace: &SimTrace,
    effect_agent: &AgentId,
    cause_agent: &AgentId,
    t_e: f64,
    t_omega: f64,
    any_collision: bool,
) -> bool {
    let Some(e) = trace.agent(effect_agent) else {
        return false;
    };
    let cause = trace.agent(cause_agent);
    let k_e = ((t_e - trace.t0) / trace.dt).round() as isize;
    let lo = (k_e + 1).max(1) as usize;
    let hi = trace.index_at(t_omega).min(trace.n_samples().saturating_sub(1));
    for k in lo..=hi {
        let e_crossed = e.cct[k] > 0.0 && e.cct[k - 1] <= 0.0;
        if !e_crossed {
            continue;
        }
        if any_collision {
            return true;
        }
        if let Some(c) = cause {
            if c.cct[k] > 0.0 && c.cct[k - 1] <= 0.0 {
                return true;
            }
        }
    }
    false
}

/// Simulate the four counterfactual worlds for one candidate link. All four
/// start from the recorded state at the cause decision time and share one
/// configuration, so their outcomes are directly comparable.
pub fn run_worlds(
    scene: &Scene,
    decisions: &DecisionSet,
    link: &CandidateLink,
    cfg: &CdConfig,
) -> Result<[WorldOutcome; 4]> {
    cfg.validate()?;
    let grid = &scene.grid;
    let effect_track = scene
        .track(&link.effect.agent_id)
        .ok_or_else(|| invalid(format!("effect agent {} not in scene", link.effect.agent_id)))?;

    let t_c = link.cause.decision_time;
    let t_e = link.effect.decision_time;
    let t_omega = effect_track.t_last(grid).min(grid.t_end());
    let sim_cfg = SimConfig {
        dt: cfg.dt.unwrap_or(grid.dt),
        start_time: t_c,
        horizon: (t_omega - t_c).max(0.0),
        ttc_horizon: cfg.ttc_horizon,
    };

    let sets = [
        decisions.clone(),
        intervene(decisions, &[&link.effect])?,
        intervene(decisions, &[&link.cause])?,
        intervene(decisions, &[&link.effect, &link.cause])?,
    ];

    let mut outcomes = Vec::with_capacity(4);
    for (variant, set) in WORLD_VARIANTS.into_iter().zip(sets) {
        let trace = simulate(scene, &set, &sim_cfg)?;
        let min_reward =
            min_reward_after(&trace, &link.effect.agent_id, t_e, t_omega, cfg.literal_cct_reward);
        let agency_loss = agency_indicator(
            &trace,
            &link.effect.agent_id,
            &link.cause.agent_id,
            t_e,
            t_omega,
            cfg.any_collision_agency,
        );
        outcomes.push(WorldOutcome { variant, trace, min_reward, agency_loss });
    }
    Ok(outcomes.try_into().expect("exactly four worlds"))
}

/// Result of the reward-based link test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTest {
    /// Advantage of taking E given C: `minR(EC) - minR(notE,C)`.
    pub d_plus: f64,
    /// Disadvantage of taking E absent C: `minR(notE,notC) - minR(E,notC)`.
    pub d_minus: f64,
    pub accepted: bool,
}

impl RewardTest {
    pub fn score(&self) -> f64 {
        self.d_plus + self.d_minus
    }
}

/// Threshold the combined reward advantage of the effect decision.
pub fn reward_test(outcomes: &[WorldOutcome; 4], lambda: f64) -> RewardTest {
    let d_plus = outcomes[0].min_reward - outcomes[1].min_reward;
    let d_minus = outcomes[3].min_reward - outcomes[2].min_reward;
    RewardTest { d_plus, d_minus, accepted: d_plus + d_minus >= lambda }
}

/// Agency patterns over the four worlds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AgencyPatterns {
    /// E had to be taken after C to avoid losing agency.
    pub active: bool,
    /// Taking E without C would have lost agency.
    pub passive: bool,
    /// Agency is lost without C regardless of E: untestable.
    pub facilitation: bool,
    /// Skipping E loses agency regardless of C: independently motivated.
    pub mutual_effect_motive: bool,
}

/// Evaluate the four agency patterns and the combined agency verdict from
/// the indicators ordered `[EC, notE_C, E_notC, notE_notC]`.
pub fn agency_test(indicators: [bool; 4]) -> (bool, AgencyPatterns) {
    let [a_ec, a_ne_c, a_e_nc, a_ne_nc] = indicators;
    let patterns = AgencyPatterns {
        active: !a_ec && a_ne_c && !a_ne_nc,
        passive: !a_ec && a_e_nc && !a_ne_nc,
        facilitation: !a_ec && a_e_nc && a_ne_nc,
        mutual_effect_motive: !a_ec && a_ne_c && a_ne_nc,
    };
    let accepted = (patterns.active || patterns.passive)
        && !(patterns.facilitation || patterns.mutual_effect_motive);
    (accepted, patterns)
}

/// Hybrid verdict: agency acceptance, or reward acceptance not vetoed by an
/// agency pattern.
pub fn hybrid_test(patterns: &AgencyPatterns, xi_r: bool) -> bool {
    (patterns.active || patterns.passive || xi_r)
        && !(patterns.facilitation || patterns.mutual_effect_motive)
}

/// Per-candidate diagnostics: the qualitative payoff of the counterfactual
/// method, produced for every candidate regardless of the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateDiagnostics {
    pub cause: Decision,
    pub effect: Decision,
    /// Min rewards ordered `[EC, notE_C, E_notC, notE_notC]`.
    pub min_rewards: [f64; 4],
    #[serde(rename = "dR_plus")]
    pub d_plus: f64,
    #[serde(rename = "dR_minus")]
    pub d_minus: f64,
    /// Agency-loss indicators ordered `[EC, notE_C, E_notC, notE_notC]`.
    #[serde(rename = "agency_flags")]
    pub agency: [bool; 4],
    pub patterns: AgencyPatterns,
    pub xi_r: bool,
    pub xi_a: bool,
    pub xi_h: bool,
    pub accepted: bool,
}

/// Full discovery output for one scene.
#[derive(Debug, Clone)]
pub struct Discovery {
    pub decision_graph: DecisionCausalGraph,
    pub entity_graph: EntityCausalGraph,
    pub candidates: Vec<CandidateDiagnostics>,
    pub wall_time_s: f64,
}

/// Extract decisions, test every candidate link with the configured variant
/// and assemble the decision- and entity-level graphs.
pub fn discover(scene: &Scene, cfg: &CdConfig) -> Result<Discovery> {
    cfg.validate()?;
    if scene.tracks.len() < 2 {
        return Err(invalid(format!(
            "discovery needs at least 2 agents, scene has {}",
            scene.tracks.len()
        )));
    }
    let watch = Stopwatch::start();
    let decisions = extract_all(scene, &cfg.extract)?;
    let candidates = enumerate_candidates(&decisions);

    let mut diagnostics = Vec::with_capacity(candidates.len());
    let mut links = Vec::new();
    for link in candidates {
        let outcomes = run_worlds(scene, &decisions, &link, cfg)?;
        let reward = reward_test(&outcomes, cfg.reward_threshold);
        let indicators = [
            outcomes[0].agency_loss,
            outcomes[1].agency_loss,
            outcomes[2].agency_loss,
            outcomes[3].agency_loss,
        ];
        let (xi_a, patterns) = agency_test(indicators);
        let xi_h = hybrid_test(&patterns, reward.accepted);
        let accepted = match cfg.variant {
            Variant::Reward => reward.accepted,
            Variant::Agency => xi_a,
            Variant::Hybrid => xi_h,
        };
        if accepted {
            links.push((link.cause.clone(), link.effect.clone()));
        }
        diagnostics.push(CandidateDiagnostics {
            cause: link.cause,
            effect: link.effect,
            min_rewards: [
                outcomes[0].min_reward,
                outcomes[1].min_reward,
                outcomes[2].min_reward,
                outcomes[3].min_reward,
            ],
            d_plus: reward.d_plus,
            d_minus: reward.d_minus,
            agency: indicators,
            patterns,
            xi_r: reward.accepted,
            xi_a,
            xi_h,
            accepted,
        });
    }

    let decision_graph = DecisionCausalGraph::new(decisions, links)?;
    let entity_graph = entity_projection(&decision_graph);
    Ok(Discovery {
        decision_graph,
        entity_graph,
        candidates: diagnostics,
        wall_time_s: watch.elapsed_s(),
    })
}

/// On-disk discovery report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub scene_id: String,
    pub variant: Variant,
    #[serde(rename = "lambda_dR")]
    pub lambda_d_r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub decision_links: Vec<(Decision, Decision)>,
    pub entity_edges: Vec<(AgentId, AgentId)>,
    pub candidates: Vec<CandidateDiagnostics>,
    pub wall_time_s: f64,
}

impl Discovery {
    pub fn to_report(&self, scene_id: &str, cfg: &CdConfig, config_hash: Option<String>) -> DiscoveryReport {
        DiscoveryReport {
            scene_id: scene_id.to_owned(),
            variant: cfg.variant,
            lambda_d_r: cfg.reward_threshold,
            config_hash,
            decision_links: self.decision_graph.links().to_vec(),
            entity_edges: self.entity_graph.edges().cloned().collect(),
            candidates: self.candidates.clone(),
            wall_time_s: self.wall_time_s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Goal;
    use approx::assert_abs_diff_eq;

    fn decision(agent: &str, t: f64, target_speed: f64, target_time: f64) -> Decision {
        Decision::new(AgentId::from(agent), t, Goal::new(target_speed, target_time).unwrap())
            .unwrap()
    }

    #[test]
    fn no_candidates_within_one_agent() {
        let d = DecisionSet::from_decisions([
            decision("a", 1.0, 10.0, 2.0),
            decision("a", 3.0, 12.0, 4.0),
            decision("a", 5.0, 14.0, 6.0),
        ])
        .unwrap();
        assert!(enumerate_candidates(&d).is_empty());
    }

    #[test]
    fn candidates_respect_time_order() {
        let d = DecisionSet::from_decisions([
            decision("a", 1.0, 10.0, 2.0),
            decision("b", 2.0, 12.0, 3.0),
        ])
        .unwrap();
        let c = enumerate_candidates(&d);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].cause.agent_id, AgentId::from("a"));
        assert_eq!(c[0].effect.agent_id, AgentId::from("b"));
    }

    #[test]
    fn simultaneous_decisions_are_not_candidates() {
        let d = DecisionSet::from_decisions([
            decision("a", 1.0, 10.0, 2.0),
            decision("b", 1.0, 12.0, 3.0),
        ])
        .unwrap();
        assert!(enumerate_candidates(&d).is_empty());
    }

    #[test]
    fn intervene_removes_and_validates() {
        let da = decision("a", 1.0, 10.0, 2.0);
        let db = decision("b", 2.0, 12.0, 3.0);
        let d = DecisionSet::from_decisions([da.clone(), db.clone()]).unwrap();

        let same = intervene(&d, &[]).unwrap();
        assert_eq!(same, d);

        let removed = intervene(&d, &[&da]).unwrap();
        assert_eq!(removed.len(), 1);
        assert!(!removed.contains(&da));

        let absent = decision("a", 5.0, 10.0, 6.0);
        assert!(intervene(&d, &[&absent]).is_err());
    }

    #[test]
    fn reward_factors_match_formulas() {
        assert_abs_diff_eq!(r_ttc(0.0), 0.0);
        assert_abs_diff_eq!(r_ttc(f64::INFINITY), 1.0);
        assert_abs_diff_eq!(r_v(0.0), 0.5);
        assert_abs_diff_eq!(r_v(30.0), 1.0 - 0.5 * (-3.0f64).exp(), epsilon = 1e-12);
        assert_eq!(r_cct(0.0, false), 1.0);
        assert_eq!(r_cct(0.5, false), 0.0);
        // Literal published polarity, kept for reproduction runs.
        assert_eq!(r_cct(0.5, true), 1.0);
        assert_eq!(r_cct(0.0, true), 0.0);
    }

    #[test]
    fn reward_product_example() {
        // ttc = inf, cct = 0, v = 30 -> approx 0.9751
        let r = r_ttc(f64::INFINITY) * r_cct(0.0, false) * r_v(30.0);
        assert_abs_diff_eq!(r, 0.9751, epsilon = 1e-4);
    }

    fn outcome(variant: WorldVariant, min_reward: f64, agency_loss: bool) -> WorldOutcome {
        use crate::sim::{simulate_from, BodyState, SimConfig};
        // Minimal one-agent trace; only min_reward/agency_loss matter here.
        let body = BodyState {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            speed: 10.0,
            angular_velocity: 0.0,
            long_accel: 0.0,
            half_length: 2.0,
            half_width: 1.0,
        };
        let trace = simulate_from(
            &[(AgentId::from("x"), body)],
            &DecisionSet::new(),
            &SimConfig { horizon: 0.0, ..Default::default() },
        )
        .unwrap();
        WorldOutcome { variant, trace, min_reward, agency_loss }
    }

    fn outcomes(minr: [f64; 4]) -> [WorldOutcome; 4] {
        [
            outcome(WorldVariant::Original, minr[0], false),
            outcome(WorldVariant::NoEffect, minr[1], false),
            outcome(WorldVariant::NoCause, minr[2], false),
            outcome(WorldVariant::NoEither, minr[3], false),
        ]
    }

    #[test]
    fn reward_test_on_symmetric_outcomes_rejects() {
        let t = reward_test(&outcomes([0.8, 0.8, 0.8, 0.8]), 0.01);
        assert_eq!(t.score(), 0.0);
        assert!(!t.accepted);
    }

    #[test]
    fn reward_test_arithmetic() {
        let t = reward_test(&outcomes([0.9, 0.0, 0.7, 0.9]), 1.0);
        assert_abs_diff_eq!(t.d_plus, 0.9);
        assert_abs_diff_eq!(t.d_minus, 0.2, epsilon = 1e-12);
        assert!(t.accepted);
    }

    #[test]
    fn reward_test_low_lambda_accepts_small_advantages() {
        let t = reward_test(&outcomes([0.5, 0.49, 0.5, 0.5]), 0.01);
        assert!(t.accepted);
    }

    #[test]
    fn agency_active_pattern_accepts() {
        let (xi, p) = agency_test([false, true, false, false]);
        assert!(p.active && !p.passive && !p.facilitation && !p.mutual_effect_motive);
        assert!(xi);
    }

    #[test]
    fn agency_all_quiet_rejects() {
        let (xi, p) = agency_test([false, false, false, false]);
        assert_eq!(p, AgencyPatterns::default());
        assert!(!xi);
    }

    #[test]
    fn agency_mutual_effect_motive_vetoes() {
        let (xi, p) = agency_test([false, true, false, true]);
        assert!(p.mutual_effect_motive);
        assert!(!xi);
    }

    #[test]
    fn hybrid_reward_only_accepts() {
        let p = AgencyPatterns::default();
        assert!(hybrid_test(&p, true));
        assert!(!hybrid_test(&p, false));
    }

    #[test]
    fn hybrid_facilitation_vetoes_reward() {
        let p = AgencyPatterns { facilitation: true, ..Default::default() };
        assert!(!hybrid_test(&p, true));
    }

    #[test]
    fn candidate_link_rejects_same_agent_and_bad_order() {
        let a1 = decision("a", 1.0, 10.0, 2.0);
        let a2 = decision("a", 3.0, 12.0, 4.0);
        let b = decision("b", 0.5, 9.0, 1.0);
        assert!(CandidateLink::new(a1.clone(), a2).is_err());
        assert!(CandidateLink::new(a1, b).is_err());
    }
}
