//! Core domain types shared by every stage of the pipeline: time grids,
//! recorded agent tracks, target-speed decisions, causal graphs and the
//! decision-to-entity projection.
//!
//! All types are immutable values after construction and safe to share
//! between concurrent workers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative tolerance used when snapping a time to a grid index.
const GRID_SNAP_TOL: f64 = 1e-6;

/// Opaque agent identifier. Ordering is lexicographic, which fixes the
/// iteration order of every map keyed by agent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        AgentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_owned())
    }
}

/// Uniform time grid. Sample `k` sits at `t_start + k * dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("grid step must be positive, got {dt}")));
        }
        if n_steps < 2 {
            return Err(invalid(format!("grid needs at least 2 steps, got {n_steps}")));
        }
        Ok(TimeGrid { t_start, dt, n_steps })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps - 1)
    }

    /// Snap `t` to its sample index, tolerating float noise of a few ulps.
    /// Returns `None` for off-grid or out-of-range times.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let raw = (t - self.t_start) / self.dt;
        let k = raw.round();
        if k < 0.0 || k as usize >= self.n_steps {
            return None;
        }
        if (raw - k).abs() > GRID_SNAP_TOL.max(raw.abs() * GRID_SNAP_TOL) {
            return None;
        }
        Some(k as usize)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.index_of(t).is_some()
    }
}

/// Per-agent recording on the scene grid. Series index `i` corresponds to
/// grid sample `first_step + i`; all series have equal length.
///
/// Speed is a signed scalar along the heading; ingestion converts raw
/// velocity vectors. `long_accel` is the longitudinal actuation series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrack {
    pub agent_id: AgentId,
    pub first_step: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub heading: Vec<f64>,
    pub speed: Vec<f64>,
    pub long_accel: Vec<f64>,
    pub length: f64,
    pub width: f64,
    pub lane_id: i64,
}

impl AgentTrack {
    pub fn n_steps(&self) -> usize {
        self.speed.len()
    }

    pub fn t_first(&self, grid: &TimeGrid) -> f64 {
        grid.time(self.first_step)
    }

    pub fn t_last(&self, grid: &TimeGrid) -> f64 {
        grid.time(self.first_step + self.n_steps() - 1)
    }

    /// Local sample index for time `t`, if the capture window covers it.
    pub fn sample_index(&self, grid: &TimeGrid, t: f64) -> Option<usize> {
        let k = grid.index_of(t)?;
        if k < self.first_step || k >= self.first_step + self.n_steps() {
            return None;
        }
        Some(k - self.first_step)
    }

    pub fn covers(&self, grid: &TimeGrid, t: f64) -> bool {
        self.sample_index(grid, t).is_some()
    }

    /// Hard structural invariants. Series alignment and positive extents are
    /// errors; speed/acceleration inconsistency is a data-quality warning
    /// reported by [`Scene::validate`] instead.
    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        let n = self.n_steps();
        if n < 2 {
            return Err(invalid(format!("track {}: needs at least 2 steps", self.agent_id)));
        }
        for (name, len) in [
            ("x", self.x.len()),
            ("y", self.y.len()),
            ("heading", self.heading.len()),
            ("long_accel", self.long_accel.len()),
        ] {
            if len != n {
                return Err(invalid(format!(
                    "track {}: series {name} has {len} samples, expected {n}",
                    self.agent_id
                )));
            }
        }
        if self.first_step + n > grid.n_steps {
            return Err(invalid(format!(
                "track {}: capture window [{}, {}) exceeds grid of {} steps",
                self.agent_id,
                self.first_step,
                self.first_step + n,
                grid.n_steps
            )));
        }
        if !(self.length > 0.0) || !(self.width > 0.0) {
            return Err(invalid(format!(
                "track {}: length and width must be positive",
                self.agent_id
            )));
        }
        if self.speed.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(invalid(format!(
                "track {}: speed series must be finite and non-negative",
                self.agent_id
            )));
        }
        Ok(())
    }

    /// Largest `|v[i+1] - (v[i] + a[i] dt)|` over the capture window.
    pub fn max_speed_accel_residual(&self, dt: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_steps().saturating_sub(1) {
            let predicted = self.speed[i] + self.long_accel[i] * dt;
            worst = worst.max((self.speed[i + 1] - predicted).abs());
        }
        worst
    }
}

/// Goal target for the speed base variable: reach `target_speed` by
/// `target_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub target_speed: f64,
    pub target_time: f64,
}

impl Goal {
    pub fn new(target_speed: f64, target_time: f64) -> Result<Self> {
        if target_speed < 0.0 || !target_speed.is_finite() {
            return Err(invalid(format!("goal target speed must be >= 0, got {target_speed}")));
        }
        Ok(Goal { target_speed, target_time })
    }
}

/// A goal-variable event: the agent commits at `decision_time` to reach the
/// goal. These are the atoms causal discovery operates on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub agent_id: AgentId,
    #[serde(rename = "t")]
    pub decision_time: f64,
    #[serde(flatten)]
    pub goal: Goal,
}

impl Decision {
    pub fn new(agent_id: AgentId, decision_time: f64, goal: Goal) -> Result<Self> {
        if goal.target_time < decision_time {
            return Err(invalid(format!(
                "decision at t={decision_time} has target time {} in its past",
                goal.target_time
            )));
        }
        Ok(Decision { agent_id, decision_time, goal })
    }

    /// Hold-current-state decision: target equals the state at `t`.
    pub fn hold(agent_id: AgentId, t: f64, speed: f64) -> Self {
        Decision {
            agent_id,
            decision_time: t,
            goal: Goal { target_speed: speed, target_time: t },
        }
    }
}

/// Time-ordered decisions per agent. Enforces that decision times strictly
/// increase and that goal pursuits do not overlap: a decision may not arrive
/// before the previous goal's target time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionSet {
    by_agent: BTreeMap<AgentId, Vec<Decision>>,
}

impl DecisionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_decisions(decisions: impl IntoIterator<Item = Decision>) -> Result<Self> {
        let mut set = Self::new();
        for d in decisions {
            set.insert(d)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, d: Decision) -> Result<()> {
        let list = self.by_agent.entry(d.agent_id.clone()).or_default();
        let pos = list.partition_point(|e| e.decision_time < d.decision_time);
        if let Some(prev) = pos.checked_sub(1).map(|i| &list[i]) {
            if prev.decision_time == d.decision_time {
                return Err(invalid(format!(
                    "agent {}: duplicate decision time {}",
                    d.agent_id, d.decision_time
                )));
            }
            if d.decision_time < prev.goal.target_time {
                return Err(invalid(format!(
                    "agent {}: decision at {} overlaps goal pursued until {}",
                    d.agent_id, d.decision_time, prev.goal.target_time
                )));
            }
        }
        if let Some(next) = list.get(pos) {
            if next.decision_time == d.decision_time {
                return Err(invalid(format!(
                    "agent {}: duplicate decision time {}",
                    d.agent_id, d.decision_time
                )));
            }
            if next.decision_time < d.goal.target_time {
                return Err(invalid(format!(
                    "agent {}: decision at {} overlaps goal pursued until {}",
                    d.agent_id, next.decision_time, d.goal.target_time
                )));
            }
        }
        list.insert(pos, d);
        Ok(())
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentId> {
        self.by_agent.keys()
    }

    pub fn for_agent(&self, id: &AgentId) -> &[Decision] {
        self.by_agent.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All decisions, ordered by agent then time.
    pub fn iter(&self) -> impl Iterator<Item = &Decision> {
        self.by_agent.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_agent.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, d: &Decision) -> bool {
        self.for_agent(&d.agent_id).iter().any(|e| e == d)
    }

    /// Copy without the given decisions. Errors if any is absent.
    pub fn without(&self, removed: &[&Decision]) -> Result<DecisionSet> {
        for d in removed {
            if !self.contains(d) {
                return Err(invalid(format!(
                    "cannot remove decision of agent {} at t={}: not in set",
                    d.agent_id, d.decision_time
                )));
            }
        }
        let mut out = self.clone();
        for d in removed {
            let list = out.by_agent.get_mut(&d.agent_id).expect("checked above");
            list.retain(|e| e != *d);
        }
        Ok(out)
    }
}

/// Role of an agent within an extracted causal scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    ConvoyHead,
    ConvoyTail,
    Independent,
}

/// Optional scene annotations produced by ingestion or generation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Set by the synthetic generator: removing the tail's braking decision
    /// produces a collision in simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision_certified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

/// A recorded scene: shared grid, agent tracks, optional roles and ground
/// truth for evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub grid: TimeGrid,
    pub tracks: Vec<AgentTrack>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub roles: BTreeMap<AgentId, Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<EntityCausalGraph>,
    #[serde(default, skip_serializing_if = "is_default_meta")]
    pub meta: SceneMeta,
}

fn is_default_meta(m: &SceneMeta) -> bool {
    *m == SceneMeta::default()
}

/// A data-quality observation that does not invalidate the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneWarning {
    pub agent_id: AgentId,
    pub message: String,
}

/// Speed/acceleration residual above this is reported as a warning.
const SPEED_ACCEL_WARN_TOL: f64 = 0.2;

impl Scene {
    /// Check all hard invariants; returns data-quality warnings on success.
    pub fn validate(&self) -> Result<Vec<SceneWarning>> {
        let mut seen = BTreeSet::new();
        for track in &self.tracks {
            if !seen.insert(&track.agent_id) {
                return Err(invalid(format!("duplicate agent id {}", track.agent_id)));
            }
            track.validate(&self.grid)?;
        }
        for id in self.roles.keys() {
            if !seen.contains(id) {
                return Err(invalid(format!("role assigned to unknown agent {id}")));
            }
        }
        if let Some(truth) = &self.ground_truth {
            for id in truth.nodes() {
                if !seen.contains(id) {
                    return Err(invalid(format!("ground truth references unknown agent {id}")));
                }
            }
            for track in &self.tracks {
                if !self.roles.contains_key(&track.agent_id) {
                    return Err(invalid(format!(
                        "agent {} has no role but scene has ground truth",
                        track.agent_id
                    )));
                }
            }
        }
        let mut warnings = Vec::new();
        for track in &self.tracks {
            let residual = track.max_speed_accel_residual(self.grid.dt);
            if residual > SPEED_ACCEL_WARN_TOL {
                warnings.push(SceneWarning {
                    agent_id: track.agent_id.clone(),
                    message: format!(
                        "speed/acceleration mismatch up to {residual:.3} m/s per step"
                    ),
                });
            }
        }
        Ok(warnings)
    }

    pub fn track(&self, id: &AgentId) -> Option<&AgentTrack> {
        self.tracks.iter().find(|t| &t.agent_id == id)
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = &AgentId> {
        self.tracks.iter().map(|t| &t.agent_id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Scene> {
        let scene: Scene = serde_json::from_str(json)?;
        scene.validate()?;
        Ok(scene)
    }
}

/// Decision-level causal graph: the discovered decisions plus links between
/// them. Links always run across agents and forward in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecisionGraphRepr", into = "DecisionGraphRepr")]
pub struct DecisionCausalGraph {
    decisions: DecisionSet,
    links: Vec<(Decision, Decision)>,
}

#[derive(Serialize, Deserialize)]
struct DecisionGraphRepr {
    decisions: DecisionSet,
    links: Vec<(Decision, Decision)>,
}

impl From<DecisionCausalGraph> for DecisionGraphRepr {
    fn from(g: DecisionCausalGraph) -> Self {
        DecisionGraphRepr { decisions: g.decisions, links: g.links }
    }
}

impl TryFrom<DecisionGraphRepr> for DecisionCausalGraph {
    type Error = Error;

    fn try_from(r: DecisionGraphRepr) -> Result<Self> {
        DecisionCausalGraph::new(r.decisions, r.links)
    }
}

impl DecisionCausalGraph {
    pub fn new(decisions: DecisionSet, links: Vec<(Decision, Decision)>) -> Result<Self> {
        for (cause, effect) in &links {
            if cause.agent_id == effect.agent_id {
                return Err(invalid(format!(
                    "link within agent {} is not allowed",
                    cause.agent_id
                )));
            }
            if cause.decision_time >= effect.decision_time {
                return Err(invalid(format!(
                    "link must run forward in time: {} !< {}",
                    cause.decision_time, effect.decision_time
                )));
            }
            if !decisions.contains(cause) || !decisions.contains(effect) {
                return Err(invalid(
                    "link references a decision outside the decision set".to_owned(),
                ));
            }
        }
        Ok(DecisionCausalGraph { decisions, links })
    }

    pub fn decisions(&self) -> &DecisionSet {
        &self.decisions
    }

    pub fn links(&self) -> &[(Decision, Decision)] {
        &self.links
    }
}

/// Agent-to-agent digraph projected from decision links; the unit the
/// evaluation harness scores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct EntityCausalGraph {
    nodes: BTreeSet<AgentId>,
    edges: BTreeSet<(AgentId, AgentId)>,
}

/// On-disk form of an entity graph: `{nodes, edges}` with optional decision
/// links carried alongside by discovery reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: Vec<AgentId>,
    pub edges: Vec<(AgentId, AgentId)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_links: Option<Vec<(Decision, Decision)>>,
}

impl From<EntityCausalGraph> for GraphFile {
    fn from(g: EntityCausalGraph) -> Self {
        GraphFile {
            nodes: g.nodes.into_iter().collect(),
            edges: g.edges.into_iter().collect(),
            decision_links: None,
        }
    }
}

impl TryFrom<GraphFile> for EntityCausalGraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        let mut g = EntityCausalGraph::with_nodes(f.nodes);
        for (src, dst) in f.edges {
            g.add_edge(src, dst)?;
        }
        Ok(g)
    }
}

impl EntityCausalGraph {
    pub fn new() -> Self {
        EntityCausalGraph { nodes: BTreeSet::new(), edges: BTreeSet::new() }
    }

    pub fn with_nodes(nodes: impl IntoIterator<Item = AgentId>) -> Self {
        EntityCausalGraph { nodes: nodes.into_iter().collect(), edges: BTreeSet::new() }
    }

    pub fn add_node(&mut self, id: AgentId) {
        self.nodes.insert(id);
    }

    pub fn add_edge(&mut self, src: AgentId, dst: AgentId) -> Result<()> {
        if src == dst {
            return Err(invalid(format!("self-loop on agent {src}")));
        }
        if !self.nodes.contains(&src) || !self.nodes.contains(&dst) {
            return Err(invalid(format!("edge {src} -> {dst} references unknown node")));
        }
        self.edges.insert((src, dst));
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = &AgentId> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &(AgentId, AgentId)> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, src: &AgentId, dst: &AgentId) -> bool {
        self.edges.contains(&(src.clone(), dst.clone()))
    }

    pub fn has_node(&self, id: &AgentId) -> bool {
        self.nodes.contains(id)
    }

    pub fn same_nodes(&self, other: &EntityCausalGraph) -> bool {
        self.nodes == other.nodes
    }
}

impl Default for EntityCausalGraph {
    fn default() -> Self {
        Self::new()
    }
}

/// Project decision links onto agents: edge `(a, b)` exists iff some link
/// runs from a decision of `a` to a decision of `b`. Nodes are all agents
/// present in the decision set.
pub fn entity_projection(g: &DecisionCausalGraph) -> EntityCausalGraph {
    let mut out = EntityCausalGraph::with_nodes(g.decisions().agents().cloned());
    for (cause, effect) in g.links() {
        out.add_edge(cause.agent_id.clone(), effect.agent_id.clone())
            .expect("decision graph invariants guarantee valid entity edges");
    }
    out
}
