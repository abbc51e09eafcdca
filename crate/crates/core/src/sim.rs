//! Deterministic 2D rigid-body kinematic world with a proportional speed
//! controller, staged collision detection and surrogate safety metrics.
//!
//! The simulator owns all mutable state internally; traces are immutable
//! outputs, so any number of simulations can run concurrently. Identical
//! inputs always produce identical traces.

use std::collections::BTreeMap;

use crate::collision::{obb_overlap, Obb};
use crate::error::{invalid, Result};
use crate::scene::{AgentId, AgentTrack, DecisionSet, Goal, Scene, TimeGrid};

/// Rigid-body pose and motion state of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub angular_velocity: f64,
    pub long_accel: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl BodyState {
    pub fn obb(&self) -> Obb {
        Obb {
            cx: self.x,
            cy: self.y,
            heading: self.heading,
            half_length: self.half_length,
            half_width: self.half_width,
        }
    }
}

/// World snapshot: bodies plus per-agent cumulative collision time.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time: f64,
    pub bodies: BTreeMap<AgentId, BodyState>,
    pub collision_time: BTreeMap<AgentId, f64>,
}

impl WorldState {
    pub fn new(time: f64) -> Self {
        WorldState { time, bodies: BTreeMap::new(), collision_time: BTreeMap::new() }
    }

    pub fn insert(&mut self, id: AgentId, body: BodyState) {
        self.collision_time.entry(id.clone()).or_insert(0.0);
        self.bodies.insert(id, body);
    }
}

/// Fixed-step simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub start_time: f64,
    pub horizon: f64,
    /// Cap for the time-to-collision search.
    pub ttc_horizon: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 0.04, start_time: 0.0, horizon: 0.0, ttc_horizon: 20.0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!("simulation step must be positive, got {}", self.dt)));
        }
        if self.horizon < 0.0 || !self.horizon.is_finite() {
            return Err(invalid(format!("horizon must be >= 0, got {}", self.horizon)));
        }
        if !(self.ttc_horizon > 0.0) {
            return Err(invalid(format!("ttc horizon must be > 0, got {}", self.ttc_horizon)));
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        (self.horizon / self.dt + 1e-9).floor() as usize
    }
}

/// Proportional controller: acceleration that closes the speed error by the
/// goal target time, or within a single step once that time has passed.
pub fn controller_acceleration(current_speed: f64, goal: &Goal, now: f64, dt: f64) -> f64 {
    (goal.target_speed - current_speed) / (goal.target_time - now).max(dt)
}

/// Staged oriented-rectangle overlap between two bodies.
pub fn check_collision(a: &BodyState, b: &BodyState) -> bool {
    obb_overlap(&a.obb(), &b.obb())
}

fn hold_goal(body: &BodyState, now: f64) -> Goal {
    Goal { target_speed: body.speed, target_time: now }
}

/// Advance the world by one step. Speeds clamp at zero, headings rotate at
/// the stored angular velocity, positions advance along the heading at the
/// trapezoidal mean of old and new speed. Collision time accumulates for
/// every agent overlapping another at the new positions.
pub fn step(w: &WorldState, goals: &BTreeMap<AgentId, Goal>, cfg: &SimConfig) -> WorldState {
    let dt = cfg.dt;
    let mut next = WorldState::new(w.time + dt);
    next.collision_time = w.collision_time.clone();

    for (id, body) in &w.bodies {
        let goal = goals.get(id).copied().unwrap_or_else(|| hold_goal(body, w.time));
        let accel = controller_acceleration(body.speed, &goal, w.time, dt);
        let new_speed = (body.speed + accel * dt).max(0.0);
        let dist = 0.5 * (body.speed + new_speed) * dt;
        let mut b = *body;
        b.x += dist * body.heading.cos();
        b.y += dist * body.heading.sin();
        b.heading += body.angular_velocity * dt;
        b.speed = new_speed;
        b.long_accel = accel;
        next.bodies.insert(id.clone(), b);
    }

    let ids: Vec<&AgentId> = next.bodies.keys().collect();
    let mut colliding: Vec<&AgentId> = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if check_collision(&next.bodies[ids[i]], &next.bodies[ids[j]]) {
                colliding.push(ids[i]);
                colliding.push(ids[j]);
            }
        }
    }
    let colliding: Vec<AgentId> = colliding.into_iter().cloned().collect();
    for id in colliding {
        *next.collision_time.entry(id).or_insert(0.0) += dt;
    }
    next
}

/// Straight-line projection view used by the TTC search.
#[derive(Clone, Copy)]
struct Projectile {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    heading: f64,
    half_length: f64,
    half_width: f64,
    radius: f64,
}

impl Projectile {
    fn from_body(b: &BodyState) -> Self {
        let (s, c) = b.heading.sin_cos();
        let obb = b.obb();
        Projectile {
            x: b.x,
            y: b.y,
            vx: b.speed * c,
            vy: b.speed * s,
            heading: b.heading,
            half_length: b.half_length,
            half_width: b.half_width,
            radius: obb.bounding_radius(),
        }
    }

    fn obb_at(&self, tau: f64) -> Obb {
        Obb {
            cx: self.x + self.vx * tau,
            cy: self.y + self.vy * tau,
            heading: self.heading,
            half_length: self.half_length,
            half_width: self.half_width,
        }
    }
}

/// First step index in `[1, max_m]` at which the constant-velocity
/// projections of the pair overlap. Sweeps only the window where bounding
/// circles can touch; outside it the staged check rejects anyway.
fn pair_first_contact(a: &Projectile, b: &Projectile, dt: f64, max_m: usize) -> Option<usize> {
    if max_m == 0 {
        return None;
    }
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let dvx = b.vx - a.vx;
    let dvy = b.vy - a.vy;
    let r = a.radius + b.radius;

    let qa = dvx * dvx + dvy * dvy;
    let qb = 2.0 * (dx * dvx + dy * dvy);
    let qc = dx * dx + dy * dy - r * r;

    let (lo, hi) = if qa <= 1e-12 {
        if qc > 0.0 {
            return None; // never within circle reach
        }
        (1usize, max_m)
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let t_in = (-qb - sq) / (2.0 * qa);
        let t_out = (-qb + sq) / (2.0 * qa);
        if t_out <= 0.0 {
            return None;
        }
        // Widen by one step to absorb rounding at the window edges.
        let lo = ((t_in / dt).floor() as isize - 1).max(1) as usize;
        let hi = (((t_out / dt).ceil() as isize + 1).max(0) as usize).min(max_m);
        if lo > hi {
            return None;
        }
        (lo, hi)
    };

    for m in lo..=hi {
        let tau = m as f64 * dt;
        if obb_overlap(&a.obb_at(tau), &b.obb_at(tau)) {
            return Some(m);
        }
    }
    None
}

/// TTC for every body: smallest `tau` in `(0, ttc_horizon]`, at `dt`
/// resolution, at which the constant-velocity projection produces a
/// collision involving the agent; zero if already in collision; infinity
/// otherwise.
fn ttc_all(bodies: &[(AgentId, BodyState)], cfg: &SimConfig) -> Vec<f64> {
    let n = bodies.len();
    let mut ttc = vec![f64::INFINITY; n];
    let projs: Vec<Projectile> = bodies.iter().map(|(_, b)| Projectile::from_body(b)).collect();
    let max_m = (cfg.ttc_horizon / cfg.dt + 1e-9).floor() as usize;

    for i in 0..n {
        for j in i + 1..n {
            if obb_overlap(&bodies[i].1.obb(), &bodies[j].1.obb()) {
                ttc[i] = 0.0;
                ttc[j] = 0.0;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if ttc[i] == 0.0 && ttc[j] == 0.0 {
                continue;
            }
            if let Some(m) = pair_first_contact(&projs[i], &projs[j], cfg.dt, max_m) {
                let tau = m as f64 * cfg.dt;
                ttc[i] = ttc[i].min(tau);
                ttc[j] = ttc[j].min(tau);
            }
        }
    }
    ttc
}

/// TTC of one agent in the given world; infinity when the agent is absent
/// or no collision is predicted within the horizon.
pub fn time_to_collision(w: &WorldState, agent: &AgentId, cfg: &SimConfig) -> f64 {
    let bodies: Vec<(AgentId, BodyState)> =
        w.bodies.iter().map(|(id, b)| (id.clone(), *b)).collect();
    let ttcs = ttc_all(&bodies, cfg);
    bodies
        .iter()
        .position(|(id, _)| id == agent)
        .map(|i| ttcs[i])
        .unwrap_or(f64::INFINITY)
}

/// Per-agent simulated series. Samples before `spawn` hold NaN (series),
/// infinity (ttc) and zero (cct).
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSeries {
    pub spawn: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub heading: Vec<f64>,
    pub speed: Vec<f64>,
    pub accel: Vec<f64>,
    pub ttc: Vec<f64>,
    pub cct: Vec<f64>,
}

impl AgentSeries {
    fn empty(n: usize) -> Self {
        AgentSeries {
            spawn: usize::MAX,
            x: vec![f64::NAN; n],
            y: vec![f64::NAN; n],
            heading: vec![f64::NAN; n],
            speed: vec![f64::NAN; n],
            accel: vec![f64::NAN; n],
            ttc: vec![f64::INFINITY; n],
            cct: vec![0.0; n],
        }
    }
}

/// A closed interval during which a pair of agents overlapped.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionEvent {
    pub a: AgentId,
    pub b: AgentId,
    pub onset: f64,
    pub end: f64,
}

/// Output of one simulation run: per-agent series on a uniform grid plus the
/// collision event log.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub t0: f64,
    pub dt: f64,
    pub agents: BTreeMap<AgentId, AgentSeries>,
    pub collisions: Vec<CollisionEvent>,
    n_samples: usize,
}

impl SimTrace {
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_samples.saturating_sub(1))
    }

    /// Nearest sample index for `t`, clamped to the trace.
    pub fn index_at(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.dt).round();
        (k.max(0.0) as usize).min(self.n_samples.saturating_sub(1))
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentSeries> {
        self.agents.get(id)
    }

    /// Debug dump: one row per agent per sample.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "agent_id", "x", "y", "speed", "accel", "ttc", "cct"])?;
        for k in 0..self.n_samples {
            let t = self.time(k);
            for (id, s) in &self.agents {
                if k < s.spawn {
                    continue;
                }
                w.write_record([
                    format!("{t}"),
                    id.to_string(),
                    format!("{}", s.x[k]),
                    format!("{}", s.y[k]),
                    format!("{}", s.speed[k]),
                    format!("{}", s.accel[k]),
                    format!("{}", s.ttc[k]),
                    format!("{}", s.cct[k]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

struct AgentInit {
    id: AgentId,
    spawn: usize,
    body: BodyState,
}

fn body_from_track(track: &AgentTrack, i: usize, grid: &TimeGrid) -> BodyState {
    let angular_velocity = if i + 1 < track.n_steps() {
        (track.heading[i + 1] - track.heading[i]) / grid.dt
    } else if i > 0 {
        (track.heading[i] - track.heading[i - 1]) / grid.dt
    } else {
        0.0
    };
    BodyState {
        x: track.x[i],
        y: track.y[i],
        heading: track.heading[i],
        speed: track.speed[i],
        angular_velocity,
        long_accel: track.long_accel[i],
        half_length: track.length / 2.0,
        half_width: track.width / 2.0,
    }
}

/// Simulate a scene from recorded state at `cfg.start_time`. Every agent is
/// driven by the controller toward its decision goals; recorded data is only
/// used for initialization. Agents whose capture begins later spawn when it
/// does; agents that already left the scene are omitted.
pub fn simulate(scene: &Scene, decisions: &DecisionSet, cfg: &SimConfig) -> Result<SimTrace> {
    cfg.validate()?;
    let grid = &scene.grid;
    if grid.index_of(cfg.start_time).is_none() {
        return Err(invalid(format!(
            "simulation start {} is not on the scene grid",
            cfg.start_time
        )));
    }
    for agent in decisions.agents() {
        if scene.track(agent).is_none() {
            return Err(invalid(format!("decision agent {agent} is not in the scene")));
        }
    }

    let mut inits = Vec::new();
    for track in &scene.tracks {
        if let Some(i) = track.sample_index(grid, cfg.start_time) {
            inits.push(AgentInit {
                id: track.agent_id.clone(),
                spawn: 0,
                body: body_from_track(track, i, grid),
            });
        } else if track.t_first(grid) > cfg.start_time {
            let offset = (track.t_first(grid) - cfg.start_time) / cfg.dt;
            let spawn = if (offset - offset.round()).abs() < 1e-6 {
                offset.round() as usize
            } else {
                offset.ceil() as usize
            };
            inits.push(AgentInit {
                id: track.agent_id.clone(),
                spawn,
                body: body_from_track(track, 0, grid),
            });
        }
        // Tracks that ended before start_time never spawn.
    }
    run(inits, decisions, cfg)
}

/// Simulate from explicit initial bodies, all present from the start. Used
/// by the synthetic-scene generator and interactive frontends.
pub fn simulate_from(
    initial: &[(AgentId, BodyState)],
    decisions: &DecisionSet,
    cfg: &SimConfig,
) -> Result<SimTrace> {
    cfg.validate()?;
    for agent in decisions.agents() {
        if !initial.iter().any(|(id, _)| id == agent) {
            return Err(invalid(format!("decision agent {agent} has no initial body")));
        }
    }
    let inits = initial
        .iter()
        .map(|(id, body)| AgentInit { id: id.clone(), spawn: 0, body: *body })
        .collect();
    run(inits, decisions, cfg)
}

fn run(inits: Vec<AgentInit>, decisions: &DecisionSet, cfg: &SimConfig) -> Result<SimTrace> {
    let n_steps = cfg.n_steps();
    let n_samples = n_steps + 1;
    let dt = cfg.dt;

    let mut series: BTreeMap<AgentId, AgentSeries> = inits
        .iter()
        .map(|init| (init.id.clone(), AgentSeries::empty(n_samples)))
        .collect();

    let mut world = WorldState::new(cfg.start_time);
    let mut goals: BTreeMap<AgentId, Goal> = BTreeMap::new();
    let mut next_decision: BTreeMap<AgentId, usize> = BTreeMap::new();
    let mut active_pairs: BTreeMap<(AgentId, AgentId), f64> = BTreeMap::new();
    let mut events = Vec::new();

    for k in 0..n_samples {
        let t = cfg.start_time + k as f64 * dt;

        for init in inits.iter().filter(|i| i.spawn == k) {
            world.insert(init.id.clone(), init.body);
            goals.insert(init.id.clone(), hold_goal(&init.body, t));
            next_decision.insert(init.id.clone(), 0);
            series.get_mut(&init.id).expect("series preallocated").spawn = k;
        }

        // A decision becomes the active goal from its decision time onward.
        for (id, cursor) in next_decision.iter_mut() {
            let list = decisions.for_agent(id);
            while *cursor < list.len() && list[*cursor].decision_time <= t + 0.5 * dt {
                goals.insert(id.clone(), list[*cursor].goal);
                *cursor += 1;
            }
        }

        let bodies: Vec<(AgentId, BodyState)> =
            world.bodies.iter().map(|(id, b)| (id.clone(), *b)).collect();

        // Collision event bookkeeping at the current sample.
        let mut overlapping: Vec<(AgentId, AgentId)> = Vec::new();
        for i in 0..bodies.len() {
            for j in i + 1..bodies.len() {
                if check_collision(&bodies[i].1, &bodies[j].1) {
                    overlapping.push((bodies[i].0.clone(), bodies[j].0.clone()));
                }
            }
        }
        for pair in &overlapping {
            active_pairs.entry(pair.clone()).or_insert(t);
        }
        let closed: Vec<(AgentId, AgentId)> = active_pairs
            .keys()
            .filter(|p| !overlapping.contains(p))
            .cloned()
            .collect();
        for pair in closed {
            let onset = active_pairs.remove(&pair).expect("pair was active");
            events.push(CollisionEvent { a: pair.0, b: pair.1, onset, end: t });
        }

        let ttcs = ttc_all(&bodies, cfg);

        for (i, (id, body)) in bodies.iter().enumerate() {
            let goal = goals.get(id).copied().unwrap_or_else(|| hold_goal(body, t));
            let s = series.get_mut(id).expect("series preallocated");
            s.x[k] = body.x;
            s.y[k] = body.y;
            s.heading[k] = body.heading;
            s.speed[k] = body.speed;
            s.accel[k] = controller_acceleration(body.speed, &goal, t, dt);
            s.ttc[k] = ttcs[i];
            s.cct[k] = world.collision_time.get(id).copied().unwrap_or(0.0);
        }

        if k + 1 < n_samples {
            world = step(&world, &goals, cfg);
        }
    }

    let t_end = cfg.start_time + n_steps as f64 * dt;
    for ((a, b), onset) in active_pairs {
        events.push(CollisionEvent { a, b, onset, end: t_end + dt });
    }

    Ok(SimTrace { t0: cfg.start_time, dt, agents: series, collisions: events, n_samples })
}
