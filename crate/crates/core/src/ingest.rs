//! Trajectory-recording ingestion: CSV parsing into tracks on a uniform
//! grid, and extraction of three-agent causal convoy scenes with ground
//! truth.
//!
//! The CSV schema mirrors the public High-D column naming so the real
//! dataset maps on with a thin column-rename config:
//! `frame,id,x,y,xVelocity,yVelocity,xAcceleration,yAcceleration,laneId,width,height`
//! with one row per agent per frame. `x,y` are the body center in meters,
//! `width` is the box extent along x (vehicle length on these roads) and
//! `height` the extent along y. Acceleration columns are optional; when
//! absent the longitudinal acceleration is finite-differenced from speed.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scene::{
    AgentId, AgentTrack, EntityCausalGraph, Role, Scene, SceneMeta, TimeGrid,
};

/// Recording-level metadata recovered during parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub frame_rate: f64,
    pub recording_id: String,
    /// Observed lanes with their y extents.
    pub lanes: Vec<LaneInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneInfo {
    pub id: i64,
    pub y_min: f64,
    pub y_max: f64,
}

/// A parsed recording: tracks aligned to one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub grid: TimeGrid,
    pub tracks: Vec<AgentTrack>,
    pub meta: RecordingMeta,
}

/// Parsing options; `columns` maps canonical column names to the names used
/// by the file at hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOptions {
    pub frame_rate: f64,
    pub recording_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<BTreeMap<String, String>>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { frame_rate: 25.0, recording_id: "recording".to_owned(), columns: None }
    }
}

const CANONICAL_COLUMNS: [&str; 11] = [
    "frame",
    "id",
    "x",
    "y",
    "xVelocity",
    "yVelocity",
    "xAcceleration",
    "yAcceleration",
    "laneId",
    "width",
    "height",
];

struct RawRow {
    line: usize,
    frame: u64,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    ax: Option<f64>,
    ay: Option<f64>,
    lane_id: i64,
    width: f64,
    height: f64,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parse a trajectory CSV into per-agent tracks on a uniform grid at the
/// recording frame rate. Velocity vectors become scalar speed plus heading.
pub fn parse_tracks<R: Read>(reader: R, opts: &ParseOptions) -> Result<Recording> {
    if !(opts.frame_rate > 0.0) {
        return Err(invalid(format!("frame rate must be positive, got {}", opts.frame_rate)));
    }
    let dt = 1.0 / opts.frame_rate;
    let mut csv_reader = csv::ReaderBuilder::new().flexible(false).from_reader(reader);

    let headers = csv_reader.headers()?.clone();
    let resolve = |canonical: &str| -> Option<usize> {
        let name = opts
            .columns
            .as_ref()
            .and_then(|m| m.get(canonical).map(String::as_str))
            .unwrap_or(canonical);
        headers.iter().position(|h| h == name)
    };
    let mut idx = BTreeMap::new();
    for col in CANONICAL_COLUMNS {
        if let Some(i) = resolve(col) {
            idx.insert(col, i);
        } else if !matches!(col, "xAcceleration" | "yAcceleration") {
            return Err(parse_err(1, format!("missing required column {col:?}")));
        }
    }
    let has_accel = idx.contains_key("xAcceleration") && idx.contains_key("yAcceleration");

    let mut per_agent: BTreeMap<i64, Vec<RawRow>> = BTreeMap::new();
    for record in csv_reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |col: &str| -> Result<&str> {
            record
                .get(idx[col])
                .ok_or_else(|| parse_err(line, format!("missing field {col:?}")))
        };
        let num = |col: &str| -> Result<f64> {
            let raw = field(col)?;
            raw.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("column {col:?}: not a number: {raw:?}")))
        };
        let int = |col: &str| -> Result<i64> {
            let raw = field(col)?;
            raw.trim()
                .parse::<i64>()
                .map_err(|_| parse_err(line, format!("column {col:?}: not an integer: {raw:?}")))
        };

        let frame = int("frame")?;
        if frame < 0 {
            return Err(parse_err(line, format!("negative frame {frame}")));
        }
        let agent = int("id")?;
        let width = num("width")?;
        let height = num("height")?;
        if !(width > 0.0 && height > 0.0) {
            return Err(parse_err(line, "width and height must be positive"));
        }
        let (ax, ay) = if has_accel {
            (Some(num("xAcceleration")?), Some(num("yAcceleration")?))
        } else {
            (None, None)
        };
        per_agent.entry(agent).or_default().push(RawRow {
            line,
            frame: frame as u64,
            x: num("x")?,
            y: num("y")?,
            vx: num("xVelocity")?,
            vy: num("yVelocity")?,
            ax,
            ay,
            lane_id: int("laneId")?,
            width,
            height,
        });
    }

    let mut lanes: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    let mut min_frame = u64::MAX;
    let mut max_frame = 0u64;
    for rows in per_agent.values_mut() {
        rows.sort_by_key(|r| r.frame);
        for pair in rows.windows(2) {
            if pair[1].frame == pair[0].frame {
                return Err(parse_err(pair[1].line, "duplicate frame for agent"));
            }
            if pair[1].frame != pair[0].frame + 1 {
                return Err(invalid(format!(
                    "non-uniform frame spacing: gap between frames {} and {}",
                    pair[0].frame, pair[1].frame
                )));
            }
        }
        for r in rows.iter() {
            min_frame = min_frame.min(r.frame);
            max_frame = max_frame.max(r.frame);
            let e = lanes.entry(r.lane_id).or_insert((r.y, r.y));
            e.0 = e.0.min(r.y);
            e.1 = e.1.max(r.y);
        }
    }

    let meta = RecordingMeta {
        frame_rate: opts.frame_rate,
        recording_id: opts.recording_id.clone(),
        lanes: lanes
            .into_iter()
            .map(|(id, (y_min, y_max))| LaneInfo { id, y_min, y_max })
            .collect(),
    };

    if per_agent.is_empty() {
        return Ok(Recording {
            grid: TimeGrid::new(0.0, dt, 2)?,
            tracks: Vec::new(),
            meta,
        });
    }

    let n_steps = (max_frame - min_frame + 1).max(2) as usize;
    let grid = TimeGrid::new(min_frame as f64 * dt, dt, n_steps)?;

    let mut tracks = Vec::new();
    for (agent, rows) in per_agent {
        if rows.len() < 2 {
            continue; // a single-frame sighting carries no dynamics
        }
        let n = rows.len();
        let mut speed = Vec::with_capacity(n);
        let mut heading = Vec::with_capacity(n);
        let mut prev_heading = 0.0f64;
        for r in &rows {
            let v = r.vx.hypot(r.vy);
            let h = if v > 1e-9 { r.vy.atan2(r.vx) } else { prev_heading };
            prev_heading = h;
            speed.push(v);
            heading.push(h);
        }
        let long_accel: Vec<f64> = if has_accel {
            rows.iter()
                .zip(&heading)
                .map(|(r, h)| r.ax.unwrap() * h.cos() + r.ay.unwrap() * h.sin())
                .collect()
        } else {
            let mut a: Vec<f64> = speed.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
            a.push(*a.last().unwrap_or(&0.0));
            a
        };
        tracks.push(AgentTrack {
            agent_id: AgentId::new(agent.to_string()),
            first_step: (rows[0].frame - min_frame) as usize,
            x: rows.iter().map(|r| r.x).collect(),
            y: rows.iter().map(|r| r.y).collect(),
            heading,
            speed,
            long_accel,
            length: rows[0].width,
            width: rows[0].height,
            lane_id: rows[0].lane_id,
        });
    }

    Ok(Recording { grid, tracks, meta })
}

/// Write tracks back out in the canonical CSV schema. Inverse of
/// [`parse_tracks`] up to float rounding in the velocity decomposition.
pub fn write_tracks<W: Write>(recording: &Recording, out: W) -> Result<()> {
    let dt = 1.0 / recording.meta.frame_rate;
    let base_frame = (recording.grid.t_start / dt).round() as u64;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CANONICAL_COLUMNS)?;
    for track in &recording.tracks {
        for i in 0..track.n_steps() {
            let (s, c) = track.heading[i].sin_cos();
            let v = track.speed[i];
            let a = track.long_accel[i];
            w.write_record([
                (base_frame + (track.first_step + i) as u64).to_string(),
                track.agent_id.to_string(),
                format!("{}", track.x[i]),
                format!("{}", track.y[i]),
                format!("{}", v * c),
                format!("{}", v * s),
                format!("{}", a * c),
                format!("{}", a * s),
                track.lane_id.to_string(),
                format!("{}", track.length),
                format!("{}", track.width),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Convoy-scene extraction thresholds. The published work does not state
/// its values; these defaults are configurable and echoed into scene
/// metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneExtractionParams {
    /// Required swing of the head-tail relative speed (m/s).
    pub min_rel_speed_change: f64,
    /// Minimum common window of the convoy pair (s).
    pub min_scene_duration: f64,
    /// Maximum time headway throughout the window (s).
    pub max_headway: f64,
    /// Moving-average window (samples) applied to acceleration; 0 disables.
    pub smoothing_window: usize,
}

impl Default for SceneExtractionParams {
    fn default() -> Self {
        SceneExtractionParams {
            min_rel_speed_change: 5.0,
            min_scene_duration: 10.0,
            max_headway: 3.0,
            smoothing_window: 0,
        }
    }
}

impl SceneExtractionParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_rel_speed_change < 0.0 || self.min_scene_duration < 0.0 || self.max_headway < 0.0
        {
            return Err(invalid("scene extraction params must be non-negative".to_owned()));
        }
        Ok(())
    }
}

/// Slice a track to the closed grid-index window `[lo, hi]`, re-basing the
/// scene grid to start at `lo`.
fn slice_track(track: &AgentTrack, lo: usize, hi: usize) -> Option<AgentTrack> {
    let t_lo = track.first_step.max(lo);
    let t_hi = (track.first_step + track.n_steps() - 1).min(hi);
    if t_hi <= t_lo {
        return None;
    }
    let a = t_lo - track.first_step;
    let b = t_hi - track.first_step + 1;
    Some(AgentTrack {
        agent_id: track.agent_id.clone(),
        first_step: t_lo - lo,
        x: track.x[a..b].to_vec(),
        y: track.y[a..b].to_vec(),
        heading: track.heading[a..b].to_vec(),
        speed: track.speed[a..b].to_vec(),
        long_accel: track.long_accel[a..b].to_vec(),
        length: track.length,
        width: track.width,
        lane_id: track.lane_id,
    })
}

fn smooth_accel(track: &mut AgentTrack, window: usize) {
    if window <= 1 {
        return;
    }
    let half = window / 2;
    let src = track.long_accel.clone();
    let n = src.len();
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        track.long_accel[i] = src[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
    }
}

/// Mean driving direction along x: +1 or -1.
fn direction_sign(track: &AgentTrack) -> f64 {
    let s: f64 = track.heading.iter().map(|h| h.cos()).sum();
    if s >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

struct ConvoyWindow {
    lo: usize,
    hi: usize,
}

/// Check the convoy predicates for an ordered (head, tail) pair; returns the
/// qualifying window.
fn convoy_window(
    head: &AgentTrack,
    tail: &AgentTrack,
    grid: &TimeGrid,
    params: &SceneExtractionParams,
) -> Option<ConvoyWindow> {
    if head.lane_id != tail.lane_id {
        return None;
    }
    let dir = direction_sign(head);
    if dir != direction_sign(tail) {
        return None;
    }
    let lo = head.first_step.max(tail.first_step);
    let hi = (head.first_step + head.n_steps() - 1).min(tail.first_step + tail.n_steps() - 1);
    if hi <= lo {
        return None;
    }
    if (hi - lo) as f64 * grid.dt < params.min_scene_duration {
        return None;
    }

    let mut rel_min = f64::INFINITY;
    let mut rel_max = f64::NEG_INFINITY;
    for k in lo..=hi {
        let hi_i = k - head.first_step;
        let ti_i = k - tail.first_step;
        let gap_center = (head.x[hi_i] - tail.x[ti_i]) * dir;
        let gap_bumper = gap_center - 0.5 * (head.length + tail.length);
        if gap_bumper <= 0.0 {
            return None; // overlapping or passing, not a convoy
        }
        let headway = gap_bumper / tail.speed[ti_i].max(0.1);
        if headway > params.max_headway {
            return None;
        }
        let rel = head.speed[hi_i] - tail.speed[ti_i];
        rel_min = rel_min.min(rel);
        rel_max = rel_max.max(rel);
    }
    if rel_max - rel_min < params.min_rel_speed_change {
        return None;
    }
    Some(ConvoyWindow { lo, hi })
}

/// True when some third same-lane track sits between head and tail during
/// the window.
fn has_intruder(
    head: &AgentTrack,
    tail: &AgentTrack,
    others: &[AgentTrack],
    window: &ConvoyWindow,
) -> bool {
    let dir = direction_sign(head);
    for other in others {
        if other.agent_id == head.agent_id
            || other.agent_id == tail.agent_id
            || other.lane_id != head.lane_id
        {
            continue;
        }
        for k in window.lo..=window.hi {
            let (Some(oi), Some(hi_i), Some(ti_i)) = (
                k.checked_sub(other.first_step).filter(|i| *i < other.n_steps()),
                k.checked_sub(head.first_step).filter(|i| *i < head.n_steps()),
                k.checked_sub(tail.first_step).filter(|i| *i < tail.n_steps()),
            ) else {
                continue;
            };
            let pos = other.x[oi] * dir;
            if pos > tail.x[ti_i] * dir && pos < head.x[hi_i] * dir {
                return true;
            }
        }
    }
    false
}

/// Find head/tail convoy pairs with a qualifying relative-speed swing,
/// attach an independent vehicle from another lane, and package each as a
/// scene with `{head -> tail}` ground truth.
pub fn extract_causal_scenes(
    recording: &Recording,
    params: &SceneExtractionParams,
) -> Result<Vec<Scene>> {
    params.validate()?;
    let grid = &recording.grid;
    let tracks = &recording.tracks;
    let mut scenes = Vec::new();

    for head in tracks {
        for tail in tracks {
            if head.agent_id == tail.agent_id {
                continue;
            }
            let Some(window) = convoy_window(head, tail, grid, params) else {
                continue;
            };
            if has_intruder(head, tail, tracks, &window) {
                continue;
            }

            // Most-overlapping vehicle from a different lane.
            let mut best: Option<(&AgentTrack, usize)> = None;
            for other in tracks {
                if other.lane_id == head.lane_id {
                    continue;
                }
                let o_lo = other.first_step.max(window.lo);
                let o_hi = (other.first_step + other.n_steps() - 1).min(window.hi);
                if o_hi <= o_lo {
                    continue;
                }
                let overlap = o_hi - o_lo;
                let better = match best {
                    None => true,
                    Some((b, len)) => {
                        overlap > len || (overlap == len && other.agent_id < b.agent_id)
                    }
                };
                if better {
                    best = Some((other, overlap));
                }
            }
            let Some((indep, overlap)) = best else {
                continue;
            };
            // The independent agent must cover at least half the window.
            if overlap * 2 < window.hi - window.lo {
                continue;
            }

            let scene_grid =
                TimeGrid::new(grid.time(window.lo), grid.dt, window.hi - window.lo + 1)?;
            let mut scene_tracks = Vec::new();
            for t in [head, tail, indep] {
                let Some(mut sliced) = slice_track(t, window.lo, window.hi) else {
                    continue;
                };
                smooth_accel(&mut sliced, params.smoothing_window);
                scene_tracks.push(sliced);
            }
            if scene_tracks.len() != 3 {
                continue;
            }

            let mut truth = EntityCausalGraph::with_nodes([
                head.agent_id.clone(),
                tail.agent_id.clone(),
                indep.agent_id.clone(),
            ]);
            truth.add_edge(head.agent_id.clone(), tail.agent_id.clone())?;

            let roles = BTreeMap::from([
                (head.agent_id.clone(), Role::ConvoyHead),
                (tail.agent_id.clone(), Role::ConvoyTail),
                (indep.agent_id.clone(), Role::Independent),
            ]);

            let scene = Scene {
                grid: scene_grid,
                tracks: scene_tracks,
                roles,
                ground_truth: Some(truth),
                meta: SceneMeta {
                    id: Some(format!(
                        "{}-h{}t{}",
                        recording.meta.recording_id, head.agent_id, tail.agent_id
                    )),
                    source: Some(recording.meta.recording_id.clone()),
                    collision_certified: None,
                    config_hash: None,
                    params: Some(serde_json::to_value(params)?),
                },
            };
            scene.validate()?;
            scenes.push(scene);
        }
    }
    Ok(scenes)
}
