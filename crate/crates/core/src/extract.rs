//! Recovers target-speed decisions from recorded acceleration and speed
//! series.
//!
//! Candidate decision times are upward threshold crossings of the actuation
//! series (plus the window start); candidate goal target times are the
//! matching downward crossings (plus the window end). A paired walk over the
//! two sorted sets keeps a pair when the pursuit lasts at least
//! `min_duration` and changes speed by at least `min_speed_delta`. For each
//! candidate target time the walk pairs the latest candidate start before
//! it, so the reported decision time is the onset of the actuation burst
//! that achieved the change. A track with no qualifying pair yields the
//! hold-current-state fallback decision at the window start.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scene::{AgentTrack, Decision, DecisionSet, Goal, Scene, TimeGrid};

/// Thresholds for decision extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    /// Actuation magnitude that signals a deliberate speed change (m/s^2).
    pub accel_threshold: f64,
    /// Minimum time between decision and goal target (s).
    pub min_duration: f64,
    /// Minimum speed change between decision and goal target (m/s).
    pub min_speed_delta: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            accel_threshold: 0.2,
            min_duration: 1.0,
            min_speed_delta: 1.0,
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.accel_threshold > 0.0 && self.min_duration > 0.0 && self.min_speed_delta > 0.0) {
            return Err(invalid(
                "extraction thresholds must all be strictly positive".to_owned(),
            ));
        }
        Ok(())
    }
}

fn require_two_steps(track: &AgentTrack) -> Result<()> {
    if track.n_steps() < 2 {
        return Err(invalid(format!(
            "track {}: decision extraction needs at least 2 steps",
            track.agent_id
        )));
    }
    Ok(())
}

/// Local sample indices where the actuation series enters the
/// at-or-beyond-threshold regime (either sign), plus index 0.
fn start_indices(accel: &[f64], lambda: f64) -> Vec<usize> {
    let mut out = vec![0];
    for k in 0..accel.len() - 1 {
        let (a0, a1) = (accel[k], accel[k + 1]);
        if ((a0 < lambda && a1 >= lambda) || (a0 > -lambda && a1 <= -lambda))
            && *out.last().unwrap() != k + 1
        {
            out.push(k + 1);
        }
    }
    out
}

/// Local sample indices where the actuation series leaves the
/// at-or-beyond-threshold regime (either sign), plus the last index.
fn end_indices(accel: &[f64], lambda: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for k in 0..accel.len() - 1 {
        let (a0, a1) = (accel[k], accel[k + 1]);
        if ((a0 >= lambda && a1 < lambda) || (a0 <= -lambda && a1 > -lambda))
            && out.last() != Some(&(k + 1))
        {
            out.push(k + 1);
        }
    }
    if out.last() != Some(&(accel.len() - 1)) {
        out.push(accel.len() - 1);
    }
    out
}

/// Potential decision times: threshold onsets of the actuation series plus
/// the capture-window start. Sorted ascending, deduplicated.
pub fn candidate_start_times(
    track: &AgentTrack,
    grid: &TimeGrid,
    cfg: &ExtractConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    require_two_steps(track)?;
    Ok(start_indices(&track.long_accel, cfg.accel_threshold)
        .into_iter()
        .map(|i| grid.time(track.first_step + i))
        .collect())
}

/// Potential goal target times: threshold offsets of the actuation series
/// plus the capture-window end. Sorted ascending, deduplicated.
pub fn candidate_end_times(
    track: &AgentTrack,
    grid: &TimeGrid,
    cfg: &ExtractConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    require_two_steps(track)?;
    Ok(end_indices(&track.long_accel, cfg.accel_threshold)
        .into_iter()
        .map(|i| grid.time(track.first_step + i))
        .collect())
}

/// Extract the agent's decisions from its track.
pub fn extract_decisions(
    track: &AgentTrack,
    grid: &TimeGrid,
    cfg: &ExtractConfig,
) -> Result<Vec<Decision>> {
    cfg.validate()?;
    require_two_steps(track)?;

    let starts = start_indices(&track.long_accel, cfg.accel_threshold);
    let ends = end_indices(&track.long_accel, cfg.accel_threshold);
    let speed = &track.speed;

    let mut decisions = Vec::new();
    let mut j = 0;
    let mut k = 0;
    while j < starts.len() && k < ends.len() {
        // Pair the latest onset before the current target candidate.
        while j + 1 < starts.len() && starts[j + 1] < ends[k] {
            j += 1;
        }
        let s = starts[j];
        let f = ends[k];
        let duration = (f as f64 - s as f64) * grid.dt;
        if f > s && duration >= cfg.min_duration && (speed[s] - speed[f]).abs() >= cfg.min_speed_delta
        {
            let t = grid.time(track.first_step + s);
            let t_target = grid.time(track.first_step + f);
            decisions.push(Decision::new(
                track.agent_id.clone(),
                t,
                Goal::new(speed[f].max(0.0), t_target)?,
            )?);
            while j < starts.len() && starts[j] < ends[k] {
                j += 1;
            }
        } else {
            k += 1;
        }
    }

    if decisions.is_empty() {
        decisions.push(Decision::hold(
            track.agent_id.clone(),
            grid.time(track.first_step),
            speed[0],
        ));
    }
    Ok(decisions)
}

/// Extract decisions for every track of a scene.
pub fn extract_all(scene: &Scene, cfg: &ExtractConfig) -> Result<DecisionSet> {
    let mut set = DecisionSet::new();
    for track in &scene.tracks {
        for d in extract_decisions(track, &scene.grid, cfg)? {
            set.insert(d)?;
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::AgentId;
    use approx::assert_abs_diff_eq;

    /// Integrate a track from an acceleration profile on a fresh grid.
    fn track_from_accel(dt: f64, v0: f64, accel: impl Fn(f64) -> f64, t_total: f64) -> (AgentTrack, TimeGrid) {
        let n = (t_total / dt).round() as usize + 1;
        let grid = TimeGrid::new(0.0, dt, n).unwrap();
        let mut speed = vec![v0];
        let mut a_series = Vec::with_capacity(n);
        let mut xs = vec![0.0];
        for k in 0..n {
            let a = accel(grid.time(k));
            a_series.push(a);
            if k + 1 < n {
                let v = speed[k];
                let v_next = (v + a * dt).max(0.0);
                speed.push(v_next);
                xs.push(xs[k] + 0.5 * (v + v_next) * dt);
            }
        }
        let track = AgentTrack {
            agent_id: AgentId::from("a"),
            first_step: 0,
            y: vec![0.0; n],
            heading: vec![0.0; n],
            x: xs,
            speed,
            long_accel: a_series,
            length: 4.5,
            width: 2.0,
            lane_id: 1,
        };
        (track, grid)
    }

    fn brake_profile(t: f64) -> f64 {
        if (2.0..7.0).contains(&t) {
            -2.0
        } else {
            0.0
        }
    }

    #[test]
    fn start_times_quiet_track() {
        let (track, grid) = track_from_accel(0.1, 30.0, |_| 0.0, 10.0);
        let s = candidate_start_times(&track, &grid, &ExtractConfig::default()).unwrap();
        assert_eq!(s, vec![0.0]);
    }

    #[test]
    fn start_times_step_profile() {
        let (track, grid) = track_from_accel(0.1, 30.0, brake_profile, 10.0);
        let s = candidate_start_times(&track, &grid, &ExtractConfig::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_abs_diff_eq!(s[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s[1], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn start_times_ignore_subthreshold_oscillation() {
        let (track, grid) = track_from_accel(0.1, 30.0, |t| 0.1 * (t * 7.0).sin().signum(), 10.0);
        let s = candidate_start_times(&track, &grid, &ExtractConfig::default()).unwrap();
        assert_eq!(s, vec![0.0]);
    }

    #[test]
    fn end_times_quiet_track() {
        let (track, grid) = track_from_accel(0.1, 30.0, |_| 0.0, 10.0);
        let f = candidate_end_times(&track, &grid, &ExtractConfig::default()).unwrap();
        assert_eq!(f, vec![10.0]);
    }

    #[test]
    fn end_times_step_profile() {
        let (track, grid) = track_from_accel(0.1, 30.0, brake_profile, 10.0);
        let f = candidate_end_times(&track, &grid, &ExtractConfig::default()).unwrap();
        assert_eq!(f.len(), 2);
        assert_abs_diff_eq!(f[0], 7.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f[1], 10.0, epsilon = 1e-9);
    }

    #[test]
    fn end_times_saturated_actuation() {
        let (track, grid) = track_from_accel(0.1, 50.0, |_| -0.5, 10.0);
        let f = candidate_end_times(&track, &grid, &ExtractConfig::default()).unwrap();
        assert_eq!(f.len(), 1);
        assert_abs_diff_eq!(f[0], 10.0, epsilon = 1e-9);
    }

    #[test]
    fn short_track_is_invalid_input() {
        let (mut track, grid) = track_from_accel(0.1, 30.0, |_| 0.0, 10.0);
        track.x.truncate(1);
        track.y.truncate(1);
        track.heading.truncate(1);
        track.speed.truncate(1);
        track.long_accel.truncate(1);
        assert!(candidate_start_times(&track, &grid, &ExtractConfig::default()).is_err());
        assert!(extract_decisions(&track, &grid, &ExtractConfig::default()).is_err());
    }

    #[test]
    fn constant_speed_track_falls_back_to_hold() {
        let (track, grid) = track_from_accel(0.1, 30.0, |_| 0.0, 10.0);
        let d = extract_decisions(&track, &grid, &ExtractConfig::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].decision_time, 0.0);
        assert_eq!(d[0].goal.target_time, 0.0);
        assert_abs_diff_eq!(d[0].goal.target_speed, 30.0, epsilon = 1e-9);
    }

    #[test]
    fn braking_maneuver_is_recovered() {
        let (track, grid) = track_from_accel(0.1, 30.0, brake_profile, 10.0);
        let d = extract_decisions(&track, &grid, &ExtractConfig::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_abs_diff_eq!(d[0].decision_time, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[0].goal.target_time, 7.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[0].goal.target_speed, 20.0, epsilon = 1e-6);
    }

    #[test]
    fn blip_is_rejected_and_fallback_emitted() {
        // 0.3 m/s^2 for 0.5 s: crosses the actuation threshold but fails
        // both the duration and the speed-delta thresholds.
        let (track, grid) =
            track_from_accel(0.1, 30.0, |t| if (2.0..2.5).contains(&t) { 0.3 } else { 0.0 }, 10.0);
        let d = extract_decisions(&track, &grid, &ExtractConfig::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].decision_time, 0.0);
        assert_eq!(d[0].goal.target_time, 0.0);
    }

    #[test]
    fn two_maneuvers_are_both_recovered() {
        let profile = |t: f64| {
            if (2.0..4.0).contains(&t) {
                -3.0
            } else if (6.0..8.0).contains(&t) {
                2.5
            } else {
                0.0
            }
        };
        let (track, grid) = track_from_accel(0.1, 30.0, profile, 12.0);
        let d = extract_decisions(&track, &grid, &ExtractConfig::default()).unwrap();
        assert_eq!(d.len(), 2);
        assert_abs_diff_eq!(d[0].decision_time, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[0].goal.target_time, 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[0].goal.target_speed, 24.0, epsilon = 1e-6);
        assert_abs_diff_eq!(d[1].decision_time, 6.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1].goal.target_time, 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1].goal.target_speed, 29.0, epsilon = 1e-6);
    }

    #[test]
    fn emitted_decisions_satisfy_thresholds_and_ordering() {
        let profile = |t: f64| {
            if (1.0..3.5).contains(&t) {
                -1.2
            } else if (5.0..5.4).contains(&t) {
                0.9
            } else if (7.0..9.5).contains(&t) {
                1.5
            } else {
                0.0
            }
        };
        let cfg = ExtractConfig::default();
        let (track, grid) = track_from_accel(0.05, 25.0, profile, 12.0);
        let d = extract_decisions(&track, &grid, &cfg).unwrap();
        DecisionSet::from_decisions(d.clone()).unwrap();
        for dec in &d {
            let gap = dec.goal.target_time - dec.decision_time;
            if gap == 0.0 {
                continue; // fallback
            }
            assert!(gap >= cfg.min_duration);
        }
    }
}
