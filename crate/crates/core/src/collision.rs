//! Oriented-rectangle overlap tests for the world simulation.
//!
//! The full check is staged: a bounding-circle test, then an axis-aligned
//! bounding-box test, then the exact separating-axis test on the four
//! candidate axes. The early stages are conservative and can only reject
//! pairs the exact test would also reject.

/// Oriented bounding box: center, heading, half extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub cx: f64,
    pub cy: f64,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl Obb {
    pub fn bounding_radius(&self) -> f64 {
        self.half_length.hypot(self.half_width)
    }

    /// Longitudinal and lateral unit axes.
    fn axes(&self) -> [(f64, f64); 2] {
        let (s, c) = self.heading.sin_cos();
        [(c, s), (-s, c)]
    }

    /// Half extents of the world-aligned box that contains this obb.
    fn aabb_half_extents(&self) -> (f64, f64) {
        let (s, c) = self.heading.sin_cos();
        (
            self.half_length * c.abs() + self.half_width * s.abs(),
            self.half_length * s.abs() + self.half_width * c.abs(),
        )
    }
}

/// Bounding-circle stage. True means the pair survives to the next stage.
pub fn circle_overlap(a: &Obb, b: &Obb) -> bool {
    let dx = b.cx - a.cx;
    let dy = b.cy - a.cy;
    let r = a.bounding_radius() + b.bounding_radius();
    dx * dx + dy * dy <= r * r
}

/// Axis-aligned bounding-box stage.
pub fn aabb_overlap(a: &Obb, b: &Obb) -> bool {
    let (ax, ay) = a.aabb_half_extents();
    let (bx, by) = b.aabb_half_extents();
    (b.cx - a.cx).abs() <= ax + bx && (b.cy - a.cy).abs() <= ay + by
}

/// Smallest projection slack over the four separating-axis candidates.
/// Non-negative iff the rectangles overlap (touching counts as overlap);
/// its magnitude is a penetration/separation proxy used to exclude
/// near-tangent cases from oracle comparisons.
pub fn sat_margin(a: &Obb, b: &Obb) -> f64 {
    let dx = b.cx - a.cx;
    let dy = b.cy - a.cy;
    let a_axes = a.axes();
    let b_axes = b.axes();
    let mut margin = f64::INFINITY;
    for (ux, uy) in a_axes.iter().chain(b_axes.iter()) {
        let dist = (dx * ux + dy * uy).abs();
        let reach_a = a.half_length * (ux * a_axes[0].0 + uy * a_axes[0].1).abs()
            + a.half_width * (ux * a_axes[1].0 + uy * a_axes[1].1).abs();
        let reach_b = b.half_length * (ux * b_axes[0].0 + uy * b_axes[0].1).abs()
            + b.half_width * (ux * b_axes[1].0 + uy * b_axes[1].1).abs();
        margin = margin.min(reach_a + reach_b - dist);
    }
    margin
}

/// Exact separating-axis verdict.
pub fn sat_overlap(a: &Obb, b: &Obb) -> bool {
    sat_margin(a, b) >= 0.0
}

/// Staged overlap check used by the simulator.
pub fn obb_overlap(a: &Obb, b: &Obb) -> bool {
    circle_overlap(a, b) && aabb_overlap(a, b) && sat_overlap(a, b)
}

/// Is the point inside the (closed) rectangle? Independent primitive used by
/// sampling oracles in tests.
pub fn point_in_obb(px: f64, py: f64, o: &Obb) -> bool {
    let (s, c) = o.heading.sin_cos();
    let dx = px - o.cx;
    let dy = py - o.cy;
    let u = dx * c + dy * s;
    let v = -dx * s + dy * c;
    u.abs() <= o.half_length && v.abs() <= o.half_width
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obb(cx: f64, cy: f64, heading: f64, hl: f64, hw: f64) -> Obb {
        Obb { cx, cy, heading, half_length: hl, half_width: hw }
    }

    #[test]
    fn identical_boxes_overlap() {
        let a = obb(3.0, -1.0, 0.7, 2.25, 1.0);
        assert!(obb_overlap(&a, &a));
    }

    #[test]
    fn distant_boxes_rejected_by_circle_stage() {
        let a = obb(0.0, 0.0, 0.0, 2.25, 1.0);
        let b = obb(100.0, 0.0, 1.0, 2.25, 1.0);
        assert!(!circle_overlap(&a, &b));
        assert!(!obb_overlap(&a, &b));
    }

    #[test]
    fn rotated_box_needs_sat_stage() {
        // AABBs overlap but the rectangles do not: a 45-degree box whose
        // corner points between the other's corner region.
        let a = obb(0.0, 0.0, 0.0, 2.0, 1.0);
        let b = obb(3.6, 2.6, std::f64::consts::FRAC_PI_4, 2.0, 1.0);
        assert!(circle_overlap(&a, &b));
        assert!(aabb_overlap(&a, &b));
        assert!(!sat_overlap(&a, &b));
        assert!(!obb_overlap(&a, &b));
    }

    #[test]
    fn touching_counts_as_overlap() {
        let a = obb(0.0, 0.0, 0.0, 2.0, 1.0);
        let b = obb(4.0, 0.0, 0.0, 2.0, 1.0);
        assert!(sat_overlap(&a, &b));
    }

    fn random_obb(rng: &mut ChaCha8Rng) -> Obb {
        obb(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.3..1.5),
        )
    }

    #[test]
    fn staging_never_changes_the_sat_verdict() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let a = random_obb(&mut rng);
            let b = random_obb(&mut rng);
            assert_eq!(obb_overlap(&a, &b), sat_overlap(&a, &b));
        }
    }

    #[test]
    fn overlap_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2000 {
            let a = random_obb(&mut rng);
            let b = random_obb(&mut rng);
            assert_eq!(obb_overlap(&a, &b), obb_overlap(&b, &a));
        }
    }

    /// Dense point-sampling overlap oracle; spec'd comparison lives in the
    /// acceptance suite, this is a smaller smoke version.
    fn sampling_overlap(a: &Obb, b: &Obb, per_side: usize) -> bool {
        let grids = [(a, b), (b, a)];
        for (src, dst) in grids {
            let (s, c) = src.heading.sin_cos();
            for i in 0..per_side {
                let u = -src.half_length
                    + 2.0 * src.half_length * i as f64 / (per_side - 1) as f64;
                for j in 0..per_side {
                    let v = -src.half_width
                        + 2.0 * src.half_width * j as f64 / (per_side - 1) as f64;
                    let px = src.cx + u * c - v * s;
                    let py = src.cy + u * s + v * c;
                    if point_in_obb(px, py, dst) {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn sat_matches_sampling_oracle_away_from_tangency() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut checked = 0;
        while checked < 300 {
            let a = random_obb(&mut rng);
            let b = random_obb(&mut rng);
            // Exclude the tangency band: sampling cannot resolve slivers
            // thinner than its own spacing.
            if sat_margin(&a, &b).abs() < 0.1 {
                continue;
            }
            assert_eq!(sat_overlap(&a, &b), sampling_overlap(&a, &b, 120));
            checked += 1;
        }
    }
}
