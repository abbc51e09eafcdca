//! Scores discovered entity graphs against ground truth, sweeps the reward
//! threshold, and provides the random baseline.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cd::{discover, CdConfig, Variant};
use crate::error::{invalid, Result};
use crate::scene::{EntityCausalGraph, Scene};

/// Ordered-pair confusion counts over `n * (n - 1)` possible edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// Compare predicted and ground-truth entity graphs over every ordered
/// non-self agent pair. The node sets must match.
pub fn confusion(pred: &EntityCausalGraph, truth: &EntityCausalGraph) -> Result<Confusion> {
    if !pred.same_nodes(truth) {
        return Err(invalid("prediction and ground truth have different node sets".to_owned()));
    }
    let mut c = Confusion { true_pos: 0, false_pos: 0, true_neg: 0, false_neg: 0 };
    for a in pred.nodes() {
        for b in pred.nodes() {
            if a == b {
                continue;
            }
            match (pred.has_edge(a, b), truth.has_edge(a, b)) {
                (true, true) => c.true_pos += 1,
                (true, false) => c.false_pos += 1,
                (false, true) => c.false_neg += 1,
                (false, false) => c.true_neg += 1,
            }
        }
    }
    Ok(c)
}

/// Precision, recall and F1 with explicit empty-denominator conventions: an
/// exactly-correct empty prediction scores 1.0 across the board; an empty
/// prediction that misses real links scores 0 precision.
pub fn prf1(c: &Confusion) -> (f64, f64, f64) {
    let precision = if c.true_pos + c.false_pos == 0 {
        if c.false_neg == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        c.true_pos as f64 / (c.true_pos + c.false_pos) as f64
    };
    let recall = if c.true_pos + c.false_neg == 0 {
        1.0
    } else {
        c.true_pos as f64 / (c.true_pos + c.false_neg) as f64
    };
    let f1 = if c.true_pos + c.false_pos == 0 && c.true_pos + c.false_neg == 0 {
        1.0
    } else {
        2.0 * c.true_pos as f64
            / (2.0 * c.true_pos as f64 + c.false_pos as f64 + c.false_neg as f64)
    };
    (precision, recall, f1)
}

/// Assign each ordered non-self pair an edge independently with probability
/// `p`. Deterministic per seed.
pub fn random_baseline(scene: &Scene, p: f64, seed: u64) -> Result<EntityCausalGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("edge probability must lie in [0, 1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = scene.agent_ids().cloned().collect();
    let mut g = EntityCausalGraph::with_nodes(ids.clone());
    for a in &ids {
        for b in &ids {
            if a == b {
                continue;
            }
            if rng.gen::<f64>() < p {
                g.add_edge(a.clone(), b.clone())?;
            }
        }
    }
    Ok(g)
}

/// One aggregated row of the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub variant: Variant,
    /// Reward threshold; `None` for the pure agency variant.
    pub lambda: Option<f64>,
    pub precision_mean: f64,
    pub recall_mean: f64,
    pub f1_mean: f64,
    pub wall_time_mean_s: f64,
    pub n_scenes: usize,
}

/// Sweep output plus the count of scenes skipped for missing ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<MetricRow>,
    pub skipped_scenes: usize,
}

/// Run discovery per scene per threshold and macro-average the metrics.
/// The agency variant ignores the threshold and produces a single row.
pub fn sweep(
    scenes: &[Scene],
    variant: Variant,
    lambdas: &[f64],
    base: &CdConfig,
) -> Result<SweepReport> {
    let cells: Vec<Option<f64>> = if variant.uses_lambda() {
        lambdas.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };

    let skipped = scenes.iter().filter(|s| s.ground_truth.is_none()).count();
    let mut rows = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut cfg = base.clone();
        cfg.variant = variant;
        if let Some(lambda) = cell {
            cfg.reward_threshold = lambda;
        }
        let mut sums = (0.0, 0.0, 0.0, 0.0);
        let mut n = 0usize;
        for scene in scenes {
            let Some(truth) = &scene.ground_truth else {
                continue;
            };
            let d = discover(scene, &cfg)?;
            let c = confusion(&d.entity_graph, truth)?;
            let (p, r, f1) = prf1(&c);
            sums.0 += p;
            sums.1 += r;
            sums.2 += f1;
            sums.3 += d.wall_time_s;
            n += 1;
        }
        let denom = n.max(1) as f64;
        rows.push(MetricRow {
            variant,
            lambda: cell,
            precision_mean: sums.0 / denom,
            recall_mean: sums.1 / denom,
            f1_mean: sums.2 / denom,
            wall_time_mean_s: sums.3 / denom,
            n_scenes: n,
        });
    }
    Ok(SweepReport { rows, skipped_scenes: skipped })
}

/// Plot-ready CSV; a leading comment line carries the config hash.
pub fn write_metrics_csv<W: Write>(
    rows: &[MetricRow],
    config_hash: Option<&str>,
    mut out: W,
) -> Result<()> {
    if let Some(hash) = config_hash {
        writeln!(out, "# config_hash={hash}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "variant",
        "lambda",
        "precision_mean",
        "recall_mean",
        "f1_mean",
        "wall_time_mean_s",
        "n_scenes",
    ])?;
    for r in rows {
        w.write_record([
            r.variant.to_string(),
            r.lambda.map(|l| format!("{l}")).unwrap_or_default(),
            format!("{}", r.precision_mean),
            format!("{}", r.recall_mean),
            format!("{}", r.f1_mean),
            format!("{}", r.wall_time_mean_s),
            r.n_scenes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
