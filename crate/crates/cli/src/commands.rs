//! Subcommand implementations. Scene-level work runs on a rayon pool sized
//! by the worker count; results are merged in scene-id order so the worker
//! count never changes outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use rayon::prelude::*;

use ccd_core::cd::{enumerate_candidates, run_worlds, DiscoveryReport, Variant};
use ccd_core::eval::{confusion, prf1, sweep, write_metrics_csv, MetricRow};
use ccd_core::extract::extract_all;
use ccd_core::ingest::{extract_causal_scenes, parse_tracks, ParseOptions};
use ccd_core::scene::{EntityCausalGraph, Scene};
use ccd_core::synth::generate_synthetic_scene;

use crate::config::RunConfig;

const EXIT_PARTIAL: u8 = 2;

fn list_files(dir: &Path, ext: &str) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let entries = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext)
            && path.file_name().and_then(|n| n.to_str()) != Some("index.json")
        {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn scene_id_of(scene: &Scene, path: &Path) -> String {
    scene
        .meta
        .id
        .clone()
        .unwrap_or_else(|| path.file_stem().unwrap_or_default().to_string_lossy().into_owned())
}

fn load_scenes(dir: &Path) -> anyhow::Result<Vec<(String, Scene)>> {
    let mut scenes = Vec::new();
    for path in list_files(dir, "json")? {
        let text = fs::read_to_string(&path)
            .with_context(|| format!("reading scene {}", path.display()))?;
        let scene = Scene::from_json(&text)
            .with_context(|| format!("parsing scene {}", path.display()))?;
        let id = scene_id_of(&scene, &path);
        scenes.push((id, scene));
    }
    scenes.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(scenes)
}

fn write_scene(dir: &Path, scene: &Scene, id: &str) -> anyhow::Result<()> {
    let path = dir.join(format!("{id}.json"));
    fs::write(&path, scene.to_json()?)
        .with_context(|| format!("writing scene {}", path.display()))?;
    Ok(())
}

#[derive(serde::Serialize)]
struct SceneIndex<'a> {
    config_hash: String,
    extraction: serde_json::Value,
    scenes: Vec<String>,
    recordings: &'a BTreeMap<String, usize>,
}

/// Parse recordings, extract causal scenes, write scene files plus an index.
pub fn cmd_ingest(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let hash = cfg.hash();
    fs::create_dir_all(&cfg.paths.scene_dir)?;
    let inputs = list_files(&cfg.paths.input_dir, "csv")?;

    let mut scene_ids = Vec::new();
    let mut per_recording = BTreeMap::new();
    let mut failures = 0usize;
    for path in &inputs {
        let recording_id =
            path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let opts = ParseOptions {
            frame_rate: cfg.ingest.frame_rate,
            recording_id: recording_id.clone(),
            columns: cfg.ingest.columns.clone(),
        };
        let result = fs::File::open(path)
            .map_err(anyhow::Error::from)
            .and_then(|f| {
                parse_tracks(std::io::BufReader::new(f), &opts).map_err(anyhow::Error::from)
            })
            .and_then(|rec| {
                extract_causal_scenes(&rec, &cfg.ingest.params).map_err(anyhow::Error::from)
            });
        match result {
            Ok(scenes) => {
                println!("{recording_id}: {} scenes", scenes.len());
                per_recording.insert(recording_id, scenes.len());
                for mut scene in scenes {
                    scene.meta.config_hash = Some(hash.clone());
                    let id = scene.meta.id.clone().expect("extracted scenes carry ids");
                    write_scene(&cfg.paths.scene_dir, &scene, &id)?;
                    scene_ids.push(id);
                }
            }
            Err(err) => {
                eprintln!("{}: {err:#}", path.display());
                failures += 1;
            }
        }
    }

    let index = SceneIndex {
        config_hash: hash,
        extraction: serde_json::to_value(&cfg.ingest.params)?,
        scenes: scene_ids,
        recordings: &per_recording,
    };
    fs::write(
        cfg.paths.scene_dir.join("index.json"),
        serde_json::to_string_pretty(&index)?,
    )?;

    if failures > 0 {
        bail!("{failures} of {} recordings failed to ingest", inputs.len());
    }
    Ok(ExitCode::SUCCESS)
}

/// Generate seeded synthetic scenes.
pub fn cmd_synth(cfg: &RunConfig, n_override: Option<usize>) -> anyhow::Result<ExitCode> {
    let n = n_override.unwrap_or(cfg.synth.n_scenes);
    let hash = cfg.hash();
    fs::create_dir_all(&cfg.paths.scene_dir)?;

    let mut scene_ids = Vec::new();
    let mut certified = 0usize;
    for i in 0..n {
        let seed = cfg.seed + i as u64;
        let mut scene = generate_synthetic_scene(seed, &cfg.synth.spec)?;
        scene.meta.config_hash = Some(hash.clone());
        if scene.meta.collision_certified == Some(true) {
            certified += 1;
        }
        let id = scene.meta.id.clone().expect("synthetic scenes carry ids");
        write_scene(&cfg.paths.scene_dir, &scene, &id)?;
        scene_ids.push(id);
    }

    let recordings = BTreeMap::from([("synthetic".to_owned(), n)]);
    let index = SceneIndex {
        config_hash: hash,
        extraction: serde_json::to_value(&cfg.synth.spec)?,
        scenes: scene_ids,
        recordings: &recordings,
    };
    fs::write(
        cfg.paths.scene_dir.join("index.json"),
        serde_json::to_string_pretty(&index)?,
    )?;
    println!("wrote {n} scenes ({certified} certified collision-inducing) to {}",
        cfg.paths.scene_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn report_file_name(scene_id: &str, variant: Variant, lambda: f64) -> String {
    if variant.uses_lambda() {
        format!("{scene_id}--{variant}-{lambda}.json")
    } else {
        format!("{scene_id}--{variant}.json")
    }
}

fn dump_candidate_traces(
    scene: &Scene,
    cd_cfg: &ccd_core::cd::CdConfig,
    dir: &Path,
    hash: &str,
) -> anyhow::Result<()> {
    use std::io::Write;
    fs::create_dir_all(dir)?;
    let decisions = extract_all(scene, &cd_cfg.extract)?;
    for (i, link) in enumerate_candidates(&decisions).iter().enumerate() {
        let outcomes = run_worlds(scene, &decisions, link, cd_cfg)?;
        for outcome in &outcomes {
            let path = dir.join(format!("c{i:02}-{}.csv", outcome.variant.label()));
            let mut file = fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            writeln!(file, "# config_hash={hash}")?;
            outcome.trace.write_csv(file)?;
        }
    }
    Ok(())
}

/// Flat decision dump: `{scene_id, config_hash, decisions: [{agent_id, t,
/// target_speed, target_time}]}`.
fn dump_decisions(
    scene: &Scene,
    cd_cfg: &ccd_core::cd::CdConfig,
    dir: &Path,
    scene_id: &str,
    hash: &str,
) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let decisions = extract_all(scene, &cd_cfg.extract)?;
    let doc = serde_json::json!({
        "scene_id": scene_id,
        "config_hash": hash,
        "decisions": decisions.iter().collect::<Vec<_>>(),
    });
    fs::write(dir.join(format!("{scene_id}.json")), serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// Run discovery per scene and write one report per scene.
pub fn cmd_discover(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let scenes = load_scenes(&cfg.paths.scene_dir)?;
    if scenes.is_empty() {
        eprintln!("warning: no scenes in {}", cfg.paths.scene_dir.display());
        return Ok(ExitCode::SUCCESS);
    }
    fs::create_dir_all(&cfg.paths.report_dir)?;
    let hash = cfg.hash();
    let cd_cfg = cfg.cd_config();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .context("building worker pool")?;
    type SceneResult = (String, anyhow::Result<DiscoveryReport>);
    let results: Vec<SceneResult> = pool.install(|| {
        scenes
            .par_iter()
            .map(|(id, scene)| {
                let report = ccd_core::cd::discover(scene, &cd_cfg)
                    .map(|d| d.to_report(id, &cd_cfg, Some(hash.clone())))
                    .map_err(anyhow::Error::from);
                (id.clone(), report)
            })
            .collect()
    });

    let mut failures = 0usize;
    for ((id, result), (_, scene)) in results.into_iter().zip(&scenes) {
        match result {
            Ok(report) => {
                let name = report_file_name(&id, cd_cfg.variant, cd_cfg.reward_threshold);
                fs::write(
                    cfg.paths.report_dir.join(&name),
                    serde_json::to_string_pretty(&report)?,
                )?;
                println!(
                    "{id}: {} links from {} candidates in {:.3}s",
                    report.decision_links.len(),
                    report.candidates.len(),
                    report.wall_time_s
                );
                if cfg.discover.dump_traces {
                    dump_candidate_traces(
                        scene,
                        &cd_cfg,
                        &cfg.paths.report_dir.join("traces").join(&id),
                        &hash,
                    )?;
                }
                if cfg.discover.dump_decisions {
                    dump_decisions(
                        scene,
                        &cd_cfg,
                        &cfg.paths.report_dir.join("decisions"),
                        &id,
                        &hash,
                    )?;
                }
            }
            Err(err) => {
                eprintln!("{id}: {err:#}");
                failures += 1;
            }
        }
    }

    if failures > 0 {
        eprintln!("{failures} of {} scenes failed", scenes.len());
        return Ok(ExitCode::from(EXIT_PARTIAL));
    }
    Ok(ExitCode::SUCCESS)
}

/// Score existing reports against scene ground truth and write the metrics
/// table plus a human-readable summary.
pub fn cmd_evaluate(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let report_files = list_files(&cfg.paths.report_dir, "json")?;
    if report_files.is_empty() {
        bail!("no reports found in {}", cfg.paths.report_dir.display());
    }
    let scenes: BTreeMap<String, Scene> = load_scenes(&cfg.paths.scene_dir)?.into_iter().collect();

    let mut groups: BTreeMap<(String, Option<u64>), Vec<(f64, f64, f64, f64)>> = BTreeMap::new();
    let mut skipped = 0usize;
    for path in &report_files {
        let report: DiscoveryReport = serde_json::from_str(&fs::read_to_string(path)?)
            .with_context(|| format!("parsing report {}", path.display()))?;
        let Some(scene) = scenes.get(&report.scene_id) else {
            eprintln!("warning: no scene file for report {}", report.scene_id);
            skipped += 1;
            continue;
        };
        let Some(truth) = &scene.ground_truth else {
            skipped += 1;
            continue;
        };
        let mut pred = EntityCausalGraph::with_nodes(scene.agent_ids().cloned());
        for (src, dst) in &report.entity_edges {
            pred.add_edge(src.clone(), dst.clone())?;
        }
        let (p, r, f1) = prf1(&confusion(&pred, truth)?);
        let lambda = report.variant.uses_lambda().then(|| report.lambda_d_r.to_bits());
        groups
            .entry((report.variant.to_string(), lambda))
            .or_default()
            .push((p, r, f1, report.wall_time_s));
    }
    if groups.is_empty() {
        bail!("no reports could be scored (missing scenes or ground truth)");
    }

    let mut rows = Vec::new();
    for ((variant, lambda), cells) in &groups {
        let n = cells.len() as f64;
        let sum = cells.iter().fold((0.0, 0.0, 0.0, 0.0), |acc, c| {
            (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2, acc.3 + c.3)
        });
        rows.push(MetricRow {
            variant: variant.parse().expect("variant round-trips"),
            lambda: lambda.map(f64::from_bits),
            precision_mean: sum.0 / n,
            recall_mean: sum.1 / n,
            f1_mean: sum.2 / n,
            wall_time_mean_s: sum.3 / n,
            n_scenes: cells.len(),
        });
    }

    if let Some(parent) = cfg.paths.metrics_file.parent() {
        fs::create_dir_all(parent)?;
    }
    let file = fs::File::create(&cfg.paths.metrics_file)
        .with_context(|| format!("creating {}", cfg.paths.metrics_file.display()))?;
    write_metrics_csv(&rows, Some(&cfg.hash()), file)?;

    print_summary(&rows);
    if skipped > 0 {
        eprintln!("{skipped} reports skipped (missing scene or ground truth)");
    }
    println!("metrics written to {}", cfg.paths.metrics_file.display());
    Ok(ExitCode::SUCCESS)
}

fn print_summary(rows: &[MetricRow]) {
    let mut best: BTreeMap<String, &MetricRow> = BTreeMap::new();
    for row in rows {
        best.entry(row.variant.to_string())
            .and_modify(|b| {
                if row.f1_mean > b.f1_mean {
                    *b = row;
                }
            })
            .or_insert(row);
    }
    println!("peak mean F1 per variant:");
    for (variant, row) in best {
        match row.lambda {
            Some(l) => println!("  {variant:<7} F1 {:.3} at lambda {l}", row.f1_mean),
            None => println!("  {variant:<7} F1 {:.3}", row.f1_mean),
        }
    }
}

/// Full grid: run discovery across variants and thresholds, aggregate, and
/// write the metrics table.
pub fn cmd_sweep(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let scenes: Vec<Scene> =
        load_scenes(&cfg.paths.scene_dir)?.into_iter().map(|(_, s)| s).collect();
    if scenes.is_empty() {
        bail!("no scenes in {}", cfg.paths.scene_dir.display());
    }
    let base = cfg.cd_config();

    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for variant in &cfg.sweep.variants {
        let report = sweep(&scenes, *variant, &cfg.sweep.lambdas, &base)?;
        skipped = report.skipped_scenes;
        rows.extend(report.rows);
    }

    if let Some(parent) = cfg.paths.metrics_file.parent() {
        fs::create_dir_all(parent)?;
    }
    let file = fs::File::create(&cfg.paths.metrics_file)?;
    write_metrics_csv(&rows, Some(&cfg.hash()), file)?;
    print_summary(&rows);
    if skipped > 0 {
        eprintln!("{skipped} scenes skipped (no ground truth)");
    }
    println!("{} rows written to {}", rows.len(), cfg.paths.metrics_file.display());
    Ok(ExitCode::SUCCESS)
}
