//! Declarative run configuration. A single TOML document describes an
//! experiment; CLI flags override individual keys. The resolved config is
//! hashed and the hash embedded in every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ccd_core::cd::{CdConfig, Variant};
use ccd_core::extract::ExtractConfig;
use ccd_core::ingest::SceneExtractionParams;
use ccd_core::synth::SynthSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub paths: Paths,
    pub extract: ExtractConfig,
    pub ingest: IngestSection,
    pub synth: SynthSection,
    pub discover: DiscoverSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            workers: 1,
            paths: Paths::default(),
            extract: ExtractConfig::default(),
            ingest: IngestSection::default(),
            synth: SynthSection::default(),
            discover: DiscoverSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub input_dir: PathBuf,
    pub scene_dir: PathBuf,
    pub report_dir: PathBuf,
    pub metrics_file: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            input_dir: "data/recordings".into(),
            scene_dir: "data/scenes".into(),
            report_dir: "out/reports".into(),
            metrics_file: "out/metrics.csv".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestSection {
    pub frame_rate: f64,
    #[serde(flatten)]
    pub params: SceneExtractionParams,
    pub columns: Option<BTreeMap<String, String>>,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            frame_rate: 25.0,
            params: SceneExtractionParams::default(),
            columns: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSection {
    pub n_scenes: usize,
    #[serde(flatten)]
    pub spec: SynthSpec,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection { n_scenes: 100, spec: SynthSpec::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscoverSection {
    pub variant: Variant,
    pub lambda: f64,
    pub ttc_horizon: f64,
    pub literal_cct_reward: bool,
    pub any_collision_agency: bool,
    pub dump_traces: bool,
    pub dump_decisions: bool,
}

impl Default for DiscoverSection {
    fn default() -> Self {
        DiscoverSection {
            variant: Variant::Agency,
            lambda: 1.0,
            ttc_horizon: 20.0,
            literal_cct_reward: false,
            any_collision_agency: false,
            dump_traces: false,
            dump_decisions: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub lambdas: Vec<f64>,
    pub variants: Vec<Variant>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            lambdas: vec![0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            variants: vec![Variant::Reward, Variant::Agency, Variant::Hybrid],
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Short hash of the resolved configuration, embedded in outputs.
    /// Output locations and the worker count do not affect results, so they
    /// are excluded.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        let obj = value.as_object_mut().expect("config is an object");
        obj.remove("paths");
        obj.remove("workers");
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn cd_config(&self) -> CdConfig {
        CdConfig {
            variant: self.discover.variant,
            reward_threshold: self.discover.lambda,
            extract: self.extract,
            dt: None,
            ttc_horizon: self.discover.ttc_horizon,
            literal_cct_reward: self.discover.literal_cct_reward,
            any_collision_agency: self.discover.any_collision_agency,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.discover.variant, Variant::Agency);
        assert_eq!(cfg.sweep.lambdas.len(), 11);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.discover.lambda = 0.5;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn sections_parse_from_toml() {
        let cfg: RunConfig = toml::from_str(
            r#"
            seed = 9
            workers = 4

            [discover]
            variant = "hybrid"
            lambda = 0.3

            [synth]
            n_scenes = 5
            head_speed = [20.0, 30.0]

            [ingest]
            frame_rate = 10.0
            max_headway = 2.5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.discover.variant, Variant::Hybrid);
        assert_eq!(cfg.synth.spec.head_speed, (20.0, 30.0));
        assert_eq!(cfg.ingest.params.max_headway, 2.5);
    }
}
