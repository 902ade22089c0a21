//! JSON experiment configs for the CLI.
//!
//! A config names an environment and variant and may override any of the
//! per-environment defaults. Grid maps and pinball physics can come from
//! separate files referenced by path (relative to the config file).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use gnt_core::harness::{EnvConfig, ExperimentConfig, Variant};
use gnt_core::SubgoalSpec;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// One of "four_rooms", "maze", "pinball".
    pub environment: String,
    pub variant: Variant,
    /// Seeds for `run` when no --seed is given.
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    /// ASCII map file ('#' wall, '.' free, 'S' start, 'G' goal); replaces the
    /// named grid layout.
    #[serde(default)]
    pub map_file: Option<PathBuf>,
    /// Pinball physics/obstacle file; replaces the default arena.
    #[serde(default)]
    pub pinball_file: Option<PathBuf>,
    /// Pool file (JSON list of subgoals) for the fixed_pool variant.
    #[serde(default)]
    pub pool_file: Option<PathBuf>,

    // Optional overrides of the environment defaults.
    #[serde(default)]
    pub episodes: Option<usize>,
    #[serde(default)]
    pub episode_cutoff: Option<usize>,
    #[serde(default)]
    pub hidden_dim: Option<usize>,
    #[serde(default)]
    pub step_size: Option<f64>,
    #[serde(default)]
    pub step_sizes: Option<Vec<f64>>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub gamma_main: Option<f64>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub buffer_capacity: Option<usize>,
    #[serde(default)]
    pub target_sync_period: Option<u64>,
    #[serde(default)]
    pub n_tasks: Option<usize>,
    #[serde(default)]
    pub age_threshold: Option<u64>,
    #[serde(default)]
    pub replacement_cycle: Option<u64>,
    #[serde(default)]
    pub replacement_ratio: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub pool_sample: Option<usize>,
    #[serde(default)]
    pub log_metrics: Option<bool>,

    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_seeds() -> u64 {
    1
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: FileConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(config)
    }

    /// Short tag used for run directory names.
    pub fn label(&self) -> String {
        let variant = serde_json::to_string(&self.variant)
            .expect("variant serializes")
            .trim_matches('"')
            .to_string();
        format!("{}_{}", self.environment, variant)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() { p.to_path_buf() } else { self.base_dir.join(p) }
    }

    pub fn to_experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match self.environment.as_str() {
            "four_rooms" => ExperimentConfig::four_rooms(self.variant),
            "maze" => ExperimentConfig::maze(self.variant),
            "pinball" => ExperimentConfig::pinball(self.variant),
            other => bail!("unknown environment {:?} (expected four_rooms, maze, or pinball)", other),
        };

        if let Some(map_file) = &self.map_file {
            if self.environment == "pinball" {
                bail!("map_file does not apply to the pinball environment");
            }
            let path = self.resolve(map_file);
            let map = fs::read_to_string(&path)
                .with_context(|| format!("reading map {}", path.display()))?;
            let cutoff = self.episode_cutoff.unwrap_or(500);
            gnt_core::GridWorld::from_ascii(&map, cutoff)
                .map_err(|e| anyhow::anyhow!("invalid map {}: {:?}", path.display(), e))?;
            cfg.env = EnvConfig::GridMap { map, cutoff };
        } else if let Some(cutoff) = self.episode_cutoff {
            if let EnvConfig::GridMap { cutoff: c, .. } = &mut cfg.env {
                *c = cutoff;
            } else if self.environment == "pinball" {
                bail!("episode_cutoff does not apply to the pinball environment");
            } else {
                // rebuild the named map with the requested cutoff
                let grid = if self.environment == "maze" {
                    gnt_core::GridWorld::maze()
                } else {
                    gnt_core::GridWorld::four_rooms()
                };
                cfg.env = EnvConfig::GridMap { map: grid.to_ascii(), cutoff };
            }
        }
        if let Some(pinball_file) = &self.pinball_file {
            if self.environment != "pinball" {
                bail!("pinball_file only applies to the pinball environment");
            }
            let path = self.resolve(pinball_file);
            let text = fs::read_to_string(&path)
                .with_context(|| format!("reading pinball config {}", path.display()))?;
            gnt_core::envs::PinballConfig::parse(&text)
                .map_err(|e| anyhow::anyhow!("invalid pinball config {}: {:?}", path.display(), e))?;
            cfg.env = EnvConfig::PinballText { text };
        }
        if let Some(pool_file) = &self.pool_file {
            let path = self.resolve(pool_file);
            let text = fs::read_to_string(&path)
                .with_context(|| format!("reading pool {}", path.display()))?;
            let pool: Vec<SubgoalSpec> = serde_json::from_str(&text)
                .with_context(|| format!("parsing pool {}", path.display()))?;
            cfg.pool = pool;
        }
        if self.variant == Variant::FixedPool && cfg.pool.is_empty() {
            bail!("fixed_pool variant needs a pool_file");
        }

        if let Some(v) = self.episodes { cfg.episodes = v; }
        if let Some(v) = self.hidden_dim { cfg.hidden_dim = v; }
        if let Some(v) = self.step_size { cfg.learner.step_size = v; }
        if let Some(v) = &self.step_sizes { cfg.step_sizes = v.clone(); }
        if let Some(v) = self.epsilon { cfg.learner.epsilon = v; }
        if let Some(v) = self.gamma_main { cfg.learner.gamma_main = v; }
        if let Some(v) = self.batch_size { cfg.learner.batch_size = v; }
        if let Some(v) = self.buffer_capacity { cfg.learner.buffer_capacity = v; }
        if let Some(v) = self.target_sync_period { cfg.learner.target_sync_period = v; }
        if let Some(v) = self.n_tasks { cfg.gnt.n_tasks = v; }
        if let Some(v) = self.age_threshold { cfg.gnt.age_threshold = v; }
        if let Some(v) = self.replacement_cycle { cfg.gnt.replacement_cycle = v; }
        if let Some(v) = self.replacement_ratio { cfg.gnt.replacement_ratio = v; }
        if let Some(v) = self.tau { cfg.gnt.tau = v; }
        if let Some(v) = self.pool_sample { cfg.pool_sample = v; }
        if let Some(v) = self.log_metrics { cfg.log_metrics = v; }
        Ok(cfg)
    }
}
