use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agents::{AgentKind, AgentSpec, MapSource};
use crate::episodes::{SamplingConfig, Split};
use crate::rng::short_hash;
use crate::sim::SimConfig;
use crate::world::GenerateParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldsConfig {
    pub count: usize,
    pub params: GenerateParams,
    /// Load `*.txt` world files from here instead of generating.
    pub dir: Option<PathBuf>,
}

impl Default for WorldsConfig {
    fn default() -> Self {
        Self {
            count: 10,
            params: GenerateParams::default(),
            dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodesConfig {
    pub per_world: usize,
    pub split: Split,
    pub sampling: SamplingConfig,
    /// Goal counts evaluated; each set is a prefix of the sampled episodes.
    pub goal_counts: Vec<usize>,
    /// Load an episode file instead of sampling.
    pub path: Option<PathBuf>,
}

impl Default for EpisodesConfig {
    fn default() -> Self {
        Self {
            per_world: 200,
            split: Split::Test,
            sampling: SamplingConfig::default(),
            goal_counts: vec![1, 2, 3],
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub worlds: WorldsConfig,
    pub episodes: EpisodesConfig,
    pub sim: SimConfig,
    pub agents: Vec<AgentSpec>,
    /// Wrong-FOUND budgets for `sweep-found`.
    pub budgets: Vec<u32>,
    pub workers: usize,
    /// Write one trace file per evaluated episode.
    pub traces: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            worlds: WorldsConfig::default(),
            episodes: EpisodesConfig::default(),
            sim: SimConfig::default(),
            agents: vec![AgentSpec::new(AgentKind::Planner(MapSource::Oracle))],
            budgets: vec![0, 1, 2, 3, 5],
            workers: 1,
            traces: true,
            out: PathBuf::from("out"),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Result<(), HarnessError> {
    Err(HarnessError::Config(msg.into()))
}

impl RunConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn from_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.sim.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.episodes
            .sampling
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let s = &self.episodes.sampling;
        if s.num_categories != self.sim.num_categories {
            return config_err(format!(
                "sampling uses {} categories but the sim expects {}",
                s.num_categories, self.sim.num_categories
            ));
        }
        if self.episodes.goal_counts.is_empty() {
            return config_err("goal_counts is empty");
        }
        if let Some(m) = self.episodes.goal_counts.iter().find(|m| **m == 0 || **m > s.num_goals) {
            return config_err(format!("goal count {m} outside 1..={}", s.num_goals));
        }
        if self.agents.is_empty() {
            return config_err("no agents configured");
        }
        for a in &self.agents {
            a.validate()
                .map_err(|e| HarnessError::Config(format!("{}: {e}", a.kind)))?;
            if a.planner.geometry.extent() < self.worlds.params.size_m && self.worlds.dir.is_none() {
                return config_err(format!(
                    "{}: map extent {} m is smaller than the {} m worlds",
                    a.kind,
                    a.planner.geometry.extent(),
                    self.worlds.params.size_m
                ));
            }
        }
        if self.budgets.is_empty() {
            return config_err("budgets is empty");
        }
        if self.workers == 0 {
            return config_err("workers must be at least 1");
        }
        if self.worlds.dir.is_none() && self.worlds.count == 0 {
            return config_err("worlds.count must be at least 1");
        }
        if self.episodes.path.is_none() && self.episodes.per_world == 0 {
            return config_err("episodes.per_world must be at least 1");
        }
        Ok(())
    }

    /// Hash of everything that affects results. Worker count, output
    /// directory and trace switch are excluded.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("workers");
            obj.remove("out");
            obj.remove("traces");
        }
        short_hash(v.to_string().as_bytes())
    }
}
