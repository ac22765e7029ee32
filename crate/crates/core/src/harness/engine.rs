//! Parallel evaluation over a grid of (sim config, agent, goal count).

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{io_err, HarnessError};
use crate::agents::AgentSpec;
use crate::episodes::Episode;
use crate::metrics::{aggregate, EpisodeRecord, MetricsSummary};
use crate::rng::{derive_seed, short_hash};
use crate::sim::{run_episode, write_trace, EpisodeContext, NullSink, RunError, SimConfig, TraceHeader, TraceStep};
use crate::world::GridWorld;

/// Identifies one evaluated configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RunKey {
    pub sim: usize,
    pub agent: usize,
    pub m: usize,
}

pub struct Grid<'a> {
    pub agents: &'a [AgentSpec],
    pub goal_counts: &'a [usize],
    pub sims: &'a [SimConfig],
}

impl Grid<'_> {
    pub fn keys(&self) -> Vec<RunKey> {
        let mut keys = Vec::new();
        for sim in 0..self.sims.len() {
            for agent in 0..self.agents.len() {
                for &m in self.goal_counts {
                    keys.push(RunKey { sim, agent, m });
                }
            }
        }
        keys
    }
}

pub struct TraceOptions<'a> {
    pub dir: &'a Path,
    pub config_hash: &'a str,
}

/// Records per key, each ordered by episode index.
pub struct GridResults {
    pub keys: Vec<RunKey>,
    pub records: Vec<Vec<EpisodeRecord>>,
}

impl GridResults {
    pub fn get(&self, key: &RunKey) -> Option<&[EpisodeRecord]> {
        self.keys
            .iter()
            .position(|k| k == key)
            .map(|i| self.records[i].as_slice())
    }
}

pub fn world_hash(world: &GridWorld) -> String {
    short_hash(world.to_text().as_bytes())
}

/// Seed of the policy stream for episode `index`.
pub fn policy_seed(base: u64, index: usize) -> u64 {
    derive_seed(base, "policy", index as u64)
}

/// File-system friendly form of an agent label.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn trace_path(dir: &Path, agent: &str, budget: u32, m: usize, index: usize) -> PathBuf {
    dir.join(slug(agent))
        .join(format!("b{budget}"))
        .join(format!("m{m}"))
        .join(format!("{index:05}.jsonl"))
}

/// Runs every key of `grid` on every episode. Episodes are distributed over
/// `workers` threads; each builds its geodesic fields once and reuses them
/// across keys. Output does not depend on the worker count.
pub fn run_grid(
    worlds: &[GridWorld],
    episodes: &[Episode],
    grid: &Grid<'_>,
    seed: u64,
    workers: usize,
    traces: Option<&TraceOptions<'_>>,
) -> Result<GridResults, HarnessError> {
    let by_name: HashMap<&str, &GridWorld> = worlds.iter().map(|w| (w.name(), w)).collect();
    let hashes: HashMap<&str, String> = if traces.is_some() {
        worlds.iter().map(|w| (w.name(), world_hash(w))).collect()
    } else {
        HashMap::new()
    };
    let keys = grid.keys();
    if grid.sims.is_empty() {
        return Ok(GridResults {
            keys,
            records: Vec::new(),
        });
    }
    let labels: Vec<String> = grid.agents.iter().map(AgentSpec::label).collect();
    for a in grid.agents {
        a.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    }

    let run_one = |index: usize| -> Result<Vec<EpisodeRecord>, HarnessError> {
        let ep = &episodes[index];
        let world = by_name
            .get(ep.world_id.as_str())
            .ok_or_else(|| HarnessError::Config(format!("episode {index} references unknown world {}", ep.world_id)))?;
        let base = EpisodeContext::new(ep, world, &grid.sims[0])?;
        let mut out = Vec::with_capacity(keys.len());
        for key in &keys {
            let sim_ctx = if key.sim == 0 {
                base.clone()
            } else {
                base.with_config(&grid.sims[key.sim])?
            };
            let ctx = sim_ctx.truncated(key.m);
            let spec = &grid.agents[key.agent];
            let mut policy = spec.build().map_err(|e| HarnessError::Config(e.to_string()))?;
            let seed = policy_seed(seed, index);
            let mut steps: Vec<TraceStep> = Vec::new();
            let result = match traces {
                Some(_) => run_episode(policy.as_mut(), &ctx, index, seed, &mut steps),
                None => run_episode(policy.as_mut(), &ctx, index, seed, &mut NullSink),
            };
            let record = match result {
                Ok(r) => r,
                Err(RunError::Policy { error, record }) => {
                    log::warn!("episode {index} {}: {error}", labels[key.agent]);
                    *record
                }
                Err(RunError::Sim(e)) => return Err(e.into()),
            };
            if let Some(t) = traces {
                let budget = grid.sims[key.sim].found_budget;
                let header = TraceHeader::new(
                    format!("{}/{}", ep.world_id, ep.seed),
                    index,
                    key.m,
                    budget,
                    labels[key.agent].clone(),
                    t.config_hash,
                    hashes[ep.world_id.as_str()].clone(),
                );
                let path = trace_path(t.dir, &labels[key.agent], budget, key.m, index);
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
                }
                write_trace(&path, &header, &steps)?;
            }
            out.push(record);
        }
        Ok(out)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let per_episode: Vec<Vec<EpisodeRecord>> = pool.install(|| {
        (0..episodes.len())
            .into_par_iter()
            .map(run_one)
            .collect::<Result<_, _>>()
    })?;

    let mut records: Vec<Vec<EpisodeRecord>> = vec![Vec::with_capacity(episodes.len()); keys.len()];
    for row in per_episode {
        for (k, r) in row.into_iter().enumerate() {
            records[k].push(r);
        }
    }
    Ok(GridResults { keys, records })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub agent: String,
    pub m: usize,
    pub budget: u32,
    pub summary: MetricsSummary,
}

pub fn summarize(grid: &Grid<'_>, results: &GridResults) -> Result<Vec<SummaryRow>, HarnessError> {
    results
        .keys
        .iter()
        .zip(&results.records)
        .map(|(k, recs)| {
            Ok(SummaryRow {
                agent: grid.agents[k.agent].label(),
                m: k.m,
                budget: grid.sims[k.sim].found_budget,
                summary: aggregate(recs)?,
            })
        })
        .collect()
}
