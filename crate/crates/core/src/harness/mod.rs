//! Configuration, dataset generation, parallel evaluation, sweeps,
//! cross-evaluation, replay and reporting.

mod config;
mod engine;
mod replay;
mod report;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episodes::{generate_episode_set, load_episodes, save_episodes, EpisodeError, EpisodeSet};
use crate::metrics::{EpisodeRecord, MetricsError};
use crate::rng::derive_seed;
use crate::sim::{SimConfig, SimError, TraceError};
use crate::world::{generate_world, GridWorld, WorldError};

pub use config::{EpisodesConfig, RunConfig, WorldsConfig};
pub use engine::{
    policy_seed, run_grid, slug, summarize, trace_path, world_hash, Grid, GridResults, RunKey, SummaryRow, TraceOptions,
};
pub use replay::{replay_trace, ReplayOutput};
pub use report::{parse_records, records_to_string, render_report, summary_csv, RecordLine};

pub const OUTPUT_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Episodes(#[from] EpisodeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub(crate) fn io_err(path: &Path, source: io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Worlds and episodes a run operates on.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub worlds: Vec<GridWorld>,
    pub set: EpisodeSet,
}

pub fn world_seed(base: u64, split: &str, index: usize) -> u64 {
    derive_seed(base, &format!("world/{split}"), index as u64)
}

pub fn generate_worlds(cfg: &RunConfig) -> Result<Vec<GridWorld>, HarnessError> {
    let split = cfg.episodes.split.as_str();
    let worlds = (0..cfg.worlds.count)
        .into_par_iter()
        .map(|i| generate_world(world_seed(cfg.seed, split, i), &cfg.worlds.params))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(worlds)
}

fn load_world_dir(dir: &Path) -> Result<Vec<GridWorld>, HarnessError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::Config(format!("no world files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(GridWorld::parse(&text, name)?)
        })
        .collect()
}

/// Loads worlds and episodes from the configured paths, generating
/// whatever is not given.
pub fn prepare_inputs(cfg: &RunConfig) -> Result<Inputs, HarnessError> {
    let worlds = match &cfg.worlds.dir {
        Some(dir) => load_world_dir(dir)?,
        None => generate_worlds(cfg)?,
    };
    let set = match &cfg.episodes.path {
        Some(p) => load_episodes(p)?,
        None => generate_episode_set(
            &worlds,
            cfg.episodes.per_world,
            cfg.episodes.split,
            &cfg.episodes.sampling,
            derive_seed(cfg.seed, "episodes", 0),
        )?,
    };
    if let Some(e) = set
        .episodes
        .iter()
        .find(|e| worlds.iter().all(|w| w.name() != e.world_id))
    {
        return Err(HarnessError::Config(format!(
            "episode references unknown world {}",
            e.world_id
        )));
    }
    if let Some(m) = cfg
        .episodes
        .goal_counts
        .iter()
        .find(|m| set.episodes.iter().any(|e| e.num_goals() < **m))
    {
        return Err(HarnessError::Config(format!("episode file has fewer than {m} goals")));
    }
    Ok(Inputs { worlds, set })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub kind: String,
    pub config_hash: String,
    pub tool_version: String,
    pub worlds: Vec<String>,
    pub episodes: usize,
}

/// Writes `worlds/<name>.txt`, `episodes_<split>.jsonl` and `manifest.json`
/// under the output directory.
pub fn cmd_gen(cfg: &RunConfig) -> Result<Inputs, HarnessError> {
    cfg.validate()?;
    let worlds = generate_worlds(cfg)?;
    let set = generate_episode_set(
        &worlds,
        cfg.episodes.per_world,
        cfg.episodes.split,
        &cfg.episodes.sampling,
        derive_seed(cfg.seed, "episodes", 0),
    )?;
    for w in &worlds {
        write_file(&cfg.out.join("worlds").join(format!("{}.txt", w.name())), &w.to_text())?;
    }
    let ep_path = cfg.out.join(format!("episodes_{}.jsonl", cfg.episodes.split.as_str()));
    fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    save_episodes(&set, &ep_path)?;
    let manifest = Manifest {
        version: OUTPUT_VERSION.into(),
        kind: "manifest".into(),
        config_hash: cfg.hash(),
        tool_version: crate::VERSION.into(),
        worlds: worlds.iter().map(|w| w.name().to_string()).collect(),
        episodes: set.episodes.len(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    text.push('\n');
    write_file(&cfg.out.join("manifest.json"), &text)?;
    Ok(Inputs { worlds, set })
}

pub struct EvalOutput {
    pub rows: Vec<SummaryRow>,
    pub records: Vec<RecordLine>,
    pub summary_csv: String,
}

fn evaluate(cfg: &RunConfig, inputs: &Inputs, sims: &[SimConfig], traces: bool) -> Result<EvalOutput, HarnessError> {
    let grid = Grid {
        agents: &cfg.agents,
        goal_counts: &cfg.episodes.goal_counts,
        sims,
    };
    let hash = cfg.hash();
    let trace_dir = cfg.out.join("traces");
    let opts = TraceOptions {
        dir: &trace_dir,
        config_hash: &hash,
    };
    let results = run_grid(
        &inputs.worlds,
        &inputs.set.episodes,
        &grid,
        cfg.seed,
        cfg.workers,
        traces.then_some(&opts),
    )?;
    let rows = summarize(&grid, &results)?;
    let records = results
        .keys
        .iter()
        .zip(&results.records)
        .flat_map(|(k, recs)| {
            let agent = cfg.agents[k.agent].label();
            let budget = sims[k.sim].found_budget;
            recs.iter().map(move |r| RecordLine {
                agent: agent.clone(),
                m: k.m,
                budget,
                record: r.clone(),
            })
        })
        .collect();
    let summary_csv = summary_csv(&rows, &hash);
    Ok(EvalOutput {
        rows,
        records,
        summary_csv,
    })
}

/// Evaluates every configured agent at every goal count. Writes
/// `summary.csv`, `records.jsonl` and, when enabled, one trace per episode.
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalOutput, HarnessError> {
    cfg.validate()?;
    let inputs = prepare_inputs(cfg)?;
    cmd_eval_with(cfg, &inputs)
}

pub fn cmd_eval_with(cfg: &RunConfig, inputs: &Inputs) -> Result<EvalOutput, HarnessError> {
    let out = evaluate(cfg, inputs, std::slice::from_ref(&cfg.sim), cfg.traces)?;
    write_file(&cfg.out.join("summary.csv"), &out.summary_csv)?;
    write_file(
        &cfg.out.join("records.jsonl"),
        &records_to_string(&out.records, &cfg.hash()),
    )?;
    Ok(out)
}

pub struct SweepOutput {
    pub rows: Vec<SummaryRow>,
    /// Success never decreases with the budget, per (agent, m).
    pub monotone: bool,
    pub csv: String,
}

/// The evaluation repeated for each wrong-FOUND budget. Writes `sweep.csv`.
pub fn cmd_sweep_found(cfg: &RunConfig) -> Result<SweepOutput, HarnessError> {
    cfg.validate()?;
    let inputs = prepare_inputs(cfg)?;
    cmd_sweep_found_with(cfg, &inputs)
}

pub fn cmd_sweep_found_with(cfg: &RunConfig, inputs: &Inputs) -> Result<SweepOutput, HarnessError> {
    let mut budgets = cfg.budgets.clone();
    budgets.sort_unstable();
    budgets.dedup();
    let sims: Vec<SimConfig> = budgets
        .iter()
        .map(|&b| SimConfig {
            found_budget: b,
            ..cfg.sim.clone()
        })
        .collect();
    let out = evaluate(cfg, inputs, &sims, false)?;
    let mut monotone = true;
    for row in &out.rows {
        let prev = out
            .rows
            .iter()
            .filter(|r| r.agent == row.agent && r.m == row.m && r.budget < row.budget)
            .map(|r| r.summary.success)
            .fold(f64::NEG_INFINITY, f64::max);
        if row.summary.success < prev {
            log::warn!("{} m={}: success drops at budget {}", row.agent, row.m, row.budget);
            monotone = false;
        }
    }
    let csv = summary_csv(&out.rows, &cfg.hash());
    write_file(&cfg.out.join("sweep.csv"), &csv)?;
    Ok(SweepOutput {
        rows: out.rows,
        monotone,
        csv,
    })
}

/// Success and SPL of agents configured for `train` goals evaluated on
/// `eval` goals.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossEvalMatrix {
    pub agent: String,
    pub goal_counts: Vec<usize>,
    /// `success[a][b]`: configured for `goal_counts[a]`, evaluated on `goal_counts[b]`.
    pub success: Vec<Vec<f64>>,
    pub spl: Vec<Vec<f64>>,
}

impl CrossEvalMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (name, values) in [("success", &self.success), ("spl", &self.spl)] {
            out.push_str(&format!("{},{name}", csv_field(&self.agent)));
            for b in &self.goal_counts {
                out.push_str(&format!(",{b}ON"));
            }
            out.push('\n');
            for (a, row) in self.goal_counts.iter().zip(values) {
                out.push_str(&format!("{},{a}ON", csv_field(&self.agent)));
                for v in row {
                    out.push_str(&format!(",{v:.6}"));
                }
                out.push('\n');
            }
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `cross_eval.csv`. Agents carry no goal-count specific state, so
/// "configured for a" only labels the row; every cell is still evaluated.
pub fn cmd_cross_eval(cfg: &RunConfig) -> Result<Vec<CrossEvalMatrix>, HarnessError> {
    cfg.validate()?;
    let inputs = prepare_inputs(cfg)?;
    let counts = cfg.episodes.goal_counts.clone();
    let mut per_row = Vec::with_capacity(counts.len());
    for _trained_for in &counts {
        per_row.push(evaluate(cfg, &inputs, std::slice::from_ref(&cfg.sim), false)?.rows);
    }
    let mut matrices = Vec::new();
    for spec in &cfg.agents {
        let label = spec.label();
        let pick = |rows: &[SummaryRow], m: usize| {
            rows.iter()
                .find(|r| r.agent == label && r.m == m)
                .map(|r| r.summary)
                .expect("every (agent, m) is evaluated")
        };
        let success = per_row
            .iter()
            .map(|rows| counts.iter().map(|&b| pick(rows, b).success).collect())
            .collect();
        let spl = per_row
            .iter()
            .map(|rows| counts.iter().map(|&b| pick(rows, b).spl).collect())
            .collect();
        matrices.push(CrossEvalMatrix {
            agent: label.clone(),
            goal_counts: counts.clone(),
            success,
            spl,
        });
    }
    let mut text = format!(
        "# kind=cross-eval version={OUTPUT_VERSION} config={} tool={}\n",
        cfg.hash(),
        crate::VERSION
    );
    for m in &matrices {
        text.push_str(&m.to_csv());
    }
    write_file(&cfg.out.join("cross_eval.csv"), &text)?;
    Ok(matrices)
}

/// Re-simulates a trace and writes its text-art frames to
/// `replay/<trace stem>.txt`.
pub fn cmd_replay(cfg: &RunConfig, trace: &Path) -> Result<ReplayOutput, HarnessError> {
    cfg.validate()?;
    let inputs = prepare_inputs(cfg)?;
    let out = replay_trace(cfg, &inputs, trace)?;
    let stem = trace
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    write_file(
        &cfg.out.join("replay").join(format!("{stem}.txt")),
        &out.frames.join("\n"),
    )?;
    Ok(out)
}

/// Builds `report.md` from `records.jsonl` in the output directory.
pub fn cmd_report(cfg: &RunConfig) -> Result<String, HarnessError> {
    cfg.validate()?;
    let path = cfg.out.join("records.jsonl");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let (hash, records) = parse_records(&text)?;
    let report = render_report(cfg, &hash, &records)?;
    write_file(&cfg.out.join("report.md"), &report)?;
    Ok(report)
}

/// Records of one agent at one goal count and budget.
pub fn select<'a>(records: &'a [RecordLine], agent: &str, m: usize, budget: u32) -> Vec<&'a EpisodeRecord> {
    records
        .iter()
        .filter(|r| r.agent == agent && r.m == m && r.budget == budget)
        .map(|r| &r.record)
        .collect()
}
