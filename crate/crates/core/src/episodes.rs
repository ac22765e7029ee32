//! Episode sampling under geodesic leg constraints, splits, statistics and
//! JSONL persistence.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Cell, Point, Pose};
use crate::rng::{derive_seed, seeded_rng};
use crate::world::{geodesic_field, GridWorld, ObjectInstance, AGENT_RADIUS};

pub const EPISODE_FORMAT_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("sampling exhausted on world {world_id} after {retries} retries")]
    SamplingExhausted { world_id: String, retries: usize },
    #[error("invalid sampling config: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("episode file schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
}

fn schema(line: usize, message: impl Into<String>) -> EpisodeError {
    EpisodeError::Schema {
        line,
        message: message.into(),
    }
}

/// Rounds to the 6-decimal grid used by the episode file format.
pub fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub category: u8,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub world_id: String,
    pub seed: u64,
    pub start: Pose,
    pub goals: Vec<Goal>,
    /// Geodesic leg lengths start->g1, g1->g2, ...
    pub chain: Vec<f64>,
}

impl Episode {
    pub fn num_goals(&self) -> usize {
        self.goals.len()
    }

    pub fn total_distance(&self) -> f64 {
        self.chain.iter().sum()
    }

    /// The goal objects inserted into the world for this episode.
    pub fn objects(&self) -> Vec<ObjectInstance> {
        self.goals
            .iter()
            .map(|g| ObjectInstance::new(g.category, g.position))
            .collect()
    }

    /// The episode restricted to its first `m` goals.
    pub fn truncated(&self, m: usize) -> Episode {
        let m = m.min(self.goals.len());
        Episode {
            goals: self.goals[..m].to_vec(),
            chain: self.chain[..m].to_vec(),
            ..self.clone()
        }
    }

    /// Recomputes the geodesic chain from the world, rounded like the
    /// stored values.
    pub fn recompute_chain(&self, world: &GridWorld) -> Option<Vec<f64>> {
        let mut prev = self.start.position();
        let mut out = Vec::with_capacity(self.goals.len());
        for g in &self.goals {
            let d = crate::world::geodesic_distance(world, prev, g.position, AGENT_RADIUS).ok()?;
            out.push(round6(d));
            prev = g.position;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// Size of the goal-category pool (k).
    pub num_categories: u8,
    /// Goals per episode (m).
    pub num_goals: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub max_retries: usize,
    /// Minimum wall clearance of goal positions.
    pub goal_clearance: f64,
    /// Minimum Euclidean spacing between any two goals of an episode.
    pub goal_separation: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            num_categories: 8,
            num_goals: 3,
            d_min: 2.0,
            d_max: 20.0,
            max_retries: 100,
            goal_clearance: 0.5,
            goal_separation: 1.0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), EpisodeError> {
        if self.num_goals == 0 || self.num_goals > self.num_categories as usize {
            return Err(EpisodeError::Config(format!(
                "need 1 <= m <= k, got m={} k={}",
                self.num_goals, self.num_categories
            )));
        }
        if !(self.d_min >= 0.0 && self.d_min <= self.d_max) {
            return Err(EpisodeError::Config(format!(
                "bad distance band [{}, {}]",
                self.d_min, self.d_max
            )));
        }
        Ok(())
    }
}

/// Cached candidate cells of a world.
pub struct EpisodeSampler<'w> {
    world: &'w GridWorld,
    start_cells: Vec<Cell>,
    goal_cells: Vec<Cell>,
}

impl<'w> EpisodeSampler<'w> {
    pub fn new(world: &'w GridWorld, config: &SamplingConfig) -> Self {
        Self {
            world,
            start_cells: world.navigable_cells(AGENT_RADIUS),
            goal_cells: world.navigable_cells(config.goal_clearance.max(AGENT_RADIUS)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        config: &SamplingConfig,
        seed: u64,
        rng: &mut R,
    ) -> Result<Episode, EpisodeError> {
        config.validate()?;
        let exhausted = || EpisodeError::SamplingExhausted {
            world_id: self.world.name().to_string(),
            retries: config.max_retries,
        };
        if self.start_cells.is_empty() || self.goal_cells.is_empty() {
            return Err(exhausted());
        }
        let center = |c: Cell| {
            let p = self.world.cell_center(c);
            Point::new(round6(p.x), round6(p.y))
        };
        'attempt: for _ in 0..config.max_retries {
            let start_cell = self.start_cells[rng.gen_range(0..self.start_cells.len())];
            let start_p = center(start_cell);
            let theta = 30 * rng.gen_range(0..12u32);
            let categories: Vec<u8> = sample_indices(rng, config.num_categories as usize, config.num_goals)
                .into_iter()
                .map(|i| i as u8 + 1)
                .collect();
            let mut prev = start_p;
            let mut goals: Vec<Goal> = Vec::with_capacity(config.num_goals);
            let mut chain = Vec::with_capacity(config.num_goals);
            for &category in &categories {
                let field = geodesic_field(self.world, prev, AGENT_RADIUS).map_err(|_| exhausted())?;
                let candidates: Vec<(Cell, f64)> = self
                    .goal_cells
                    .iter()
                    .filter_map(|&c| {
                        let d = field.at_cell(c);
                        if !(d >= config.d_min && d <= config.d_max) {
                            return None;
                        }
                        let p = center(c);
                        goals
                            .iter()
                            .all(|g| g.position.distance(p) >= config.goal_separation)
                            .then_some((c, d))
                    })
                    .collect();
                if candidates.is_empty() {
                    continue 'attempt;
                }
                let (cell, d) = candidates[rng.gen_range(0..candidates.len())];
                let position = center(cell);
                goals.push(Goal { category, position });
                chain.push(round6(d));
                prev = position;
            }
            return Ok(Episode {
                world_id: self.world.name().to_string(),
                seed,
                start: Pose::new(start_p.x, start_p.y, theta),
                goals,
                chain,
            });
        }
        Err(exhausted())
    }
}

/// Samples one episode: start and goals drawn uniformly from navigable cells
/// with every leg's geodesic length inside `[d_min, d_max]`.
pub fn sample_episode<R: Rng + ?Sized>(
    world: &GridWorld,
    config: &SamplingConfig,
    seed: u64,
    rng: &mut R,
) -> Result<Episode, EpisodeError> {
    EpisodeSampler::new(world, config).sample(config, seed, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSet {
    pub split: Split,
    pub config: SamplingConfig,
    pub episodes: Vec<Episode>,
}

impl EpisodeSet {
    pub fn world_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.episodes.iter().map(|e| e.world_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// The same episodes restricted to their first `m` goals.
    pub fn truncated(&self, m: usize) -> EpisodeSet {
        EpisodeSet {
            split: self.split,
            config: SamplingConfig {
                num_goals: m,
                ..self.config.clone()
            },
            episodes: self.episodes.iter().map(|e| e.truncated(m)).collect(),
        }
    }
}

/// True when no world id appears in more than one of the sets' splits.
pub fn splits_disjoint(sets: &[&EpisodeSet]) -> bool {
    let mut owner: std::collections::HashMap<&str, Split> = std::collections::HashMap::new();
    for set in sets {
        for id in set.world_ids() {
            if let Some(prev) = owner.insert(id, set.split) {
                if prev != set.split {
                    return false;
                }
            }
        }
    }
    true
}

/// Deterministic set of `per_world_count` episodes per world. Each episode
/// uses its own stream keyed by `(base_seed, world_id, index)`.
pub fn generate_episode_set(
    worlds: &[GridWorld],
    per_world_count: usize,
    split: Split,
    config: &SamplingConfig,
    base_seed: u64,
) -> Result<EpisodeSet, EpisodeError> {
    config.validate()?;
    if worlds.is_empty() {
        return Err(EpisodeError::Config("no worlds".into()));
    }
    let per_world: Vec<Result<Vec<Episode>, EpisodeError>> = worlds
        .par_iter()
        .map(|world| {
            let sampler = EpisodeSampler::new(world, config);
            (0..per_world_count)
                .map(|i| {
                    let seed = derive_seed(base_seed, world.name(), i as u64);
                    let mut rng = seeded_rng(seed);
                    sampler.sample(config, seed, &mut rng)
                })
                .collect()
        })
        .collect();
    let mut episodes = Vec::with_capacity(worlds.len() * per_world_count);
    for r in per_world {
        episodes.extend(r?);
    }
    Ok(EpisodeSet {
        split,
        config: config.clone(),
        episodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_of(&self, value: f64) -> usize {
        ((value / self.bin_width).floor().max(0.0) as usize).min(self.counts.len() - 1)
    }
}

/// Histogram of total episode geodesic distance with fixed-width bins that
/// span `[0, m * d_max]`; values past the end land in the last bin.
pub fn episode_stats(set: &EpisodeSet, bin_width: f64) -> Histogram {
    let span = set.config.num_goals as f64 * set.config.d_max;
    let bins = ((span / bin_width).ceil() as usize).max(1);
    let mut hist = Histogram {
        bin_width,
        counts: vec![0; bins],
    };
    for e in &set.episodes {
        let b = hist.bin_of(e.total_distance());
        hist.counts[b] += 1;
    }
    hist
}

#[derive(Serialize, Deserialize)]
struct SetHeader {
    version: String,
    kind: String,
    split: Split,
    config: SamplingConfig,
}

#[derive(Deserialize)]
struct RawStart {
    x: f64,
    y: f64,
    theta: u32,
}

#[derive(Deserialize)]
struct RawGoal {
    category: u8,
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEpisode {
    version: String,
    world_id: String,
    seed: u64,
    start: RawStart,
    goals: Vec<RawGoal>,
    chain: Vec<f64>,
}

/// One episode as a JSON line with 6-decimal floats.
pub fn episode_to_json(e: &Episode) -> String {
    let mut s = String::new();
    write!(
        s,
        "{{\"version\":\"{EPISODE_FORMAT_VERSION}\",\"world_id\":{},\"seed\":{},\"start\":{{\"x\":{:.6},\"y\":{:.6},\"theta\":{}}},\"goals\":[",
        serde_json::to_string(&e.world_id).expect("string serialises"),
        e.seed,
        e.start.x,
        e.start.y,
        e.start.theta
    )
    .expect("write to string");
    for (i, g) in e.goals.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(
            s,
            "{{\"category\":{},\"x\":{:.6},\"y\":{:.6}}}",
            g.category, g.position.x, g.position.y
        )
        .expect("write to string");
    }
    s.push_str("],\"chain\":[");
    for (i, d) in e.chain.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{d:.6}").expect("write to string");
    }
    s.push_str("]}");
    s
}

pub fn episode_from_json(line: &str, line_no: usize) -> Result<Episode, EpisodeError> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| schema(line_no, e.to_string()))?;
    let version = value.get("version").and_then(|v| v.as_str()).unwrap_or("<missing>");
    if version != EPISODE_FORMAT_VERSION {
        return Err(schema(line_no, format!("unsupported version {version:?}")));
    }
    let raw: RawEpisode = serde_json::from_value(value).map_err(|e| schema(line_no, e.to_string()))?;
    debug_assert_eq!(raw.version, EPISODE_FORMAT_VERSION);
    if raw.goals.len() != raw.chain.len() {
        return Err(schema(line_no, "goals and chain lengths differ"));
    }
    Ok(Episode {
        world_id: raw.world_id,
        seed: raw.seed,
        start: Pose::new(raw.start.x, raw.start.y, raw.start.theta),
        goals: raw
            .goals
            .into_iter()
            .map(|g| Goal {
                category: g.category,
                position: Point::new(g.x, g.y),
            })
            .collect(),
        chain: raw.chain,
    })
}

pub fn episodes_to_string(set: &EpisodeSet) -> String {
    let header = SetHeader {
        version: EPISODE_FORMAT_VERSION.to_string(),
        kind: "episode-set".to_string(),
        split: set.split,
        config: set.config.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serialises");
    out.push('\n');
    for e in &set.episodes {
        out.push_str(&episode_to_json(e));
        out.push('\n');
    }
    out
}

pub fn episodes_from_str(text: &str) -> Result<EpisodeSet, EpisodeError> {
    if !text.ends_with('\n') {
        return Err(schema(
            text.lines().count().max(1),
            "truncated file (missing final newline)",
        ));
    }
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| schema(1, "empty file"))?;
    let value: serde_json::Value = serde_json::from_str(first).map_err(|e| schema(1, e.to_string()))?;
    let version = value.get("version").and_then(|v| v.as_str()).unwrap_or("<missing>");
    if version != EPISODE_FORMAT_VERSION {
        return Err(schema(1, format!("unsupported version {version:?}")));
    }
    let header: SetHeader = serde_json::from_value(value).map_err(|e| schema(1, e.to_string()))?;
    if header.kind != "episode-set" {
        return Err(schema(
            1,
            format!("expected kind \"episode-set\", found {:?}", header.kind),
        ));
    }
    let mut episodes = Vec::new();
    for (i, line) in lines.enumerate() {
        let e = episode_from_json(line, i + 2)?;
        let mut cats: Vec<u8> = e.goals.iter().map(|g| g.category).collect();
        cats.sort_unstable();
        cats.dedup();
        if cats.len() != e.goals.len() || cats.iter().any(|c| *c == 0 || *c > header.config.num_categories) {
            return Err(schema(i + 2, "goal categories must be distinct and within 1..=k"));
        }
        episodes.push(e);
    }
    Ok(EpisodeSet {
        split: header.split,
        config: header.config,
        episodes,
    })
}

pub fn save_episodes(set: &EpisodeSet, path: &Path) -> Result<(), EpisodeError> {
    fs::write(path, episodes_to_string(set))?;
    Ok(())
}

pub fn load_episodes(path: &Path) -> Result<EpisodeSet, EpisodeError> {
    let text = fs::read_to_string(path)?;
    episodes_from_str(&text)
}
