//! Baseline policies and the map-consuming planner.

mod planner;
mod planning;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Pose;
use crate::sim::{Action, EpisodeContext, Event, Observation};

pub use planner::{MapSource, PlannerConfig, PlannerPolicy};
pub use planning::{frontier_select, plan_path, Path, PlanError, Traversability};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("policy returned invalid action id {0}")]
    InvalidAction(u8),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("bad agent parameters: {0}")]
    BadParameters(String),
}

/// What a policy knows about the task at a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskInfo {
    pub goal_index: usize,
    pub goal_category: u8,
    pub num_goals: usize,
    pub num_categories: u8,
    /// Oracle hook: the current goal is within the FOUND threshold.
    pub within_vicinity: bool,
}

pub struct StepContext<'a> {
    pub t: usize,
    pub observation: &'a Observation,
    pub pose: Pose,
    pub task: TaskInfo,
    /// Events produced by the previous step.
    pub last_events: &'a [Event],
    pub episode: &'a EpisodeContext<'a>,
}

/// A per-episode controller. `act` returns an action id; ids outside the
/// action set abort the episode with [`PolicyError::InvalidAction`].
pub trait Policy: Send {
    fn name(&self) -> String;
    fn on_reset(&mut self, episode: &EpisodeContext<'_>);
    fn act(&mut self, ctx: &StepContext<'_>, rng: &mut ChaCha8Rng) -> u8;
}

/// Uniform over all four actions.
pub fn rand_policy<R: Rng + ?Sized>(rng: &mut R) -> Action {
    Action::ALL[rng.gen_range(0..4)]
}

/// FOUND exactly when inside the threshold, otherwise a uniform motion.
pub fn rand_oracle_found_policy<R: Rng + ?Sized>(rng: &mut R, within_vicinity: bool) -> Action {
    if within_vicinity {
        Action::Found
    } else {
        Action::MOTION[rng.gen_range(0..3)]
    }
}

pub struct RandPolicy;

impl Policy for RandPolicy {
    fn name(&self) -> String {
        "rand".into()
    }

    fn on_reset(&mut self, _: &EpisodeContext<'_>) {}

    fn act(&mut self, _: &StepContext<'_>, rng: &mut ChaCha8Rng) -> u8 {
        rand_policy(rng).id()
    }
}

pub struct RandOracleFoundPolicy;

impl Policy for RandOracleFoundPolicy {
    fn name(&self) -> String {
        "rand_oracle_found".into()
    }

    fn on_reset(&mut self, _: &EpisodeContext<'_>) {}

    fn act(&mut self, ctx: &StepContext<'_>, rng: &mut ChaCha8Rng) -> u8 {
        rand_oracle_found_policy(rng, ctx.task.within_vicinity).id()
    }
}

/// Marks future goals (index above `current`) that are visible now. Flags
/// only ever go from false to true.
pub fn seen_tracker_update(flags: &mut [bool], visible: &[usize], current: usize) {
    for &j in visible {
        if j > current && j < flags.len() {
            flags[j] = true;
        }
    }
}

/// Agent selector as written in configs: `rand`, `rand_oracle_found`,
/// `planner:oracle`, `planner:oracle_ego`, `planner:objrecog`,
/// `planner:projneural`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AgentKind {
    Rand,
    RandOracleFound,
    Planner(MapSource),
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentKind::Rand => f.write_str("rand"),
            AgentKind::RandOracleFound => f.write_str("rand_oracle_found"),
            AgentKind::Planner(s) => write!(f, "planner:{}", s.as_str()),
        }
    }
}

impl FromStr for AgentKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rand" => Ok(AgentKind::Rand),
            "rand_oracle_found" => Ok(AgentKind::RandOracleFound),
            other => other
                .strip_prefix("planner:")
                .and_then(MapSource::parse)
                .map(AgentKind::Planner)
                .ok_or_else(|| PolicyError::UnknownAgent(other.to_string())),
        }
    }
}

impl TryFrom<String> for AgentKind {
    type Error = PolicyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<AgentKind> for String {
    fn from(a: AgentKind) -> String {
        a.to_string()
    }
}

/// A fully parameterised agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub kind: AgentKind,
    #[serde(default)]
    pub planner: PlannerConfig,
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            planner: PlannerConfig::default(),
        }
    }

    /// Display label, including classifier noise when it is used.
    pub fn label(&self) -> String {
        match self.kind {
            AgentKind::Planner(MapSource::ObjRecog)
                if self.planner.miss_rate > 0.0 || self.planner.confusion_rate > 0.0 =>
            {
                format!(
                    "{}(miss={},conf={})",
                    self.kind, self.planner.miss_rate, self.planner.confusion_rate
                )
            }
            _ => self.kind.to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        self.planner.validate()
    }

    pub fn build(&self) -> Result<Box<dyn Policy>, PolicyError> {
        self.validate()?;
        Ok(match self.kind {
            AgentKind::Rand => Box::new(RandPolicy),
            AgentKind::RandOracleFound => Box::new(RandOracleFoundPolicy),
            AgentKind::Planner(source) => Box::new(PlannerPolicy::new(source, self.planner.clone())),
        })
    }
}
