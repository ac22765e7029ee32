//! Multi-object navigation in procedurally generated grid worlds: the
//! simulator, map memories, baseline agents, metrics and an evaluation
//! harness.

pub mod agents;
pub mod episodes;
pub mod geom;
pub mod harness;
pub mod mapmem;
pub mod metrics;
pub mod rng;
pub mod sim;
pub mod world;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use agents::{AgentKind, AgentSpec, MapSource, PlannerConfig, Policy};
pub use episodes::{Episode, EpisodeSet, Goal, SamplingConfig, Split};
pub use geom::{Cell, Point, Pose};
pub use harness::{HarnessError, RunConfig};
pub use mapmem::{Channels, FeatureMap, GlobalMap, MapGeometry, Occ};
pub use metrics::{EpisodeRecord, MetricsSummary, Termination};
pub use sim::{Action, EpisodeContext, Observation, SimConfig};
pub use world::{GridWorld, ObjectInstance};
