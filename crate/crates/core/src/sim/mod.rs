//! The embodied multi-goal task: actions, observations, FOUND semantics,
//! reward and termination.

mod rollout;
mod trace;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episodes::Episode;
use crate::geom::{cos_sin_deg, Point, Pose};
use crate::world::{geodesic_field, ray_disc, raycast, DistanceField, GridWorld, ObjectInstance, AGENT_RADIUS};

pub use rollout::{run_episode, RunError};
pub use trace::{
    parse_trace, read_trace, trace_to_string, write_trace, NullSink, TraceError, TraceHeader, TraceSink, TraceStep,
    TRACE_VERSION,
};

/// Translation per successful FORWARD.
pub const FORWARD_STEP: f64 = 0.25;
/// Heading change per turn action, degrees.
pub const TURN_STEP: i32 = 30;
pub const R_GOAL: f64 = 3.0;
pub const SLACK_REWARD: f64 = -0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
    Found,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Forward, Action::TurnLeft, Action::TurnRight, Action::Found];
    pub const MOTION: [Action; 3] = [Action::Forward, Action::TurnLeft, Action::TurnRight];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Action> {
        Action::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Forward => "forward",
            Action::TurnLeft => "turn_left",
            Action::TurnRight => "turn_right",
            Action::Found => "found",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub max_steps: usize,
    pub vicinity_threshold: f64,
    pub found_budget: u32,
    pub n_rays: usize,
    pub fov: f64,
    pub max_depth: f64,
    pub hidden_objects: bool,
    pub proportional_time_limit: bool,
    /// Size of the goal-category pool (length of the goal one-hot).
    pub num_categories: u8,
    /// Range used for goal visibility bookkeeping and map reveal.
    pub visibility_range: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_steps: 2500,
            vicinity_threshold: 1.5,
            found_budget: 0,
            n_rays: 64,
            fov: 79.0,
            max_depth: 10.0,
            hidden_objects: false,
            proportional_time_limit: false,
            num_categories: 8,
            visibility_range: 5.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        if !(self.vicinity_threshold > 0.0) {
            return bad("vicinity_threshold must be positive");
        }
        if self.n_rays == 0 {
            return bad("n_rays must be positive");
        }
        if !(self.fov > 0.0 && self.fov <= 360.0) {
            return bad("fov must be in (0, 360]");
        }
        if !(self.max_depth > 0.0) || !(self.visibility_range > 0.0) {
            return bad("max_depth and visibility_range must be positive");
        }
        if self.num_categories == 0 {
            return bad("num_categories must be positive");
        }
        Ok(())
    }

    /// Effective step limit for an episode with `m` goals.
    pub fn step_limit(&self, m: usize) -> usize {
        if self.proportional_time_limit {
            (self.max_steps * m.max(1)).div_ceil(3)
        } else {
            self.max_steps
        }
    }

    /// Heading offset of ray `i`, evenly spanning `[-fov/2, fov/2]`.
    pub fn ray_offset(&self, i: usize) -> f64 {
        crate::mapmem::ray_offset_deg(self.fov, i, self.n_rays)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Wall depth per ray, in `(0, max_depth]`.
    pub depth_scan: Vec<f64>,
    /// Category of the first object hit per ray, if any.
    pub semantic_scan: Vec<Option<u8>>,
    /// Range of the semantic hit per ray; equals the depth when none.
    pub semantic_range: Vec<f64>,
    pub goal_onehot: Vec<u8>,
    pub prev_action: Option<Action>,
}

impl Observation {
    /// Index of the set entry in the goal one-hot.
    pub fn goal_index(&self) -> Option<usize> {
        self.goal_onehot.iter().position(|v| *v == 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Success,
    FailedWrongFound,
    FailedTimeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    GoalFound(usize),
    WrongFound,
    Collision,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    /// The distance-decrease component of the reward.
    pub r_closer: f64,
    pub done: bool,
    pub events: Vec<Event>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("episode inconsistent with world: {0}")]
    InconsistentEpisode(String),
    #[error("step called after the episode terminated")]
    SteppedTerminated,
    #[error("invalid sim config: {0}")]
    InvalidConfig(String),
}

/// Immutable per-episode data shared by every step: the world, the inserted
/// goal objects and the cached geodesic field of each goal.
#[derive(Debug, Clone)]
pub struct EpisodeContext<'a> {
    pub episode: Episode,
    pub world: &'a GridWorld,
    pub config: SimConfig,
    objects: Vec<ObjectInstance>,
    fields: Vec<Arc<DistanceField>>,
}

impl<'a> EpisodeContext<'a> {
    pub fn new(episode: &Episode, world: &'a GridWorld, config: &SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        if episode.goals.is_empty() {
            return Err(SimError::InconsistentEpisode("episode has no goals".into()));
        }
        let s = episode.start;
        if !world.is_navigable(s.x, s.y, AGENT_RADIUS) {
            return Err(SimError::InconsistentEpisode(format!(
                "start ({}, {}) is not navigable in {}",
                s.x,
                s.y,
                world.name()
            )));
        }
        if let Some(g) = episode
            .goals
            .iter()
            .find(|g| g.category == 0 || g.category > config.num_categories)
        {
            return Err(SimError::InconsistentEpisode(format!(
                "goal category {} outside 1..={}",
                g.category, config.num_categories
            )));
        }
        let mut fields = Vec::with_capacity(episode.goals.len());
        for g in &episode.goals {
            let f = geodesic_field(world, g.position, AGENT_RADIUS)
                .map_err(|e| SimError::InconsistentEpisode(format!("goal {:?}: {e}", g.position)))?;
            if f.at_point(s.position()).is_infinite() {
                return Err(SimError::InconsistentEpisode(format!(
                    "goal {:?} unreachable from start",
                    g.position
                )));
            }
            fields.push(Arc::new(f));
        }
        Ok(Self {
            objects: episode.objects(),
            episode: episode.clone(),
            world,
            config: config.clone(),
            fields,
        })
    }

    /// The same episode restricted to its first `m` goals, sharing the
    /// cached fields.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.clamp(1, self.num_goals());
        let episode = self.episode.truncated(m);
        Self {
            objects: episode.objects(),
            episode,
            world: self.world,
            config: self.config.clone(),
            fields: self.fields[..m].to_vec(),
        }
    }

    /// The same episode under another sim config.
    pub fn with_config(&self, config: &SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        Ok(Self {
            config: config.clone(),
            ..self.clone()
        })
    }

    pub fn num_goals(&self) -> usize {
        self.episode.goals.len()
    }

    /// All goal objects of the episode, inserted or not.
    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    /// Objects present for rendering; none when objects are hidden.
    pub fn rendered_objects(&self) -> &[ObjectInstance] {
        if self.config.hidden_objects {
            &[]
        } else {
            &self.objects
        }
    }

    pub fn field(&self, goal_index: usize) -> &DistanceField {
        &self.fields[goal_index]
    }

    /// Geodesic distance from `p` to goal `goal_index`.
    pub fn goal_distance(&self, goal_index: usize, p: Point) -> f64 {
        self.fields[goal_index].at_point(p)
    }

    pub fn step_limit(&self) -> usize {
        self.config.step_limit(self.num_goals())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub pose: Pose,
    pub current_goal_index: usize,
    pub steps_taken: usize,
    pub wrong_found_count: u32,
    pub status: Status,
    pub forward_moves: u64,
    pub prev_action: Option<Action>,
}

impl SimState {
    /// Distance travelled; only successful FORWARDs count.
    pub fn path_length(&self) -> f64 {
        FORWARD_STEP * self.forward_moves as f64
    }

    pub fn is_done(&self) -> bool {
        self.status != Status::Running
    }
}

fn goal_onehot(ctx: &EpisodeContext<'_>, goal_index: usize) -> Vec<u8> {
    let idx = goal_index.min(ctx.num_goals() - 1);
    let mut v = vec![0; ctx.config.num_categories as usize];
    v[ctx.episode.goals[idx].category as usize - 1] = 1;
    v
}

/// Depth and semantic scans from `pose`. Depth is wall-only; semantics report
/// the nearest object in front of the wall.
pub fn render_scans(
    world: &GridWorld,
    objects: &[ObjectInstance],
    pose: &Pose,
    config: &SimConfig,
) -> (Vec<f64>, Vec<Option<u8>>, Vec<f64>) {
    let n = config.n_rays;
    let origin = pose.position();
    let mut depth = Vec::with_capacity(n);
    let mut semantic = Vec::with_capacity(n);
    let mut semantic_range = Vec::with_capacity(n);
    for i in 0..n {
        let angle = pose.theta as f64 + config.ray_offset(i);
        let wall = raycast(world, &[], origin, angle, config.max_depth).distance;
        let (c, s) = cos_sin_deg(angle);
        let dir = Point::new(c, s);
        let mut best: Option<(f64, u8)> = None;
        for o in objects {
            if let Some(t) = ray_disc(origin, dir, o.position, o.radius) {
                if t < wall && best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, o.category));
                }
            }
        }
        depth.push(wall);
        semantic.push(best.map(|(_, c)| c));
        semantic_range.push(best.map_or(wall, |(t, _)| t));
    }
    (depth, semantic, semantic_range)
}

pub fn render_observation(ctx: &EpisodeContext<'_>, state: &SimState) -> Observation {
    let (depth_scan, semantic_scan, semantic_range) =
        render_scans(ctx.world, ctx.rendered_objects(), &state.pose, &ctx.config);
    Observation {
        depth_scan,
        semantic_scan,
        semantic_range,
        goal_onehot: goal_onehot(ctx, state.current_goal_index),
        prev_action: state.prev_action,
    }
}

pub fn reset(ctx: &EpisodeContext<'_>) -> (SimState, Observation) {
    let state = SimState {
        pose: ctx.episode.start,
        current_goal_index: 0,
        steps_taken: 0,
        wrong_found_count: 0,
        status: Status::Running,
        forward_moves: 0,
        prev_action: None,
    };
    let obs = render_observation(ctx, &state);
    (state, obs)
}

/// Applies one action. The distance term uses the goal that was current at
/// the start of the step.
pub fn step(ctx: &EpisodeContext<'_>, state: &mut SimState, action: Action) -> Result<StepResult, SimError> {
    if state.is_done() {
        return Err(SimError::SteppedTerminated);
    }
    let goal = state.current_goal_index;
    let before = ctx.goal_distance(goal, state.pose.position());
    let mut events = Vec::new();
    let mut reached = false;
    match action {
        Action::Forward => {
            let (c, s) = cos_sin_deg(state.pose.theta as f64);
            let x = state.pose.x + FORWARD_STEP * c;
            let y = state.pose.y + FORWARD_STEP * s;
            if ctx.world.is_navigable(x, y, AGENT_RADIUS) {
                state.pose = Pose { x, y, ..state.pose };
                state.forward_moves += 1;
            } else {
                events.push(Event::Collision);
            }
        }
        Action::TurnLeft => state.pose = state.pose.rotated(-TURN_STEP),
        Action::TurnRight => state.pose = state.pose.rotated(TURN_STEP),
        Action::Found => {
            if before <= ctx.config.vicinity_threshold {
                reached = true;
                events.push(Event::GoalFound(goal));
                state.current_goal_index += 1;
                if state.current_goal_index == ctx.num_goals() {
                    state.status = Status::Success;
                }
            } else {
                events.push(Event::WrongFound);
                state.wrong_found_count += 1;
                if state.wrong_found_count > ctx.config.found_budget {
                    state.status = Status::FailedWrongFound;
                }
            }
        }
    }
    state.steps_taken += 1;
    state.prev_action = Some(action);
    let after = ctx.goal_distance(goal, state.pose.position());
    let r_closer = if before.is_finite() && after.is_finite() {
        before - after
    } else {
        0.0
    };
    let reward = if reached { R_GOAL } else { 0.0 } + r_closer + SLACK_REWARD;
    if state.status == Status::Running && state.steps_taken >= ctx.step_limit() {
        state.status = Status::FailedTimeout;
        events.push(Event::Timeout);
    }
    Ok(StepResult {
        observation: render_observation(ctx, state),
        reward,
        r_closer,
        done: state.is_done(),
        events,
    })
}
