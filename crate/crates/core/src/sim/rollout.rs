//! Runs one policy over one episode and produces its record.

use thiserror::Error;

use super::{reset, step, Action, EpisodeContext, Event, SimError, Status, TraceSink, TraceStep};
use crate::agents::{seen_tracker_update, Policy, PolicyError, StepContext, TaskInfo};
use crate::metrics::{EpisodeRecord, GoalEvents, Termination};
use crate::rng::seeded_rng;
use crate::world::point_visible;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Sim(#[from] SimError),
    /// The policy misbehaved; the partial record is kept.
    #[error("policy error: {error}")]
    Policy {
        error: PolicyError,
        record: Box<EpisodeRecord>,
    },
}

fn task_info(ctx: &EpisodeContext<'_>, goal_index: usize, distance: f64) -> TaskInfo {
    let idx = goal_index.min(ctx.num_goals() - 1);
    TaskInfo {
        goal_index: idx,
        goal_category: ctx.episode.goals[idx].category,
        num_goals: ctx.num_goals(),
        num_categories: ctx.config.num_categories,
        within_vicinity: distance <= ctx.config.vicinity_threshold,
    }
}

fn update_seen(ctx: &EpisodeContext<'_>, pose: &crate::geom::Pose, current: usize, seen: &mut [bool]) {
    if ctx.config.hidden_objects {
        return;
    }
    let visible: Vec<usize> = (current + 1..ctx.num_goals())
        .filter(|&j| {
            !seen[j]
                && point_visible(
                    ctx.world,
                    pose,
                    ctx.config.fov,
                    ctx.config.visibility_range,
                    ctx.episode.goals[j].position,
                )
        })
        .collect();
    seen_tracker_update(seen, &visible, current);
}

/// Runs `policy` to termination. The policy RNG is seeded from `policy_seed`
/// alone, so a rollout is a pure function of its inputs.
pub fn run_episode(
    policy: &mut dyn Policy,
    ctx: &EpisodeContext<'_>,
    episode_index: usize,
    policy_seed: u64,
    sink: &mut dyn TraceSink,
) -> Result<EpisodeRecord, RunError> {
    let m = ctx.num_goals();
    let mut rng = seeded_rng(policy_seed);
    policy.on_reset(ctx);
    let (mut state, mut obs) = reset(ctx);
    let mut seen = vec![false; m];
    let mut goals: Vec<GoalEvents> = (0..m)
        .map(|_| GoalEvents {
            found_step: None,
            seen: false,
            wrong_before: 0,
        })
        .collect();
    let mut last_events: Vec<Event> = Vec::new();
    update_seen(ctx, &state.pose, 0, &mut seen);

    let record = |state: &super::SimState, goals: &[GoalEvents], seen: &[bool], termination: Termination| {
        let mut goals = goals.to_vec();
        for (g, s) in goals.iter_mut().zip(seen) {
            g.seen = *s;
        }
        EpisodeRecord {
            episode_index,
            world_id: ctx.episode.world_id.clone(),
            m,
            success: state.status == Status::Success,
            goals_found: state.current_goal_index,
            path_length: state.path_length(),
            chain: ctx.episode.chain.clone(),
            goals,
            termination,
            steps: state.steps_taken,
        }
    };

    while !state.is_done() {
        let distance = ctx.goal_distance(state.current_goal_index, state.pose.position());
        let step_ctx = StepContext {
            t: state.steps_taken,
            observation: &obs,
            pose: state.pose,
            task: task_info(ctx, state.current_goal_index, distance),
            last_events: &last_events,
            episode: ctx,
        };
        let id = policy.act(&step_ctx, &mut rng);
        let Some(action) = Action::from_id(id) else {
            let error = PolicyError::InvalidAction(id);
            let r = record(&state, &goals, &seen, Termination::PolicyError(error.to_string()));
            return Err(RunError::Policy {
                error,
                record: Box::new(r),
            });
        };
        let goal = state.current_goal_index;
        let result = step(ctx, &mut state, action)?;
        for e in &result.events {
            match *e {
                Event::GoalFound(j) => goals[j].found_step = Some(state.steps_taken),
                Event::WrongFound => goals[goal].wrong_before += 1,
                _ => {}
            }
        }
        sink.record(&TraceStep {
            t: state.steps_taken - 1,
            action,
            x: state.pose.x,
            y: state.pose.y,
            theta: state.pose.theta,
            reward: result.reward,
            goal_index: state.current_goal_index,
            event: result.events.clone(),
        });
        if !state.is_done() {
            update_seen(ctx, &state.pose, state.current_goal_index, &mut seen);
        }
        obs = result.observation;
        last_events = result.events;
    }
    let termination = match state.status {
        Status::Success => Termination::Success,
        Status::FailedWrongFound => Termination::WrongFound,
        Status::FailedTimeout => Termination::Timeout,
        Status::Running => unreachable!("loop exits on termination"),
    };
    Ok(record(&state, &goals, &seen, termination))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::RandOracleFoundPolicy;
    use crate::episodes::{Episode, Goal};
    use crate::geom::{Point, Pose};
    use crate::sim::{NullSink, SimConfig};
    use crate::world::GridWorld;

    struct Bad;

    impl Policy for Bad {
        fn name(&self) -> String {
            "bad".into()
        }
        fn on_reset(&mut self, _: &EpisodeContext<'_>) {}
        fn act(&mut self, _: &StepContext<'_>, _: &mut rand_chacha::ChaCha8Rng) -> u8 {
            9
        }
    }

    fn ctx_parts() -> (GridWorld, Episode) {
        let w = GridWorld::from_occupancy("open", 60, 60, 0.1, vec![false; 3600]).unwrap();
        let e = Episode {
            world_id: "open".into(),
            seed: 0,
            start: Pose::new(1.05, 1.05, 0),
            goals: vec![Goal {
                category: 1,
                position: Point::new(1.55, 1.05),
            }],
            chain: vec![0.5],
        };
        (w, e)
    }

    #[test]
    fn invalid_action_keeps_partial_record() {
        let (w, e) = ctx_parts();
        let ctx = EpisodeContext::new(&e, &w, &SimConfig::default()).unwrap();
        match run_episode(&mut Bad, &ctx, 4, 1, &mut NullSink) {
            Err(RunError::Policy { error, record }) => {
                assert_eq!(error, PolicyError::InvalidAction(9));
                assert_eq!(record.episode_index, 4);
                assert!(matches!(record.termination, Termination::PolicyError(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oracle_found_succeeds_immediately_in_vicinity() {
        let (w, e) = ctx_parts();
        let ctx = EpisodeContext::new(&e, &w, &SimConfig::default()).unwrap();
        let mut trace = Vec::new();
        let r = run_episode(&mut RandOracleFoundPolicy, &ctx, 0, 1, &mut trace).unwrap();
        assert!(r.success);
        assert_eq!(r.steps, 1);
        assert_eq!(trace.len(), 1);
        assert_eq!(r.goals[0].found_step, Some(1));
        r.validate().unwrap();
    }
}
