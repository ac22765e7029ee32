use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{world_hash, HarnessError, Inputs, RunConfig};
use crate::geom::{Cell, Pose};
use crate::mapmem::{build_oracle_map, Channels, MapGeometry, Occ};
use crate::sim::{read_trace, reset, step, EpisodeContext, SimConfig, TraceError, TraceHeader, TraceStep};
use crate::world::visible_cells;

pub struct ReplayOutput {
    pub header: TraceHeader,
    /// One text-art frame per step plus the initial one.
    pub frames: Vec<String>,
    /// Map cells revealed by the end of the trace.
    pub revealed: BTreeSet<Cell>,
    pub poses: Vec<Pose>,
}

fn mismatch(msg: String) -> HarnessError {
    HarnessError::Trace(TraceError::Mismatch(msg))
}

fn heading_glyph(theta: u32) -> char {
    match ((theta + 45) % 360) / 90 {
        0 => '>',
        1 => 'v',
        2 => '<',
        _ => '^',
    }
}

/// Re-simulates the recorded actions, checks every pose and reward against
/// the trace exactly, and renders the frames.
pub fn replay_trace(cfg: &RunConfig, inputs: &Inputs, trace: &Path) -> Result<ReplayOutput, HarnessError> {
    let (header, steps) = read_trace(trace)?;
    replay_steps(cfg, inputs, header, &steps)
}

pub(crate) fn replay_steps(
    cfg: &RunConfig,
    inputs: &Inputs,
    header: TraceHeader,
    steps: &[TraceStep],
) -> Result<ReplayOutput, HarnessError> {
    let ep = inputs
        .set
        .episodes
        .get(header.episode_index)
        .ok_or_else(|| mismatch(format!("episode index {} not in the episode set", header.episode_index)))?;
    let world = inputs
        .worlds
        .iter()
        .find(|w| w.name() == ep.world_id)
        .ok_or_else(|| mismatch(format!("world {} not supplied", ep.world_id)))?;
    if world_hash(world) != header.world_hash {
        return Err(mismatch(format!("world {} hash differs from the trace", ep.world_id)));
    }
    if cfg.hash() != header.config_hash {
        return Err(mismatch(format!(
            "trace config {} differs from supplied config {}",
            header.config_hash,
            cfg.hash()
        )));
    }
    let sim = SimConfig {
        found_budget: header.found_budget,
        ..cfg.sim.clone()
    };
    let ctx = EpisodeContext::new(ep, world, &sim)?.truncated(header.m);
    let geometry = cfg
        .agents
        .first()
        .map_or_else(MapGeometry::desk, |a| a.planner.geometry);
    let oracle = build_oracle_map(world, ctx.objects(), &geometry, Channels::OccObj)
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;

    let (mut state, _) = reset(&ctx);
    let mut revealed = BTreeSet::new();
    let mut frames = Vec::with_capacity(steps.len() + 1);
    let mut poses = vec![state.pose];
    let reveal = |pose: &Pose, revealed: &mut BTreeSet<Cell>| {
        revealed.extend(visible_cells(world, pose, sim.fov, sim.visibility_range, &geometry));
    };
    reveal(&state.pose, &mut revealed);
    let render = |t: usize, pose: &Pose, goal: usize, revealed: &BTreeSet<Cell>| {
        let mut f = String::new();
        writeln!(
            f,
            "t={t} x={:.3} y={:.3} theta={} goal={}",
            pose.x, pose.y, pose.theta, goal
        )
        .ok();
        let agent = geometry.cell_of(pose.position());
        let cells_x = ((world.width_m() / geometry.cell_size).ceil() as i32).min(geometry.size_cells as i32);
        let cells_y = ((world.height_m() / geometry.cell_size).ceil() as i32).min(geometry.size_cells as i32);
        for y in 0..cells_y {
            for x in 0..cells_x {
                let c = Cell::new(x, y);
                let goal_here = ctx.episode.goals.iter().position(|g| geometry.cell_of(g.position) == c);
                let ch = if c == agent {
                    heading_glyph(pose.theta)
                } else if let Some(i) = goal_here {
                    if i < goal {
                        '*'
                    } else {
                        char::from_digit((i + 1) as u32 % 10, 10).unwrap_or('g')
                    }
                } else {
                    match (revealed.contains(&c), oracle.occ(c)) {
                        (true, Occ::Navigable) => '.',
                        (true, _) => '#',
                        (false, Occ::Navigable) => ' ',
                        (false, _) => '%',
                    }
                };
                f.push(ch);
            }
            f.push('\n');
        }
        f
    };
    frames.push(render(0, &state.pose, 0, &revealed));
    for s in steps {
        if state.is_done() {
            return Err(mismatch(format!("trace continues after termination at step {}", s.t)));
        }
        let r = step(&ctx, &mut state, s.action)?;
        let p = state.pose;
        if p.x != s.x
            || p.y != s.y
            || p.theta != s.theta
            || r.reward != s.reward
            || state.current_goal_index != s.goal_index
        {
            return Err(mismatch(format!(
                "step {} diverges from the recorded trajectory: replayed {p:?} reward {} goal {}",
                s.t, r.reward, state.current_goal_index
            )));
        }
        reveal(&p, &mut revealed);
        poses.push(p);
        frames.push(render(s.t + 1, &p, state.current_goal_index, &revealed));
    }
    Ok(ReplayOutput {
        header,
        frames,
        revealed,
        poses,
    })
}
