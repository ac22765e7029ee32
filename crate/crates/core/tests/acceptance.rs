//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::f64::consts::SQRT_2;
use std::fs;
use std::time::{Duration, Instant};

use multion_core::agents::{AgentKind, AgentSpec, MapSource};
use multion_core::episodes::{Episode, Goal};
use multion_core::geom::{cos_sin_deg, Cell, Point, Pose};
use multion_core::harness::{self, run_grid, Grid, Inputs, RunConfig, RunKey};
use multion_core::mapmem::{
    build_oracle_map, default_features, ego_crop, project_features, register, reveal, Channels, FeatureMap, GlobalMap,
    MapGeometry, Occ, ProjectionConfig,
};
use multion_core::metrics::{
    ppl, progress, seen_unseen_analysis, spl, success, EpisodeRecord, GoalEvents, Termination,
};
use multion_core::rng::seeded_rng;
use multion_core::sim::{reset, step, Action, EpisodeContext, Event, Observation, SimConfig, Status};
use multion_core::world::{generate_world, geodesic_field, visible_cells, GenerateParams, GridWorld};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit_s, || {
        format!("{what} took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

// ---------------------------------------------------------------- 1

fn random_record(rng: &mut ChaCha8Rng) -> EpisodeRecord {
    let m = rng.gen_range(1..=5);
    let found = rng.gen_range(0..=m);
    let chain: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..20.0)).collect();
    let termination = if found == m {
        Termination::Success
    } else if rng.gen_bool(0.5) {
        Termination::WrongFound
    } else {
        Termination::Timeout
    };
    EpisodeRecord {
        episode_index: 0,
        world_id: "r".into(),
        m,
        success: found == m,
        goals_found: found,
        path_length: rng.gen_range(0.0..120.0),
        chain,
        goals: (0..m)
            .map(|i| GoalEvents {
                found_step: (i < found).then_some(i),
                seen: false,
                wrong_before: 0,
            })
            .collect(),
        termination,
        steps: 1,
    }
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut rng = seeded_rng(101);
    let tol = 1e-12;
    for i in 0..10_000 {
        let r = random_record(&mut rng);
        let s = success(&r);
        let pr = progress(&r);
        let d: f64 = r.chain.iter().sum();
        let expect_spl = if s == 0.0 { 0.0 } else { d / r.path_length.max(d) };
        let got_spl = spl(s, r.path_length, &r.chain).map_err(|e| e.to_string())?;
        check((got_spl - expect_spl).abs() <= tol, || {
            format!("record {i}: spl {got_spl} vs {expect_spl}")
        })?;
        let dl: f64 = r.chain[..r.goals_found].iter().sum();
        let expect_ppl = if r.goals_found == 0 {
            0.0
        } else {
            pr * dl / r.path_length.max(dl)
        };
        let got_ppl = ppl(pr, r.path_length, &r.chain, r.goals_found);
        check((got_ppl - expect_ppl).abs() <= tol, || {
            format!("record {i}: ppl {got_ppl} vs {expect_ppl}")
        })?;
        check(got_spl <= s + tol, || format!("record {i}: spl above success"))?;
        check(got_ppl <= pr + tol, || format!("record {i}: ppl above progress"))?;
        if s == 1.0 || r.m == 1 {
            check((got_ppl - got_spl).abs() <= tol, || format!("record {i}: ppl != spl"))?;
        }
        let k = rng.gen_range(0.1..10.0);
        let scaled: Vec<f64> = r.chain.iter().map(|c| c * k).collect();
        let spl_k = spl(s, r.path_length * k, &scaled).map_err(|e| e.to_string())?;
        let ppl_k = ppl(pr, r.path_length * k, &scaled, r.goals_found);
        check((spl_k - got_spl).abs() <= tol && (ppl_k - got_ppl).abs() <= tol, || {
            format!("record {i}: not scale invariant")
        })?;
    }
    within(t0.elapsed(), 5.0, "metric suite")?;
    Ok(format!("10000 records in {:.2}s", t0.elapsed().as_secs_f64()))
}

// ---------------------------------------------------------------- 2

#[derive(PartialEq)]
struct Node(f64, usize, (u32, u32));
impl Eq for Node {}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Textbook Dijkstra from `a` to `b` on free cells, 8-connected, no corner
/// cutting; returns the length as resolution * (straight + sqrt2 diagonal).
fn pair_distance(free: &[bool], w: usize, h: usize, res: f64, a: usize, b: usize) -> f64 {
    let mut best = vec![f64::INFINITY; w * h];
    let mut heap = BinaryHeap::new();
    best[a] = 0.0;
    heap.push(Node(0.0, a, (0, 0)));
    while let Some(Node(d, u, (s, g))) = heap.pop() {
        if d > best[u] {
            continue;
        }
        if u == b {
            return res * (s as f64 + g as f64 * SQRT_2);
        }
        let (ux, uy) = ((u % w) as i64, (u / w) as i64);
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (vx, vy) = (ux + dx, uy + dy);
                if vx < 0 || vy < 0 || vx >= w as i64 || vy >= h as i64 {
                    continue;
                }
                let v = vy as usize * w + vx as usize;
                if !free[v] {
                    continue;
                }
                let diag = dx != 0 && dy != 0;
                if diag && (!free[uy as usize * w + vx as usize] || !free[vy as usize * w + ux as usize]) {
                    continue;
                }
                let (ns, ng) = if diag { (s, g + 1) } else { (s + 1, g) };
                let nd = ns as f64 + ng as f64 * SQRT_2;
                if nd < best[v] {
                    best[v] = nd;
                    heap.push(Node(nd, v, (ns, ng)));
                }
            }
        }
    }
    f64::INFINITY
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let mut rng = seeded_rng(202);
    let res = 0.1;
    let mut compared = 0usize;
    for wi in 0..50 {
        let w = rng.gen_range(3..=20);
        let h = rng.gen_range(3..=20);
        let occ: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.3)).collect();
        let world = GridWorld::from_occupancy(format!("r{wi}"), w, h, res, occ).map_err(|e| e.to_string())?;
        // The world seals its border, so read occupancy back from it.
        let free: Vec<bool> = (0..w * h)
            .map(|i| !world.is_occupied(Cell::new((i % w) as i32, (i / w) as i32)))
            .collect();
        // The source itself must clear the full agent disk.
        let sources = world.navigable_cells(0.1);
        if sources.is_empty() {
            continue;
        }
        let tc = sources[rng.gen_range(0..sources.len())];
        let target = tc.y as usize * w + tc.x as usize;
        let field = geodesic_field(&world, world.cell_center(tc), 0.1).map_err(|e| e.to_string())?;
        for i in (0..w * h).filter(|&i| free[i]) {
            let c = Cell::new((i % w) as i32, (i / w) as i32);
            let oracle = pair_distance(&free, w, h, res, i, target);
            let got = field.at_cell(c);
            check(got == oracle || (got.is_infinite() && oracle.is_infinite()), || {
                format!("world {wi} cell {c:?}: field {got} vs dijkstra {oracle}")
            })?;
            compared += 1;
        }
    }
    within(t0.elapsed(), 10.0, "geodesic check")?;
    Ok(format!("{compared} cells exact in {:.2}s", t0.elapsed().as_secs_f64()))
}

// ---------------------------------------------------------------- 3, 4

fn small_world(seed: u64) -> GridWorld {
    let params = GenerateParams {
        size_m: 10.0,
        room_count: 3,
        ..GenerateParams::default()
    };
    generate_world(seed, &params).expect("generator succeeds")
}

fn criterion_3() -> Outcome {
    let mut rng = seeded_rng(303);
    let worlds: Vec<GridWorld> = (0..5).map(|i| small_world(3000 + i)).collect();
    let mut segments = 0;
    for roll in 0..200 {
        let world = &worlds[roll % worlds.len()];
        let free = world.navigable_cells(0.5);
        let pick = |rng: &mut ChaCha8Rng| world.cell_center(free[rng.gen_range(0..free.len())]);
        let start = pick(&mut rng);
        let goals: Vec<Goal> = (0..3)
            .map(|i| Goal {
                category: i + 1,
                position: pick(&mut rng),
            })
            .collect();
        let ep = Episode {
            world_id: world.name().into(),
            seed: roll as u64,
            start: Pose::new(start.x, start.y, 30 * rng.gen_range(0..12)),
            goals,
            chain: vec![1.0; 3],
        };
        let cfg = SimConfig {
            found_budget: 1000,
            ..SimConfig::default()
        };
        let Ok(ctx) = EpisodeContext::new(&ep, world, &cfg) else {
            continue;
        };
        let (mut state, _) = reset(&ctx);
        let mut seg_goal = 0;
        let mut seg_start = ctx.goal_distance(0, state.pose.position());
        let mut sum = 0.0;
        for _ in 0..300 {
            if state.is_done() {
                break;
            }
            let goal = state.current_goal_index;
            let within_vicinity = ctx.goal_distance(goal, state.pose.position()) <= cfg.vicinity_threshold;
            let action = if within_vicinity && rng.gen_bool(0.5) {
                Action::Found
            } else {
                [Action::Forward, Action::Forward, Action::TurnLeft, Action::TurnRight][rng.gen_range(0..4)]
            };
            let r = step(&ctx, &mut state, action).map_err(|e| e.to_string())?;
            let found = r.events.iter().any(|e| matches!(e, Event::GoalFound(_)));
            let expected = if found { 3.0 } else { 0.0 } + r.r_closer - 0.01;
            check((r.reward - expected).abs() < 1e-12, || {
                format!("rollout {roll}: reward {} vs {expected}", r.reward)
            })?;
            sum += r.r_closer;
            if found || state.is_done() || state.current_goal_index != seg_goal {
                let end = ctx.goal_distance(seg_goal, state.pose.position());
                check((sum - (seg_start - end)).abs() < 1e-9, || {
                    format!("rollout {roll}: segment sum {sum} vs {}", seg_start - end)
                })?;
                segments += 1;
                seg_goal = state.current_goal_index.min(ctx.num_goals() - 1);
                seg_start = ctx.goal_distance(seg_goal, state.pose.position());
                sum = 0.0;
            }
        }
        if !state.is_done() {
            let end = ctx.goal_distance(seg_goal, state.pose.position());
            check((sum - (seg_start - end)).abs() < 1e-9, || {
                format!("rollout {roll}: open segment")
            })?;
            segments += 1;
        }
    }
    check(
        multion_core::sim::R_GOAL == 3.0 && multion_core::sim::SLACK_REWARD == -0.01,
        || "reward constants".into(),
    )?;
    Ok(format!("{segments} goal segments telescope"))
}

fn criterion_4() -> Outcome {
    let world = GridWorld::from_occupancy("open", 100, 100, 0.1, vec![false; 10_000]).map_err(|e| e.to_string())?;
    let ep = Episode {
        world_id: "open".into(),
        seed: 0,
        start: Pose::new(1.05, 1.05, 0),
        goals: vec![Goal {
            category: 1,
            position: Point::new(8.05, 8.05),
        }],
        chain: vec![1.0],
    };
    for b in 0..=3u32 {
        let cfg = SimConfig {
            found_budget: b,
            ..SimConfig::default()
        };
        let ctx = EpisodeContext::new(&ep, &world, &cfg).map_err(|e| e.to_string())?;
        let (mut state, _) = reset(&ctx);
        for k in 1..=b + 1 {
            let r = step(&ctx, &mut state, Action::Found).map_err(|e| e.to_string())?;
            check(r.events.contains(&Event::WrongFound), || {
                format!("b={b}: call {k} not wrong")
            })?;
            let expect_done = k == b + 1;
            check(r.done == expect_done, || format!("b={b}: call {k} done={}", r.done))?;
        }
        check(state.status == Status::FailedWrongFound, || {
            format!("b={b}: status {:?}", state.status)
        })?;
    }
    Ok("budgets 0..3 terminate on wrong FOUND b+1".into())
}

// ---------------------------------------------------------------- 5

/// Dense-sampling line of sight: true when some occupied world cell outside
/// the target map cell lies on the segment.
fn sampled_blocked(world: &GridWorld, geometry: &MapGeometry, from: Point, target: Cell) -> bool {
    let to = geometry.cell_center(target);
    let len = from.distance(to);
    let n = (len / 0.002).ceil() as usize + 1;
    (0..=n).any(|i| {
        let t = i as f64 / n as f64;
        let p = Point::new(from.x + (to.x - from.x) * t, from.y + (to.y - from.y) * t);
        let wc = world.cell_at(p);
        world.in_bounds(wc) && world.is_occupied(wc) && geometry.cell_of(world.cell_center(wc)) != target
    })
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let mut rng = seeded_rng(505);
    let geometry = MapGeometry::new(16, 0.4, Point::new(0.0, 0.0));
    let (fov, range) = (79.0, 5.0);
    let mut occluded_checked = 0usize;
    for trial in 0..1000 {
        let n = 64;
        let mut occ = vec![false; n * n];
        let pose = Pose::new(
            rng.gen_range(1.0..2.5),
            rng.gen_range(1.0..5.4),
            30 * rng.gen_range(0..12),
        );
        // A wall segment straight across the view, one to three metres ahead.
        let d = rng.gen_range(1.0..3.0);
        let (c, s) = cos_sin_deg(pose.theta as f64 + rng.gen_range(-20.0..20.0));
        let centre = Point::new(pose.x + d * c, pose.y + d * s);
        let half = rng.gen_range(0.3..1.5);
        let steps = 200;
        for i in 0..=steps {
            let u = -half + 2.0 * half * i as f64 / steps as f64;
            let p = Point::new(centre.x - u * s, centre.y + u * c);
            let w = Cell::new((p.x / 0.1).floor() as i32, (p.y / 0.1).floor() as i32);
            if w.x >= 0 && w.y >= 0 && (w.x as usize) < n && (w.y as usize) < n {
                occ[w.y as usize * n + w.x as usize] = true;
            }
        }
        let cell = Cell::new((pose.x / 0.1) as i32, (pose.y / 0.1) as i32);
        occ[cell.y as usize * n + cell.x as usize] = false;
        let world = GridWorld::from_occupancy(format!("adv{trial}"), n, n, 0.1, occ).map_err(|e| e.to_string())?;
        for c in visible_cells(&world, &pose, fov, range, &geometry) {
            check(!sampled_blocked(&world, &geometry, pose.position(), c), || {
                format!("trial {trial}: occluded cell {c:?} revealed")
            })?;
        }
        let visible: BTreeSet<Cell> = visible_cells(&world, &pose, fov, range, &geometry)
            .into_iter()
            .collect();
        occluded_checked += (0..16 * 16)
            .map(|i| Cell::new(i % 16, i / 16))
            .filter(|c| !visible.contains(c) && sampled_blocked(&world, &geometry, pose.position(), *c))
            .count();
    }

    let worlds: Vec<GridWorld> = (0..4).map(|i| small_world(5000 + i)).collect();
    let g = MapGeometry::new(26, 0.4, Point::new(0.0, 0.0));
    for walk in 0..100 {
        let world = &worlds[walk % worlds.len()];
        let free = world.navigable_cells(0.1);
        let start = world.cell_center(free[rng.gen_range(0..free.len())]);
        let ep = Episode {
            world_id: world.name().into(),
            seed: 0,
            start: Pose::new(start.x, start.y, 0),
            goals: vec![Goal {
                category: 1,
                position: start,
            }],
            chain: vec![0.0],
        };
        let ctx = EpisodeContext::new(&ep, world, &SimConfig::default()).map_err(|e| e.to_string())?;
        let oracle = build_oracle_map(world, &[], &g, Channels::OccObj).map_err(|e| e.to_string())?;
        let mut revealed = GlobalMap::empty(g);
        let mut union = BTreeSet::new();
        let (mut state, _) = reset(&ctx);
        let mut prev = revealed.clone();
        for _ in 0..60 {
            let vis = visible_cells(world, &state.pose, fov, range, &g);
            union.extend(vis.iter().copied());
            reveal(&mut revealed, &oracle, &vis).map_err(|e| e.to_string())?;
            for i in 0..g.cell_count() {
                let c = g.cell_at_index(i);
                if prev.occ(c) != Occ::Undiscovered {
                    check(revealed.occ(c) == prev.occ(c), || {
                        format!("walk {walk}: cell {c:?} changed")
                    })?;
                }
            }
            prev = revealed.clone();
            let a = [Action::Forward, Action::Forward, Action::TurnLeft, Action::TurnRight][rng.gen_range(0..4)];
            step(&ctx, &mut state, a).map_err(|e| e.to_string())?;
        }
        for i in 0..g.cell_count() {
            let c = g.cell_at_index(i);
            let expect = if union.contains(&c) {
                oracle.occ(c)
            } else {
                Occ::Undiscovered
            };
            check(revealed.occ(c) == expect, || {
                format!("walk {walk}: cell {c:?} differs from the union")
            })?;
        }
    }
    within(t0.elapsed(), 30.0, "visibility suite")?;
    Ok(format!(
        "1000 wall trials ({occluded_checked} occluded cells hidden), 100 walks in {:.1}s",
        t0.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 6

fn single_hit_obs(n: usize, ray: usize, range: f64, category: u8) -> Observation {
    let mut depth = vec![10.0; n];
    let mut semantic = vec![None; n];
    let mut srange = vec![10.0; n];
    depth[ray] = 10.0;
    semantic[ray] = Some(category);
    srange[ray] = range;
    Observation {
        depth_scan: depth,
        semantic_scan: semantic,
        semantic_range: srange,
        goal_onehot: vec![0; 8],
        prev_action: None,
    }
}

fn criterion_6() -> Outcome {
    let mut rng = seeded_rng(606);
    let cfg = ProjectionConfig::default();
    let g = MapGeometry::new(40, 0.8, Point::new(0.0, 0.0));
    let n = 64;
    let dim = 10;
    let mut pairs = 0;
    while pairs < 100 {
        let landmark = Point::new(rng.gen_range(12.0..20.0), rng.gen_range(12.0..20.0));
        let mut cells = Vec::new();
        for _ in 0..2 {
            let theta = rng.gen_range(0..360u32);
            let ray = rng.gen_range(0..n);
            let range = rng.gen_range(0.5..5.5);
            let (c, s) = cos_sin_deg(theta as f64 + cfg.ray_offset(ray, n));
            let pose = Pose::new(landmark.x - range * c, landmark.y - range * s, theta);
            let obs = single_hit_obs(n, ray, range, 3);
            let view = project_features(&obs, dim, default_features(8), &cfg);
            let mut map = FeatureMap::new(g, dim);
            register(&view, &mut map, &pose).map_err(|e| e.to_string())?;
            let hits: Vec<Cell> = (0..g.cell_count())
                .map(|i| g.cell_at_index(i))
                .filter(|c| map.get(*c).is_some_and(|f| f[3] > 0.0))
                .collect();
            check(hits.len() == 1, || {
                format!("expected one landmark cell, got {}", hits.len())
            })?;
            cells.push(hits[0]);
        }
        let truth = g.cell_of(landmark);
        for c in &cells {
            check((c.x - truth.x).abs() <= 1 && (c.y - truth.y).abs() <= 1, || {
                format!("landmark at {truth:?} registered at {c:?}")
            })?;
        }
        pairs += 1;
    }

    // Element-wise max: registering two views equals the max of each alone.
    for _ in 0..50 {
        let pose_a = Pose::new(
            rng.gen_range(10.0..20.0),
            rng.gen_range(10.0..20.0),
            30 * rng.gen_range(0..12),
        );
        let pose_b = Pose::new(
            rng.gen_range(10.0..20.0),
            rng.gen_range(10.0..20.0),
            30 * rng.gen_range(0..12),
        );
        let mk = |rng: &mut ChaCha8Rng| {
            let mut o = single_hit_obs(n, rng.gen_range(0..n), rng.gen_range(0.5..5.5), rng.gen_range(1..=8));
            for d in o.depth_scan.iter_mut() {
                *d = rng.gen_range(0.3..10.0);
            }
            project_features(&o, dim, default_features(8), &cfg)
        };
        let (va, vb) = (mk(&mut rng), mk(&mut rng));
        let mut both = FeatureMap::new(g, dim);
        register(&va, &mut both, &pose_a).map_err(|e| e.to_string())?;
        let after_a = both.clone();
        register(&vb, &mut both, &pose_b).map_err(|e| e.to_string())?;
        let mut only_b = FeatureMap::new(g, dim);
        register(&vb, &mut only_b, &pose_b).map_err(|e| e.to_string())?;
        for ((x, a), b) in both.as_slice().iter().zip(after_a.as_slice()).zip(only_b.as_slice()) {
            check(*x == a.max(*b), || "registration is not an element-wise max".into())?;
            check(*x >= *a, || "registration decreased a value".into())?;
        }
    }

    // Cutoff.
    let far = project_features(&single_hit_obs(n, 31, 5.7, 2), dim, default_features(8), &cfg);
    check(far.cells.iter().all(|f| f[2] == 0.0), || {
        "deposit past 5.6 m projected".into()
    })?;
    let near = project_features(&single_hit_obs(n, 31, 5.5, 2), dim, default_features(8), &cfg);
    check(near.cells.iter().any(|f| f[2] == 1.0), || {
        "deposit inside 5.6 m dropped".into()
    })?;
    check((cfg.rows, cfg.cols) == (7, 13), || "projection grid is not 7x13".into())?;

    // Right-angle crops.
    let mg = MapGeometry::new(30, 0.4, Point::new(0.0, 0.0));
    for _ in 0..100 {
        let mut map = GlobalMap::empty(mg);
        for i in 0..mg.cell_count() {
            let c = mg.cell_at_index(i);
            map.set_occ(
                c,
                [Occ::Undiscovered, Occ::Navigable, Occ::NonNavigable][rng.gen_range(0..3)],
            );
            map.set_obj(c, rng.gen_range(0..9));
        }
        let v = 2 * rng.gen_range(1..8) + 1;
        let h = (v / 2) as i32;
        let p = Point::new(rng.gen_range(0.0..12.0), rng.gen_range(0.0..12.0));
        let crop = |theta: u32| ego_crop(&map, &Pose::new(p.x, p.y, theta), v).expect("odd view");
        let c0 = crop(0);
        let agent = mg.cell_of(p);
        for r in 0..v {
            for c in 0..v {
                let cell = Cell::new(agent.x + h - r as i32, agent.y + c as i32 - h);
                let expect = if mg.contains(cell) {
                    (map.occ(cell), map.obj(cell))
                } else {
                    (Occ::Undiscovered, 0)
                };
                check(*c0.get(r, c) == expect, || "theta=0 crop is not the axis window".into())?;
            }
        }
        let (c90, c180, c270) = (crop(90), crop(180), crop(270));
        for r in 0..v {
            for c in 0..v {
                check(*c90.get(r, c) == *c0.get(c, v - 1 - r), || "90 degree crop".into())?;
                check(*c180.get(r, c) == *c0.get(v - 1 - r, v - 1 - c), || {
                    "180 degree crop".into()
                })?;
                check(*c270.get(r, c) == *c0.get(v - 1 - c, r), || "270 degree crop".into())?;
            }
        }
    }
    Ok("100 landmark pairs, max integration, cutoff, right-angle crops".into())
}

// ---------------------------------------------------------------- 7-11

fn dataset_config(workers: usize) -> RunConfig {
    let mut cfg = RunConfig {
        seed: 11,
        workers,
        traces: false,
        ..RunConfig::default()
    };
    cfg.worlds.count = 10;
    cfg.episodes.per_world = 50;
    cfg
}

fn planner(source: MapSource) -> AgentSpec {
    AgentSpec::new(AgentKind::Planner(source))
}

fn noisy_objrecog() -> AgentSpec {
    let mut a = planner(MapSource::ObjRecog);
    a.planner.miss_rate = 0.2;
    a.planner.confusion_rate = 0.05;
    a
}

fn criterion_7(inputs: &Inputs) -> Outcome {
    let t0 = Instant::now();
    let episodes = &inputs.set.episodes[..200];
    let agents = [planner(MapSource::Oracle)];
    let sims = [SimConfig::default()];
    let grid = Grid {
        agents: &agents,
        goal_counts: &[3],
        sims: &sims,
    };
    let res = run_grid(&inputs.worlds, episodes, &grid, 11, 8, None).map_err(|e| e.to_string())?;
    let recs = &res.records[0];
    let summary = multion_core::metrics::aggregate(recs).map_err(|e| e.to_string())?;
    let wrong: u32 = recs.iter().flat_map(|r| &r.goals).map(|g| g.wrong_before).sum();
    let legs_ok = episodes
        .iter()
        .all(|e| e.chain.iter().all(|d| (2.0..=20.0).contains(d)));
    check(legs_ok, || "episode legs outside 2-20 m".into())?;
    check(summary.success == 1.0, || format!("success {}", summary.success))?;
    check(summary.spl >= 0.9, || format!("spl {}", summary.spl))?;
    check(wrong == 0, || format!("{wrong} wrong FOUNDs"))?;
    within(t0.elapsed(), 120.0, "oracle planner run")?;
    Ok(format!(
        "200 3-ON episodes: Success {:.2}, SPL {:.3}, 0 wrong FOUNDs, {:.1}s",
        summary.success,
        summary.spl,
        t0.elapsed().as_secs_f64()
    ))
}

fn criterion_8(inputs: &Inputs) -> Outcome {
    let agents = [
        planner(MapSource::Oracle),
        planner(MapSource::OracleEgo),
        noisy_objrecog(),
    ];
    let sims = [SimConfig::default()];
    let counts = [1, 2, 3];
    let grid = Grid {
        agents: &agents,
        goal_counts: &counts,
        sims: &sims,
    };
    let res = run_grid(&inputs.worlds, &inputs.set.episodes, &grid, 11, 1, None).map_err(|e| e.to_string())?;
    let s = |agent: usize, m: usize| {
        let recs = res.get(&RunKey { sim: 0, agent, m }).expect("key evaluated");
        multion_core::metrics::aggregate(recs).expect("non-empty").success
    };
    let n = inputs.set.episodes.len();
    check(n >= 500, || format!("only {n} episodes"))?;
    let mut table = Vec::new();
    for m in counts {
        let (o, e, r) = (s(0, m), s(1, m), s(2, m));
        table.push(format!("{m}ON {o:.2}/{e:.2}/{r:.2}"));
        check(o >= e && e >= r, || format!("m={m}: oracle {o} ego {e} objrecog {r}"))?;
    }
    for (a, spec) in agents.iter().enumerate() {
        let (s1, s2, s3) = (s(a, 1), s(a, 2), s(a, 3));
        check(s1 >= s2 && s2 >= s3, || format!("{}: {s1} {s2} {s3}", spec.label()))?;
    }
    Ok(format!(
        "{n} episodes, oracle/ego/objrecog success {}",
        table.join(", ")
    ))
}

fn criterion_9(inputs: &Inputs) -> Outcome {
    let agents = [planner(MapSource::OracleEgo)];
    let sims = [SimConfig {
        max_steps: 600,
        ..SimConfig::default()
    }];
    let grid = Grid {
        agents: &agents,
        goal_counts: &[3],
        sims: &sims,
    };
    let res = run_grid(&inputs.worlds, &inputs.set.episodes, &grid, 11, 1, None).map_err(|e| e.to_string())?;
    let rows = seen_unseen_analysis(&res.records[0]);
    let mut parts = Vec::new();
    for row in &rows {
        let (Some(seen), Some(unseen)) = (row.seen.rate(), row.unseen.rate()) else {
            return Err(format!("goal {}: empty stratum", row.goal));
        };
        parts.push(format!(
            "goal {}: seen {seen:.2} (n={}) vs unseen {unseen:.2} (n={})",
            row.goal, row.seen.attempts, row.unseen.attempts
        ));
        check(seen > unseen, || {
            format!("goal {}: seen {seen} <= unseen {unseen}", row.goal)
        })?;
    }
    Ok(format!(
        "{} episodes at 600 steps; {}",
        res.records[0].len(),
        parts.join("; ")
    ))
}

fn criterion_10(inputs: &Inputs) -> Outcome {
    let agents = [noisy_objrecog()];
    let budgets = [0u32, 1, 2, 3, 5];
    let sims: Vec<SimConfig> = budgets
        .iter()
        .map(|&b| SimConfig {
            found_budget: b,
            ..SimConfig::default()
        })
        .collect();
    let counts = [1, 2, 3];
    let grid = Grid {
        agents: &agents,
        goal_counts: &counts,
        sims: &sims,
    };
    let episodes = &inputs.set.episodes[..200];
    let res = run_grid(&inputs.worlds, episodes, &grid, 11, 1, None).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for m in counts {
        let series: Vec<f64> = (0..budgets.len())
            .map(|sim| {
                let recs = res.get(&RunKey { sim, agent: 0, m }).expect("key evaluated");
                multion_core::metrics::aggregate(recs).expect("non-empty").success
            })
            .collect();
        check(series.windows(2).all(|w| w[1] >= w[0]), || format!("m={m}: {series:?}"))?;
        lines.push(format!(
            "{m}ON [{}]",
            series.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(" ")
        ));
    }
    Ok(format!("budgets 0,1,2,3,5: {}", lines.join(", ")))
}

fn criterion_11() -> Outcome {
    let mut outputs = Vec::new();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for workers in [1, 4, 8] {
        let mut cfg = RunConfig {
            seed: 21,
            workers,
            traces: true,
            out: dir.path().join(format!("w{workers}")),
            ..RunConfig::default()
        };
        cfg.worlds.count = 3;
        cfg.episodes.per_world = 8;
        cfg.agents = vec![
            planner(MapSource::Oracle),
            planner(MapSource::OracleEgo),
            noisy_objrecog(),
        ];
        harness::cmd_eval(&cfg).map_err(|e| e.to_string())?;
        let summary = fs::read(cfg.out.join("summary.csv")).map_err(|e| e.to_string())?;
        let records = fs::read(cfg.out.join("records.jsonl")).map_err(|e| e.to_string())?;
        outputs.push((summary, records));
    }
    check(outputs.windows(2).all(|w| w[0] == w[1]), || {
        "outputs differ across worker counts".into()
    })?;
    Ok("workers 1/4/8 give byte-identical summary.csv and records.jsonl".into())
}

fn main() {
    let start = Instant::now();
    // Optional criterion numbers on the command line restrict the run.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| only.is_empty() || only.contains(&n);
    let mut failures = 0;
    let mut report = |n: usize, outcome: Outcome| match outcome {
        Ok(msg) => println!("criterion {n:>2}: PASS  {msg}"),
        Err(msg) => {
            failures += 1;
            println!("criterion {n:>2}: FAIL  {msg}");
        }
    };
    if wanted(1) {
        report(1, criterion_1());
    }
    if wanted(2) {
        report(2, criterion_2());
    }
    if wanted(3) {
        report(3, criterion_3());
    }
    if wanted(4) {
        report(4, criterion_4());
    }
    if wanted(5) {
        report(5, criterion_5());
    }
    if wanted(6) {
        report(6, criterion_6());
    }
    let cfg = dataset_config(1);
    match (7..=10).any(wanted).then(|| harness::prepare_inputs(&cfg)) {
        None => {}
        Some(Ok(inputs)) => {
            if wanted(7) {
                report(7, criterion_7(&inputs));
            }
            if wanted(8) {
                report(8, criterion_8(&inputs));
            }
            if wanted(9) {
                report(9, criterion_9(&inputs));
            }
            if wanted(10) {
                report(10, criterion_10(&inputs));
            }
        }
        Some(Err(e)) => {
            for n in 7..=10 {
                report(n, Err(format!("dataset: {e}")));
            }
        }
    }
    let c11 = if !wanted(11) { Ok(String::new()) } else { criterion_11() }.and_then(|msg| {
        let total = start.elapsed().as_secs_f64();
        check(total < 600.0, || format!("suite took {total:.0}s")).map(|_| format!("{msg}; suite {total:.0}s"))
    });
    if wanted(11) {
        report(11, c11);
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all selected criteria passed");
}
