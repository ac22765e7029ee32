//! A fixed controller that reads one of the map memories, plans on it and
//! emits primitive actions.

use std::ops::ControlFlow;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::planning::{is_frontier, search, PlanError, Traversability};
use super::{Policy, PolicyError, StepContext};
use crate::geom::{angle_diff_deg, bearing_deg, cos_sin_deg, walk_cells, Cell, Point, Pose};
use crate::mapmem::{
    build_oracle_map, classifier_emulator, default_features, ego_crop, objrecog_label, objrecog_update,
    project_features, register, reveal, Channels, EgoView, FeatureMap, GlobalMap, MapGeometry, Occ, ProjectionConfig,
};
use crate::sim::{Action, EpisodeContext, Event, FORWARD_STEP};
use crate::world::{visible_cells, AGENT_RADIUS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSource {
    Oracle,
    OracleEgo,
    ObjRecog,
    ProjNeural,
}

impl MapSource {
    pub fn as_str(self) -> &'static str {
        match self {
            MapSource::Oracle => "oracle",
            MapSource::OracleEgo => "oracle_ego",
            MapSource::ObjRecog => "objrecog",
            MapSource::ProjNeural => "projneural",
        }
    }

    pub fn parse(s: &str) -> Option<MapSource> {
        match s {
            "oracle" => Some(MapSource::Oracle),
            "oracle_ego" => Some(MapSource::OracleEgo),
            "objrecog" => Some(MapSource::ObjRecog),
            "projneural" => Some(MapSource::ProjNeural),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub geometry: MapGeometry,
    /// Oracle map channels (oracle source only).
    pub channels: Channels,
    /// Recogniser noise (objrecog source only).
    pub miss_rate: f64,
    pub confusion_rate: f64,
    /// FOUND is called once both the straight-line distance and the planned
    /// distance to the goal cell centre are within this radius.
    pub found_radius: f64,
    pub waypoint_tolerance: f64,
    pub heading_tolerance: f64,
    /// Side of the policy-frame crop exposed by [`PlannerPolicy::ego_view`].
    pub view_size: usize,
    /// Clearance kept from blocked cells when shortcutting a path.
    pub clearance: f64,
    /// Read-out threshold on the goal-category feature.
    pub feature_threshold: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            geometry: MapGeometry::desk(),
            channels: Channels::OccObj,
            miss_rate: 0.0,
            confusion_rate: 0.0,
            found_radius: 0.8,
            waypoint_tolerance: 0.3,
            heading_tolerance: 15.0,
            view_size: 21,
            clearance: 0.15,
            feature_threshold: 0.5,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: String| Err(PolicyError::BadParameters(m));
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        if !rate_ok(self.miss_rate) || !rate_ok(self.confusion_rate) || self.miss_rate + self.confusion_rate > 1.0 {
            return bad(format!(
                "rates miss={} confusion={}",
                self.miss_rate, self.confusion_rate
            ));
        }
        if !(self.found_radius > 0.0) || !(self.waypoint_tolerance > 0.0) || !(self.heading_tolerance > 0.0) {
            return bad("radii and tolerances must be positive".into());
        }
        if self.view_size.is_multiple_of(2) {
            return bad(format!("view_size must be odd, got {}", self.view_size));
        }
        if self.geometry.size_cells == 0 || !(self.geometry.cell_size > 0.0) {
            return bad("empty map geometry".into());
        }
        Ok(())
    }
}

const LOOKAHEAD: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Goal(Cell),
    Frontier(Cell),
}

pub struct PlannerPolicy {
    source: MapSource,
    cfg: PlannerConfig,
    /// Occupancy (and, for most sources, objects) used for planning.
    nav: GlobalMap,
    rule: Traversability,
    /// Revealed view used for frontiers and objects when navigation runs on
    /// the full oracle occupancy.
    explored: Option<GlobalMap>,
    /// Ground truth used to reveal or read objects.
    oracle: Option<GlobalMap>,
    features: Option<FeatureMap>,
    projection: ProjectionConfig,
    blocked: Vec<bool>,
    blacklist: Vec<bool>,
    rejected: Vec<Cell>,
    goal_index: usize,
    goal_cells: Vec<Cell>,
    target: Option<Target>,
    path: Vec<Cell>,
    /// Cost in cells from each path cell to the end of the path.
    tail: Vec<f64>,
    wp: usize,
    collisions: u32,
}

impl PlannerPolicy {
    pub fn new(source: MapSource, cfg: PlannerConfig) -> Self {
        let g = cfg.geometry;
        Self {
            source,
            nav: GlobalMap::empty(g),
            rule: Traversability::Known,
            explored: None,
            oracle: None,
            features: None,
            projection: ProjectionConfig::covering(5.6, g.cell_size),
            blocked: vec![false; g.cell_count()],
            blacklist: vec![false; g.cell_count()],
            rejected: Vec::new(),
            goal_index: 0,
            goal_cells: Vec::new(),
            target: None,
            path: Vec::new(),
            tail: Vec::new(),
            wp: 0,
            collisions: 0,
            cfg,
        }
    }

    /// The map the planner navigates on.
    pub fn nav_map(&self) -> &GlobalMap {
        &self.nav
    }

    pub fn features(&self) -> Option<&FeatureMap> {
        self.features.as_ref()
    }

    /// Agent-centred crop of the navigation map.
    pub fn ego_view(&self, pose: &Pose) -> EgoView<(Occ, u8)> {
        ego_crop(&self.nav, pose, self.cfg.view_size).expect("view size validated odd")
    }

    /// Current planned path, from the agent's cell to the target.
    pub fn path(&self) -> &[Cell] {
        &self.path
    }

    fn geometry(&self) -> MapGeometry {
        self.cfg.geometry
    }

    fn ok(&self, i: usize) -> bool {
        !self.blocked[i] && self.rule.allows(self.nav.occ_slice()[i])
    }

    fn ok_cell(&self, c: Cell) -> bool {
        self.geometry().index(c).is_some_and(|i| self.ok(i))
    }

    fn clear_plan(&mut self) {
        self.target = None;
        self.path.clear();
        self.tail.clear();
        self.wp = 0;
    }

    fn update_memory(&mut self, ctx: &StepContext<'_>, rng: &mut ChaCha8Rng) {
        let ep = ctx.episode;
        let cfg = &ep.config;
        let pose = ctx.pose;
        let g = self.geometry();
        match self.source {
            MapSource::Oracle => match self.cfg.channels {
                Channels::OccObj => {}
                Channels::Occ => {
                    let vis = visible_cells(ep.world, &pose, cfg.fov, cfg.visibility_range, &g);
                    if let (Some(explored), Some(oracle)) = (self.explored.as_mut(), self.oracle.as_ref()) {
                        reveal(explored, oracle, &vis).expect("shared geometry");
                    }
                }
                Channels::Obj => {
                    let vis = visible_cells(ep.world, &pose, cfg.fov, cfg.visibility_range, &g);
                    if let Some(oracle) = self.oracle.as_ref() {
                        reveal(&mut self.nav, oracle, &vis).expect("shared geometry");
                    }
                }
            },
            MapSource::OracleEgo => {
                let vis = visible_cells(ep.world, &pose, cfg.fov, cfg.visibility_range, &g);
                if let Some(oracle) = self.oracle.as_ref() {
                    reveal(&mut self.nav, oracle, &vis).expect("shared geometry");
                }
            }
            MapSource::ObjRecog => {
                self.depth_update(ctx);
                let label = objrecog_label(ep.world, ep.rendered_objects(), &pose, cfg.fov);
                let predicted = classifier_emulator(
                    label,
                    cfg.num_categories,
                    self.cfg.miss_rate,
                    self.cfg.confusion_rate,
                    rng,
                );
                objrecog_update(&mut self.nav, &pose, predicted);
            }
            MapSource::ProjNeural => {
                self.depth_update(ctx);
                let k = cfg.num_categories;
                let view = project_features(ctx.observation, k as usize + 2, default_features(k), &self.projection);
                if let Some(f) = self.features.as_mut() {
                    register(&view, f, &pose).expect("shared cell size");
                }
            }
        }
    }

    /// Free-space carving from the depth scan: cells a ray crosses are
    /// navigable, the cell it stops in is not.
    fn depth_update(&mut self, ctx: &StepContext<'_>) {
        let g = self.geometry();
        let cfg = &ctx.episode.config;
        let origin = ctx.pose.position();
        for (i, &depth) in ctx.observation.depth_scan.iter().enumerate() {
            let (c, s) = cos_sin_deg(ctx.pose.theta as f64 + cfg.ray_offset(i));
            let dir = Point::new(c, s);
            let nav = &mut self.nav;
            walk_cells(origin, dir, depth, g.origin, g.cell_size, |cell, t| {
                if t < depth - 1e-6 && nav.occ(cell) == Occ::Undiscovered {
                    nav.set_occ(cell, Occ::Navigable);
                }
                ControlFlow::Continue(())
            });
            if depth < cfg.max_depth - 1e-9 {
                let hit = Point::new(origin.x + dir.x * (depth + 1e-4), origin.y + dir.y * (depth + 1e-4));
                self.nav.set_occ(g.cell_of(hit), Occ::NonNavigable);
            }
        }
        let own = g.cell_of(origin);
        if self.nav.occ(own) != Occ::Navigable {
            self.nav.set_occ(own, Occ::Navigable);
        }
    }

    fn current_goal_cells(&self, category: u8) -> Vec<Cell> {
        let mut cells = match (self.source, self.cfg.channels) {
            (MapSource::Oracle, Channels::Occ) => self
                .explored
                .as_ref()
                .map_or_else(Vec::new, |m| m.cells_with_category(category)),
            (MapSource::Oracle, Channels::Obj) => self
                .oracle
                .as_ref()
                .map_or_else(Vec::new, |m| m.cells_with_category(category)),
            (MapSource::ProjNeural, _) => match &self.features {
                Some(f) => {
                    let g = *f.geometry();
                    let dim = f.dim();
                    f.as_slice()
                        .chunks_exact(dim)
                        .enumerate()
                        .filter(|(_, v)| v[category as usize] >= self.cfg.feature_threshold)
                        .map(|(i, _)| g.cell_at_index(i))
                        .collect()
                }
                None => Vec::new(),
            },
            _ => self.nav.cells_with_category(category),
        };
        cells.retain(|c| !self.rejected.contains(c));
        cells
    }

    fn frontier_here(&self, cell: Cell) -> bool {
        let i = match self.geometry().index(cell) {
            Some(i) => i,
            None => return false,
        };
        if self.blacklist[i] || !self.ok(i) {
            return false;
        }
        match &self.explored {
            Some(explored) => is_frontier(explored, cell),
            None => is_frontier(&self.nav, cell),
        }
    }

    /// Nearest goal cell by path cost, else the nearest frontier.
    fn replan(&mut self, agent: Cell) -> Result<(), PlanError> {
        let g = self.geometry();
        let src = g.index(agent);
        let mut goal_mask = vec![false; g.cell_count()];
        for i in self.goal_cells.iter().filter_map(|c| g.index(*c)) {
            goal_mask[i] = true;
        }
        let mut hit = None;
        if !self.goal_cells.is_empty() {
            let ok = |i: usize| Some(i) == src || self.ok(i);
            let (s, i) = search(&g, &ok, agent, &|i| goal_mask[i]);
            hit = i.map(|i| (s, Target::Goal(g.cell_at_index(i)), i));
        }
        if hit.is_none() {
            for attempt in 0..2 {
                let ok = |i: usize| Some(i) == src || self.ok(i);
                let (s, i) = search(&g, &ok, agent, &|i| self.frontier_here(g.cell_at_index(i)));
                if let Some(i) = i {
                    hit = Some((s, Target::Frontier(g.cell_at_index(i)), i));
                    break;
                }
                if attempt == 0 && self.blacklist.iter().any(|b| *b) {
                    self.blacklist.iter_mut().for_each(|b| *b = false);
                } else {
                    break;
                }
            }
        }
        let Some((s, target, idx)) = hit else {
            self.clear_plan();
            return Err(PlanError::NoFrontier);
        };
        let path = s.path_to(idx, 1.0).expect("settled cell is reached");
        self.tail = tail_costs(&path.cells);
        self.path = path.cells;
        self.target = Some(target);
        self.wp = 0;
        Ok(())
    }

    fn plan_valid(&self) -> bool {
        if self.path.is_empty() {
            return false;
        }
        if !self.path[self.wp + 1..].iter().all(|c| self.ok_cell(*c)) {
            return false;
        }
        match self.target {
            Some(Target::Goal(c)) => self.goal_cells.contains(&c),
            Some(Target::Frontier(c)) => self.frontier_here(c),
            None => false,
        }
    }

    /// Straight segment from `from` to `to` stays on usable cells with the
    /// configured clearance (ignored within the first 0.2 m).
    fn line_clear(&self, from: Point, to: Point) -> bool {
        let g = self.geometry();
        let dir = Point::new(to.x - from.x, to.y - from.y);
        let mut clear = true;
        walk_cells(from, dir, 1.0, g.origin, g.cell_size, |cell, _| {
            if self.ok_cell(cell) {
                ControlFlow::Continue(())
            } else {
                clear = false;
                ControlFlow::Break(())
            }
        });
        if !clear {
            return false;
        }
        let len = from.distance(to);
        let r = self.cfg.clearance;
        let mut s = 0.2;
        while s <= len {
            let p = Point::new(from.x + dir.x * s / len, from.y + dir.y * s / len);
            for (dx, dy) in [(-r, -r), (-r, r), (r, -r), (r, r)] {
                if !self.ok_cell(g.cell_of(Point::new(p.x + dx, p.y + dy))) {
                    return false;
                }
            }
            s += 0.1;
        }
        true
    }

    /// Advances the waypoint index to the farthest cell in line of sight.
    /// Returns false when even the current waypoint is out of sight.
    fn advance_waypoint(&mut self, pos: Point) -> bool {
        let g = self.geometry();
        let last = self.path.len() - 1;
        let hi = (self.wp + LOOKAHEAD).min(last);
        for j in (self.wp..=hi).rev() {
            if j == self.wp || self.line_clear(pos, g.cell_center(self.path[j])) {
                if j == self.wp && j > 0 && !self.line_clear(pos, g.cell_center(self.path[j])) {
                    return false;
                }
                self.wp = j;
                return true;
            }
        }
        false
    }

    fn remaining_distance(&self, pos: Point) -> f64 {
        let g = self.geometry();
        pos.distance(g.cell_center(self.path[self.wp])) + self.tail[self.wp] * g.cell_size
    }

    fn steer(&self, pose: &Pose, toward: Point) -> Action {
        let diff = angle_diff_deg(bearing_deg(pose.position(), toward), pose.theta as f64);
        if diff.abs() <= self.cfg.heading_tolerance {
            let (c, s) = cos_sin_deg(pose.theta as f64);
            let next = Point::new(pose.x + FORWARD_STEP * c, pose.y + FORWARD_STEP * s);
            if self.ok_cell(self.geometry().cell_of(next)) {
                return Action::Forward;
            }
            return if diff >= 0.0 {
                Action::TurnRight
            } else {
                Action::TurnLeft
            };
        }
        if diff > 0.0 {
            Action::TurnRight
        } else {
            Action::TurnLeft
        }
    }

    fn handle_events(&mut self, ctx: &StepContext<'_>) {
        let g = self.geometry();
        for ev in ctx.last_events {
            match *ev {
                Event::Collision => {
                    self.collisions += 1;
                    let (c, s) = cos_sin_deg(ctx.pose.theta as f64);
                    let reach = FORWARD_STEP + AGENT_RADIUS + 0.01;
                    let ahead = g.cell_of(Point::new(ctx.pose.x + reach * c, ctx.pose.y + reach * s));
                    if ahead != g.cell_of(ctx.pose.position()) {
                        if let Some(i) = g.index(ahead) {
                            self.blocked[i] = true;
                        }
                    }
                    self.clear_plan();
                }
                Event::WrongFound => {
                    if let Some(Target::Goal(c)) = self.target {
                        self.rejected.push(c);
                    }
                    self.clear_plan();
                }
                Event::GoalFound(_) => {
                    self.rejected.clear();
                    self.clear_plan();
                }
                Event::Timeout => {}
            }
        }
        if !ctx.last_events.contains(&Event::Collision) {
            self.collisions = 0;
        }
    }

    fn decide(&mut self, ctx: &StepContext<'_>) -> Action {
        let g = self.geometry();
        let pos = ctx.pose.position();
        let agent = g.cell_of(pos);
        if self.collisions >= 3 && self.collisions.is_multiple_of(3) {
            return Action::TurnRight;
        }
        for _ in 0..4 {
            if !self.plan_valid() && self.replan(agent).is_err() {
                return Action::TurnLeft;
            }
            if !self.advance_waypoint(pos) {
                if self.replan(agent).is_err() {
                    return Action::TurnLeft;
                }
                self.advance_waypoint(pos);
            }
            let last = self.path.len() - 1;
            match self.target {
                Some(Target::Goal(goal)) => {
                    let r = self.cfg.found_radius;
                    if pos.distance(g.cell_center(goal)) <= r && self.remaining_distance(pos) <= r {
                        return Action::Found;
                    }
                }
                Some(Target::Frontier(f)) => {
                    if self.wp == last && pos.distance(g.cell_center(f)) <= self.cfg.waypoint_tolerance {
                        if let Some(i) = g.index(f) {
                            self.blacklist[i] = true;
                        }
                        self.clear_plan();
                        continue;
                    }
                }
                None => return Action::TurnLeft,
            }
            let mut point = g.cell_center(self.path[self.wp]);
            while self.wp < last && pos.distance(point) <= self.cfg.waypoint_tolerance {
                self.wp += 1;
                point = g.cell_center(self.path[self.wp]);
            }
            return self.steer(&ctx.pose, point);
        }
        Action::TurnLeft
    }
}

/// Suffix sums of step lengths along a cell path, in cells.
fn tail_costs(cells: &[Cell]) -> Vec<f64> {
    let mut tail = vec![0.0; cells.len()];
    for i in (0..cells.len().saturating_sub(1)).rev() {
        let diagonal = cells[i].x != cells[i + 1].x && cells[i].y != cells[i + 1].y;
        tail[i] = tail[i + 1] + if diagonal { std::f64::consts::SQRT_2 } else { 1.0 };
    }
    tail
}

impl Policy for PlannerPolicy {
    fn name(&self) -> String {
        format!("planner:{}", self.source.as_str())
    }

    fn on_reset(&mut self, ep: &EpisodeContext<'_>) {
        let g = self.geometry();
        let oracle_full = || {
            build_oracle_map(ep.world, ep.objects(), &g, Channels::OccObj).expect("map geometry must cover the world")
        };
        *self = PlannerPolicy::new(self.source, self.cfg.clone());
        match self.source {
            MapSource::Oracle => match self.cfg.channels {
                Channels::OccObj => {
                    self.nav = oracle_full();
                }
                Channels::Occ => {
                    self.nav = build_oracle_map(ep.world, ep.objects(), &g, Channels::Occ).expect("covering geometry");
                    self.explored = Some(GlobalMap::empty(g));
                    self.oracle = Some(oracle_full());
                }
                Channels::Obj => {
                    self.rule = Traversability::Optimistic;
                    self.oracle = Some(oracle_full());
                }
            },
            MapSource::OracleEgo => {
                self.rule = Traversability::Optimistic;
                self.oracle = Some(oracle_full());
            }
            MapSource::ObjRecog => {
                self.rule = Traversability::Optimistic;
            }
            MapSource::ProjNeural => {
                self.rule = Traversability::Optimistic;
                let k = ep.config.num_categories as usize;
                self.features = Some(FeatureMap::new(g, k + 2));
                self.projection = ProjectionConfig {
                    fov_deg: ep.config.fov,
                    max_depth: ep.config.max_depth,
                    ..ProjectionConfig::covering(5.6, g.cell_size)
                };
            }
        }
    }

    fn act(&mut self, ctx: &StepContext<'_>, rng: &mut ChaCha8Rng) -> u8 {
        self.update_memory(ctx, rng);
        self.handle_events(ctx);
        if ctx.task.goal_index != self.goal_index {
            self.goal_index = ctx.task.goal_index;
            self.rejected.clear();
            self.clear_plan();
        }
        let cells = self.current_goal_cells(ctx.task.goal_category);
        if cells != self.goal_cells {
            self.goal_cells = cells;
            if !matches!(self.target, Some(Target::Goal(c)) if self.goal_cells.contains(&c))
                || self.goal_cells.len() > 1
            {
                self.clear_plan();
            }
        }
        self.decide(ctx).id()
    }
}
