use std::collections::BTreeSet;

use multion_core::geom::{Cell, Point, Pose};
use multion_core::mapmem::MapGeometry;
use multion_core::world::{
    generate_world, geodesic_distance, geodesic_field, raycast, visible_cells, GenerateParams, GridWorld, WorldError,
    AGENT_RADIUS,
};
use proptest::prelude::*;

/// Random closed grid at 0.1 m with roughly `density` of the cells walled.
fn random_world(seed: u64, w: usize, h: usize, density: f64) -> GridWorld {
    use rand::Rng;
    let mut rng = multion_core::rng::seeded_rng(seed);
    let occ = (0..w * h).map(|_| rng.gen_bool(density)).collect();
    GridWorld::from_occupancy(format!("p{seed}"), w, h, 0.1, occ).unwrap()
}

fn centres(world: &GridWorld) -> Vec<Point> {
    world
        .navigable_cells(AGENT_RADIUS)
        .into_iter()
        .map(|c| world.cell_center(c))
        .collect()
}

fn reach(world: &GridWorld, a: Point, b: Point) -> Option<f64> {
    match geodesic_distance(world, a, b, AGENT_RADIUS) {
        Ok(d) => Some(d),
        Err(WorldError::Unreachable) => None,
        Err(e) => panic!("unexpected {e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn geodesic_is_symmetric(seed in any::<u64>(), picks in prop::collection::vec(any::<prop::sample::Index>(), 2)) {
        let world = random_world(seed, 16, 16, 0.15);
        let pts = centres(&world);
        prop_assume!(!pts.is_empty());
        let a = pts[picks[0].index(pts.len())];
        let b = pts[picks[1].index(pts.len())];
        prop_assert_eq!(reach(&world, a, b), reach(&world, b, a));
    }

    #[test]
    fn geodesic_triangle_inequality(seed in any::<u64>(), picks in prop::collection::vec(any::<prop::sample::Index>(), 3)) {
        let world = random_world(seed, 16, 16, 0.15);
        let pts = centres(&world);
        prop_assume!(!pts.is_empty());
        let [a, b, c] = [0, 1, 2].map(|i| pts[picks[i].index(pts.len())]);
        if let (Some(ab), Some(bc)) = (reach(&world, a, b), reach(&world, b, c)) {
            let ac = reach(&world, a, c).expect("same component");
            prop_assert!(ac <= ab + bc + 1e-9);
        }
    }

    #[test]
    fn field_is_lipschitz_between_neighbours(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let world = random_world(seed, 18, 18, 0.2);
        let pts = centres(&world);
        prop_assume!(!pts.is_empty());
        let field = geodesic_field(&world, pts[pick.index(pts.len())], AGENT_RADIUS).unwrap();
        // Diagonal neighbours across a walled corner are not graph edges.
        let free = |c: Cell| world.in_bounds(c) && !world.is_occupied(c);
        for y in 0..18 {
            for x in 0..18 {
                let c = Cell::new(x, y);
                let v = field.at_cell(c);
                if !v.is_finite() {
                    continue;
                }
                for (dx, dy) in multion_core::geom::NEIGHBORS8 {
                    let diagonal = dx != 0 && dy != 0;
                    if diagonal && !(free(c.offset(dx, 0)) && free(c.offset(0, dy))) {
                        continue;
                    }
                    let u = field.at_cell(c.offset(dx, dy));
                    let step = if diagonal { 0.1 * std::f64::consts::SQRT_2 } else { 0.1 };
                    if u.is_finite() {
                        prop_assert!((u - v).abs() <= step + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn visibility_monotone_in_range_and_fov(
        seed in 0u64..1000,
        theta in 0u32..12,
        pick in any::<prop::sample::Index>(),
        r0 in 0.5f64..6.0, dr in 0.0f64..3.0,
        f0 in 10.0f64..180.0, df in 0.0f64..90.0,
    ) {
        let world = random_world(seed, 60, 60, 0.05);
        let pts = centres(&world);
        prop_assume!(!pts.is_empty());
        let p = pts[pick.index(pts.len())];
        let pose = Pose::new(p.x, p.y, theta * 30);
        let g = MapGeometry::new(16, 0.4, Point::new(0.0, 0.0));
        let set = |fov: f64, range: f64| visible_cells(&world, &pose, fov, range, &g).into_iter().collect::<BTreeSet<_>>();
        let base = set(f0, r0);
        prop_assert!(base.is_subset(&set(f0, r0 + dr)));
        prop_assert!(base.is_subset(&set(f0 + df, r0)));
    }

    #[test]
    fn adding_an_obstacle_never_lengthens_a_ray(
        seed in 0u64..1000,
        angle in 0.0f64..360.0,
        t in 0.2f64..4.0,
    ) {
        let world = random_world(seed, 50, 50, 0.02);
        let origin = Point::new(2.5, 2.5);
        prop_assume!(!world.is_occupied(world.cell_at(origin)));
        let before = raycast(&world, &[], origin, angle, 10.0);
        let (c, s) = multion_core::geom::cos_sin_deg(angle);
        let block = world.cell_at(Point::new(origin.x + t * c, origin.y + t * s));
        prop_assume!(block != world.cell_at(origin));
        let Some(i) = world.index(block) else { return Ok(()); };
        let mut occ = world.occupancy().to_vec();
        occ[i] = true;
        let walled = GridWorld::from_occupancy("walled", 50, 50, 0.1, occ).unwrap();
        let after = raycast(&walled, &[], origin, angle, 10.0);
        prop_assert!(after.distance <= before.distance);
    }
}

#[test]
fn generated_worlds_parse_back_identically() {
    let w = generate_world(7, &GenerateParams::default()).unwrap();
    let back = GridWorld::parse(&w.to_text(), w.name()).unwrap();
    assert_eq!(w, back);
    assert_eq!(w.name(), "gen-7");
}

#[test]
fn open_grid_distance_example() {
    let w = GridWorld::from_occupancy("open", 10, 10, 1.0, vec![false; 100]).unwrap();
    let d = geodesic_distance(&w, Point::new(1.5, 1.5), Point::new(1.5, 5.5), 0.1).unwrap();
    assert_eq!(d, 4.0);
}
