//! Shared fixtures for the benchmarks.

use multion_core::episodes::{generate_episode_set, Episode, SamplingConfig, Split};
use multion_core::world::{generate_world, GenerateParams, GridWorld};

/// A default-size generated world with a handful of three-goal episodes.
pub struct Fixture {
    pub world: GridWorld,
    pub episodes: Vec<Episode>,
}

pub fn fixture(seed: u64, episodes: usize) -> Fixture {
    let world = generate_world(seed, &GenerateParams::default()).expect("default world generates");
    let set = generate_episode_set(
        std::slice::from_ref(&world),
        episodes,
        Split::Test,
        &SamplingConfig::default(),
        seed,
    )
    .expect("default band is feasible");
    Fixture {
        world,
        episodes: set.episodes,
    }
}
