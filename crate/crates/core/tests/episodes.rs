use std::collections::BTreeSet;
use std::sync::OnceLock;

use multion_core::episodes::{
    episode_stats, episodes_from_str, episodes_to_string, generate_episode_set, load_episodes, save_episodes,
    splits_disjoint, EpisodeError, SamplingConfig, Split,
};
use multion_core::world::{generate_world, GenerateParams, GridWorld};
use proptest::prelude::*;

fn worlds() -> &'static [GridWorld] {
    static W: OnceLock<Vec<GridWorld>> = OnceLock::new();
    W.get_or_init(|| {
        (0..3)
            .map(|s| generate_world(40 + s, &GenerateParams::default()).unwrap())
            .collect()
    })
}

fn sampling(m: usize) -> SamplingConfig {
    SamplingConfig {
        num_goals: m,
        ..SamplingConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stored_chains_recompute_exactly(seed in any::<u64>(), m in 1usize..=3) {
        let set = generate_episode_set(worlds(), 4, Split::Test, &sampling(m), seed).unwrap();
        for ep in &set.episodes {
            let world = worlds().iter().find(|w| w.name() == ep.world_id).unwrap();
            prop_assert_eq!(ep.recompute_chain(world), Some(ep.chain.clone()));
            prop_assert!(ep.chain.iter().all(|d| (2.0..=20.0).contains(d)));
        }
    }

    #[test]
    fn categories_are_distinct_and_in_range(seed in any::<u64>(), m in 1usize..=5) {
        let set = generate_episode_set(worlds(), 3, Split::Val, &sampling(m), seed).unwrap();
        for ep in &set.episodes {
            let cats: BTreeSet<u8> = ep.goals.iter().map(|g| g.category).collect();
            prop_assert_eq!(cats.len(), m);
            prop_assert!(cats.iter().all(|c| (1..=8).contains(c)));
            prop_assert_eq!(ep.start.theta % 30, 0);
        }
    }

    #[test]
    fn text_round_trip_is_field_exact(seed in any::<u64>()) {
        let set = generate_episode_set(&worlds()[..1], 5, Split::Train, &sampling(3), seed).unwrap();
        let back = episodes_from_str(&episodes_to_string(&set)).unwrap();
        prop_assert_eq!(back, set);
    }
}

#[test]
fn three_goal_sets_are_longer_on_average() {
    let mean = |m| {
        let set = generate_episode_set(worlds(), 30, Split::Test, &sampling(m), 5).unwrap();
        set.episodes.iter().map(|e| e.total_distance()).sum::<f64>() / set.episodes.len() as f64
    };
    assert!(mean(3) > mean(1));
}

#[test]
fn histogram_counts_every_episode() {
    let set = generate_episode_set(worlds(), 10, Split::Test, &sampling(2), 9).unwrap();
    let h = episode_stats(&set, 2.0);
    assert_eq!(h.total() as usize, set.episodes.len());
    assert_eq!(h.counts.len(), 20);
}

#[test]
fn cardinality_and_split_discipline() {
    let test = generate_episode_set(&worlds()[..2], 50, Split::Test, &sampling(1), 1).unwrap();
    assert_eq!(test.episodes.len(), 100);
    let ids: BTreeSet<&str> = test.world_ids().into_iter().collect();
    assert_eq!(ids, worlds()[..2].iter().map(|w| w.name()).collect());
    let train = generate_episode_set(&worlds()[2..], 5, Split::Train, &sampling(1), 1).unwrap();
    assert!(splits_disjoint(&[&test, &train]));
    let leaky = generate_episode_set(&worlds()[1..], 5, Split::Train, &sampling(1), 1).unwrap();
    assert!(!splits_disjoint(&[&test, &leaky]));
}

#[test]
fn infeasible_band_names_the_world() {
    let cfg = SamplingConfig {
        d_min: 40.0,
        d_max: 50.0,
        max_retries: 5,
        ..sampling(1)
    };
    match generate_episode_set(&worlds()[..1], 1, Split::Test, &cfg, 0) {
        Err(EpisodeError::SamplingExhausted { world_id, .. }) => assert_eq!(world_id, worlds()[0].name()),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn file_round_trip_and_bad_versions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eps.jsonl");
    let set = generate_episode_set(&worlds()[..1], 3, Split::Test, &sampling(3), 2).unwrap();
    save_episodes(&set, &path).unwrap();
    assert_eq!(load_episodes(&path).unwrap(), set);

    let text = std::fs::read_to_string(&path).unwrap().replace("\"v1\"", "\"v9\"");
    let err = episodes_from_str(&text).unwrap_err();
    assert!(err.to_string().contains("v9"), "{err}");
}
