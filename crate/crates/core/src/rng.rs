//! Seed derivation. Every random stream in the crate is keyed by a stable
//! hash of its logical identity, never by scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a child seed from a base seed and a string label plus index.
pub fn derive_seed(base: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Lowercase hex SHA-256 of `bytes`, truncated to 16 characters.
pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable_and_distinct() {
        assert_eq!(derive_seed(1, "w", 0), derive_seed(1, "w", 0));
        assert_ne!(derive_seed(1, "w", 0), derive_seed(1, "w", 1));
        assert_ne!(derive_seed(1, "w", 0), derive_seed(2, "w", 0));
        assert_ne!(derive_seed(1, "ab", 0), derive_seed(1, "a", 0));
    }

    #[test]
    fn seeded_streams_repeat() {
        let a: Vec<u32> = (0..4)
            .map({
                let mut r = seeded_rng(9);
                move |_| r.gen()
            })
            .collect();
        let b: Vec<u32> = (0..4)
            .map({
                let mut r = seeded_rng(9);
                move |_| r.gen()
            })
            .collect();
        assert_eq!(a, b);
        assert_eq!(short_hash(b"abc").len(), 16);
    }
}
