//! Deterministic, splittable random number streams.
//!
//! Every stochastic component in the crate draws from a [`SeededRng`], a
//! `(base_seed, stream_id)` pair backed by ChaCha8. Identical pairs produce
//! identical draw sequences; distinct stream ids produce independent streams.
//! Parallel work derives child streams up front instead of sharing one
//! generator, so results do not depend on scheduling.
//!
//! Stream assignment conventions used by the other modules:
//! - fold construction: `split("folds", &[context])`
//! - StackNet out-of-fold fits: `split("stacknet/oof-fit", &[layer, seed_stream, fold])`
//! - StackNet full fits: `split("stacknet/full-fit", &[layer, seed_stream])`
//! - forest/extra-trees tree `t`: `derive(t)`

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A reproducible random stream identified by `(base_seed, stream_id)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeededRng {
    base_seed: u64,
    stream_id: u64,
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(mut acc: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        acc ^= u64::from(b);
        acc = acc.wrapping_mul(FNV_PRIME);
    }
    acc
}

// splitmix64 finalizer; decorrelates sequential ids.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl SeededRng {
    /// Root stream for a base seed (stream id 0).
    pub fn new(base_seed: u64) -> Self {
        SeededRng {
            base_seed,
            stream_id: 0,
        }
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream indexed by `index` (e.g. one per tree).
    pub fn derive(&self, index: u64) -> Self {
        SeededRng {
            base_seed: self.base_seed,
            stream_id: mix(self.stream_id ^ mix(index)),
        }
    }

    /// Child stream identified by a label and an index path. The label keeps
    /// unrelated consumers on disjoint streams even when indices collide.
    pub fn split(&self, label: &str, indices: &[u64]) -> Self {
        let mut acc = fnv1a(FNV_OFFSET, label.as_bytes());
        for &i in indices {
            acc = fnv1a(acc, &i.to_le_bytes());
        }
        SeededRng {
            base_seed: self.base_seed,
            stream_id: mix(self.stream_id ^ mix(acc)),
        }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
