use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator behind every random stream.
pub type StreamRng = ChaCha20Rng;

/// Recorded in run metadata so results can be reproduced elsewhere.
pub const RNG_DESCRIPTION: &str =
    "ChaCha20 (rand_chacha 0.3); key = seed_from_u64(master_seed), stream id = FNV-1a-64(stream name)";

pub const STREAM_ENV: &str = "env";
pub const STREAM_ACTOR_INIT: &str = "actor-init";
pub const STREAM_CRITIC_INIT: &str = "critic-init";
pub const STREAM_SAMPLING: &str = "sampling";
pub const STREAM_REPLAY: &str = "replay";
pub const STREAM_EVAL: &str = "eval";
pub const STREAM_EVAL_ENV: &str = "eval-env";

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The stream `name` under `master_seed`. Streams with distinct names share
/// a key but use disjoint ChaCha nonces.
pub fn rng_stream(master_seed: u64, name: &str) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(fnv1a64(name.as_bytes()));
    rng
}

/// The independent streams one training run draws from.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub env: StreamRng,
    pub actor_init: StreamRng,
    pub critic_init: StreamRng,
    /// Behaviour-policy action draws.
    pub sampling: StreamRng,
    /// Minibatch selection.
    pub replay: StreamRng,
}

pub fn derive_rng_streams(master_seed: u64) -> RngStreams {
    RngStreams {
        env: rng_stream(master_seed, STREAM_ENV),
        actor_init: rng_stream(master_seed, STREAM_ACTOR_INIT),
        critic_init: rng_stream(master_seed, STREAM_CRITIC_INIT),
        sampling: rng_stream(master_seed, STREAM_SAMPLING),
        replay: rng_stream(master_seed, STREAM_REPLAY),
    }
}
