//! Counter-based random streams for schedule-invariant Monte Carlo.
//!
//! Every replicate draws from a ChaCha8 stream whose key is `(seed, stream_id)`
//! and whose nonce is the replicate index, so the numbers a replicate sees do
//! not depend on which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type StreamRng = ChaCha8Rng;

/// Stream identifiers used by the simulation code.
pub mod streams {
    pub const NOISE: u64 = 0;
    pub const MIXTURE: u64 = 1;
    pub const SPARSITY: u64 = 2;
}

pub fn stream_rng(seed: u64, replicate: u64, stream_id: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream_id.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replicate);
    rng
}

/// Run `f` once per replicate in parallel; results come back in replicate order.
pub fn replicate_map<T, F>(replicates: usize, seed: u64, stream_id: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut StreamRng) -> T + Sync,
{
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r, stream_id);
            f(r, &mut rng)
        })
        .collect()
}
