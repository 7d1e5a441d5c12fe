use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The generator behind every random draw.
pub type SimRng = ChaCha8Rng;

/// Independent generator for `(seed, replica, lane)`; the triple is the key.
pub fn replica_rng(seed: u64, replica: u64, lane: u64) -> SimRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replica.to_le_bytes());
    key[16..24].copy_from_slice(&lane.to_le_bytes());
    key[24..].copy_from_slice(b"ramify\0\0");
    ChaCha8Rng::from_seed(key)
}

/// Runs `f(replica)` for every replica, on `threads` workers, returning the
/// results in replica order regardless of scheduling.
pub fn replicate<T, F>(replicas: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads <= 1 {
        return (0..replicas).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..replicas).into_par_iter().map(&f).collect()),
        Err(_) => (0..replicas).map(f).collect(),
    }
}
