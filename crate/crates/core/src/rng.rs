//! Seeded random streams and deterministic parallel replicate loops.
//!
//! Every replicate draws from its own ChaCha8 stream keyed by the run seed and
//! selected by the replicate index, so results never depend on how replicates
//! are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type SimRng = ChaCha8Rng;

/// Replicates are grouped into fixed-size chunks before reduction so that
/// floating point accumulation order is independent of the thread count.
pub const REDUCE_CHUNK: usize = 64;

/// The random stream for replicate `index` of a run seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` once per replicate and returns the results in replicate order.
pub fn replicate_map<T, F>(reps: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng, usize) -> T + Sync + Send,
{
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            f(&mut rng, i)
        })
        .collect()
}

/// Chunked parallel fold. Each chunk of [`REDUCE_CHUNK`] replicates is folded
/// sequentially into a fresh accumulator; chunk results are merged in order.
pub fn replicate_fold<A, Init, Step, Merge>(
    reps: usize,
    seed: u64,
    init: Init,
    step: Step,
    merge: Merge,
) -> A
where
    A: Send,
    Init: Fn() -> A + Sync + Send,
    Step: Fn(&mut A, &mut SimRng, usize) + Sync + Send,
    Merge: Fn(&mut A, A),
{
    let chunks = reps.div_ceil(REDUCE_CHUNK);
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let lo = c * REDUCE_CHUNK;
            let hi = (lo + REDUCE_CHUNK).min(reps);
            for i in lo..hi {
                let mut rng = stream(seed, i as u64);
                step(&mut acc, &mut rng, i);
            }
            acc
        })
        .collect();
    let mut out = init();
    for p in partials {
        merge(&mut out, p);
    }
    out
}
