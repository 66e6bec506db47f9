//! Row-level data parallelism with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool
//! whose size is capped by `ANISOWAVE_THREADS`. Setting that variable to 1,
//! calling [`set_sequential`], or building without the feature runs every
//! loop in index order on the calling thread. Results never depend on the
//! schedule: outputs are collected by index and reductions happen afterwards.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

pub const THREADS_ENV: &str = "ANISOWAVE_THREADS";

pub fn set_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

/// Thread cap from the environment, if any.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()).filter(|&k| k > 0)
}

pub fn is_sequential() -> bool {
    !cfg!(feature = "parallel") || FORCE_SEQUENTIAL.load(Ordering::SeqCst) || thread_cap() == Some(1)
}

#[cfg(feature = "parallel")]
fn init_pool() {
    use std::sync::Once;
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        if let Some(k) = thread_cap() {
            // Fails only if a global pool already exists; that pool is kept.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    });
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !is_sequential() {
            use rayon::prelude::*;
            init_pool();
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Fills consecutive `chunk`-sized blocks of `out`, block `i` by `f(i, block)`.
pub fn for_each_chunk<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !is_sequential() {
            use rayon::prelude::*;
            init_pool();
            out.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
            return;
        }
    }
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}
