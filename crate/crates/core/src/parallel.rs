use rayon::prelude::*;

use crate::error::{Error, Result};

/// Maps `f` over `0..n` on `workers` threads (0 = rayon's default pool,
/// 1 = the calling thread). Output order always follows the input order.
pub(crate) fn map_indexed<T, S, I, F>(n: usize, workers: usize, init: I, f: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> Result<T> + Sync + Send,
{
    if workers == 1 {
        let mut state = init();
        return (0..n).map(|i| f(&mut state, i)).collect();
    }
    let run = || {
        (0..n)
            .into_par_iter()
            .map_init(&init, |s, i| f(s, i))
            .collect::<Result<Vec<T>>>()
    };
    if workers == 0 {
        return run();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {workers} workers: {e}")))?
        .install(run)
}
