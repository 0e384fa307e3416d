use crate::error::{Error, Result};

/// Maps `f` over `items` on `workers` threads. Output order matches input
/// order regardless of completion order.
pub fn ordered_map<T, U, F>(workers: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    if workers == 1 {
        return Ok(items.iter().map(f).collect());
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

/// Worker count used when none is configured.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
