//! Replica-level data parallelism.
//!
//! With the `parallel` feature (default) replicas run on a rayon pool of the
//! requested size; without it, or with `workers == 1`, they run in a plain
//! loop. Results always come back in replica-index order, so any reduction
//! done by the caller is independent of scheduling.

/// Whether this build can run replicas on more than one thread.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Evaluates `f(0), ..., f(count - 1)` and returns the results in index order.
/// `workers == 0` lets the pool pick its size.
pub fn map_replicas<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers == 1 || count <= 1 {
        return map_sequential(count, f);
    }
    map_parallel(count, workers, f)
}

pub fn map_sequential<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

#[cfg(feature = "parallel")]
fn map_parallel<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
        Err(_) => map_sequential(count, f),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_parallel<T, F>(count: usize, _workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_sequential(count, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_worker_count() {
        let expected: Vec<u64> = (0..1000u64).map(|i| i * i + 7).collect();
        for workers in [0, 1, 2, 4, 7] {
            let got = map_replicas(1000, workers, |i| (i as u64) * (i as u64) + 7);
            assert_eq!(got, expected, "workers = {workers}");
        }
    }

    #[test]
    fn empty_and_single() {
        assert!(map_replicas(0, 4, |i| i).is_empty());
        assert_eq!(map_replicas(1, 4, |i| i + 1), vec![1]);
    }
}
