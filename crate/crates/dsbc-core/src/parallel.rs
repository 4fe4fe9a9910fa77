//! Order-preserving map over independent work items, parallel when the
//! `parallel` feature is on. Results come back indexed, so output is
//! byte-identical regardless of worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential reference path; always available.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Map `f` over `0..n`. `workers` picks the pool size; `None` uses the
/// global default, `Some(1)` short-circuits to the sequential path.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match workers {
        Some(1) => map_indexed_seq(n, f),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .expect("failed to build worker pool");
            pool.install(|| (0..n).into_par_iter().map(f).collect())
        }
        None => (0..n).into_par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, _workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let work = |i: usize| i * i + 1;
        let seq = map_indexed_seq(100, work);
        for workers in [None, Some(1), Some(2), Some(4)] {
            assert_eq!(map_indexed(100, workers, work), seq);
        }
    }
}
