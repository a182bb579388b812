//! Episode-level data parallelism with a sequential fallback.
//!
//! Evaluation workloads (policy rollouts, attack episodes, transfer
//! crafting) are embarrassingly parallel: every episode owns its own seed,
//! environment, and generator, and results are collected in index order, so
//! the parallel and sequential paths produce identical output. With the
//! `parallel` feature off the crate builds without rayon at all.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Always-sequential variant of [`map_indexed`]; the criterion benches
/// compare the two.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let par = map_indexed(64, |i| i * i);
        let seq = map_indexed_seq(64, |i| i * i);
        assert_eq!(par, seq);
    }
}
