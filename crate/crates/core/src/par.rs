//! Execution strategy for the data-parallel loops (per-row kernels, sample sweeps).
//!
//! With the `parallel` feature disabled, [`Execution::Parallel`] runs the
//! same code sequentially, so results never depend on the feature set.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How batch loops are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Downgrades to sequential for loops too small to amortize scheduling.
    pub(crate) fn for_work(self, work: usize) -> Execution {
        if work < PARALLEL_WORK_THRESHOLD {
            Execution::Sequential
        } else {
            self
        }
    }
}

/// Scalar multiply-adds below which a kernel stays on the calling thread.
pub(crate) const PARALLEL_WORK_THRESHOLD: usize = 1 << 15;

/// `(0..len).map(f).collect()`, in index order regardless of scheduling.
pub(crate) fn map_indices<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// First `Some` in index order; the parallel path returns the same element.
pub(crate) fn find_first<T, F>(exec: Execution, len: usize, f: F) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len).into_par_iter().find_map_first(f);
    }
    let _ = exec;
    (0..len).find_map(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn find_first_picks_lowest_index() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let hit = find_first(exec, 10_000, |i| (i % 997 == 13).then_some(i));
            assert_eq!(hit, Some(13));
        }
    }

    #[test]
    fn map_preserves_order() {
        let seq = map_indices(Execution::Sequential, 5000, |i| i * i);
        let par = map_indices(Execution::Parallel, 5000, |i| i * i);
        assert_eq!(seq, par);
    }
}
