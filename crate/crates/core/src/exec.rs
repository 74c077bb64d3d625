//! Execution policy for the per-cell loops (assembly, estimator, projection).
//!
//! Work items are mapped independently and collected in index order, so the
//! downstream reductions always see the same sequence regardless of how many
//! threads produced it.

/// How per-item work is scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon data parallelism. Falls back to sequential when the crate is
    /// built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Evaluates `f(i)` for `i in 0..n` and returns the results in index order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }
}

/// Configures the global rayon pool and the dense/sparse kernel parallelism.
/// Only the first call sizes the pool; `threads == 1` makes every kernel
/// sequential, which gives bit-reproducible results.
pub fn init_threads(threads: usize) {
    if threads == 1 {
        faer::set_global_parallelism(faer::Par::Seq);
    } else if threads > 1 {
        faer::set_global_parallelism(faer::Par::rayon(threads));
    }
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
}

/// Execution policy matching a thread count: sequential for one thread.
pub fn execution_for_threads(threads: Option<usize>) -> Execution {
    match threads {
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let seq = Execution::Sequential.map_range(1000, |i| i * i);
        let par = Execution::Parallel.map_range(1000, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }
}
