//! Index-ordered map over independent tasks.
//!
//! With the `parallel` feature the tasks run on the rayon pool; without it
//! they run in a plain loop. Results are always collected in index order and
//! every task owns its own RNG stream, so output does not depend on the
//! number of workers.

use crate::error::Result;

/// Execution strategy for batch work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
    Sequential,
}

pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

pub fn try_map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_indexed(Execution::Parallel, n, f).into_iter().collect()
}

/// Run `f` on a dedicated pool of `threads` workers (0 = rayon default).
/// Falls back to calling `f` directly when `parallel` is disabled.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(f);
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let par = map_indexed(Execution::Parallel, 1000, |i| i * i);
        let seq = map_indexed(Execution::Sequential, 1000, |i| i * i);
        assert_eq!(par, seq);
        assert_eq!(
            with_threads(3, || map_indexed(Execution::Parallel, 10, |i| i)),
            (0..10).collect::<Vec<_>>()
        );
    }
}
