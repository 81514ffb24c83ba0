//! Deterministic indexed maps with an optional rayon backend.
//!
//! Every parallel site in this crate maps an index range through a pure
//! function and collects results in index order, so sequential and parallel
//! execution produce identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution backend for data-parallel inner loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for ExecMode {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        ExecMode::Parallel
    }
    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        ExecMode::Sequential
    }
}

pub fn map_indexed_seq<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_indexed_par<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    (0..n).into_par_iter().map(f).collect()
}

/// Map `0..n` through `f`, preserving index order in the output.
pub fn map_indexed<U: Send>(
    mode: ExecMode,
    n: usize,
    f: impl Fn(usize) -> U + Sync + Send,
) -> Vec<U> {
    match mode {
        ExecMode::Sequential => map_indexed_seq(n, f),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => map_indexed_par(n, f),
    }
}
