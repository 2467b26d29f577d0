//! Thin shims over rayon so call sites compile identically with and without
//! the `parallel` feature. Bounds require `Send + Sync` in both builds; the
//! sequential fallback simply iterates in order. All uses are per-item
//! independent maps, so results are identical across backends.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Name of the active backend, used by benches and diagnostics.
pub fn backend() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}

/// Map every item of a slice, preserving order.
#[cfg(feature = "parallel")]
pub fn map_slice<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Apply `f(row_index, row)` to every row of a row-major buffer.
#[cfg(feature = "parallel")]
pub fn for_each_row<T: Send, F: Fn(usize, &mut [T]) + Sync + Send>(data: &mut [T], width: usize, f: F) {
    data.par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_row<T: Send, F: Fn(usize, &mut [T]) + Sync + Send>(data: &mut [T], width: usize, f: F) {
    for (i, row) in data.chunks_mut(width).enumerate() {
        f(i, row);
    }
}

/// Map over an index range, preserving order.
#[cfg(feature = "parallel")]
pub fn map_range<R: Send, F: Fn(usize) -> R + Sync + Send>(n: usize, f: F) -> Vec<R> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<R: Send, F: Fn(usize) -> R + Sync + Send>(n: usize, f: F) -> Vec<R> {
    (0..n).map(f).collect()
}

/// Run `f` on a pool with the given thread count. `None` keeps the global
/// default. The sequential build ignores the thread count.
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send, F: FnOnce() -> R + Send>(threads: Option<usize>, f: F) -> R {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send, F: FnOnce() -> R + Send>(_threads: Option<usize>, f: F) -> R {
    f()
}
