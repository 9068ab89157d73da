//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! the rayon pool; without it (or inside [`sequential`]) the same closures run
//! in index order on the calling thread. Callers must not depend on
//! scheduling: every helper returns results in index order.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with the data-parallel helpers pinned to the calling thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(prev));
    out
}

#[cfg(feature = "parallel")]
fn use_pool() -> bool {
    !FORCE_SEQUENTIAL.with(|c| c.get())
}

/// `(0..n).map(f).collect()`.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_pool() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// `out[i] = f(i)` for every slot.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_pool() {
        use rayon::prelude::*;
        out.par_iter_mut()
            .enumerate()
            .for_each(|(i, slot)| *slot = f(i));
        return;
    }
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

/// Fills consecutive `chunk`-sized rows of `out`; `f` receives the row index.
pub fn fill_rows<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_pool() {
        use rayon::prelude::*;
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    for (i, row) in out.chunks_mut(chunk).enumerate() {
        f(i, row);
    }
}

/// Sizes the global pool. Returns `false` when the pool was already built or
/// is not compiled in.
pub fn configure_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

/// Whether the rayon pool is compiled in.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_pooled_agree() {
        let a = map_range(1000, |i| (i * i) as u64 % 97);
        let b = sequential(|| map_range(1000, |i| (i * i) as u64 % 97));
        assert_eq!(a, b);
        let mut c = vec![0usize; 64];
        fill_rows(&mut c, 8, |r, row| row.iter_mut().for_each(|x| *x = r));
        assert_eq!(c[63], 7);
    }
}
