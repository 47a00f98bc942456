//! Optional data parallelism. The `FPUT_THREADS` environment variable caps
//! the worker count; without the `parallel` feature everything runs serially.

#[cfg(feature = "parallel")]
use std::sync::OnceLock;

/// Number of workers requested through `FPUT_THREADS`, if set and valid.
pub fn requested_threads() -> Option<usize> {
    std::env::var("FPUT_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

#[cfg(feature = "parallel")]
fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = requested_threads() {
            b = b.num_threads(n);
        }
        b.build().expect("thread pool")
    })
}

/// `(0..n).map(f)` collected in order, possibly in parallel.
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pool().install(|| (0..n).into_par_iter().map(&f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fills `out[i] = f(i)`, possibly in parallel chunks.
pub fn fill_indexed(out: &mut [f64], f: impl Fn(usize) -> f64 + Sync + Send) {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pool().install(|| out.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, o)| *o = f(i)));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }
}

/// Calls `f(i, row)` for each consecutive row of length `width` in `out`.
pub fn fill_rows(out: &mut [f64], width: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pool().install(|| out.par_chunks_mut(width).enumerate().for_each(|(i, r)| f(i, r)));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, r) in out.chunks_mut(width).enumerate() {
            f(i, r);
        }
    }
}
