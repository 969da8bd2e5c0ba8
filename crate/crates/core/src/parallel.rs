//! Ordered parallel map over grid points.
//!
//! Sweep evaluations are pure per-point functions, so they fan out over a
//! scoped thread pool and are reassembled in input order; results are
//! bitwise independent of the thread count.

/// Applies `f` to every index in `0..n` using up to `threads` worker threads
/// (0 means the available parallelism) and returns results in index order.
pub fn map_indexed<R, F>(n: usize, threads: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    let threads = if threads == 0 {
        std::thread::available_parallelism().map(|v| v.get()).unwrap_or(1)
    } else {
        threads
    };
    let threads = threads.min(n.max(1));

    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }

    let mut slots: Vec<Option<R>> = Vec::with_capacity(n);
    slots.resize_with(n, || None);

    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        let mut rest = slots.as_mut_slice();
        let mut start = 0usize;
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            let base = start;
            let f = &f;
            scope.spawn(move || {
                for (off, slot) in head.iter_mut().enumerate() {
                    *slot = Some(f(base + off));
                }
            });
            rest = tail;
            start += take;
        }
    });

    slots.into_iter().map(|s| s.expect("worker filled every slot")).collect()
}
