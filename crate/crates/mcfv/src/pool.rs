//! Thread-pool contract for the solver kernels: every parallel kernel runs
//! on exactly `t` workers, worker `i` owning block row / cell range `i`.
//! Phases inside a kernel are separated by barriers.

use std::sync::Barrier;

/// Per-worker context handed to kernel closures.
pub struct Worker<'a> {
    pub id: usize,
    pub count: usize,
    barrier: &'a Barrier,
}

impl Worker<'_> {
    /// Phase separator. All workers must call it the same number of times.
    pub fn sync(&self) {
        self.barrier.wait();
    }
}

/// Run `f` on `t` workers and join. `t == 1` runs inline on the caller.
pub fn run_workers<F>(t: usize, f: F)
where
    F: Fn(Worker) + Sync,
{
    assert!(t >= 1, "worker count must be >= 1");
    let barrier = Barrier::new(t);
    if t == 1 {
        f(Worker {
            id: 0,
            count: 1,
            barrier: &barrier,
        });
        return;
    }
    std::thread::scope(|s| {
        for id in 0..t {
            let barrier = &barrier;
            let f = &f;
            s.spawn(move || {
                f(Worker {
                    id,
                    count: t,
                    barrier,
                })
            });
        }
    });
}

/// Shared mutable slice for writes at indices proven disjoint across
/// workers (face schedules, block maps). The caller guarantees no two
/// workers write the same index within a phase.
pub struct SharedSliceMut<'a, T> {
    ptr: *mut T,
    len: usize,
    _marker: std::marker::PhantomData<&'a mut [T]>,
}

unsafe impl<T: Send> Send for SharedSliceMut<'_, T> {}
unsafe impl<T: Send> Sync for SharedSliceMut<'_, T> {}

impl<'a, T> SharedSliceMut<'a, T> {
    pub fn new(slice: &'a mut [T]) -> Self {
        SharedSliceMut {
            ptr: slice.as_mut_ptr(),
            len: slice.len(),
            _marker: std::marker::PhantomData,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// # Safety
    /// No concurrent write or read of the same index from another worker.
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn get_mut(&self, idx: usize) -> &mut T {
        debug_assert!(idx < self.len);
        &mut *self.ptr.add(idx)
    }

    /// # Safety
    /// No concurrent write of the same index.
    pub unsafe fn get(&self, idx: usize) -> &T {
        debug_assert!(idx < self.len);
        &*self.ptr.add(idx)
    }
}

/// Split `slice` into consecutive mutable chunks at the given boundaries.
/// `ranges` must be contiguous, ordered and cover the slice.
pub fn split_ranges_mut<'a, T>(
    mut slice: &'a mut [T],
    ranges: &[std::ops::Range<usize>],
) -> Vec<&'a mut [T]> {
    let mut out = Vec::with_capacity(ranges.len());
    let mut consumed = 0;
    for r in ranges {
        assert_eq!(r.start, consumed, "ranges must be contiguous");
        let (head, tail) = slice.split_at_mut(r.end - r.start);
        out.push(head);
        slice = tail;
        consumed = r.end;
    }
    assert!(slice.is_empty(), "ranges must cover the slice");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn workers_all_run_and_sync() {
        let hits = AtomicUsize::new(0);
        run_workers(4, |w| {
            hits.fetch_add(1, Ordering::SeqCst);
            w.sync();
            assert_eq!(hits.load(Ordering::SeqCst), 4);
        });
    }

    #[test]
    fn split_ranges_covers() {
        let mut v = vec![0u32; 10];
        let parts = split_ranges_mut(&mut v, &[0..3, 3..3, 3..10]);
        assert_eq!(parts[0].len(), 3);
        assert_eq!(parts[1].len(), 0);
        assert_eq!(parts[2].len(), 7);
    }
}
