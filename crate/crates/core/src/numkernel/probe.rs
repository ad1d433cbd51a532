//! Thread-local instrumentation: multiply-accumulate counter and an
//! allocation high-water mark for matrix storage.
//!
//! The counters are thread-local so concurrent tests do not observe each
//! other. All matrix math in this crate runs on the calling thread, which
//! keeps the numbers deterministic for a fixed seed.

use std::cell::Cell;

thread_local! {
    static FLOPS: Cell<u64> = const { Cell::new(0) };
    static LIVE_BYTES: Cell<u64> = const { Cell::new(0) };
    static PEAK_BYTES: Cell<u64> = const { Cell::new(0) };
    static MAX_ALLOC_ELEMS: Cell<u64> = const { Cell::new(0) };
}

/// Record `n` multiply-accumulate operations. Called by `matmul`.
pub(crate) fn count_macs(n: u64) {
    FLOPS.with(|c| c.set(c.get() + n));
}

/// Reset the multiply-accumulate counter for this thread.
pub fn reset_flops() {
    FLOPS.with(|c| c.set(0));
}

/// Multiply-accumulate operations recorded on this thread since the last reset.
pub fn flops() -> u64 {
    FLOPS.with(|c| c.get())
}

pub(crate) fn record_alloc(elems: usize) {
    let bytes = (elems * std::mem::size_of::<f64>()) as u64;
    LIVE_BYTES.with(|c| c.set(c.get() + bytes));
    PEAK_BYTES.with(|p| {
        let live = LIVE_BYTES.with(|c| c.get());
        if live > p.get() {
            p.set(live);
        }
    });
    MAX_ALLOC_ELEMS.with(|m| {
        if elems as u64 > m.get() {
            m.set(elems as u64);
        }
    });
}

pub(crate) fn record_dealloc(elems: usize) {
    let bytes = (elems * std::mem::size_of::<f64>()) as u64;
    // Saturating: a matrix may be dropped on a different thread than the one
    // that allocated it, in which case the books of both threads stay sane.
    LIVE_BYTES.with(|c| c.set(c.get().saturating_sub(bytes)));
}

/// Bytes of matrix storage currently live on this thread.
pub fn live_bytes() -> u64 {
    LIVE_BYTES.with(|c| c.get())
}

/// Start a new high-water measurement: the peak is pulled down to the
/// current live figure.
pub fn reset_peak_bytes() {
    let live = live_bytes();
    PEAK_BYTES.with(|p| p.set(live));
}

/// High-water mark of live matrix bytes since the last reset.
pub fn peak_bytes() -> u64 {
    PEAK_BYTES.with(|p| p.get())
}

/// Forget the largest-single-allocation record.
pub fn reset_max_alloc_elems() {
    MAX_ALLOC_ELEMS.with(|m| m.set(0));
}

/// Element count of the largest single matrix allocated since the last reset.
pub fn max_alloc_elems() -> u64 {
    MAX_ALLOC_ELEMS.with(|m| m.get())
}
