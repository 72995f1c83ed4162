//! Per-thread recycling of large transform buffers. Fresh multi-megabyte
//! allocations are returned to the OS on free, so reusing them avoids
//! paying page faults on every right-hand-side evaluation.

use std::cell::RefCell;

use num_complex::Complex64;

const KEEP: usize = 32;

thread_local! {
    static REAL: RefCell<Vec<Vec<f64>>> = const { RefCell::new(Vec::new()) };
    static COMPLEX: RefCell<Vec<Vec<Complex64>>> = const { RefCell::new(Vec::new()) };
}

fn take<T: Clone>(pool: &RefCell<Vec<Vec<T>>>, len: usize, zero: T) -> Vec<T> {
    let mut pool = pool.borrow_mut();
    let best = pool
        .iter()
        .enumerate()
        .filter(|(_, v)| v.capacity() >= len)
        .min_by_key(|(_, v)| v.capacity())
        .map(|(i, _)| i);
    let mut v = match best {
        Some(i) => pool.swap_remove(i),
        None => Vec::with_capacity(len),
    };
    v.clear();
    v.resize(len, zero);
    v
}

fn give<T>(pool: &RefCell<Vec<Vec<T>>>, v: Vec<T>) {
    if v.capacity() < 4096 {
        return;
    }
    let mut pool = pool.borrow_mut();
    if pool.len() < KEEP {
        pool.push(v);
    }
}

/// Zeroed real buffer of length `len`.
pub fn real(len: usize) -> Vec<f64> {
    REAL.with(|p| take(p, len, 0.0))
}

/// Zeroed complex buffer of length `len`.
pub fn complex(len: usize) -> Vec<Complex64> {
    COMPLEX.with(|p| take(p, len, Complex64::new(0.0, 0.0)))
}

pub fn recycle_real(v: Vec<f64>) {
    REAL.with(|p| give(p, v));
}

pub fn recycle_complex(v: Vec<Complex64>) {
    COMPLEX.with(|p| give(p, v));
}
