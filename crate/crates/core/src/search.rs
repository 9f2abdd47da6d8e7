//! One-dimensional maximization: dense scan followed by golden-section
//! refinement around the best grid point.

use crate::scalar::Scalar;

/// Golden-section search for a maximum of `f` on `[a, b]`, shrinking the
/// bracket until it is narrower than `tol`. Assumes `f` is unimodal there.
pub fn golden_section_maximize<T, F>(mut f: F, a: T, b: T, tol: T) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    // 1/φ
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::half();
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Scan/refine settings for locating the worst time of a constraint family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions<T> {
    pub scan_step: T,
    pub time_tolerance: T,
}

impl<T: Scalar> Default for ScanOptions<T> {
    fn default() -> Self {
        Self {
            scan_step: T::lit(0.05),
            time_tolerance: T::lit(1e-4),
        }
    }
}

/// Maximizer of `f` over `[t0, tf]`: evaluates `f` on a grid of
/// `scan_step`, then refines around the best grid point. The returned value
/// is never below the grid maximum. Ties on the grid keep the earliest time.
pub fn scan_and_refine<T, F>(mut f: F, t0: T, tf: T, options: &ScanOptions<T>) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let span = tf - t0;
    let steps = (span / options.scan_step).ceil().to_usize().unwrap_or(0).max(1);
    let mut best = (t0, f(t0));
    for k in 1..=steps {
        let t = (t0 + T::from_usize(k).unwrap() * options.scan_step).min(tf);
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let lo = (best.0 - options.scan_step).max(t0);
    let hi = (best.0 + options.scan_step).min(tf);
    let refined = golden_section_maximize(&mut f, lo, hi, options.time_tolerance);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}
