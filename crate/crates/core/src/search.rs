//! One-dimensional search helpers: log grids, golden section, bisection.

use crate::error::{Error, Result};

/// `n` points spaced evenly in log scale from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `n` points spaced evenly from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximisation of `f` on [a, b] until the bracket is below `tol`.
/// Returns (argmax, max). Evaluation errors abort the search.
pub fn golden_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Bisection for the crossing of a monotone predicate on [lo, hi].
/// `below(x)` must be true at `lo` and false at `hi`; returns the boundary.
/// With `log_scale` the midpoint is geometric.
pub fn bisect<F>(mut below: F, mut lo: f64, mut hi: f64, rel_tol: f64, log_scale: bool) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    if log_scale && !(lo > 0.0) {
        return Err(Error::invalid("log-scale bisection needs a positive bracket"));
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= rel_tol * hi.abs().max(lo.abs()) {
            break;
        }
        let mid = if log_scale { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if log_scale { (lo * hi).sqrt() } else { 0.5 * (lo + hi) })
}
