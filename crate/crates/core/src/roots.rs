//! Bracketed one-dimensional solvers.

use crate::error::{Error, Result};

pub(crate) const MAX_ITER: usize = 200;

/// Finds `x` in `[lo, hi]` with `f(x) = target` for a non-decreasing `f`,
/// given `f(lo) <= target <= f(hi)`. `f` returns the value and its
/// derivative; Newton steps are taken while they stay inside the bracket,
/// bisection otherwise. The returned point is the right edge of the final
/// bracket, the first point (to within `tol`) where `f` reaches `target`.
pub(crate) fn solve_increasing<F>(
    mut f: F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        if hi - lo <= tol {
            return Ok(hi);
        }
        let (fx, dfx) = f(x);
        let r = fx - target;
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - r / dfx;
        let step_ok = dfx > 0.0 && newton.is_finite() && newton > lo && newton < hi;
        let next = if step_ok { newton } else { 0.5 * (lo + hi) };
        if step_ok && (next - x).abs() <= 0.25 * tol {
            // Newton has converged; close the bracket around it.
            let (fa, _) = f(next - tol);
            let (fb, _) = f(next + tol);
            if fa < target && fb >= target {
                return Ok(next + tol);
            }
        }
        x = next;
    }
    if hi - lo <= tol {
        Ok(hi)
    } else {
        Err(Error::NonConvergence { quantile: target })
    }
}

/// Golden-section search for a local minimum of `f` on `[a, b]`.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..MAX_ITER {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Bisection for the boundary of a predicate that holds at `yes` and fails
/// at `no`. Returns the last point known to satisfy it.
pub(crate) fn bisect_edge<P: FnMut(f64) -> bool>(
    mut pred: P,
    mut yes: f64,
    mut no: f64,
    tol: f64,
) -> f64 {
    for _ in 0..MAX_ITER {
        if (no - yes).abs() <= tol {
            break;
        }
        let mid = 0.5 * (yes + no);
        if pred(mid) {
            yes = mid;
        } else {
            no = mid;
        }
    }
    yes
}
