//! The logit change of variable used by every table on (0, 1).
//!
//! Kernel quantities behave like `log t` and `log(1 − t)` at the ends of the
//! unit interval; in `u = log(t / (1 − t))` they become asymptotically
//! linear, which is what makes cubic tables and bisection well behaved there.

/// `log(t / (1 − t))`, accurate near both ends.
#[allow(unused_imports)]
use num_traits::Float;

#[inline]
pub(crate) fn logit(t: f64) -> f64 {
    if t <= 0.5 {
        t.ln() - (-t).ln_1p()
    } else {
        t.ln() - (1.0 - t).ln()
    }
}

/// `(σ(u), 1 − σ(u))` with both members computed without cancellation.
#[inline]
pub(crate) fn sigmoid_pair(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        let e = u.exp();
        let p = e / (1.0 + e);
        (p, 1.0 / (1.0 + e))
    } else {
        let e = (-u).exp();
        let q = e / (1.0 + e);
        (1.0 / (1.0 + e), q)
    }
}
