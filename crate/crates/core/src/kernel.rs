//! The univariate building blocks of the maximum-entropy density.
//!
//! For a diagonal `δ` whose contact set is `{0, 1}`:
//!
//! ```text
//! h(r) = r − δ(r)
//! F(r) = (d − 1)/d · ∫_{1/2}^r ds / h(s)
//! a(r) = (d − δ′(r))/d · h(r)^{1/d − 1} · e^{F(r)}
//! b(r) = δ′(r)/d · h(r)^{1/d − 1} · e^{−(d − 1)F(r)}
//! A(r) = ∫_0^r a = h(r)^{1/d} · e^{F(r)}
//! ```
//!
//! `F` diverges at both ends, so it is tabulated in the logit variable
//! `u = log(r/(1 − r))`, where it is asymptotically linear. The table stores
//! exact values and exact slopes at its knots and is refined until cubic
//! Hermite interpolation meets the requested tolerance at every panel
//! midpoint. Everything is evaluated in log space.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::diagonal::{zero_set, Diagonal, DiagonalSection, ZERO_SET_TOL};
use crate::error::{Error, Result};
use crate::logit::{logit, sigmoid_pair};
use crate::pchip::{hermite, MonotoneCubic};
use crate::quad::{integrate, QuadConfig};

/// Logit range covered by the table. Any double in `(0, 1)` has a logit in
/// `(−745, 36.8)`; beyond `[−700, 36]` the table is extended linearly
/// (above 36, `σ(u)` rounds to 1).
const U_MIN: f64 = -700.0;
const U_MAX: f64 = 36.0;
/// Initial knot spacing near the middle and in the far left tail.
const STEP_CORE: f64 = 0.5;
const STEP_TAIL: f64 = 2.0;
const CORE_LO: f64 = -40.0;
/// Panels narrower than this are not split further.
const MIN_PANEL: f64 = 1e-9;

/// Construction settings for [`KernelTable`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    /// Midpoint tolerance for the `F` table, relative to `max(1, |F|)`.
    pub table_tol: f64,
    /// Contact threshold used to confirm `Σ_δ = {0, 1}`.
    pub contact_tol: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            table_tol: 1e-11,
            contact_tol: ZERO_SET_TOL,
        }
    }
}

/// Cached `F` and evaluators for `h`, `a`, `b` and `A`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    delta: DiagonalSection,
    dim: usize,
    /// `F` against `u` on `[u_lo, u_hi]`.
    f: MonotoneCubic,
    u_lo: f64,
    u_hi: f64,
    /// `log h` at the ends of the resolvable range.
    log_h_lo: f64,
    log_h_hi: f64,
}

/// Integrand of `F` in the logit variable.
fn f_slope(delta: &DiagonalSection, coef: f64, u: f64) -> f64 {
    let (s, q) = sigmoid_pair(u);
    coef * s * q / delta.gap_logit(u)
}

impl KernelTable {
    /// Builds the table with default settings. Fails with
    /// [`Error::NotSimple`] unless the contact set of `delta` is `{0, 1}`.
    pub fn build(delta: DiagonalSection) -> Result<Self> {
        Self::build_with(delta, KernelConfig::default())
    }

    pub fn build_with(delta: DiagonalSection, cfg: KernelConfig) -> Result<Self> {
        let z = zero_set(&delta, cfg.contact_tol)?;
        if z.intervals.len() != 1 || z.intervals[0] != (0.0, 1.0) {
            return Err(Error::NotSimple);
        }
        let dim = delta.dim();
        let coef = (dim - 1) as f64 / dim as f64;

        let (s_min, q_min) = delta.resolution();
        let u_lo = if s_min > 0.0 {
            logit(s_min).max(U_MIN)
        } else {
            U_MIN
        };
        let u_hi = if q_min > 0.0 {
            ((-q_min).ln_1p() - q_min.ln()).min(U_MAX)
        } else {
            U_MAX
        };

        let mut knots = alloc::vec![0.0];
        let mut u = 0.0;
        loop {
            u -= if u > CORE_LO { STEP_CORE } else { STEP_TAIL };
            if u <= u_lo {
                break;
            }
            knots.push(u);
        }
        let mut u = 0.0;
        while u + STEP_CORE < u_hi {
            u += STEP_CORE;
            knots.push(u);
        }
        knots.push(u_lo);
        knots.push(u_hi);
        knots.extend(
            delta
                .breakpoints()
                .into_iter()
                .map(logit)
                .filter(|&b| b > u_lo && b < u_hi),
        );
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let slope = |u: f64| f_slope(&delta, coef, u);
        let quad = QuadConfig {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_intervals: 400,
        };
        let integral = |a: f64, b: f64| integrate(slope, a, b, quad).map(|r| r.value);

        // F at each knot, accumulated outward from u = 0 where F = 0
        let zero = knots.iter().position(|&k| k == 0.0).expect("0 is a knot");
        let mut values = alloc::vec![0.0; knots.len()];
        for i in zero + 1..knots.len() {
            values[i] = values[i - 1] + integral(knots[i - 1], knots[i])?;
        }
        for i in (0..zero).rev() {
            values[i] = values[i + 1] - integral(knots[i], knots[i + 1])?;
        }
        let slopes: Vec<f64> = knots.iter().map(|&u| slope(u)).collect();
        if let Some(i) = slopes.iter().position(|m| !m.is_finite() || *m <= 0.0) {
            return Err(Error::NonFinite { at: knots[i] });
        }

        // refine: split every panel whose Hermite midpoint misses the exact value
        let mut xs = Vec::with_capacity(knots.len() * 2);
        let mut ys = Vec::with_capacity(knots.len() * 2);
        let mut ms = Vec::with_capacity(knots.len() * 2);
        xs.push(knots[0]);
        ys.push(values[0]);
        ms.push(slopes[0]);
        for i in 0..knots.len() - 1 {
            let mut stack = alloc::vec![(knots[i + 1], values[i + 1], slopes[i + 1])];
            let (mut x0, mut y0, mut m0) = (knots[i], values[i], slopes[i]);
            while let Some(&(x1, y1, m1)) = stack.last() {
                let mid = 0.5 * (x0 + x1);
                let exact = y0 + integral(x0, mid)?;
                let approx = hermite(x0, x1, y0, y1, m0, m1, mid);
                if x1 - x0 > MIN_PANEL
                    && (approx - exact).abs() > cfg.table_tol * exact.abs().max(1.0)
                {
                    let mm = slope(mid);
                    if !mm.is_finite() {
                        return Err(Error::NonFinite { at: mid });
                    }
                    stack.push((mid, exact, mm));
                    continue;
                }
                stack.pop();
                xs.push(x1);
                ys.push(y1);
                ms.push(m1);
                (x0, y0, m0) = (x1, y1, m1);
            }
        }
        let f = MonotoneCubic::with_slopes(xs, ys, ms)?;

        let log_h = |u: f64| delta.gap_logit(u).ln();
        Ok(Self {
            log_h_lo: log_h(u_lo),
            log_h_hi: log_h(u_hi),
            delta,
            dim,
            f,
            u_lo,
            u_hi,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> &DiagonalSection {
        &self.delta
    }

    /// Number of knots in the `F` table.
    pub fn table_size(&self) -> usize {
        self.f.knots().len()
    }

    /// `h(r) = r − δ(r)`.
    pub fn h_at(&self, r: f64) -> f64 {
        self.delta.gap(r)
    }

    /// `log h(r)`, continued past the resolvable range as `log(c·r)` or
    /// `log(c·(1 − r))`.
    pub fn log_h(&self, r: f64) -> f64 {
        if !(r > 0.0 && r < 1.0) {
            return f64::NEG_INFINITY;
        }
        self.log_h_u(logit(r), r)
    }

    /// `F` in the logit variable, extended linearly past the table.
    pub(crate) fn f_u(&self, u: f64) -> f64 {
        if u < self.u_lo {
            let m = self.f.slopes()[0];
            self.f.values()[0] + m * (u - self.u_lo)
        } else if u > self.u_hi {
            let n = self.f.knots().len() - 1;
            self.f.values()[n] + self.f.slopes()[n] * (u - self.u_hi)
        } else {
            self.f.eval(u)
        }
    }

    /// `F(r)`, with `F(0) = −∞` and `F(1) = +∞`.
    pub fn f_at(&self, r: f64) -> f64 {
        if r <= 0.0 {
            f64::NEG_INFINITY
        } else if r >= 1.0 {
            f64::INFINITY
        } else {
            self.f_u(logit(r))
        }
    }

    /// `log h` at the point with logit `u`; linear in `u` past the
    /// resolvable range, where `h` behaves like `c·r` or `c·(1 − r)`.
    fn log_h_u(&self, u: f64, r: f64) -> f64 {
        if u < self.u_lo {
            self.log_h_lo + (u - self.u_lo)
        } else if u > self.u_hi {
            self.log_h_hi - (u - self.u_hi)
        } else {
            self.delta.gap(r).ln()
        }
    }

    /// `(log h, δ′, F)` at `r ∈ (0, 1)`.
    fn parts(&self, r: f64) -> (f64, f64, f64) {
        let u = logit(r);
        (self.log_h_u(u, r), self.delta.derivative(r), self.f_u(u))
    }

    fn log_a_from(&self, log_h: f64, slope: f64, f: f64) -> f64 {
        let d = self.dim as f64;
        ((d - slope) / d).ln() + (1.0 / d - 1.0) * log_h + f
    }

    fn log_b_from(&self, log_h: f64, slope: f64, f: f64) -> f64 {
        let d = self.dim as f64;
        (slope / d).ln() + (1.0 / d - 1.0) * log_h - (d - 1.0) * f
    }

    /// `log a(r)`; `−∞` where `δ′ = d` and outside `(0, 1)`.
    pub fn log_a(&self, r: f64) -> f64 {
        if !(r > 0.0 && r < 1.0) {
            return f64::NEG_INFINITY;
        }
        let (lh, s, f) = self.parts(r);
        self.log_a_from(lh, s, f)
    }

    /// `log b(r)`; `−∞` where `δ′ = 0` and outside `(0, 1)`.
    pub fn log_b(&self, r: f64) -> f64 {
        if !(r > 0.0 && r < 1.0) {
            return f64::NEG_INFINITY;
        }
        let (lh, s, f) = self.parts(r);
        self.log_b_from(lh, s, f)
    }

    /// `(log a(r), log b(r))` sharing one table lookup.
    pub fn log_ab(&self, r: f64) -> (f64, f64) {
        if !(r > 0.0 && r < 1.0) {
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        let (lh, s, f) = self.parts(r);
        (self.log_a_from(lh, s, f), self.log_b_from(lh, s, f))
    }

    /// `(a(r), b(r))`.
    pub fn ab_at(&self, r: f64) -> (f64, f64) {
        let (la, lb) = self.log_ab(r);
        (la.exp(), lb.exp())
    }

    pub fn a_at(&self, r: f64) -> f64 {
        self.log_a(r).exp()
    }

    pub fn b_at(&self, r: f64) -> f64 {
        self.log_b(r).exp()
    }

    /// `log A(r) = log h(r)/d + F(r)`; `A(0) = 0`. At `r = 1` the value is
    /// taken at the largest double below 1.
    pub fn log_big_a(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let r = r.min(1.0 - f64::EPSILON / 2.0);
        self.log_big_a_u(logit(r)).0
    }

    pub fn big_a(&self, r: f64) -> f64 {
        self.log_big_a(r).exp()
    }

    /// `log A` at logit `u` and its derivative with respect to `u`.
    pub(crate) fn log_big_a_u(&self, u: f64) -> (f64, f64) {
        let d = self.dim as f64;
        let f = self.f_u(u);
        if u < self.u_lo {
            let value = (self.log_h_lo + (u - self.u_lo)) / d + f;
            return (value, 1.0 / d + self.f.slopes()[0]);
        }
        if u > self.u_hi {
            let n = self.f.knots().len() - 1;
            let value = (self.log_h_hi - (u - self.u_hi)) / d + f;
            return (value, self.f.slopes()[n] - 1.0 / d);
        }
        let (s, q) = sigmoid_pair(u);
        let h = self.delta.gap_logit(u);
        let slope = self.delta.derivative(s);
        ((h.ln()) / d + f, (d - slope) / (d * h) * s * q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagonal::{make_family, FamilySpec};
    use crate::quad::integrate_with_breaks;

    fn kernel(spec: FamilySpec, d: usize) -> KernelTable {
        KernelTable::build(make_family(&spec, d).unwrap()).unwrap()
    }

    #[test]
    fn independence() {
        let k = kernel(FamilySpec::Power { alpha: 2.0 }, 2);
        assert_eq!(k.f_at(0.5), 0.0);
        assert!((k.h_at(0.5) - 0.25).abs() < 1e-16);
        assert!((k.f_at(0.8) - 0.5 * 4.0f64.ln()).abs() < 1e-11);
        for i in 1..100 {
            let r = i as f64 / 100.0;
            let (a, b) = k.ab_at(r);
            assert!(
                (a - 1.0).abs() < 1e-10 && (b - 1.0).abs() < 1e-10,
                "r={r} a={a} b={b}"
            );
            assert!((k.big_a(r) - r).abs() < 1e-10);
        }
        assert_eq!(k.big_a(0.0), 0.0);
    }

    #[test]
    fn piecewise_linear_middle_branch() {
        let k = kernel(FamilySpec::PiecewiseLinear { alpha: 0.2 }, 2);
        assert!((k.f_at(0.7) - 0.5).abs() < 1e-11);
        let (a, b) = k.ab_at(0.5);
        let want = 1.0 / (2.0 * 0.2f64.sqrt());
        assert!((a - want).abs() < 1e-10 && (b - want).abs() < 1e-10);
        // δ′ = 0 below α and δ′ = d above 1 − α
        assert_eq!(k.b_at(0.1), 0.0);
        assert_eq!(k.a_at(0.9), 0.0);
    }

    #[test]
    fn power_d_in_dimension_three() {
        let k = kernel(FamilySpec::Power { alpha: 3.0 }, 3);
        for i in 1..20 {
            let r = i as f64 / 20.0;
            let (a, b) = k.ab_at(r);
            assert!((a - 3f64.powf(1.0 / 3.0)).abs() < 1e-9, "r={r} a={a}");
            assert!((b - 3f64.powf(-2.0 / 3.0)).abs() < 1e-9, "r={r} b={b}");
        }
    }

    #[test]
    fn closed_form_primitive_matches_quadrature() {
        for (spec, d) in [
            (FamilySpec::PiecewiseLinear { alpha: 0.35 }, 2),
            (FamilySpec::Power { alpha: 1.5 }, 3),
            (FamilySpec::Fgm { theta: -0.7 }, 2),
            (FamilySpec::Gaussian { rho: 0.6 }, 2),
        ] {
            let k = kernel(spec.clone(), d);
            let breaks = k.delta().breakpoints();
            for i in 1..10 {
                let r = i as f64 / 10.0;
                let q =
                    integrate_with_breaks(|t| k.a_at(t), 0.0, r, &breaks, QuadConfig::abs(1e-10))
                        .unwrap();
                assert!(
                    (q.value - k.big_a(r)).abs() < 1e-8,
                    "{spec:?} r={r}: {} vs {}",
                    q.value,
                    k.big_a(r)
                );
            }
        }
    }

    #[test]
    fn f_is_monotone() {
        let k = kernel(FamilySpec::Gaussian { rho: -0.9 }, 2);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=5000 {
            let f = k.f_at(i as f64 / 5000.0);
            assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn rejects_interior_contact() {
        use crate::diagonal::SplicePiece;
        let piece = |lo, hi| SplicePiece {
            lo,
            hi,
            inner: FamilySpec::Power { alpha: 2.0 },
        };
        let s = make_family(
            &FamilySpec::Spliced {
                pieces: alloc::vec![piece(0.0, 0.5), piece(0.5, 1.0)],
            },
            2,
        )
        .unwrap();
        assert!(matches!(KernelTable::build(s), Err(Error::NotSimple)));
    }
}
