//! Shape-preserving piecewise cubic Hermite interpolation.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// A monotone piecewise cubic Hermite interpolant.
///
/// Slopes either come from the Fritsch–Butland harmonic-mean rule
/// ([`MonotoneCubic::new`]) or are supplied by the caller
/// ([`MonotoneCubic::with_slopes`]); in both cases the Fritsch–Carlson
/// constraint is enforced, so monotone data gives a monotone interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

fn check_abscissae(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidTable(
            "abscissae and ordinates differ in length".into(),
        ));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidTable("need at least two knots".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidTable("non-finite knot".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTable(
            "abscissae must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// One-sided three-point endpoint slope, kept shape preserving.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

impl MonotoneCubic {
    /// Interpolant with Fritsch–Butland slopes.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_abscissae(&xs, &ys)?;
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ms = alloc::vec![0.0; n];
        if n == 2 {
            ms[0] = d[0];
            ms[1] = d[0];
        } else {
            ms[0] = end_slope(h[0], h[1], d[0], d[1]);
            ms[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
            for i in 1..n - 1 {
                let (a, b) = (d[i - 1], d[i]);
                if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
                    ms[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ms[i] = (w1 + w2) / (w1 / a + w2 / b);
                }
            }
        }
        Ok(Self::limited(xs, ys, ms))
    }

    /// Interpolant with caller-supplied slopes, limited where necessary to
    /// keep each monotone segment monotone.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, ms: Vec<f64>) -> Result<Self> {
        check_abscissae(&xs, &ys)?;
        if ms.len() != xs.len() || ms.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidTable(
                "slope vector does not match knots".into(),
            ));
        }
        Ok(Self::limited(xs, ys, ms))
    }

    fn limited(xs: Vec<f64>, ys: Vec<f64>, mut ms: Vec<f64>) -> Self {
        for i in 0..xs.len() - 1 {
            let d = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            if d == 0.0 {
                ms[i] = 0.0;
                ms[i + 1] = 0.0;
                continue;
            }
            // a slope pointing against the secant breaks monotonicity
            if ms[i] * d < 0.0 {
                ms[i] = 0.0;
            }
            if ms[i + 1] * d < 0.0 {
                ms[i + 1] = 0.0;
            }
            let a = ms[i] / d;
            let b = ms[i + 1] / d;
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                ms[i] = tau * a * d;
                ms[i + 1] = tau * b * d;
            }
        }
        Self { xs, ys, ms }
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn slopes(&self) -> &[f64] {
        &self.ms
    }

    pub fn first_x(&self) -> f64 {
        self.xs[0]
    }

    pub fn last_x(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// Index `i` of the segment `[x_i, x_{i+1}]` holding `x` (clamped).
    #[inline]
    fn segment(&self, x: f64) -> usize {
        let i = self.xs.partition_point(|&k| k <= x);
        i.saturating_sub(1).min(self.xs.len() - 2)
    }

    /// Interpolated value; constant extrapolation outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.ys[0];
        }
        let last = self.xs.len() - 1;
        if x >= self.xs[last] {
            return self.ys[last];
        }
        let i = self.segment(x);
        hermite(
            self.xs[i],
            self.xs[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.ms[i],
            self.ms[i + 1],
            x,
        )
    }

    /// Derivative of the interpolant (right derivative at knots, zero
    /// outside the knot range).
    pub fn deriv(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        if x < self.xs[0] || x > self.xs[last] {
            return 0.0;
        }
        let i = self.segment(x);
        hermite_deriv(
            self.xs[i],
            self.xs[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.ms[i],
            self.ms[i + 1],
            x,
        )
    }
}

/// Cubic Hermite interpolation on a single segment.
#[inline]
pub(crate) fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
}

#[inline]
pub(crate) fn hermite_deriv(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let d00 = 6.0 * t2 - 6.0 * t;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d01 = -6.0 * t2 + 6.0 * t;
    let d11 = 3.0 * t2 - 2.0 * t;
    (d00 * y0 + d01 * y1) / h + d10 * m0 + d11 * m1
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn reproduces_linear_data() {
        let xs = vec![0.0, 0.2, 0.5, 1.0];
        let ys = xs.clone();
        let p = MonotoneCubic::new(xs, ys).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((p.eval(x) - x).abs() < 1e-15);
            assert!((p.deriv(x) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(MonotoneCubic::new(vec![0.0, 0.5, 0.5], vec![0.0, 0.1, 0.2]).is_err());
        assert!(MonotoneCubic::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn flat_segment_stays_flat() {
        let p = MonotoneCubic::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        for i in 0..=20 {
            let x = 1.0 + i as f64 / 20.0;
            assert_eq!(p.eval(x), 1.0);
        }
    }

    #[test]
    fn exact_slopes_give_fourth_order_accuracy() {
        let n = 33;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let ms = ys.clone();
        let p = MonotoneCubic::with_slopes(xs, ys, ms).unwrap();
        let err = (0..1000)
            .map(|i| {
                let x = i as f64 / 999.0;
                (p.eval(x) - x.exp()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_interpolant(
            steps in proptest::collection::vec((0.01f64..1.0, 0.0f64..1.0), 2..12)
        ) {
            let mut xs = vec![0.0];
            let mut ys = vec![0.0];
            for (dx, dy) in &steps {
                xs.push(xs.last().unwrap() + dx);
                ys.push(ys.last().unwrap() + dy);
            }
            let p = MonotoneCubic::new(xs.clone(), ys).unwrap();
            let hi = *xs.last().unwrap();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=400 {
                let v = p.eval(hi * i as f64 / 400.0);
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
