//! Exact sampling by the max/conditional factorization.
//!
//! The maximum of a point has CDF `δ`, every coordinate is equally likely to
//! be the maximum, and given the maximum `s` the other coordinates are
//! independent with CDF `A(t)/A(s)` on `[0, s]`. Both inversions run in the
//! logit variable with a safeguarded Newton iteration.
//!
//! Randomness: point `i` of a batch with seed `k` uses ChaCha8 seeded by
//! `k` on stream `i`, so any point can be generated independently of the
//! others and of how the batch is split across workers.

use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::CopulaModel;
use crate::diagonal::Diagonal;
use crate::error::{Error, Result};
use crate::logit::{logit, sigmoid_pair};
use crate::roots::solve_increasing;

/// Logit-space tolerance of both inversions (relative accuracy in `t`).
pub const INVERSION_TOL: f64 = 1e-12;

const U_FLOOR: f64 = -745.0;
const U_CEIL: f64 = 37.0;

/// `n` points in `[0, 1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub dim: usize,
    pub points: Vec<f64>,
    pub seed: u64,
    pub fingerprint: u64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }
}

/// The smallest `t` with `δ(t) ≥ v`.
pub fn delta_inverse<D: Diagonal + ?Sized>(delta: &D, v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    if v >= 1.0 {
        return 1.0;
    }
    let f = |u: f64| {
        let (s, q) = sigmoid_pair(u);
        (delta.eval(s), delta.derivative(s) * s * q)
    };
    // the bracket always holds: δ(σ(U_FLOOR)) = 0 < v and δ(σ(U_CEIL)) = 1
    match solve_increasing(f, v, U_FLOOR, U_CEIL, INVERSION_TOL) {
        Ok(u) => sigmoid_pair(u).0,
        Err(_) => f64::NAN,
    }
}

/// Uniform on `(0, 1)` from the top 53 bits.
#[inline]
fn open01(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Generator for point `index` of a batch with the given seed.
pub fn point_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Writes point `index` of the batch with `seed` into `out` (length `d`).
pub fn sample_point(model: &CopulaModel, seed: u64, index: u64, out: &mut [f64]) -> Result<()> {
    let mut rng = point_rng(seed, index);
    draw(model, &mut rng, out)
}

fn draw(model: &CopulaModel, rng: &mut ChaCha8Rng, out: &mut [f64]) -> Result<()> {
    let d = model.dim();
    let v = open01(rng);
    let s = delta_inverse(model.delta(), v);
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::NonConvergence { quantile: v });
    }
    let m = ((rng.next_u64() as u128 * d as u128) >> 64) as usize;
    let blocks = model.blocks();
    let j = model
        .block_of(s)
        .unwrap_or_else(|| blocks.partition_point(|b| b.hi() < s).min(blocks.len() - 1));
    let block = &blocks[j];
    let kernel = &block.kernel;
    let u_s = logit(
        block
            .local(s)
            .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0),
    );
    let (log_as, _) = kernel.log_big_a_u(u_s);
    let f = |u: f64| kernel.log_big_a_u(u);
    for (i, slot) in out.iter_mut().enumerate().take(d) {
        if i == m {
            *slot = s;
            continue;
        }
        let w = open01(rng);
        let target = log_as + w.ln();
        let mut lo = u_s - 1.0;
        while f(lo).0 >= target {
            lo = u_s - 2.0 * (u_s - lo);
            if lo < -1e6 {
                return Err(Error::NonConvergence { quantile: w });
            }
        }
        let u = solve_increasing(f, target, lo, u_s, INVERSION_TOL)
            .map_err(|_| Error::NonConvergence { quantile: w })?;
        *slot = block.global(sigmoid_pair(u).0).min(s);
    }
    Ok(())
}

/// Fills `out` (row-major, `range.len() × d`) with the points of the batch
/// whose indices lie in `range`.
pub fn sample_range(
    model: &CopulaModel,
    seed: u64,
    range: Range<u64>,
    out: &mut [f64],
) -> Result<()> {
    let d = model.dim();
    for (k, idx) in range.enumerate() {
        sample_point(model, seed, idx, &mut out[k * d..(k + 1) * d])?;
    }
    Ok(())
}

/// `n` points from the model; identical inputs give identical output.
pub fn sample(model: &CopulaModel, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample size must be positive".into(),
        ));
    }
    let d = model.dim();
    let mut points = alloc::vec![0.0; n * d];
    sample_range(model, seed, 0..n as u64, &mut points)?;
    Ok(SampleBatch {
        dim: d,
        points,
        seed,
        fingerprint: model.fingerprint(),
    })
}
