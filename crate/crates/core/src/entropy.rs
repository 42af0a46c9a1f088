//! Entropy of the maximum-entropy copula and the finiteness test that
//! decides whether it exists.
//!
//! With `h = t − δ`,
//!
//! ```text
//! J(δ) = ∫ |log h|
//! G(δ) = ∫ δ′ log δ′ + (d − δ′) log(d − δ′) − d log d − (d − 1)
//! I    = (d − 1) J + G
//! ```
//!
//! `I` is the Kullback–Leibler divergence of the copula from independence.
//! A density with the prescribed diagonal exists with finite `I` exactly
//! when `J` is finite. Finiteness cannot be decided from finitely many
//! evaluations; the test used here declares `J` numerically divergent when
//! the contributions of geometrically shrinking shells next to a contact
//! point stop shrinking.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::density::CopulaModel;
use crate::diagonal::{zero_set, Diagonal, ZERO_SET_TOL};
use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::quad::{integrate, integrate_with_breaks, QuadConfig};
use crate::sampler::sample_point;

/// Quadrature settings for `J` and `G`.
pub const ENTROPY_QUAD: QuadConfig = QuadConfig {
    abs_tol: 1e-10,
    rel_tol: 1e-12,
    max_intervals: 4000,
};

/// Number of shells in the divergence test, their shrink factor, and the
/// width of the outermost shell relative to the interval.
const SHELLS: usize = 6;
const SHELL_FACTOR: f64 = 16.0;
const SHELL_START: f64 = 1.0 / 256.0;
/// Shell-to-shell ratio at or above which contributions are not shrinking.
const GROWTH_RATIO: f64 = 0.9;

/// Outcome of the feasibility test.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Why the test failed; `None` when feasible.
    pub reason: Option<String>,
    /// Measure of the contact set found by the search (`0` when it is a
    /// finite set of points).
    pub contact_measure: f64,
}

/// A Monte Carlo estimate of the entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub dim: usize,
    /// `J(δ)`, `+∞` when infeasible.
    pub j: f64,
    pub g: f64,
    /// `(d − 1)J + G`, `+∞` when infeasible.
    pub i_closed: f64,
    pub mc: Option<McEstimate>,
    pub feasible: bool,
    pub reason: Option<String>,
}

/// Per-block quantities of a spliced model, each computed on the block's
/// own rescaled diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEntropy {
    pub lo: f64,
    pub width: f64,
    pub j: f64,
    pub g: f64,
}

fn shell_sum<D: Diagonal + ?Sized>(delta: &D, a: f64, b: f64) -> f64 {
    let f = |t: f64| delta.gap(t).ln().abs();
    match integrate(f, a, b, QuadConfig::abs(1e-13)) {
        Ok(r) => r.value,
        Err(_) => f64::INFINITY,
    }
}

/// `true` when `∫|log h|` looks divergent at `edge` of an interval of
/// width `width`; `inward` is `+1` at a left edge and `−1` at a right edge.
fn diverges_at<D: Diagonal + ?Sized>(delta: &D, edge: f64, width: f64, inward: f64) -> bool {
    let mut outer = width * SHELL_START;
    let mut sums = [0.0; SHELLS];
    for s in sums.iter_mut() {
        let inner = outer / SHELL_FACTOR;
        let (x0, x1) = (edge + inward * inner, edge + inward * outer);
        *s = shell_sum(delta, x0.min(x1), x0.max(x1));
        if !s.is_finite() {
            return true;
        }
        outer = inner;
    }
    sums.windows(2).all(|w| w[1] >= GROWTH_RATIO * w[0])
}

/// Decides whether `J(δ)` is finite.
pub fn feasibility<D: Diagonal + ?Sized>(delta: &D) -> Feasibility {
    let z = match zero_set(delta, ZERO_SET_TOL) {
        Ok(z) => z,
        Err(Error::PositiveMeasureContact { measure }) => {
            return Feasibility {
                feasible: false,
                reason: Some(format!("contact set has positive measure ({measure:.3e})")),
                contact_measure: measure,
            }
        }
        Err(e) => {
            return Feasibility {
                feasible: false,
                reason: Some(format!("{e}")),
                contact_measure: f64::NAN,
            }
        }
    };
    for &(a, b) in &z.intervals {
        let w = b - a;
        for (edge, inward) in [(a, 1.0), (b, -1.0)] {
            if diverges_at(delta, edge, w, inward) {
                return Feasibility {
                    feasible: false,
                    reason: Some(format!("J numerically divergent near t = {edge}")),
                    contact_measure: z.contact_measure,
                };
            }
        }
    }
    Feasibility {
        feasible: true,
        reason: None,
        contact_measure: z.contact_measure,
    }
}

/// Contact points and slope breaks, the natural quadrature partition.
fn partition<D: Diagonal + ?Sized>(delta: &D) -> Vec<f64> {
    let mut breaks = delta.breakpoints();
    if let Ok(z) = zero_set(delta, ZERO_SET_TOL) {
        for (a, b) in z.intervals {
            breaks.push(a);
            breaks.push(b);
        }
    }
    breaks
}

/// `∫|log h|` without the feasibility test.
fn j_integral<D: Diagonal + ?Sized>(delta: &D) -> Result<f64> {
    let f = |t: f64| -delta.gap(t).max(f64::MIN_POSITIVE).ln();
    Ok(integrate_with_breaks(f, 0.0, 1.0, &partition(delta), ENTROPY_QUAD)?.value)
}

/// `J(δ) = ∫|log(t − δ(t))| dt`, or `+∞` when the feasibility test fails.
pub fn compute_j<D: Diagonal + ?Sized>(delta: &D) -> Result<f64> {
    if !feasibility(delta).feasible {
        return Ok(f64::INFINITY);
    }
    j_integral(delta)
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `G(δ)`, with `0 log 0 = 0`.
pub fn compute_g<D: Diagonal + ?Sized>(delta: &D) -> Result<f64> {
    let d = delta.dim() as f64;
    let f = |t: f64| {
        let s = delta.derivative(t).clamp(0.0, d);
        xlogx(s) + xlogx(d - s)
    };
    let r = integrate_with_breaks(f, 0.0, 1.0, &delta.breakpoints(), ENTROPY_QUAD)?;
    Ok(r.value - d * d.ln() - (d - 1.0))
}

/// `J`, `G` and `I` of any diagonal, whether or not a model can be built
/// from it.
pub fn entropy_of<D: Diagonal + ?Sized>(delta: &D) -> Result<EntropyReport> {
    let d = delta.dim();
    let feas = feasibility(delta);
    let g = compute_g(delta)?;
    let j = if feas.feasible {
        j_integral(delta)?
    } else {
        f64::INFINITY
    };
    let i_closed = if j.is_finite() {
        (d - 1) as f64 * j + g
    } else {
        f64::INFINITY
    };
    Ok(EntropyReport {
        dim: d,
        j,
        g,
        i_closed,
        mc: None,
        feasible: feas.feasible,
        reason: feas.reason,
    })
}

/// Closed-form entropy of a built model, computed on its global diagonal.
pub fn entropy_closed(model: &CopulaModel) -> Result<EntropyReport> {
    entropy_of(model.delta())
}

/// Monte Carlo estimate of `I`: the mean of `log c` over `n ≥ 1000` points
/// drawn from the model.
pub fn entropy_mc(model: &CopulaModel, n: usize, seed: u64) -> Result<McEstimate> {
    if n < 1000 {
        return Err(Error::InvalidParameter(format!(
            "entropy_mc needs n >= 1000, got {n}"
        )));
    }
    let mut x = alloc::vec![0.0; model.dim()];
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n {
        sample_point(model, seed, i as u64, &mut x)?;
        let v = model.log_density_at(&x);
        if !v.is_finite() {
            return Err(Error::NonFinite { at: x[0] });
        }
        let k = (i + 1) as f64;
        let delta = v - mean;
        mean += delta / k;
        m2 += delta * (v - mean);
    }
    let var = m2 / (n - 1) as f64;
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n as f64).sqrt(),
        n,
    })
}

/// `J` of a single block, integrated on the block's own scale.
pub fn kernel_j(kernel: &KernelTable) -> Result<f64> {
    let f = |r: f64| -kernel.log_h(r);
    let breaks = kernel.delta().breakpoints();
    Ok(integrate_with_breaks(f, 0.0, 1.0, &breaks, ENTROPY_QUAD)?.value)
}

/// `J` and `G` of every block of the model.
pub fn block_entropies(model: &CopulaModel) -> Result<Vec<BlockEntropy>> {
    model
        .blocks()
        .iter()
        .map(|b| {
            Ok(BlockEntropy {
                lo: b.lo,
                width: b.width,
                j: kernel_j(&b.kernel)?,
                g: compute_g(b.kernel.delta())?,
            })
        })
        .collect()
}

/// `Σ Δ_j (J_j − log Δ_j)`, which equals `J(δ)` for every `d`.
pub fn aggregate_j(blocks: &[BlockEntropy]) -> f64 {
    blocks.iter().map(|b| b.width * (b.j - b.width.ln())).sum()
}

/// `Σ Δ_j G_j`, which equals `G(δ)`.
pub fn aggregate_g(blocks: &[BlockEntropy]) -> f64 {
    blocks.iter().map(|b| b.width * b.g).sum()
}

/// `Σ Δ_j (I_j − (d − 1) log Δ_j)`, which equals `I(δ)`.
pub fn aggregate_i(blocks: &[BlockEntropy], dim: usize) -> f64 {
    let k = (dim - 1) as f64;
    blocks
        .iter()
        .map(|b| b.width * (k * b.j + b.g - k * b.width.ln()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagonal::{make_family, CustomDiagonal, FamilySpec, SplicePiece};

    fn fam(spec: FamilySpec, d: usize) -> crate::diagonal::DiagonalSection {
        make_family(&spec, d).unwrap()
    }

    #[test]
    fn squares_give_independence() {
        let r = entropy_of(&fam(FamilySpec::Power { alpha: 2.0 }, 2)).unwrap();
        assert!(r.feasible);
        assert!((r.j - 2.0).abs() < 1e-9, "{}", r.j);
        assert!((r.g + 2.0).abs() < 1e-9, "{}", r.g);
        assert!(r.i_closed.abs() < 1e-9);
    }

    #[test]
    fn piecewise_linear_by_regions() {
        // h = t, α, 1 − t on the three pieces; δ′ = 0, 1, 2
        let a: f64 = 0.2;
        let l2 = 2.0f64.ln();
        let j = 2.0 * (a - a * a.ln()) - (1.0 - 2.0 * a) * a.ln();
        let g = 4.0 * a * l2 - 2.0 * l2 - 1.0;
        let r = entropy_of(&fam(FamilySpec::PiecewiseLinear { alpha: a }, 2)).unwrap();
        assert!((r.j - j).abs() < 1e-9);
        assert!((r.g - g).abs() < 1e-9);
        let half = entropy_of(&fam(FamilySpec::PiecewiseLinear { alpha: 0.5 }, 2)).unwrap();
        assert!((half.i_closed - l2).abs() < 1e-9);
    }

    #[test]
    fn identity_diagonal_is_infeasible() {
        let m = CustomDiagonal {
            dim: 2,
            value: |t: f64| t,
            slope: |_| 1.0,
        };
        let f = feasibility(&m);
        assert!(!f.feasible);
        assert!(f.reason.unwrap().contains("positive measure"));
        assert_eq!(compute_j(&m).unwrap(), f64::INFINITY);
    }

    #[test]
    fn exponentially_flat_contact_diverges() {
        // h = t·exp(−1/t) near 0 makes |log h| ~ 1/t
        let m = CustomDiagonal {
            dim: 2,
            value: |t: f64| {
                if t <= 0.0 {
                    0.0
                } else {
                    t - t * (1.0 - t) * (-1.0 / t).exp()
                }
            },
            slope: |t: f64| {
                if t <= 0.0 {
                    1.0
                } else {
                    let e = (-1.0 / t).exp();
                    1.0 - e * ((1.0 - 2.0 * t) + (1.0 - t) / t)
                }
            },
        };
        assert!(!feasibility(&m).feasible);
        assert!(diverges_at(&m, 0.0, 1.0, 1.0));
        let sq = fam(FamilySpec::Power { alpha: 2.0 }, 2);
        assert!(!diverges_at(&sq, 0.0, 1.0, 1.0));
        assert!(!diverges_at(&sq, 1.0, 1.0, -1.0));
    }

    #[test]
    fn g_respects_the_envelope() {
        for (spec, d) in [
            (FamilySpec::Gaussian { rho: -0.95 }, 2),
            (FamilySpec::Gaussian { rho: 0.95 }, 2),
            (FamilySpec::Fgm { theta: -1.0 }, 2),
            (FamilySpec::Power { alpha: 1.1 }, 3),
            (FamilySpec::PiecewiseLinear { alpha: 0.1 }, 3),
        ] {
            let g = compute_g(&fam(spec.clone(), d)).unwrap();
            let df = d as f64;
            assert!(g.abs() <= df + df * df.ln(), "{spec:?} {g}");
        }
    }

    #[test]
    fn two_square_splice() {
        let sq = FamilySpec::Power { alpha: 2.0 };
        let spec = FamilySpec::Spliced {
            pieces: alloc::vec![
                SplicePiece {
                    lo: 0.0,
                    hi: 0.5,
                    inner: sq.clone()
                },
                SplicePiece {
                    lo: 0.5,
                    hi: 1.0,
                    inner: sq
                },
            ],
        };
        let model = CopulaModel::build(fam(spec, 2)).unwrap();
        let r = entropy_closed(&model).unwrap();
        let l2 = 2.0f64.ln();
        assert!((r.j - (2.0 + l2)).abs() < 1e-8, "{}", r.j);
        assert!((r.g + 2.0).abs() < 1e-8);
        assert!((r.i_closed - l2).abs() < 1e-8);
        let blocks = block_entropies(&model).unwrap();
        assert!((aggregate_j(&blocks) - r.j).abs() < 1e-8);
        assert!((aggregate_g(&blocks) - r.g).abs() < 1e-8);
        assert!((aggregate_i(&blocks, 2) - r.i_closed).abs() < 1e-8);
    }

    #[test]
    fn mc_needs_enough_points() {
        let model = CopulaModel::build(fam(FamilySpec::Power { alpha: 2.0 }, 2)).unwrap();
        assert!(entropy_mc(&model, 999, 0).is_err());
        let e = entropy_mc(&model, 1000, 0).unwrap();
        assert!(e.estimate.abs() < 1e-9 && e.std_error < 1e-9);
    }
}
