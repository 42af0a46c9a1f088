//! The maximum-entropy copula density and its distribution function.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::diagonal::{
    rescale, zero_set, Diagonal, DiagonalSection, IntervalDecomposition, ZERO_SET_TOL,
};
use crate::error::{Error, Result};
use crate::kernel::{KernelConfig, KernelTable};
use crate::qmc::{self, RqmcConfig};
use crate::quad::{integrate_with_breaks, QuadConfig};

/// One interval `(lo, lo + width)` of `[0, 1] ∖ Σ_δ` with the kernel of the
/// rescaled diagonal on it.
#[derive(Debug, Clone)]
pub struct Block {
    pub lo: f64,
    pub width: f64,
    pub kernel: KernelTable,
}

impl Block {
    pub fn hi(&self) -> f64 {
        self.lo + self.width
    }

    /// Block coordinate of `x`.
    #[inline]
    pub fn local(&self, x: f64) -> f64 {
        if self.lo == 0.0 && self.width == 1.0 {
            x
        } else {
            (x - self.lo) / self.width
        }
    }

    #[inline]
    pub fn global(&self, y: f64) -> f64 {
        if self.lo == 0.0 && self.width == 1.0 {
            y
        } else {
            self.lo + self.width * y
        }
    }
}

/// The maximum-entropy copula with a given diagonal section.
///
/// Inside each block `(α, β)^d` the density is
/// `Δ^{1−d} · c_j((x − α)/Δ)` with `Δ = β − α` and `c_j` the density built
/// from the rescaled diagonal; outside the blocks it vanishes.
#[derive(Debug, Clone)]
pub struct CopulaModel {
    delta: DiagonalSection,
    decomposition: IntervalDecomposition,
    blocks: Vec<Block>,
}

/// A CDF value with its error estimate (quadrature bound for `d = 2`,
/// standard error for `d ≥ 3`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfValue {
    pub value: f64,
    pub error: f64,
}

impl CopulaModel {
    pub fn build(delta: DiagonalSection) -> Result<Self> {
        Self::build_with(delta, KernelConfig::default())
    }

    pub fn build_with(delta: DiagonalSection, cfg: KernelConfig) -> Result<Self> {
        let decomposition = zero_set(&delta, cfg.contact_tol)?;
        let blocks = decomposition
            .intervals
            .iter()
            .map(|&(lo, hi)| {
                let local = rescale(&delta, (lo, hi), cfg.contact_tol.max(ZERO_SET_TOL))?;
                Ok(Block {
                    lo,
                    width: hi - lo,
                    kernel: KernelTable::build_with(local, cfg)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            delta,
            decomposition,
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.delta.dim()
    }

    pub fn delta(&self) -> &DiagonalSection {
        &self.delta
    }

    pub fn decomposition(&self) -> &IntervalDecomposition {
        &self.decomposition
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn is_spliced(&self) -> bool {
        self.blocks.len() > 1
    }

    pub fn fingerprint(&self) -> u64 {
        self.delta.fingerprint()
    }

    /// Index of the block whose open interval contains `t`.
    pub fn block_of(&self, t: f64) -> Option<usize> {
        let i = self.blocks.partition_point(|b| b.lo < t);
        let i = i.checked_sub(1)?;
        (t < self.blocks[i].hi()).then_some(i)
    }

    /// Points where the density or its first derivative may jump along a
    /// coordinate axis: block edges and the breakpoints of `δ`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = self.delta.breakpoints();
        for b in &self.blocks {
            v.push(b.lo);
            v.push(b.hi());
        }
        v.retain(|&t| t > 0.0 && t < 1.0);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// `log c(x)`; `−∞` where the density vanishes, including the boundary
    /// of the cube.
    ///
    /// The largest coordinate carries the `b` factor; among ties the one
    /// with the highest index does.
    pub fn log_density_at(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        assert_eq!(x.len(), d, "point has the wrong dimension");
        let mut m = 0;
        for (i, &xi) in x.iter().enumerate() {
            if !(xi > 0.0 && xi < 1.0) {
                return f64::NEG_INFINITY;
            }
            if xi >= x[m] {
                m = i;
            }
        }
        let Some(j) = self.block_of(x[m]) else {
            return f64::NEG_INFINITY;
        };
        let block = &self.blocks[j];
        let k = &block.kernel;
        let mut acc = k.log_b(block.local(x[m]));
        for (i, &xi) in x.iter().enumerate() {
            if acc == f64::NEG_INFINITY {
                return acc;
            }
            if i != m {
                if xi <= block.lo {
                    return f64::NEG_INFINITY;
                }
                acc += k.log_a(block.local(xi));
            }
        }
        if block.width != 1.0 {
            acc += (1.0 - d as f64) * block.width.ln();
        }
        acc
    }

    pub fn density_at(&self, x: &[f64]) -> f64 {
        self.log_density_at(x).exp()
    }

    /// `φ(t) = c(t, …, t) = b(t)·a(t)^{d−1}` (block-rescaled).
    pub fn diagonal_cross(&self, t: f64) -> f64 {
        self.log_diagonal_cross(t).exp()
    }

    pub fn log_diagonal_cross(&self, t: f64) -> f64 {
        let Some(j) = self.block_of(t) else {
            return f64::NEG_INFINITY;
        };
        let block = &self.blocks[j];
        let d = self.dim() as f64;
        let (la, lb) = block.kernel.log_ab(block.local(t));
        let v = lb + (d - 1.0) * la;
        if v == f64::NEG_INFINITY || block.width == 1.0 {
            v
        } else {
            v + (1.0 - d) * block.width.ln()
        }
    }

    /// `C(u) = P(U ≤ u)` with default settings: nested quadrature to
    /// `1e−7` for `d = 2`, RQMC otherwise.
    pub fn cdf(&self, u: &[f64]) -> Result<CdfValue> {
        if self.dim() == 2 {
            self.cdf_quadrature(u[0], u[1], 1e-7)
        } else {
            Ok(self.cdf_rqmc(u, &RqmcConfig::default()))
        }
    }

    /// Bivariate CDF by nested adaptive quadrature.
    pub fn cdf_quadrature(&self, u1: f64, u2: f64, tol: f64) -> Result<CdfValue> {
        assert_eq!(self.dim(), 2, "nested quadrature CDF is bivariate");
        let (u1, u2) = (u1.clamp(0.0, 1.0), u2.clamp(0.0, 1.0));
        if u1 == 0.0 || u2 == 0.0 {
            return Ok(CdfValue {
                value: 0.0,
                error: 0.0,
            });
        }
        let breaks = self.breakpoints();
        let mut outer_breaks = breaks.clone();
        outer_breaks.push(u2);
        let inner_cfg = QuadConfig {
            abs_tol: tol * 1e-2,
            rel_tol: 1e-12,
            max_intervals: 2000,
        };
        let mut inner_err: Result<()> = Ok(());
        let mut worst_inner = 0.0f64;
        let outer = integrate_with_breaks(
            |x| {
                let mut b = breaks.clone();
                b.push(x);
                match integrate_with_breaks(|y| self.density_at(&[x, y]), 0.0, u2, &b, inner_cfg) {
                    Ok(r) => {
                        worst_inner = worst_inner.max(r.error);
                        r.value
                    }
                    Err(e) => {
                        inner_err = Err(e);
                        0.0
                    }
                }
            },
            0.0,
            u1,
            &outer_breaks,
            QuadConfig {
                abs_tol: tol * 0.5,
                rel_tol: 1e-12,
                max_intervals: 2000,
            },
        )?;
        inner_err?;
        let error = outer.error + worst_inner * u1;
        if error > tol {
            return Err(Error::Accuracy {
                requested: tol,
                achieved: error,
            });
        }
        Ok(CdfValue {
            value: outer.value.clamp(0.0, 1.0),
            error,
        })
    }

    /// CDF by randomized QMC over the box `[0, u]`.
    pub fn cdf_rqmc(&self, u: &[f64], cfg: &RqmcConfig) -> CdfValue {
        let d = self.dim();
        assert_eq!(u.len(), d, "point has the wrong dimension");
        let vol: f64 = u.iter().map(|v| v.clamp(0.0, 1.0)).product();
        if vol == 0.0 {
            return CdfValue {
                value: 0.0,
                error: 0.0,
            };
        }
        let mut y = alloc::vec![0.0; d];
        let est = qmc::estimate(d, 1, cfg, |x, out| {
            for k in 0..d {
                y[k] = x[k] * u[k];
            }
            out[0] = self.density_at(&y);
        });
        CdfValue {
            value: est.mean[0] * vol,
            error: est.std_error[0] * vol,
        }
    }
}
