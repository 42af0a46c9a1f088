//! Diagonal sections: families, validation, zero sets and rescaling.
//!
//! A diagonal section of a `d`-copula is a non-decreasing `δ` on `[0, 1]`
//! with `δ(0) = 0`, `δ(1) = 1`, `δ(t) ≤ t` and Lipschitz constant `d`.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::logit::{logit, sigmoid_pair};
use crate::pchip::MonotoneCubic;
use crate::quad::{gauss10, integrate, QuadConfig};
use crate::roots::{bisect_edge, golden_min};
use crate::special::{norm_cdf, norm_pdf, norm_ppf};

/// Default contact threshold: `t` is in the contact set iff `t − δ(t) ≤ tol`.
pub const ZERO_SET_TOL: f64 = 1e-10;

/// Cells in the uniform search grid used by [`zero_set`].
const ZERO_SET_CELLS: usize = 4096;

/// Anything that behaves like a diagonal section.
///
/// [`DiagonalSection`] is the concrete implementation; the trait exists so
/// that [`validate`] and [`zero_set`] can inspect candidates that are not
/// valid sections.
pub trait Diagonal {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64) -> f64;
    /// Right derivative, clipped to `[0, d]`.
    fn derivative(&self, t: f64) -> f64;
    /// `t − δ(t)`; implementations override this when they can avoid the
    /// cancellation.
    fn gap(&self, t: f64) -> f64 {
        t - self.eval(t)
    }
    /// Points in `(0, 1)` where `δ′` may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// A diagonal given by a pair of closures. Useful for experiments and for
/// feeding candidates to [`validate`].
pub struct CustomDiagonal<F, G> {
    pub dim: usize,
    pub value: F,
    pub slope: G,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> Diagonal for CustomDiagonal<F, G> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64) -> f64 {
        (self.value)(t)
    }
    fn derivative(&self, t: f64) -> f64 {
        (self.slope)(t)
    }
}

/// Family tag of a [`DiagonalSection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    PiecewiseLinear,
    Power,
    Fgm,
    Gaussian,
    Tabulated,
    Rescaled,
    Spliced,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::PiecewiseLinear => "piecewise_linear",
            Family::Power => "power",
            Family::Fgm => "fgm",
            Family::Gaussian => "gaussian",
            Family::Tabulated => "tabulated",
            Family::Rescaled => "rescaled",
            Family::Spliced => "spliced",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters for [`make_family`].
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// `δ(t) = (t − α)` on `(α, 1 − α)`, `0` below and `2t − 1` above;
    /// `α ∈ (0, 1/2]`.
    PiecewiseLinear { alpha: f64 },
    /// `δ(t) = t^α`, `α ∈ (1, d]`.
    Power { alpha: f64 },
    /// `δ(t) = t² + θt²(1 − t)²`, `θ ∈ [−1, 1]`, `d = 2` only.
    Fgm { theta: f64 },
    /// Diagonal of the bivariate normal copula, `ρ ∈ (−1, 1)`, `d = 2` only.
    Gaussian { rho: f64 },
    /// Monotone cubic through `(t, δ(t))` knots from `(0, 0)` to `(1, 1)`.
    Tabulated { knots: Vec<(f64, f64)> },
    /// Scaled copies of other sections on consecutive sub-intervals.
    Spliced { pieces: Vec<SplicePiece> },
}

/// One block `[lo, hi]` of a spliced section, on which
/// `δ(t) = lo + (hi − lo)·δ_inner((t − lo)/(hi − lo))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplicePiece {
    pub lo: f64,
    pub hi: f64,
    pub inner: FamilySpec,
}

#[derive(Clone)]
enum Repr {
    PiecewiseLinear {
        alpha: f64,
    },
    Power {
        alpha: f64,
    },
    Fgm {
        theta: f64,
    },
    Gaussian(Arc<GaussianTable>),
    Tabulated(Arc<MonotoneCubic>),
    Rescaled {
        inner: Arc<DiagonalSection>,
        lo: f64,
        width: f64,
    },
    Spliced(Arc<[Piece]>),
}

#[derive(Clone)]
struct Piece {
    lo: f64,
    width: f64,
    inner: DiagonalSection,
}

/// A validated diagonal section in dimension `d`.
///
/// Cheap to clone: tabulated data is shared.
#[derive(Clone)]
pub struct DiagonalSection {
    dim: usize,
    repr: Repr,
}

impl fmt::Debug for DiagonalSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("DiagonalSection");
        s.field("dim", &self.dim).field("family", &self.family());
        match &self.repr {
            Repr::PiecewiseLinear { alpha } | Repr::Power { alpha } => s.field("alpha", alpha),
            Repr::Fgm { theta } => s.field("theta", theta),
            Repr::Gaussian(g) => s.field("rho", &g.rho),
            Repr::Tabulated(p) => s.field("knots", &p.knots().len()),
            Repr::Rescaled { inner, lo, width } => s
                .field("inner", inner)
                .field("lo", lo)
                .field("width", width),
            Repr::Spliced(pieces) => s.field("pieces", &pieces.len()),
        };
        s.finish()
    }
}

impl DiagonalSection {
    pub fn family(&self) -> Family {
        match self.repr {
            Repr::PiecewiseLinear { .. } => Family::PiecewiseLinear,
            Repr::Power { .. } => Family::Power,
            Repr::Fgm { .. } => Family::Fgm,
            Repr::Gaussian(_) => Family::Gaussian,
            Repr::Tabulated(_) => Family::Tabulated,
            Repr::Rescaled { .. } => Family::Rescaled,
            Repr::Spliced(_) => Family::Spliced,
        }
    }

    /// The scalar family parameter, if the family has one.
    pub fn parameter(&self) -> Option<f64> {
        match &self.repr {
            Repr::PiecewiseLinear { alpha } | Repr::Power { alpha } => Some(*alpha),
            Repr::Fgm { theta } => Some(*theta),
            Repr::Gaussian(g) => Some(g.rho),
            _ => None,
        }
    }

    /// Stable 64-bit hash of the family, parameters and dimension.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        self.hash_into(&mut h);
        h.0
    }

    fn hash_into(&self, h: &mut Fnv) {
        h.write(&[self.family() as u8]);
        h.write(&(self.dim as u64).to_le_bytes());
        match &self.repr {
            Repr::PiecewiseLinear { alpha } | Repr::Power { alpha } => h.f64(*alpha),
            Repr::Fgm { theta } => h.f64(*theta),
            Repr::Gaussian(g) => h.f64(g.rho),
            Repr::Tabulated(p) => {
                for (x, y) in p.knots().iter().zip(p.values()) {
                    h.f64(*x);
                    h.f64(*y);
                }
            }
            Repr::Rescaled { inner, lo, width } => {
                inner.hash_into(h);
                h.f64(*lo);
                h.f64(*width);
            }
            Repr::Spliced(pieces) => {
                for p in pieces.iter() {
                    h.f64(p.lo);
                    h.f64(p.width);
                    p.inner.hash_into(h);
                }
            }
        }
    }

    /// `h(σ(u))` where `σ(u) = 1/(1 + e^{−u})`, computed from `1 − σ(u)`
    /// directly in the upper half so the result is smooth in `u` even where
    /// `σ(u)` itself rounds.
    pub fn gap_logit(&self, u: f64) -> f64 {
        let (t, q) = sigmoid_pair(u);
        if u <= 0.0 || q == 0.0 {
            return self.gap(t);
        }
        match &self.repr {
            Repr::PiecewiseLinear { alpha } => q.min(*alpha).min(t),
            Repr::Power { alpha } => t * -((alpha - 1.0) * (-q).ln_1p()).exp_m1(),
            Repr::Fgm { theta } => {
                let x = t * q;
                x * (1.0 - theta * x)
            }
            Repr::Gaussian(g) => (g.upper_at(u) - q).max(0.0),
            Repr::Tabulated(p) => tabulated_gap(p, t, q),
            _ => self.gap(t),
        }
    }

    /// Smallest `t` and smallest `1 − t` at which [`Diagonal::gap`] still
    /// has close to full relative accuracy.
    ///
    /// Only rescaled sections lose accuracy: near an interior contact point
    /// `lo + t·width` stops resolving `t` once it falls below a few million
    /// ulps of `lo`. Callers extrapolate beyond these limits.
    pub fn resolution(&self) -> (f64, f64) {
        const ULPS: f64 = (1u64 << 25) as f64 * f64::EPSILON;
        match &self.repr {
            Repr::Rescaled { lo, width, .. } => (ULPS * lo / width, ULPS * (lo + width) / width),
            _ => (0.0, 0.0),
        }
    }

    fn piece_at(pieces: &[Piece], t: f64) -> &Piece {
        let i = pieces.partition_point(|p| p.lo <= t);
        &pieces[i.saturating_sub(1)]
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    fn f64(&mut self, x: f64) {
        self.write(&x.to_bits().to_le_bytes());
    }
}

impl Diagonal for DiagonalSection {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match &self.repr {
            Repr::PiecewiseLinear { alpha } => {
                if t <= *alpha {
                    0.0
                } else if t < 1.0 - alpha {
                    t - alpha
                } else {
                    2.0 * t - 1.0
                }
            }
            Repr::Power { alpha } => t.powf(*alpha),
            Repr::Fgm { theta } => {
                let x = t * (1.0 - t);
                t * t + theta * x * x
            }
            Repr::Gaussian(g) => g.eval(t),
            Repr::Tabulated(p) => p.eval(t).clamp(0.0, t),
            Repr::Rescaled { inner, lo, width } => {
                ((inner.eval(lo + t * width) - lo) / width).clamp(0.0, t)
            }
            Repr::Spliced(pieces) => {
                let p = Self::piece_at(pieces, t);
                p.lo + p.width * p.inner.eval((t - p.lo) / p.width)
            }
        }
    }

    fn gap(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        match &self.repr {
            Repr::PiecewiseLinear { alpha } => t.min(*alpha).min(1.0 - t),
            Repr::Power { alpha } => t * -((alpha - 1.0) * t.ln()).exp_m1(),
            Repr::Fgm { theta } => {
                let x = t * (1.0 - t);
                x * (1.0 - theta * x)
            }
            Repr::Gaussian(g) => g.gap(t),
            Repr::Tabulated(p) => tabulated_gap(p, t, 1.0 - t),
            Repr::Rescaled { inner, lo, width } => (inner.gap(lo + t * width) / width).max(0.0),
            Repr::Spliced(pieces) => {
                let p = Self::piece_at(pieces, t);
                p.width * p.inner.gap((t - p.lo) / p.width)
            }
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let d = self.dim as f64;
        let raw = match &self.repr {
            Repr::PiecewiseLinear { alpha } => {
                if t < *alpha {
                    0.0
                } else if t < 1.0 - alpha {
                    1.0
                } else {
                    2.0
                }
            }
            Repr::Power { alpha } => alpha * t.powf(alpha - 1.0),
            Repr::Fgm { theta } => 2.0 * t + 2.0 * theta * t * (1.0 - t) * (1.0 - 2.0 * t),
            Repr::Gaussian(g) => g.slope(t),
            Repr::Tabulated(p) => {
                // right derivative, except at the last knot
                if t >= 1.0 {
                    p.deriv(1.0 - f64::EPSILON)
                } else {
                    p.deriv(t)
                }
            }
            Repr::Rescaled { inner, lo, width } => inner.derivative(lo + t * width),
            Repr::Spliced(pieces) => {
                let p = Self::piece_at(pieces, t);
                p.inner.derivative(((t - p.lo) / p.width).min(1.0))
            }
        };
        raw.clamp(0.0, d)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.repr {
            Repr::PiecewiseLinear { alpha } => alloc::vec![*alpha, 1.0 - alpha],
            Repr::Power { .. } | Repr::Fgm { .. } | Repr::Gaussian(_) => Vec::new(),
            Repr::Tabulated(p) => p.knots().to_vec(),
            Repr::Rescaled { inner, lo, width } => inner
                .breakpoints()
                .into_iter()
                .map(|b| (b - lo) / width)
                .collect(),
            Repr::Spliced(pieces) => {
                let mut v = Vec::new();
                for p in pieces.iter() {
                    v.push(p.lo);
                    v.extend(
                        p.inner
                            .breakpoints()
                            .into_iter()
                            .map(|b| p.lo + p.width * b),
                    );
                }
                v
            }
        };
        out.retain(|&b| b > 0.0 && b < 1.0);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Gaussian diagonal, obtained by integrating `δ′(t) = 2Φ(kΦ⁻¹(t))` with
/// `k = √((1 − ρ)/(1 + ρ))` in the logit variable.
///
/// Cumulative integrals are stored from the left (`δ`) and from the right
/// (`1 − δ`) at evenly spaced logit knots, so both tails keep full relative
/// precision; values between knots add one Gauss–Legendre panel in
/// `z = Φ⁻¹(t)`, where the integrand `2Φ(kz)φ(z)` needs no quantiles.
struct GaussianTable {
    rho: f64,
    k: f64,
    u0: f64,
    step: f64,
    /// `Φ⁻¹(σ(knot))`.
    zs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

const GAUSS_U_SPAN: f64 = 40.0;
const GAUSS_TAIL: f64 = 60.0;

impl GaussianTable {
    fn new(rho: f64) -> Self {
        let k = ((1.0 - rho) / (1.0 + rho)).sqrt();
        // δ′ turns into a steep step around t = 1/2 when k is large
        let refine = (k / 2.0).ceil().max(1.0);
        let step = 0.125 / refine;
        let n = (2.0 * GAUSS_U_SPAN / step).round() as usize;
        let u0 = -GAUSS_U_SPAN;
        let knot = |i: usize| u0 + i as f64 * step;
        let cfg = QuadConfig {
            abs_tol: 1e-17,
            rel_tol: 1e-15,
            max_intervals: 200,
        };
        let panel = |f: fn(f64, f64) -> f64, a: f64, b: f64| {
            let g = |u| f(k, u);
            integrate(g, a, b, cfg)
                .map(|r| r.value)
                .unwrap_or_else(|_| gauss10(g, a, b))
        };
        let mut lower = alloc::vec![0.0; n + 1];
        let mut upper = alloc::vec![0.0; n + 1];
        lower[0] = panel(slope_density, u0 - GAUSS_TAIL, u0);
        for i in 0..n {
            lower[i + 1] = lower[i] + panel(slope_density, knot(i), knot(i + 1));
        }
        upper[n] = panel(slope_density, knot(n), knot(n) + GAUSS_TAIL);
        for i in (0..n).rev() {
            upper[i] = upper[i + 1] + panel(slope_density, knot(i), knot(i + 1));
        }
        let zs = (0..=n).map(|i| z_and_jacobian(knot(i)).0).collect();
        GaussianTable {
            rho,
            k,
            u0,
            step,
            zs,
            lower,
            upper,
        }
    }

    fn knot(&self, i: usize) -> f64 {
        self.u0 + i as f64 * self.step
    }

    /// `δ(σ(u))`.
    fn lower_at(&self, u: f64) -> f64 {
        if u < self.u0 {
            return gauss10(|x| slope_density(self.k, x), u - GAUSS_TAIL, u);
        }
        let n = self.lower.len() - 1;
        let i = (((u - self.u0) / self.step).floor() as usize).min(n);
        self.lower[i] + gauss10(|w| self.z_density(w), self.zs[i], z_and_jacobian(u).0)
    }

    /// `δ′` against `z`.
    #[inline]
    fn z_density(&self, w: f64) -> f64 {
        2.0 * norm_cdf(self.k * w) * norm_pdf(w)
    }

    /// `1 − δ(σ(u))`.
    fn upper_at(&self, u: f64) -> f64 {
        let n = self.upper.len() - 1;
        if u > self.knot(n) {
            return gauss10(|x| slope_density(self.k, x), u, u + GAUSS_TAIL);
        }
        let j = (((u - self.u0) / self.step).ceil().max(0.0) as usize).min(n);
        self.upper[j] + gauss10(|w| self.z_density(w), z_and_jacobian(u).0, self.zs[j])
    }

    fn eval(&self, t: f64) -> f64 {
        let u = logit(t);
        if t <= 0.5 {
            self.lower_at(u)
        } else {
            1.0 - self.upper_at(u)
        }
    }

    fn gap(&self, t: f64) -> f64 {
        let u = logit(t);
        let g = if t <= 0.5 {
            t - self.lower_at(u)
        } else {
            self.upper_at(u) - (1.0 - t)
        };
        g.max(0.0)
    }

    fn slope(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return if self.k > 0.0 { 0.0 } else { 1.0 };
        }
        if t >= 1.0 {
            return if self.k > 0.0 { 2.0 } else { 1.0 };
        }
        let z = if t <= 0.5 {
            norm_ppf(t)
        } else {
            -norm_ppf(1.0 - t)
        };
        2.0 * norm_cdf(self.k * z)
    }
}

/// `t − δ(t)` for a tabulated diagonal, given `q = 1 − t` exactly. On the
/// last segment the cubic is expanded around `t = 1`, so the gap keeps its
/// relative accuracy as `q → 0`.
fn tabulated_gap(p: &MonotoneCubic, t: f64, q: f64) -> f64 {
    let xs = p.knots();
    let n = xs.len();
    let x0 = xs[n - 2];
    if t < x0 {
        return (t - p.eval(t)).max(0.0);
    }
    let h = 1.0 - x0;
    let (y0, m0, m1) = (p.values()[n - 2], p.slopes()[n - 2], p.slopes()[n - 1]);
    let r = q / h;
    let g = q * (m1 * (1.0 - r) * (1.0 - r) - 1.0)
        + r * r * ((1.0 - y0) * (3.0 - 2.0 * r) - h * m0 * (1.0 - r));
    g.max(0.0)
}

/// `z = Φ⁻¹(σ(u))` and the Jacobian `σ(u)(1 − σ(u))`.
fn z_and_jacobian(u: f64) -> (f64, f64) {
    let (p, q) = sigmoid_pair(u);
    let z = if u <= 0.0 { norm_ppf(p) } else { -norm_ppf(q) };
    (z, p * q)
}

/// `δ′` in the logit variable.
fn slope_density(k: f64, u: f64) -> f64 {
    let (z, jac) = z_and_jacobian(u);
    2.0 * norm_cdf(k * z) * jac
}

fn out_of_range(what: &str, v: f64, range: &str) -> Error {
    Error::InvalidParameter(alloc::format!("{what} = {v} outside {range}"))
}

/// Builds the diagonal section described by `spec` in dimension `d`.
pub fn make_family(spec: &FamilySpec, d: usize) -> Result<DiagonalSection> {
    if d < 2 {
        return Err(Error::InvalidParameter(alloc::format!(
            "dimension {d} must be at least 2"
        )));
    }
    let df = d as f64;
    let repr = match spec {
        FamilySpec::PiecewiseLinear { alpha } => {
            if !(*alpha > 0.0 && *alpha <= 0.5) {
                return Err(out_of_range("alpha", *alpha, "(0, 1/2]"));
            }
            Repr::PiecewiseLinear { alpha: *alpha }
        }
        FamilySpec::Power { alpha } => {
            if !(*alpha > 1.0 && *alpha <= df) {
                return Err(out_of_range("alpha", *alpha, &alloc::format!("(1, {d}]")));
            }
            Repr::Power { alpha: *alpha }
        }
        FamilySpec::Fgm { theta } => {
            require_bivariate("fgm", d)?;
            if !(-1.0..=1.0).contains(theta) {
                return Err(out_of_range("theta", *theta, "[-1, 1]"));
            }
            Repr::Fgm { theta: *theta }
        }
        FamilySpec::Gaussian { rho } => {
            require_bivariate("gaussian", d)?;
            if !(*rho > -1.0 && *rho < 1.0) {
                return Err(out_of_range("rho", *rho, "(-1, 1)"));
            }
            Repr::Gaussian(Arc::new(GaussianTable::new(*rho)))
        }
        FamilySpec::Tabulated { knots } => Repr::Tabulated(Arc::new(tabulated(knots, df)?)),
        FamilySpec::Spliced { pieces } => Repr::Spliced(spliced(pieces, d)?),
    };
    Ok(DiagonalSection { dim: d, repr })
}

fn require_bivariate(name: &str, d: usize) -> Result<()> {
    if d != 2 {
        return Err(Error::InvalidParameter(alloc::format!(
            "{name} family requires d = 2, got {d}"
        )));
    }
    Ok(())
}

const KNOT_TOL: f64 = 1e-12;

fn tabulated(knots: &[(f64, f64)], d: f64) -> Result<MonotoneCubic> {
    if knots.len() < 2 {
        return Err(Error::InvalidTable("need at least two knots".into()));
    }
    let (t0, y0) = knots[0];
    let (t1, y1) = knots[knots.len() - 1];
    if t0 != 0.0 || y0 != 0.0 {
        return Err(Error::InvalidTable(alloc::format!(
            "first knot ({t0}, {y0}) is not (0, 0)"
        )));
    }
    if t1 != 1.0 || y1 != 1.0 {
        return Err(Error::InvalidTable(alloc::format!(
            "last knot ({t1}, {y1}) is not (1, 1)"
        )));
    }
    for w in knots.windows(2) {
        let ((ta, ya), (tb, yb)) = (w[0], w[1]);
        if !(tb > ta) {
            return Err(Error::InvalidTable(alloc::format!(
                "t not strictly increasing at t = {tb}"
            )));
        }
        if yb < ya {
            return Err(Error::InvalidTable(alloc::format!(
                "delta decreases at t = {tb}"
            )));
        }
        if yb - ya > d * (tb - ta) + KNOT_TOL {
            return Err(Error::InvalidTable(alloc::format!(
                "slope {} exceeds the Lipschitz bound {d} on [{ta}, {tb}]",
                (yb - ya) / (tb - ta)
            )));
        }
    }
    if let Some(&(t, y)) = knots.iter().find(|(t, y)| *y > *t + KNOT_TOL || *y < 0.0) {
        return Err(Error::InvalidTable(alloc::format!(
            "knot ({t}, {y}) is not in [0, t]"
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = knots.iter().copied().unzip();
    let p = MonotoneCubic::new(xs, ys)?;
    // keep the interpolant's slopes within the Lipschitz bound
    let ms: Vec<f64> = p.slopes().iter().map(|m| m.min(d)).collect();
    MonotoneCubic::with_slopes(p.knots().to_vec(), p.values().to_vec(), ms)
}

fn spliced(pieces: &[SplicePiece], d: usize) -> Result<Arc<[Piece]>> {
    if pieces.is_empty() {
        return Err(Error::InvalidParameter(
            "spliced section needs at least one piece".into(),
        ));
    }
    let mut out = Vec::with_capacity(pieces.len());
    let mut expect = 0.0;
    for p in pieces {
        if (p.lo - expect).abs() > KNOT_TOL || !(p.hi > p.lo) {
            return Err(Error::InvalidParameter(alloc::format!(
                "splice pieces must tile [0, 1]; got [{}, {}] after {expect}",
                p.lo,
                p.hi
            )));
        }
        let lo = if out.is_empty() { 0.0 } else { expect };
        out.push(Piece {
            lo,
            width: p.hi - lo,
            inner: make_family(&p.inner, d)?,
        });
        expect = p.hi;
    }
    if (expect - 1.0).abs() > KNOT_TOL {
        return Err(Error::InvalidParameter(alloc::format!(
            "splice pieces end at {expect}, not 1"
        )));
    }
    let last = out.len() - 1;
    out[last].width = 1.0 - out[last].lo;
    Ok(out.into())
}

/// Which of the defining conditions a grid check found violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `δ(0) = 0` and `δ(1) = 1`.
    Endpoints,
    /// `δ` non-decreasing.
    Monotone,
    /// `δ(t) ≤ t`.
    BelowIdentity,
    /// `|δ(s) − δ(t)| ≤ d|s − t|`.
    Lipschitz,
    /// `δ′(t) ∈ [0, d]`.
    DerivativeRange,
}

/// The worst offending point for one violated condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub t: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub grid_size: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Slack allowed before a grid check counts as a violation.
pub const VALIDATION_TOL: f64 = 1e-12;

/// Checks the defining conditions on a uniform grid of `grid_size ≥ 3`
/// points (smaller values are raised to 3).
pub fn validate<D: Diagonal + ?Sized>(delta: &D, grid_size: usize) -> ValidationReport {
    let n = grid_size.max(3);
    let d = delta.dim() as f64;
    let mut worst: [Option<Violation>; 5] = [None; 5];
    let mut note = |condition: Condition, t: f64, excess: f64| {
        if excess > VALIDATION_TOL {
            let slot = &mut worst[condition as usize];
            if slot.is_none_or(|v| excess > v.excess) {
                *slot = Some(Violation {
                    condition,
                    t,
                    excess,
                });
            }
        }
    };
    note(Condition::Endpoints, 0.0, delta.eval(0.0).abs());
    note(Condition::Endpoints, 1.0, (delta.eval(1.0) - 1.0).abs());
    let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| delta.eval(t)).collect();
    for i in 0..n {
        let t = ts[i];
        note(Condition::BelowIdentity, t, vs[i] - t);
        let slope = delta.derivative(t);
        note(Condition::DerivativeRange, t, (-slope).max(slope - d));
        if i + 1 < n {
            let rise = vs[i + 1] - vs[i];
            note(Condition::Monotone, t, -rise);
            note(Condition::Lipschitz, t, rise.abs() - d * (ts[i + 1] - t));
        }
    }
    ValidationReport {
        grid_size: n,
        violations: worst.into_iter().flatten().collect(),
    }
}

/// The open intervals making up `[0, 1] ∖ Σ_δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalDecomposition {
    pub intervals: Vec<(f64, f64)>,
    /// Estimated Lebesgue measure of the detected contact set.
    pub contact_measure: f64,
}

impl IntervalDecomposition {
    pub fn lengths(&self) -> Vec<f64> {
        self.intervals.iter().map(|(a, b)| b - a).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

const EDGE_TOL: f64 = 1e-12;

/// Finds `Σ_δ = {t : t − δ(t) ≤ tol}` and returns the complementary open
/// intervals.
///
/// A uniform grid (plus `δ`'s breakpoints) is scanned for contacts; runs of
/// contacts spanning a cell have their edges located by bisection and count
/// toward the contact measure, while isolated contacts are points. Between
/// grid points the Lipschitz bounds on `t − δ(t)` identify every cell that
/// could hide a contact, and those cells are searched for a minimum.
pub fn zero_set<D: Diagonal + ?Sized>(delta: &D, tol: f64) -> Result<IntervalDecomposition> {
    let d = delta.dim() as f64;
    let gap = |t: f64| delta.gap(t);
    let touches = |t: f64| gap(t) <= tol;

    let mut ts: Vec<f64> = (0..=ZERO_SET_CELLS)
        .map(|i| i as f64 / ZERO_SET_CELLS as f64)
        .collect();
    ts.extend(delta.breakpoints());
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let gs: Vec<f64> = ts
        .iter()
        .map(|&t| if t == 0.0 || t == 1.0 { 0.0 } else { gap(t) })
        .collect();
    let n = ts.len();

    // (left, right) contact segments, in order
    let mut segments: Vec<(f64, f64)> = Vec::new();
    let mut measure = 0.0;
    let mut i = 0;
    while i < n {
        if gs[i] > tol {
            // cell (i, i + 1): lower envelope from the slope bounds 1 − d ≤ g′ ≤ 1
            if i + 1 < n && gs[i + 1] > tol {
                let (a, b) = (ts[i], ts[i + 1]);
                let w = b - a;
                let x = ((gs[i] - gs[i + 1] + w) / d).clamp(0.0, w);
                let floor = gs[i] - (d - 1.0) * x;
                if floor <= tol {
                    let (m, gm) = golden_min(gap, a, b, EDGE_TOL);
                    if gm <= tol {
                        segments.push((m, m));
                    }
                }
            }
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && gs[i + 1] <= tol {
            i += 1;
        }
        let end = i;
        if start == end {
            let mut point = ts[start];
            if start > 0 && start + 1 < n {
                let (m, gm) = golden_min(gap, ts[start - 1], ts[start + 1], EDGE_TOL);
                if gm < gs[start] {
                    point = m;
                }
            }
            segments.push((point, point));
        } else {
            let left = if start == 0 {
                0.0
            } else {
                bisect_edge(touches, ts[start], ts[start - 1], EDGE_TOL)
            };
            let right = if end + 1 == n {
                1.0
            } else {
                bisect_edge(touches, ts[end], ts[end + 1], EDGE_TOL)
            };
            measure += right - left;
            segments.push((left, right));
        }
        i += 1;
    }
    if measure > 10.0 * tol {
        return Err(Error::PositiveMeasureContact { measure });
    }
    segments.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut intervals = Vec::new();
    let mut reach = 0.0;
    for (l, r) in segments {
        if l > reach {
            intervals.push((reach, l));
        }
        reach = reach.max(r);
    }
    if reach < 1.0 {
        intervals.push((reach, 1.0));
    }
    Ok(IntervalDecomposition {
        intervals,
        contact_measure: measure,
    })
}

/// The section `δʲ(s) = (δ(α + sΔ) − α)/Δ` of `δ` restricted to the block
/// `(α, β)`; both ends must be contact points within `tol`.
pub fn rescale(delta: &DiagonalSection, interval: (f64, f64), tol: f64) -> Result<DiagonalSection> {
    let (lo, hi) = interval;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "[{lo}, {hi}] is not a sub-interval of [0, 1]"
        )));
    }
    if delta.gap(lo) > tol || delta.gap(hi) > tol {
        return Err(Error::NotFixedPoint { lo, hi });
    }
    if lo == 0.0 && hi == 1.0 {
        return Ok(delta.clone());
    }
    match &delta.repr {
        Repr::Spliced(pieces) => {
            if let Some(p) = pieces
                .iter()
                .find(|p| (p.lo - lo).abs() <= EDGE_TOL && (p.lo + p.width - hi).abs() <= EDGE_TOL)
            {
                return Ok(p.inner.clone());
            }
        }
        Repr::Rescaled {
            inner,
            lo: l0,
            width: w0,
        } => {
            return Ok(DiagonalSection {
                dim: delta.dim,
                repr: Repr::Rescaled {
                    inner: inner.clone(),
                    lo: l0 + lo * w0,
                    width: (hi - lo) * w0,
                },
            });
        }
        _ => {}
    }
    Ok(DiagonalSection {
        dim: delta.dim,
        repr: Repr::Rescaled {
            inner: Arc::new(delta.clone()),
            lo,
            width: hi - lo,
        },
    })
}

/// Human-readable one-line description.
pub fn describe(delta: &DiagonalSection) -> String {
    match delta.parameter() {
        Some(p) => alloc::format!("{}({p}), d = {}", delta.family(), delta.dim),
        None => alloc::format!("{}, d = {}", delta.family(), delta.dim),
    }
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<DiagonalSection>();
    check::<Box<IntervalDecomposition>>();
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fam(spec: FamilySpec) -> DiagonalSection {
        make_family(&spec, 2).unwrap()
    }

    #[test]
    fn family_values() {
        assert_eq!(fam(FamilySpec::Power { alpha: 2.0 }).eval(0.5), 0.25);
        assert!((fam(FamilySpec::PiecewiseLinear { alpha: 0.2 }).eval(0.5) - 0.3).abs() < 1e-15);
        assert!((fam(FamilySpec::Fgm { theta: 0.5 }).eval(0.5) - 0.28125).abs() < 1e-15);
        let g = fam(FamilySpec::Gaussian { rho: 0.0 });
        assert!((g.eval(0.5) - 0.25).abs() < 1e-13);
    }

    #[test]
    fn gaussian_zero_correlation_is_square() {
        let g = fam(FamilySpec::Gaussian { rho: 0.0 });
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            assert!((g.eval(t) - t * t).abs() < 1e-10, "t={t}");
            assert!((g.gap(t) - t * (1.0 - t)).abs() < 1e-10, "t={t}");
        }
        // relative accuracy deep in the tails
        let t = 1e-8;
        assert!(((g.eval(t) - t * t) / (t * t)).abs() < 1e-9);
        let s = 1.0 - t;
        let q = 1.0 - s;
        assert!(((g.gap(s) - s * q) / q).abs() < 1e-9);
    }

    #[test]
    fn gaussian_diagonal_matches_orthant_probability() {
        // C(1/2, 1/2) = 1/4 + asin(ρ)/(2π)
        for &rho in &[-0.9, -0.5, 0.3, 0.8, 0.95] {
            let g = fam(FamilySpec::Gaussian { rho });
            let want = 0.25 + rho.asin() / (2.0 * core::f64::consts::PI);
            assert!((g.eval(0.5) - want).abs() < 1e-12, "rho={rho}");
        }
    }

    #[test]
    fn derivatives() {
        assert!((fam(FamilySpec::Power { alpha: 2.0 }).derivative(0.3) - 0.6).abs() < 1e-15);
        assert!((fam(FamilySpec::Gaussian { rho: 0.5 }).derivative(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(
            fam(FamilySpec::PiecewiseLinear { alpha: 0.2 }).derivative(0.5),
            1.0
        );
    }

    #[test]
    fn parameter_ranges() {
        assert!(make_family(&FamilySpec::PiecewiseLinear { alpha: 0.6 }, 2).is_err());
        assert!(make_family(&FamilySpec::PiecewiseLinear { alpha: 0.0 }, 2).is_err());
        assert!(make_family(&FamilySpec::Power { alpha: 3.0 }, 2).is_err());
        assert!(make_family(&FamilySpec::Power { alpha: 3.0 }, 3).is_ok());
        assert!(make_family(&FamilySpec::Power { alpha: 1.0 }, 2).is_err());
        assert!(make_family(&FamilySpec::Fgm { theta: 0.5 }, 3).is_err());
        assert!(make_family(&FamilySpec::Gaussian { rho: 1.0 }, 2).is_err());
        assert!(make_family(&FamilySpec::Power { alpha: 2.0 }, 1).is_err());
    }

    #[test]
    fn tabulated_rejects_bad_knots() {
        let bad_start = vec![(0.0, 0.1), (1.0, 1.0)];
        let steep = vec![(0.0, 0.0), (0.5, 0.0), (0.6, 0.3), (1.0, 1.0)];
        let above = vec![(0.0, 0.0), (0.5, 0.6), (1.0, 1.0)];
        let decreasing = vec![(0.0, 0.0), (0.5, 0.2), (0.6, 0.1), (1.0, 1.0)];
        for k in [bad_start, steep, above, decreasing] {
            assert!(make_family(&FamilySpec::Tabulated { knots: k }, 2).is_err());
        }
    }

    #[test]
    fn tabulated_square_is_close() {
        let knots: Vec<(f64, f64)> = (0..=64)
            .map(|i| i as f64 / 64.0)
            .map(|t| (t, t * t))
            .collect();
        let s = fam(FamilySpec::Tabulated { knots });
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!((s.eval(t) - t * t).abs() < 3e-5);
            assert!(s.eval(t) <= t);
        }
        assert!(validate(&s, 10_000).passed());
    }

    #[test]
    fn validation() {
        assert!(validate(&fam(FamilySpec::Power { alpha: 2.0 }), 1000).passed());
        assert!(validate(&fam(FamilySpec::PiecewiseLinear { alpha: 0.5 }), 1000).passed());
        let sqrt = CustomDiagonal {
            dim: 2,
            value: |t: f64| t.sqrt(),
            slope: |t: f64| 0.5 / t.sqrt(),
        };
        let r = validate(&sqrt, 1000);
        assert!(!r.passed());
        assert!(r
            .violations
            .iter()
            .any(|v| v.condition == Condition::BelowIdentity));
    }

    fn two_squares() -> DiagonalSection {
        let piece = |lo, hi| SplicePiece {
            lo,
            hi,
            inner: FamilySpec::Power { alpha: 2.0 },
        };
        fam(FamilySpec::Spliced {
            pieces: vec![piece(0.0, 0.5), piece(0.5, 1.0)],
        })
    }

    #[test]
    fn spliced_zero_set_and_rescale() {
        let s = two_squares();
        assert!((s.eval(0.25) - 0.125).abs() < 1e-15);
        assert!((s.eval(0.75) - 0.625).abs() < 1e-15);
        let z = zero_set(&s, ZERO_SET_TOL).unwrap();
        assert_eq!(z.intervals, vec![(0.0, 0.5), (0.5, 1.0)]);
        let r = rescale(&s, (0.0, 0.5), ZERO_SET_TOL).unwrap();
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert!((r.eval(t) - t * t).abs() < 1e-15);
        }
        assert!(rescale(&s, (0.0, 0.4), ZERO_SET_TOL).is_err());
    }

    #[test]
    fn generic_rescale_and_composition() {
        // δ on [0,1] built from a custom splice is rescaled generically when
        // the interval does not match a piece
        let p = fam(FamilySpec::PiecewiseLinear { alpha: 0.25 });
        let r = rescale(&p, (0.0, 1.0), ZERO_SET_TOL).unwrap();
        assert_eq!(r.fingerprint(), p.fingerprint());
        let s = two_squares();
        let outer = DiagonalSection {
            dim: 2,
            repr: Repr::Rescaled {
                inner: Arc::new(s),
                lo: 0.0,
                width: 1.0,
            },
        };
        let r = rescale(&outer, (0.5, 1.0), ZERO_SET_TOL).unwrap();
        assert_eq!(r.family(), Family::Rescaled);
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert!((r.eval(t) - t * t).abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn zero_sets_of_families() {
        for spec in [
            FamilySpec::Power { alpha: 2.0 },
            FamilySpec::PiecewiseLinear { alpha: 0.2 },
            FamilySpec::PiecewiseLinear { alpha: 0.5 },
            FamilySpec::Fgm { theta: -1.0 },
            FamilySpec::Gaussian { rho: 0.9 },
        ] {
            let z = zero_set(&fam(spec.clone()), ZERO_SET_TOL).unwrap();
            assert_eq!(z.intervals, vec![(0.0, 1.0)], "{spec:?}");
        }
    }

    #[test]
    fn hidden_contact_is_found() {
        // touches the identity at 0.3001 only, between grid points
        let c = 0.3001;
        let f = CustomDiagonal {
            dim: 2,
            value: move |t: f64| t - (t - c).abs().min(t).min(1.0 - t),
            slope: |_| 1.0,
        };
        let z = zero_set(&f, ZERO_SET_TOL).unwrap();
        assert_eq!(z.intervals.len(), 2);
        assert!((z.intervals[0].1 - c).abs() < 1e-11);
    }

    #[test]
    fn positive_measure_contact_is_rejected() {
        let f = CustomDiagonal {
            dim: 2,
            value: |t: f64| if t < 0.5 { t * t } else { t },
            slope: |_| 1.0,
        };
        assert!(matches!(
            zero_set(&f, ZERO_SET_TOL),
            Err(Error::PositiveMeasureContact { .. })
        ));
    }

    #[test]
    fn tabulated_gap_near_one() {
        let knots = vec![(0.0, 0.0), (0.3, 0.05), (0.5, 0.2), (0.8, 0.6), (1.0, 1.0)];
        let s = make_family(&FamilySpec::Tabulated { knots }, 2).unwrap();
        for t in [0.81, 0.9, 0.99] {
            assert!((s.gap(t) - (t - s.eval(t))).abs() < 1e-15);
        }
        // linear in q with slope 1 − δ′(1) once q is tiny
        let m1 = s.derivative(1.0);
        for u in [30.0, 40.0, 60.0] {
            let q = (-u).exp() / (1.0 + (-u).exp());
            let g = s.gap_logit(u);
            assert!(((g / q) - (m1 - 1.0)).abs() < 1e-6, "u={u} g/q={}", g / q);
        }
    }
}
