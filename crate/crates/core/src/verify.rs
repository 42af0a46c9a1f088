//! Independent checks that a built model is a copula with the requested
//! diagonal, vanishes where every feasible density must, and that its
//! entropy aggregates correctly over blocks.
//!
//! Bivariate models are checked by nested adaptive quadrature of the
//! density. In higher dimension all marginal and diagonal integrals are
//! estimated in one randomized QMC pass and a check passes when its worst
//! error is within three standard errors (or within the requested
//! tolerance, whichever is larger).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::CopulaModel;
use crate::diagonal::Diagonal;
use crate::entropy::{aggregate_g, aggregate_j, block_entropies, entropy_closed};
use crate::error::Result;
use crate::qmc::{self, RqmcConfig, RqmcEstimate};
use crate::quad::{integrate_with_breaks, QuadConfig};

pub const CHECK_MARGINALS: &str = "marginals";
pub const CHECK_DIAGONAL: &str = "diagonal";
pub const CHECK_ZERO_SET: &str = "zero_set";
pub const CHECK_SPLICE_ENTROPY: &str = "splice_entropy";

/// Width of the QMC acceptance band in standard errors.
pub const QMC_SIGMAS: f64 = 3.0;
/// Rejection draws allowed per requested zero-set probe.
const PROBE_ATTEMPTS: usize = 1000;

const INNER: QuadConfig = QuadConfig {
    abs_tol: 1e-11,
    rel_tol: 1e-12,
    max_intervals: 2000,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub sup_error: f64,
    pub tolerance: f64,
    /// Grid points, probes or blocks examined.
    pub grid: usize,
    pub passed: bool,
    pub detail: Option<String>,
}

impl CheckEntry {
    fn new(name: &str, sup_error: f64, tolerance: f64, grid: usize) -> Self {
        Self {
            name: name.into(),
            sup_error,
            tolerance,
            grid,
            passed: sup_error <= tolerance,
            detail: None,
        }
    }

    fn failed(name: &str, tolerance: f64, grid: usize, why: String) -> Self {
        Self {
            name: name.into(),
            sup_error: f64::INFINITY,
            tolerance,
            grid,
            passed: false,
            detail: Some(why),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub entries: Vec<CheckEntry>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    /// Interior grid `r_k = k/(n + 1)`, `k = 1..=n`.
    pub grid_size: usize,
    pub tol: f64,
    pub probes: usize,
    pub seed: u64,
    pub rqmc: RqmcConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            grid_size: 21,
            tol: 1e-6,
            probes: 1000,
            seed: 0,
            rqmc: RqmcConfig::default(),
        }
    }
}

pub fn interior_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

/// `∫_0^{r_k} p` for every grid point, accumulated panel by panel.
fn cumulative<P: FnMut(f64) -> Result<f64>>(
    grid: &[f64],
    breaks: &[f64],
    mut profile: P,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &r in grid {
        let mut err = Ok(());
        let f = |x: f64| match profile(x) {
            Ok(v) => v,
            Err(e) => {
                err = Err(e);
                0.0
            }
        };
        let cfg = QuadConfig {
            abs_tol: 1e-10 * (r - prev),
            rel_tol: 1e-12,
            max_intervals: 2000,
        };
        let panel = integrate_with_breaks(f, prev, r, breaks, cfg)?;
        err?;
        acc += panel.value;
        out.push(acc);
        prev = r;
    }
    Ok(out)
}

fn inner(model: &CopulaModel, breaks: &[f64], x: f64, hi: f64, swap: bool) -> Result<f64> {
    let mut b = breaks.to_vec();
    b.push(x);
    let f = |y: f64| {
        if swap {
            model.density_at(&[y, x])
        } else {
            model.density_at(&[x, y])
        }
    };
    Ok(integrate_with_breaks(f, 0.0, hi, &b, INNER)?.value)
}

fn sup_dev(values: &[f64], targets: impl Iterator<Item = f64>) -> f64 {
    values
        .iter()
        .zip(targets)
        .map(|(v, t)| (v - t).abs())
        .fold(0.0, f64::max)
}

fn marginals_2d(model: &CopulaModel, grid: &[f64]) -> Result<f64> {
    let breaks = model.breakpoints();
    let mut sup = 0.0f64;
    for swap in [false, true] {
        let m = cumulative(grid, &breaks, |x| inner(model, &breaks, x, 1.0, swap))?;
        sup = sup.max(sup_dev(&m, grid.iter().copied()));
    }
    Ok(sup)
}

fn diagonal_2d(model: &CopulaModel, grid: &[f64]) -> Result<f64> {
    let breaks = model.breakpoints();
    // mass with max(U) in [x, x + dx]: both orientations below the diagonal
    let m = cumulative(grid, &breaks, |x| {
        Ok(inner(model, &breaks, x, x, false)? + inner(model, &breaks, x, x, true)?)
    })?;
    let delta = model.delta();
    Ok(sup_dev(&m, grid.iter().map(|&r| delta.eval(r))))
}

/// Integrand layout of the QMC pass: `d` marginal rows then the diagonal
/// row, each `grid.len()` long.
fn indicator_integrand(model: &CopulaModel, grid: &[f64], x: &[f64], out: &mut [f64]) {
    let c = model.density_at(x);
    if c == 0.0 {
        return;
    }
    let n = grid.len();
    let d = x.len();
    let mut max = 0.0f64;
    for (i, &xi) in x.iter().enumerate() {
        max = max.max(xi);
        let first = grid.partition_point(|&r| r < xi);
        for o in &mut out[i * n + first..(i + 1) * n] {
            *o += c;
        }
    }
    let first = grid.partition_point(|&r| r < max);
    for o in &mut out[d * n + first..(d + 1) * n] {
        *o += c;
    }
}

/// Per-shift means of the indicator integrals; combine with
/// [`qmc::combine`]. Exposed so callers can spread shifts over threads.
pub fn qmc_shift(model: &CopulaModel, grid: &[f64], cfg: &RqmcConfig, shift: usize) -> Vec<f64> {
    let d = model.dim();
    let mut out = alloc::vec![0.0; (d + 1) * grid.len()];
    qmc::shifted_mean(d, cfg, shift, &mut out, |x, o| {
        indicator_integrand(model, grid, x, o)
    });
    out
}

/// Turns a combined QMC estimate into the marginal and diagonal entries.
pub fn qmc_entries(
    model: &CopulaModel,
    grid: &[f64],
    est: &RqmcEstimate,
    tol: f64,
) -> [CheckEntry; 2] {
    let d = model.dim();
    let n = grid.len();
    let delta = model.delta();
    let mut sup = [0.0f64; 2];
    let mut se = [0.0f64; 2];
    for row in 0..=d {
        let which = usize::from(row == d);
        for (k, &x) in grid.iter().enumerate() {
            let target = if row == d { delta.eval(x) } else { x };
            sup[which] = sup[which].max((est.mean[row * n + k] - target).abs());
            se[which] = se[which].max(est.std_error[row * n + k]);
        }
    }
    let entry = |i: usize, name: &str| {
        let mut e = CheckEntry::new(name, sup[i], tol.max(QMC_SIGMAS * se[i]), n);
        e.detail = Some(format!(
            "rqmc, {} evaluations, max standard error {:.3e}",
            est.evaluations, se[i]
        ));
        e
    };
    [entry(0, CHECK_MARGINALS), entry(1, CHECK_DIAGONAL)]
}

fn qmc_checks(model: &CopulaModel, grid: &[f64], tol: f64, cfg: &RqmcConfig) -> [CheckEntry; 2] {
    let means: Vec<Vec<f64>> = (0..cfg.shifts)
        .map(|s| qmc_shift(model, grid, cfg, s))
        .collect();
    qmc_entries(
        model,
        grid,
        &qmc::combine(&means, cfg.points_per_shift),
        tol,
    )
}

/// `sup_{i,r} |P(U_i ≤ r) − r|` over the interior grid.
pub fn check_marginals(model: &CopulaModel, grid_size: usize, tol: f64) -> CheckEntry {
    let grid = interior_grid(grid_size);
    if model.dim() == 2 {
        match marginals_2d(model, &grid) {
            Ok(sup) => CheckEntry::new(CHECK_MARGINALS, sup, tol, grid_size),
            Err(e) => CheckEntry::failed(CHECK_MARGINALS, tol, grid_size, format!("{e}")),
        }
    } else {
        let [m, _] = qmc_checks(model, &grid, tol, &RqmcConfig::default());
        m
    }
}

/// `sup_r |P(max U ≤ r) − δ(r)|` over the interior grid.
pub fn check_diagonal(model: &CopulaModel, grid_size: usize, tol: f64) -> CheckEntry {
    let grid = interior_grid(grid_size);
    if model.dim() == 2 {
        match diagonal_2d(model, &grid) {
            Ok(sup) => CheckEntry::new(CHECK_DIAGONAL, sup, tol, grid_size),
            Err(e) => CheckEntry::failed(CHECK_DIAGONAL, tol, grid_size, format!("{e}")),
        }
    } else {
        let [_, m] = qmc_checks(model, &grid, tol, &RqmcConfig::default());
        m
    }
}

/// Whether `u` lies in the forced zero set: `δ′(max u) = 0`, or some
/// coordinate below the maximum has `δ′ = d`.
pub fn in_zero_set(model: &CopulaModel, u: &[f64]) -> bool {
    let delta = model.delta();
    let d = model.dim() as f64;
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    delta.derivative(max) == 0.0 || u.iter().any(|&x| x < max && delta.derivative(x) == d)
}

/// Draws up to `probes` uniform points of the forced zero set by rejection.
pub fn zero_set_probes(model: &CopulaModel, probes: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = Vec::new();
    let mut u = alloc::vec![0.0; d];
    for _ in 0..probes.saturating_mul(PROBE_ATTEMPTS) {
        for x in u.iter_mut() {
            *x = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        }
        if in_zero_set(model, &u) {
            found.push(u.clone());
            if found.len() == probes {
                break;
            }
        }
    }
    found
}

/// The density must vanish at every probe; passes vacuously when the zero
/// set has no interior mass to probe.
pub fn check_zero_set(model: &CopulaModel, probes: usize, seed: u64) -> CheckEntry {
    let pts = zero_set_probes(model, probes, seed);
    let sup = pts.iter().map(|p| model.density_at(p)).fold(0.0, f64::max);
    let mut e = CheckEntry::new(CHECK_ZERO_SET, sup, 0.0, pts.len());
    if pts.is_empty() {
        e.detail = Some("zero set is empty; nothing to probe".into());
    }
    e
}

/// The block aggregation identities `J = Σ Δ_j (J_j − log Δ_j)` and
/// `G = Σ Δ_j G_j`, comparing per-block values against the global ones.
pub fn check_splice_entropy(model: &CopulaModel, tol: f64) -> CheckEntry {
    let n = model.blocks().len();
    let run = || -> Result<(f64, f64, f64, f64)> {
        let global = entropy_closed(model)?;
        let blocks = block_entropies(model)?;
        Ok((
            global.j,
            aggregate_j(&blocks),
            global.g,
            aggregate_g(&blocks),
        ))
    };
    match run() {
        Ok((j, jb, g, gb)) => {
            let mut e = CheckEntry::new(
                CHECK_SPLICE_ENTROPY,
                (j - jb).abs().max((g - gb).abs()),
                tol,
                n,
            );
            e.detail = Some(format!("J = {j:.10} vs {jb:.10}; G = {g:.10} vs {gb:.10}"));
            e
        }
        Err(err) => CheckEntry::failed(CHECK_SPLICE_ENTROPY, tol, n, format!("{err}")),
    }
}

/// Every check, with one QMC pass shared by the marginal and diagonal
/// checks when `d ≥ 3`.
pub fn verify_model(model: &CopulaModel, cfg: &VerifyConfig) -> VerifyReport {
    let mut entries = Vec::new();
    if model.dim() == 2 {
        entries.push(check_marginals(model, cfg.grid_size, cfg.tol));
        entries.push(check_diagonal(model, cfg.grid_size, cfg.tol));
    } else {
        let grid = interior_grid(cfg.grid_size);
        entries.extend(qmc_checks(model, &grid, cfg.tol, &cfg.rqmc));
    }
    entries.push(check_zero_set(model, cfg.probes, cfg.seed));
    entries.push(check_splice_entropy(model, cfg.tol));
    VerifyReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagonal::{make_family, FamilySpec};

    fn model(spec: FamilySpec, d: usize) -> CopulaModel {
        CopulaModel::build(make_family(&spec, d).unwrap()).unwrap()
    }

    #[test]
    fn independence_passes_tightly() {
        let m = model(FamilySpec::Power { alpha: 2.0 }, 2);
        let e = check_marginals(&m, 9, 1e-6);
        assert!(e.passed && e.sup_error < 1e-8, "{e:?}");
        let e = check_diagonal(&m, 9, 1e-6);
        assert!(e.passed && e.sup_error < 1e-8, "{e:?}");
        let z = check_zero_set(&m, 100, 1);
        assert!(z.passed && z.grid == 0);
    }

    #[test]
    fn piecewise_linear_zero_set_probes() {
        let m = model(FamilySpec::PiecewiseLinear { alpha: 0.2 }, 2);
        assert!(in_zero_set(&m, &[0.05, 0.1]));
        assert!(in_zero_set(&m, &[0.85, 0.95]));
        assert!(!in_zero_set(&m, &[0.5, 0.6]));
        let z = check_zero_set(&m, 200, 3);
        assert_eq!(z.grid, 200);
        assert!(z.passed);
    }

    #[test]
    fn detects_a_wrong_diagonal() {
        // a model checked against a different δ must fail the diagonal check
        let m = model(FamilySpec::Fgm { theta: 0.5 }, 2);
        let other = model(FamilySpec::Fgm { theta: 0.4 }, 2);
        let grid = interior_grid(5);
        let breaks = m.breakpoints();
        let mass = cumulative(&grid, &breaks, |x| {
            Ok(inner(&m, &breaks, x, x, false)? + inner(&m, &breaks, x, x, true)?)
        })
        .unwrap();
        let dev = sup_dev(&mass, grid.iter().map(|&r| other.delta().eval(r)));
        assert!(dev > 1e-3);
    }

    #[test]
    fn qmc_pass_in_three_dimensions() {
        let m = model(FamilySpec::Power { alpha: 1.5 }, 3);
        let cfg = VerifyConfig {
            grid_size: 7,
            rqmc: RqmcConfig {
                shifts: 16,
                points_per_shift: 1 << 12,
                seed: 5,
            },
            ..VerifyConfig::default()
        };
        let r = verify_model(&m, &cfg);
        assert!(r.passed(), "{r:?}");
    }
}
