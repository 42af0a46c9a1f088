//! Parallel drivers. Work is split by point index or QMC shift, so results
//! do not depend on the number of threads.

use diagcopula_core::entropy::EntropyReport;
use diagcopula_core::entropy::{entropy_closed, McEstimate};
use diagcopula_core::error::{Error, Result};
use diagcopula_core::qmc;
use diagcopula_core::sampler::{sample_point, sample_range, SampleBatch};
use diagcopula_core::verify::{
    check_diagonal, check_marginals, check_splice_entropy, check_zero_set, interior_grid,
    qmc_entries, qmc_shift, VerifyConfig, VerifyReport,
};
use diagcopula_core::CopulaModel;
use rayon::prelude::*;

const CHUNK: usize = 1024;

/// Same output as [`diagcopula_core::sampler::sample`].
pub fn sample(model: &CopulaModel, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample size must be positive".into(),
        ));
    }
    let d = model.dim();
    let mut points = vec![0.0; n * d];
    points
        .par_chunks_mut(CHUNK * d)
        .enumerate()
        .try_for_each(|(c, out)| {
            let start = (c * CHUNK) as u64;
            sample_range(model, seed, start..start + (out.len() / d) as u64, out)
        })?;
    Ok(SampleBatch {
        dim: d,
        points,
        seed,
        fingerprint: model.fingerprint(),
    })
}

/// Same output as [`diagcopula_core::entropy::entropy_mc`].
pub fn entropy_mc(model: &CopulaModel, n: usize, seed: u64) -> Result<McEstimate> {
    if n < 1000 {
        return Err(Error::InvalidParameter(format!(
            "entropy_mc needs n >= 1000, got {n}"
        )));
    }
    let logs: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0; model.dim()],
            |x, i| {
                sample_point(model, seed, i, x)?;
                let v = model.log_density_at(x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite { at: x[0] })
                }
            },
        )
        .collect::<Result<_>>()?;
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &v) in logs.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    Ok(McEstimate {
        estimate: mean,
        std_error: (m2 / (n - 1) as f64 / n as f64).sqrt(),
        n,
    })
}

/// Closed-form report, with a Monte Carlo cross-check when `mc` is set.
pub fn entropy(model: &CopulaModel, mc: Option<(usize, u64)>) -> Result<EntropyReport> {
    let mut r = entropy_closed(model)?;
    if let Some((n, seed)) = mc {
        r.mc = Some(entropy_mc(model, n, seed)?);
    }
    Ok(r)
}

/// Density on the tensor grid `nodes × nodes` (row-major, first
/// coordinate slowest). Bivariate models only.
pub fn density_grid(model: &CopulaModel, nodes: &[f64]) -> Vec<f64> {
    assert_eq!(model.dim(), 2, "density grids are bivariate");
    nodes
        .par_iter()
        .flat_map_iter(|&x| nodes.iter().map(move |&y| model.density_at(&[x, y])))
        .collect()
}

/// Same checks as [`diagcopula_core::verify::verify_model`].
pub fn verify(model: &CopulaModel, cfg: &VerifyConfig) -> VerifyReport {
    let mut entries = if model.dim() == 2 {
        let (m, d) = rayon::join(
            || check_marginals(model, cfg.grid_size, cfg.tol),
            || check_diagonal(model, cfg.grid_size, cfg.tol),
        );
        vec![m, d]
    } else {
        let grid = interior_grid(cfg.grid_size);
        let means: Vec<Vec<f64>> = (0..cfg.rqmc.shifts)
            .into_par_iter()
            .map(|s| qmc_shift(model, &grid, &cfg.rqmc, s))
            .collect();
        let est = qmc::combine(&means, cfg.rqmc.points_per_shift);
        qmc_entries(model, &grid, &est, cfg.tol).into()
    };
    let (z, s) = rayon::join(
        || check_zero_set(model, cfg.probes, cfg.seed),
        || check_splice_entropy(model, cfg.tol),
    );
    entries.push(z);
    entries.push(s);
    VerifyReport { entries }
}
