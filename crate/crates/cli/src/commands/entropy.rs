//! `entropy`: `ĥ(n) = H(π^ρ_n)/n`, the `1/n` extrapolation and `ĥ_∞/λ̂`.

use anyhow::Result;
use noisewalk::stats::{estimate_entropy_capped, single_walk_entropy, EntropyEstimate, EntropyMethod};
use serde::Serialize;

use super::{family_seed, Experiment, ENTROPY_FAMILY};
use crate::config::{ConfigError, EntropyMode};
use crate::output::{num, Csv, OutputDir};

#[derive(Serialize)]
pub struct EntropyResults {
    pub n_grid: Vec<usize>,
    /// `H(μ_n)/n`, the single-walk reference.
    pub single_walk: Vec<f64>,
    pub estimates: Vec<EntropyEstimate>,
    /// `ĥ_∞` non-decreasing along the ρ list (reported, not asserted).
    pub h_inf_monotone_in_rho: bool,
}

pub fn run(exp: &Experiment, out: &mut OutputDir) -> Result<EntropyResults> {
    let cfg = &exp.config.entropy;
    let grid = cfg.n_grid.clone().unwrap_or_else(|| exp.config.n_grid.clone());
    if grid.len() < 3 {
        return Err(ConfigError(format!("entropy grid needs at least 3 points, got {}", grid.len())).into());
    }
    let rhos = cfg.rho.clone().unwrap_or_else(|| exp.config.rho.clone());
    let cap = u128::from(cfg.table_cap);
    let single = single_walk_entropy(&exp.group, &exp.mu, &grid, cap)?;

    let mut estimates = Vec::new();
    for (k, &rho) in rhos.iter().enumerate() {
        let method = match cfg.method {
            EntropyMode::Exact => EntropyMethod::Exact,
            EntropyMode::Sampled => EntropyMethod::Sampled {
                samples: cfg.samples.unwrap_or(exp.config.samples),
                master_seed: family_seed(exp.seed(), ENTROPY_FAMILY, k as u64),
            },
        };
        let lambda = Some(exp.lambda_hat()).filter(|l| *l > 0.0);
        estimates.push(estimate_entropy_capped(
            &exp.group, &exp.mu, rho, &grid, method, lambda, cap,
        )?);
    }

    let mut csv = Csv::new(&["rho", "n", "h", "std_err", "support_bound", "single_walk_h"])?;
    for e in &estimates {
        for (i, &n) in grid.iter().enumerate() {
            csv.row([
                num(e.rho),
                n.to_string(),
                num(e.h[i]),
                num(e.std_err[i]),
                num(e.support_bound[i]),
                num(single[i]),
            ])?;
        }
    }
    out.write_csv("entropy.csv", csv)?;

    let mut fit = Csv::new(&["rho", "h_inf", "c", "lambda_hat", "dimension"])?;
    for e in &estimates {
        fit.row([
            num(e.rho),
            num(e.h_inf),
            num(e.c),
            e.lambda_hat.map(num).unwrap_or_default(),
            e.dimension.map(num).unwrap_or_default(),
        ])?;
    }
    out.write_csv("entropy_fit.csv", fit)?;

    let mut by_rho: Vec<(f64, f64)> = estimates.iter().map(|e| (e.rho, e.h_inf)).collect();
    by_rho.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(EntropyResults {
        n_grid: grid,
        single_walk: single,
        h_inf_monotone_in_rho: by_rho.windows(2).all(|w| w[1].1 >= w[0].1),
        estimates,
    })
}
