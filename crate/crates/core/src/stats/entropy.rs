use serde::Serialize;

use super::{mean_sd, par_indexed};
use crate::error::{Error, Result};
use crate::exact::{convolve_grid, ConvolutionTable, DEFAULT_TABLE_CAP};
use crate::group::{ElementPair, MarkedGroup};
use crate::measures::{derive_master_seed, noisy_coupling, sample_pair_with_law, FiniteMeasure, PairLaw, SeedRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum EntropyMethod {
    /// `H(π^ρ_n)` summed over the exact table.
    Exact,
    /// Monte Carlo mean of `−ln π^ρ_n(W_n)` over sampled endpoints, with the
    /// probabilities looked up in the exact table.
    Sampled { samples: usize, master_seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub rho: f64,
    pub method: EntropyMethod,
    pub grid: Vec<usize>,
    /// `ĥ(n) = H(π^ρ_n)/n` per grid point.
    pub h: Vec<f64>,
    /// Standard errors of `ĥ(n)` (zero for the exact method).
    pub std_err: Vec<f64>,
    /// `ln |supp π^ρ_n| / n`, an upper bound for `ĥ(n)`.
    pub support_bound: Vec<f64>,
    /// Intercept of the least-squares fit `ĥ(n) = ĥ_∞ + c/n`.
    pub h_inf: f64,
    pub c: f64,
    pub lambda_hat: Option<f64>,
    /// `ĥ_∞ / λ̂`.
    pub dimension: Option<f64>,
}

/// Least-squares fit of `h = h_∞ + c/n`; returns `(h_∞, c)`.
pub fn fit_inverse_n(grid: &[usize], h: &[f64]) -> Result<(f64, f64)> {
    if grid.len() < 3 || grid.len() != h.len() {
        return Err(Error::InvalidArgument(format!(
            "entropy fit needs at least 3 grid points, got {}",
            grid.len()
        )));
    }
    if grid.contains(&0) {
        return Err(Error::InvalidArgument("grid points must be positive".into()));
    }
    let x: Vec<f64> = grid.iter().map(|&n| 1.0 / n as f64).collect();
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, h.iter().sum::<f64>() / k);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(h).map(|(a, b)| (a - mx) * (b - my)).sum();
    let c = sxy / sxx;
    Ok((my - c * mx, c))
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "entropy grid needs at least 3 points, got {}",
            grid.len()
        )));
    }
    if grid[0] == 0 {
        return Err(Error::InvalidArgument("grid points must be positive".into()));
    }
    Ok(())
}

/// `H(μ_n)/n` for each `n` in the grid, from exact tables.
pub fn single_walk_entropy(
    group: &MarkedGroup,
    mu: &FiniteMeasure<f64>,
    grid: &[usize],
    cap: u128,
) -> Result<Vec<f64>> {
    Ok(convolve_grid(group, mu.atoms(), grid, cap)?
        .iter()
        .map(|t| t.entropy() / t.steps() as f64)
        .collect())
}

pub fn estimate_entropy(
    group: &MarkedGroup,
    mu: &FiniteMeasure<f64>,
    rho: f64,
    grid: &[usize],
    method: EntropyMethod,
    lambda_hat: Option<f64>,
) -> Result<EntropyEstimate> {
    estimate_entropy_capped(group, mu, rho, grid, method, lambda_hat, DEFAULT_TABLE_CAP)
}

pub fn estimate_entropy_capped(
    group: &MarkedGroup,
    mu: &FiniteMeasure<f64>,
    rho: f64,
    grid: &[usize],
    method: EntropyMethod,
    lambda_hat: Option<f64>,
    cap: u128,
) -> Result<EntropyEstimate> {
    check_grid(grid)?;
    let pi = noisy_coupling(mu, rho)?;
    let tables: Vec<ConvolutionTable<ElementPair, f64>> = convolve_grid(group, pi.atoms(), grid, cap)?;
    let support_bound = tables
        .iter()
        .map(|t| (t.len() as f64).ln() / t.steps() as f64)
        .collect();
    let (h, std_err): (Vec<f64>, Vec<f64>) = match method {
        EntropyMethod::Exact => tables.iter().map(|t| (t.entropy() / t.steps() as f64, 0.0)).unzip(),
        EntropyMethod::Sampled { samples, master_seed } => {
            if samples < 2 {
                return Err(Error::InvalidArgument(
                    "sampled entropy needs at least 2 samples".into(),
                ));
            }
            let law = PairLaw::coupling(&pi);
            tables
                .iter()
                .map(|t| {
                    let n = t.steps();
                    let seed = derive_master_seed(master_seed, n as u64);
                    let logs = par_indexed(samples, |i| {
                        let pair = sample_pair_with_law(group, &law, n, SeedRecord::new(seed, i))?;
                        let (w1, w2) = pair.endpoints();
                        Ok(-t.get(&(w1.clone(), w2.clone())).ln())
                    })?;
                    let (mean, sd) = mean_sd(&logs);
                    Ok((mean / n as f64, sd / (samples as f64).sqrt() / n as f64))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip()
        }
    };
    let (h_inf, c) = fit_inverse_n(grid, &h)?;
    let dimension = match lambda_hat {
        Some(l) if l > 0.0 => Some(h_inf / l),
        Some(l) => {
            return Err(Error::OutOfRange {
                name: "lambda_hat",
                value: l,
                range: "(0, ∞)",
            })
        }
        None => None,
    };
    Ok(EntropyEstimate {
        rho,
        method,
        grid: grid.to_vec(),
        h,
        std_err,
        support_bound,
        h_inf,
        c,
        lambda_hat,
        dimension,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (MarkedGroup, FiniteMeasure<f64>) {
        let g = MarkedGroup::free(2).unwrap();
        let mu = FiniteMeasure::uniform_generators(&g);
        (g, mu)
    }

    #[test]
    fn fit_recovers_exact_model() {
        let grid = [2, 3, 5, 8];
        let h: Vec<f64> = grid.iter().map(|&n| 0.7 + 1.5 / n as f64).collect();
        let (hi, c) = fit_inverse_n(&grid, &h).unwrap();
        assert!((hi - 0.7).abs() < 1e-12 && (c - 1.5).abs() < 1e-12);
        assert!(fit_inverse_n(&[1, 2], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn rho_zero_equals_single_walk() {
        let (g, mu) = setup();
        let grid = [3, 4, 5, 6];
        let single = single_walk_entropy(&g, &mu, &grid, DEFAULT_TABLE_CAP).unwrap();
        let e0 = estimate_entropy(&g, &mu, 0.0, &grid, EntropyMethod::Exact, Some(0.5)).unwrap();
        for (a, b) in e0.h.iter().zip(&single) {
            assert!((a - b).abs() <= 1e-12);
        }
        let e1 = estimate_entropy(&g, &mu, 1.0, &grid, EntropyMethod::Exact, Some(0.5)).unwrap();
        for (a, b) in e1.h.iter().zip(&e0.h) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
        assert!((e1.h_inf / e0.h_inf - 2.0).abs() < 0.05 * 2.0);
        let e_half = estimate_entropy(&g, &mu, 0.5, &grid, EntropyMethod::Exact, None).unwrap();
        for i in 0..grid.len() {
            assert!(e0.h[i] < e_half.h[i] && e_half.h[i] < e1.h[i]);
            assert!(e_half.h[i] <= e_half.support_bound[i] + 1e-12);
            assert!(e_half.h[i] >= 0.0);
        }
        assert!(e_half.dimension.is_none());
        assert_eq!(e0.dimension, Some(e0.h_inf / 0.5));
    }

    #[test]
    fn sampled_method_agrees_with_exact() {
        let (g, mu) = setup();
        let grid = [2, 3, 4];
        let exact = estimate_entropy(&g, &mu, 0.5, &grid, EntropyMethod::Exact, None).unwrap();
        let sampled = estimate_entropy(
            &g,
            &mu,
            0.5,
            &grid,
            EntropyMethod::Sampled {
                samples: 20_000,
                master_seed: 3,
            },
            None,
        )
        .unwrap();
        for i in 0..grid.len() {
            assert!((exact.h[i] - sampled.h[i]).abs() < 4.0 * sampled.std_err[i] + 1e-9);
        }
    }

    #[test]
    fn small_grid_rejected() {
        let (g, mu) = setup();
        assert!(estimate_entropy(&g, &mu, 0.5, &[1, 2], EntropyMethod::Exact, None).is_err());
    }
}
