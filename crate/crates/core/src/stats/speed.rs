use serde::Serialize;

use super::{mean_sd, median, par_indexed, winding::lil_scale};
use crate::error::{Error, Result};
use crate::group::MarkedGroup;
use crate::measures::{sample_trajectory, FiniteMeasure, SeedRecord, SingleLaw};

/// First time the LIL normalizer is applied when estimating `σ̂`.
const SIGMA_WINDOW_START: usize = 16;

/// Escape rate estimate from `m` walks of `n` steps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedEstimate {
    /// `λ̂`, the mean of `|w_n|/n`.
    pub lambda: f64,
    /// 95% normal half-width `1.96·sd/√m`.
    pub half_width: f64,
    /// Sample standard deviation of `|w_n|/n`.
    pub sd: f64,
    /// LIL scale of `|w_t| − λ̂t`: median over walks of half the range of
    /// `(|w_t| − λ̂t)/√(2t ln ln t)` on `t ∈ [16, n]`.
    pub sigma: f64,
    pub steps: usize,
    pub trajectories: usize,
    /// Zero sample variance (e.g. a point mass).
    pub degenerate: bool,
}

pub fn estimate_speed(
    group: &MarkedGroup,
    mu: &FiniteMeasure<f64>,
    n: usize,
    m: usize,
    master_seed: u64,
) -> Result<SpeedEstimate> {
    if n < 100 || m < 10 {
        return Err(Error::InvalidArgument(format!(
            "speed estimation needs n ≥ 100 and m ≥ 10 (got n = {n}, m = {m})"
        )));
    }
    let law = SingleLaw::new(mu);
    let lengths = par_indexed(m, |i| {
        Ok(sample_trajectory(group, &law, n, SeedRecord::new(master_seed, i))?
            .lengths()
            .to_vec())
    })?;
    let rates: Vec<f64> = lengths.iter().map(|l| l[n] as f64 / n as f64).collect();
    let (lambda, sd) = mean_sd(&rates);
    let ranges: Vec<f64> = lengths
        .iter()
        .map(|l| {
            let (lo, hi) = (SIGMA_WINDOW_START..=n)
                .map(|t| (l[t] as f64 - lambda * t as f64) / lil_scale(t))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            0.5 * (hi - lo)
        })
        .collect();
    Ok(SpeedEstimate {
        lambda,
        half_width: 1.96 * sd / (m as f64).sqrt(),
        sd,
        sigma: median(&ranges),
        steps: n,
        trajectories: m,
        degenerate: sd == 0.0,
    })
}

/// `τ_n = inf{k ≥ 1 : |w_k| ≥ λn}` from the length sequence `|w_0|, |w_1|, …`.
pub fn stopping_time(lengths: &[u32], lambda: f64, n: usize) -> Result<usize> {
    let level = lambda * n as f64;
    lengths
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, &l)| l as f64 >= level)
        .map(|(k, _)| k)
        .ok_or(Error::HorizonExhausted {
            level,
            horizon: lengths.len().saturating_sub(1),
        })
}
