//! Seeded drivers for the winding limit laws. Walk `i` is drawn from
//! substream `(master_seed, i)` and reduced to a few numbers before the next
//! one is kept, so memory stays flat in the number of walks.
//!
//! The guard `(1−ε)λ̂N` bounds ray times by the expected endpoint length;
//! a walk whose realized endpoint is shorter than `t/(1−ε)` is redrawn from
//! the same substream with twice the horizon. Increments are drawn
//! sequentially, so this extends the path rather than replacing it.

use super::covariance::{ellipse_from_points, ellipse_point, EllipseCheck};
use super::winding::{lil_window, marginal_gap, ray_guard_limit, ray_winding, Normalization};
use super::{par_indexed, CenteredHom};
use crate::error::{Error, Result};
use crate::group::MarkedGroup;
use crate::measures::{
    sample_pair_with_law, sample_trajectory, PairLaw, SeedRecord, SingleLaw, Trajectory, TrajectoryPair,
};

/// Horizon doublings tried before giving up on a short endpoint.
const MAX_EXTENSIONS: u32 = 8;

fn long_enough(len: usize, t: usize, eps: f64) -> bool {
    len as f64 * (1.0 - eps) >= t as f64
}

fn ray_walk(
    group: &MarkedGroup,
    law: &SingleLaw,
    t: usize,
    horizon: usize,
    eps: f64,
    seed: SeedRecord,
) -> Result<Trajectory> {
    let mut n = horizon;
    for _ in 0..=MAX_EXTENSIONS {
        let traj = sample_trajectory(group, law, n, seed)?;
        if long_enough(traj.endpoint().len(), t, eps) {
            return Ok(traj);
        }
        n *= 2;
    }
    Err(Error::HorizonExhausted {
        level: t as f64 / (1.0 - eps),
        horizon: n / 2,
    })
}

fn ray_pair(
    group: &MarkedGroup,
    law: &PairLaw,
    t: usize,
    horizon: usize,
    eps: f64,
    seed: SeedRecord,
) -> Result<TrajectoryPair> {
    let mut n = horizon;
    for _ in 0..=MAX_EXTENSIONS {
        let pair = sample_pair_with_law(group, law, n, seed)?;
        let (w1, w2) = pair.endpoints();
        if long_enough(w1.len(), t, eps) && long_enough(w2.len(), t, eps) {
            return Ok(pair);
        }
        n *= 2;
    }
    Err(Error::HorizonExhausted {
        level: t as f64 / (1.0 - eps),
        horizon: n / 2,
    })
}

/// Smallest horizon `N` whose ray guard admits time `t`.
pub fn ray_horizon(t: usize, lambda_hat: f64, eps: f64) -> Result<usize> {
    if !(lambda_hat > 0.0) || !lambda_hat.is_finite() {
        return Err(Error::OutOfRange {
            name: "lambda_hat",
            value: lambda_hat,
            range: "(0, ∞)",
        });
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "[0, 1)",
        });
    }
    let mut n = (t as f64 / ((1.0 - eps) * lambda_hat)).ceil().max(1.0) as usize;
    while ray_guard_limit(lambda_hat, n, eps) < t as f64 {
        n += 1;
    }
    while n > 1 && ray_guard_limit(lambda_hat, n - 1, eps) >= t as f64 {
        n -= 1;
    }
    Ok(n)
}

/// `φ(r_ξ(n))/√n` for `m` walks.
pub fn clt_samples(
    group: &MarkedGroup,
    phi: &CenteredHom,
    lambda_hat: f64,
    n: usize,
    m: usize,
    eps: f64,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let horizon = ray_horizon(n, lambda_hat, eps)?;
    let law = SingleLaw::new(phi.measure());
    let scale = (n as f64).sqrt();
    par_indexed(m, |i| {
        let traj = ray_walk(group, &law, n, horizon, eps, SeedRecord::new(master_seed, i))?;
        Ok(ray_winding(&traj, phi.phi(), &[n], lambda_hat, eps)?.values()[0] / scale)
    })
}

/// Running `(max, min)` of `φ(r_ξ(t))/√(2t ln ln t)` over `t ∈ [n0, n1]`
/// for `m` walks.
pub fn lil_extremes(
    group: &MarkedGroup,
    phi: &CenteredHom,
    lambda_hat: f64,
    window: (usize, usize),
    m: usize,
    eps: f64,
    master_seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let (n0, n1) = window;
    if n0 < 3 || n0 > n1 {
        return Err(Error::InvalidArgument(format!("bad LIL window [{n0}, {n1}]")));
    }
    let horizon = ray_horizon(n1, lambda_hat, eps)?;
    let law = SingleLaw::new(phi.measure());
    let times: Vec<usize> = (n0..=n1).collect();
    par_indexed(m, |i| {
        let traj = ray_walk(group, &law, n1, horizon, eps, SeedRecord::new(master_seed, i))?;
        let series = ray_winding(&traj, phi.phi(), &times, lambda_hat, eps)?.normalized(Normalization::Lil)?;
        lil_window(&series, n0, n1)
    })
}

/// Normalized marginal gaps, indexed `[grid point][walk]`; every grid point
/// is read off the same `m` walks.
pub fn marginal_gaps(
    group: &MarkedGroup,
    phi: &CenteredHom,
    lambda_hat: f64,
    grid: &[usize],
    m: usize,
    eps: f64,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let Some(&n_max) = grid.iter().max() else {
        return Err(Error::InvalidArgument("empty grid".into()));
    };
    let t_max = (lambda_hat * n_max as f64).floor() as usize;
    let horizon = ray_horizon(t_max, lambda_hat, eps)?.max(n_max);
    let law = SingleLaw::new(phi.measure());
    let per_walk = par_indexed(m, |i| {
        let traj = ray_walk(group, &law, t_max, horizon, eps, SeedRecord::new(master_seed, i))?;
        grid.iter()
            .map(|&n| marginal_gap(&traj, phi, lambda_hat, n, eps))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok((0..grid.len())
        .map(|k| per_walk.iter().map(|g| g[k]).collect())
        .collect())
}

/// [`EllipseCheck`] at time `t` from `pairs` walks of the `ρ`-coupling.
#[allow(clippy::too_many_arguments)]
pub fn sample_joint_ellipse(
    group: &MarkedGroup,
    phi: &CenteredHom,
    lambda_hat: f64,
    rho: f64,
    t: usize,
    pairs: usize,
    eps: f64,
    master_seed: u64,
) -> Result<EllipseCheck> {
    let horizon = ray_horizon(t, lambda_hat, eps)?;
    let law = PairLaw::noisy(phi.measure(), rho)?;
    let points = par_indexed(pairs, |i| {
        let pair = ray_pair(group, &law, t, horizon, eps, SeedRecord::new(master_seed, i))?;
        ellipse_point(&pair, phi, lambda_hat, t, eps)
    })?;
    ellipse_from_points(points, phi, lambda_hat, rho, t)
}
