//! Monte Carlo estimators and limit-law checks.
//!
//! Every estimator draws trajectory `i` from substream `(master_seed, i)`
//! and aggregates per-trajectory results in index order with pairwise
//! summation, so results do not depend on the rayon thread count.

mod covariance;
mod entropy;
mod experiments;
mod separation;
mod speed;
mod winding;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::Homomorphism;
use crate::measures::FiniteMeasure;
use crate::scalar::pairwise_sum;

pub use covariance::{
    cov_formula, ellipse_from_points, ellipse_point, joint_ellipse_check, joint_matrix, CovarianceMatrix2, EllipseCheck,
};
pub use entropy::{
    estimate_entropy, estimate_entropy_capped, fit_inverse_n, single_walk_entropy, EntropyEstimate, EntropyMethod,
};
pub use experiments::{clt_samples, lil_extremes, marginal_gaps, ray_horizon, sample_joint_ellipse};
pub use separation::{separation_lower_bound, Discriminator, SeparationLowerBound, SeparationParams, SeparationSample};
pub use speed::{estimate_speed, stopping_time, SpeedEstimate};
pub use winding::{
    clt_check, lil_scale, lil_window, marginal_gap, ray_guard_limit, ray_winding, walk_winding, Normalization,
    WindingSeries, DEFAULT_GUARD,
};

/// `|E φ_*μ|` above this is "not centered".
pub const CENTERING_TOLERANCE: f64 = 1e-9;

/// A homomorphism checked to be centered for a given measure, together
/// with `Var(φ_*μ)`.
#[derive(Clone, Debug)]
pub struct CenteredHom {
    phi: Homomorphism<f64>,
    measure: FiniteMeasure<f64>,
    mean: f64,
    variance: f64,
}

impl CenteredHom {
    pub fn new(mu: &FiniteMeasure<f64>, phi: Homomorphism<f64>) -> Result<Self> {
        let (mean, variance) = mu.pushforward_moments(&phi);
        if mean.abs() > CENTERING_TOLERANCE {
            return Err(Error::NotCentered { mean });
        }
        Ok(Self {
            phi,
            measure: mu.clone(),
            mean,
            variance,
        })
    }

    pub fn phi(&self) -> &Homomorphism<f64> {
        &self.phi
    }

    pub fn measure(&self) -> &FiniteMeasure<f64> {
        &self.measure
    }

    /// `E φ_*μ`, within tolerance of zero.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `Var(φ_*μ)`.
    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Runs `f(i)` for `i in 0..m` on the current rayon pool, results in index
/// order.
pub fn par_indexed<X, F>(m: usize, f: F) -> Result<Vec<X>>
where
    X: Send,
    F: Fn(u64) -> Result<X> + Sync + Send,
{
    (0..m as u64).into_par_iter().map(f).collect()
}

/// Sample mean and unbiased standard deviation (0 for fewer than 2 values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.len() as f64;
    let mean = pairwise_sum(values) / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, (pairwise_sum(&sq) / (m - 1.0)).sqrt())
}

/// Median; the mean of the two central values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::MarkedGroup;

    #[test]
    fn centering_guard() {
        let g = MarkedGroup::free(2).unwrap();
        let srw = FiniteMeasure::<f64>::uniform_generators(&g);
        let phi = Homomorphism::new(&g, vec![1.0, 0.0]).unwrap();
        let c = CenteredHom::new(&srw, phi.clone()).unwrap();
        assert_eq!(c.variance(), 0.5);
        let point = FiniteMeasure::point(g.parse_word("a").unwrap());
        assert!(matches!(CenteredHom::new(&point, phi), Err(Error::NotCentered { mean }) if mean == 1.0));
    }

    #[test]
    fn summaries() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let (m, sd) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn par_indexed_keeps_order() {
        let v = par_indexed(1000, |i| Ok(i * 2)).unwrap();
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i as u64));
    }
}
