//! Winding `φ` along walks and along approximate geodesic rays.
//!
//! A ray toward the limit point of a walk is approximated by prefixes of
//! the reduced word of its endpoint `w_N`. Prefixes of length up to
//! `(1−ε)·λ̂·N` have stabilised with overwhelming probability, so longer
//! requests are refused.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::CenteredHom;
use crate::error::{Error, Result};
use crate::group::Homomorphism;
use crate::measures::Trajectory;

/// Default ray guard `ε`.
pub const DEFAULT_GUARD: f64 = 0.2;

/// `√(2t ln ln t)`, defined for `t ≥ 3`.
pub fn lil_scale(t: usize) -> f64 {
    let t = t as f64;
    (2.0 * t * t.ln().ln()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Divided by `√t`.
    Sqrt,
    /// Divided by `√(2t ln ln t)`.
    Lil,
}

/// Values of one trajectory at increasing times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindingSeries {
    times: Vec<usize>,
    values: Vec<f64>,
    normalization: Normalization,
}

impl WindingSeries {
    pub fn new(times: Vec<usize>, values: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidArgument("times and values differ in length".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
        if normalization == Normalization::Lil && times.first().is_some_and(|&t| t < 3) {
            return Err(Error::InvalidArgument("LIL normalization needs t ≥ 3".into()));
        }
        if normalization == Normalization::Sqrt && times.first() == Some(&0) {
            return Err(Error::InvalidArgument("√t normalization needs t ≥ 1".into()));
        }
        Ok(Self {
            times,
            values,
            normalization,
        })
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Applies a normalization to a raw series.
    pub fn normalized(&self, mode: Normalization) -> Result<Self> {
        if self.normalization != Normalization::None {
            return Err(Error::InvalidArgument("series is already normalized".into()));
        }
        let values = self
            .times
            .iter()
            .zip(&self.values)
            .map(|(&t, &v)| match mode {
                Normalization::None => v,
                Normalization::Sqrt => v / (t as f64).sqrt(),
                Normalization::Lil => v / lil_scale(t),
            })
            .collect();
        Self::new(self.times.clone(), values, mode)
    }

    /// Multiplies every value by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            normalization: self.normalization,
        }
    }
}

/// Largest ray time accepted for a walk of horizon `N`: `(1−ε)·λ̂·N`.
pub fn ray_guard_limit(lambda_hat: f64, horizon: usize, eps: f64) -> f64 {
    (1.0 - eps) * lambda_hat * horizon as f64
}

fn check_guard(t: usize, limit: f64) -> Result<()> {
    if t as f64 > limit {
        return Err(Error::BeyondGuard { time: t, limit });
    }
    Ok(())
}

/// `φ(prefix_t(w_N))` for each requested `t`: winding along the ray
/// approximant read off the endpoint.
pub fn ray_winding(
    trajectory: &Trajectory,
    phi: &Homomorphism<f64>,
    times: &[usize],
    lambda_hat: f64,
    eps: f64,
) -> Result<WindingSeries> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "[0, 1)",
        });
    }
    let limit = ray_guard_limit(lambda_hat, trajectory.horizon(), eps);
    let endpoint = trajectory.endpoint();
    let prefix = phi.prefix_values(endpoint);
    let values = times
        .iter()
        .map(|&t| {
            check_guard(t, limit)?;
            prefix.get(t).copied().ok_or(Error::PrefixTooLong {
                requested: t,
                length: endpoint.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    WindingSeries::new(times.to_vec(), values, Normalization::None)
}

/// `φ(w_t)` along the walk itself.
pub fn walk_winding(trajectory: &Trajectory, phi: &Homomorphism<f64>, times: &[usize]) -> Result<WindingSeries> {
    let path = trajectory.phi_path(phi);
    let values = times
        .iter()
        .map(|&t| {
            path.get(t)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("time {t} beyond horizon {}", trajectory.horizon())))
        })
        .collect::<Result<Vec<_>>>()?;
    WindingSeries::new(times.to_vec(), values, Normalization::None)
}

/// `|φ(r(⌊λ̂n⌋)) − φ(w_n)| / √(n ln ln n)` with `r` read off `w_N`.
pub fn marginal_gap(trajectory: &Trajectory, phi: &CenteredHom, lambda_hat: f64, n: usize, eps: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("marginal gap needs n ≥ 3, got {n}")));
    }
    if n > trajectory.horizon() {
        return Err(Error::InvalidArgument(format!(
            "n = {n} beyond horizon {}",
            trajectory.horizon()
        )));
    }
    let t = (lambda_hat * n as f64).floor() as usize;
    let ray = ray_winding(trajectory, phi.phi(), &[t], lambda_hat, eps)?.values[0];
    let walk = trajectory.phi_path(phi.phi())[n];
    let nf = n as f64;
    Ok((ray - walk).abs() / (nf * nf.ln().ln()).sqrt())
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// `N(0, κ²)`.
pub fn clt_check(samples: &[f64], kappa2: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if !(kappa2 >= 0.0) || !kappa2.is_finite() {
        return Err(Error::OutOfRange {
            name: "kappa2",
            value: kappa2,
            range: "[0, ∞)",
        });
    }
    if kappa2 == 0.0 {
        if samples.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        return Err(Error::Inconsistent(
            "κ² = 0 but the samples are not constant at 0".into(),
        ));
    }
    let normal = Normal::new(0.0, kappa2.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // ties: the empirical CDF jumps once per distinct value
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = normal.cdf(xs[i]);
        d = d.max(f - i as f64 / m).max((j + 1) as f64 / m - f);
        i = j + 1;
    }
    Ok(d)
}

/// Running maximum and minimum of an LIL-normalized series over
/// `t ∈ [n0, n_max]`.
pub fn lil_window(series: &WindingSeries, n0: usize, n_max: usize) -> Result<(f64, f64)> {
    if n0 < 3 || n0 > n_max {
        return Err(Error::InvalidArgument(format!("bad LIL window [{n0}, {n_max}]")));
    }
    if series.normalization != Normalization::Lil {
        return Err(Error::InvalidArgument("series must be LIL-normalized".into()));
    }
    let mut window = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(&t, _)| t >= n0 && t <= n_max)
        .map(|(_, &v)| v)
        .peekable();
    if window.peek().is_none() {
        return Err(Error::InvalidArgument("no series times inside the window".into()));
    }
    Ok(window.fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), v| (hi.max(v), lo.min(v))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::MarkedGroup;
    use crate::measures::{sample_trajectory, FiniteMeasure, SeedRecord, SingleLaw};
    use crate::stats::median;

    fn f2() -> MarkedGroup {
        MarkedGroup::free(2).unwrap()
    }

    fn phi_a(g: &MarkedGroup) -> Homomorphism<f64> {
        Homomorphism::new(g, vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn point_mass_ray() {
        let g = f2();
        let law = SingleLaw::new(&FiniteMeasure::<f64>::point(g.parse_word("a").unwrap()));
        let t = sample_trajectory(&g, &law, 100, SeedRecord::new(0, 0)).unwrap();
        let phi = Homomorphism::new(&g, vec![2.5, 0.0]).unwrap();
        let s = ray_winding(&t, &phi, &[1, 10, 80], 1.0, 0.2).unwrap();
        assert_eq!(s.values(), &[2.5, 25.0, 200.0]);
        assert!(matches!(
            ray_winding(&t, &phi, &[81], 1.0, 0.2),
            Err(Error::BeyondGuard { time: 81, .. })
        ));
        let zero = Homomorphism::new(&g, vec![0.0, 0.0]).unwrap();
        assert!(ray_winding(&t, &zero, &[5, 50], 1.0, 0.2)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn ray_prefixes_are_stable() {
        let g = f2();
        let law = SingleLaw::new(&FiniteMeasure::<f64>::uniform_generators(&g));
        let n = 1000;
        let accepted = ray_guard_limit(0.5, n, DEFAULT_GUARD).floor() as usize;
        let mut stable = 0;
        for i in 0..500 {
            let t = sample_trajectory(&g, &law, 2 * n, SeedRecord::new(17, i)).unwrap();
            let wn = t.position(&g, n).unwrap();
            let w2n = t.endpoint();
            if wn.len() >= accepted && wn.common_prefix_len(w2n) >= accepted {
                stable += 1;
            }
        }
        assert!(stable as f64 >= 0.99 * 500.0, "{stable}");
    }

    #[test]
    fn series_validation_and_normalization() {
        assert!(WindingSeries::new(vec![1, 1], vec![0.0, 0.0], Normalization::None).is_err());
        assert!(WindingSeries::new(vec![2, 4], vec![0.0, 0.0], Normalization::Lil).is_err());
        let s = WindingSeries::new(vec![4, 9, 16], vec![2.0, 3.0, 4.0], Normalization::None).unwrap();
        assert_eq!(s.normalized(Normalization::Sqrt).unwrap().values(), &[1.0, 1.0, 1.0]);
        assert!(s
            .normalized(Normalization::Sqrt)
            .unwrap()
            .normalized(Normalization::Lil)
            .is_err());
    }

    #[test]
    fn lil_window_examples() {
        let times: Vec<usize> = (3..=200).collect();
        let zero = WindingSeries::new(times.clone(), vec![0.0; times.len()], Normalization::Lil).unwrap();
        assert_eq!(lil_window(&zero, 3, 200).unwrap(), (0.0, 0.0));
        let vals: Vec<f64> = times.iter().map(|&t| ((t as f64) * 0.37).sin()).collect();
        let s = WindingSeries::new(times, vals, Normalization::Lil).unwrap();
        let (hi, lo) = lil_window(&s, 10, 100).unwrap();
        for c in [0.5, 3.0] {
            assert_eq!(lil_window(&s.scaled(c), 10, 100).unwrap(), (c * hi, c * lo));
        }
        assert!(lil_window(&s, 2, 100).is_err());
        assert!(lil_window(&s, 300, 400).is_err());
    }

    #[test]
    fn clt_examples() {
        assert_eq!(clt_check(&[0.0; 10], 0.0).unwrap(), 0.0);
        assert!(matches!(clt_check(&[0.0, 1.0], 0.0), Err(Error::Inconsistent(_))));
        // single sample at the median: the CDF jumps from 0 to 1 at 0
        assert!((clt_check(&[0.0], 1.0).unwrap() - 0.5).abs() < 1e-15);
        // deterministic normal quantiles give a KS distance of 1/(2m)
        let normal = Normal::new(0.0, 2.0).unwrap();
        let m = 1000;
        let q: Vec<f64> = (0..m)
            .map(|i| normal.inverse_cdf((i as f64 + 0.5) / m as f64))
            .collect();
        assert!((clt_check(&q, 4.0).unwrap() - 0.5 / m as f64).abs() < 1e-9);
    }

    #[test]
    fn clt_for_srw_winding() {
        let g = f2();
        let law = SingleLaw::new(&FiniteMeasure::<f64>::uniform_generators(&g));
        let phi = phi_a(&g);
        let n = 1024;
        let horizon = 2 * n + n / 2;
        let ks_for = |m: u64| {
            let samples: Vec<f64> = (0..m)
                .map(|i| {
                    let t = sample_trajectory(&g, &law, horizon, SeedRecord::new(5, i)).unwrap();
                    ray_winding(&t, &phi, &[n], 0.5, DEFAULT_GUARD).unwrap().values()[0] / (n as f64).sqrt()
                })
                .collect();
            clt_check(&samples, 1.0).unwrap()
        };
        let (ks1, ks2) = (ks_for(1000), ks_for(2000));
        assert!(ks1 < 1.36 / 1000f64.sqrt() + 0.01, "{ks1}");
        assert!(ks2 <= ks1 + 1.36 / 1000f64.sqrt(), "{ks2} vs {ks1}");
    }

    #[test]
    fn marginal_gap_examples() {
        let g = f2();
        let mu = FiniteMeasure::uniform_generators(&g);
        let c = CenteredHom::new(&mu, phi_a(&g)).unwrap();
        let pair = crate::measures::resampling_sampler(&g, &mu, 0.0, 800, 1, 0).unwrap();
        let a = marginal_gap(&pair.first, &c, 0.5, 400, DEFAULT_GUARD).unwrap();
        let b = marginal_gap(&pair.second, &c, 0.5, 400, DEFAULT_GUARD).unwrap();
        assert_eq!(a, b);
        assert!(marginal_gap(&pair.first, &c, 0.5, 2, DEFAULT_GUARD).is_err());

        let law = SingleLaw::new(&mu);
        let medians: Vec<f64> = [256usize, 1024, 4096]
            .iter()
            .map(|&n| {
                let gaps: Vec<f64> = (0..300)
                    .map(|i| {
                        let t = sample_trajectory(&g, &law, 2 * n, SeedRecord::new(8, i)).unwrap();
                        marginal_gap(&t, &c, 0.5, n, DEFAULT_GUARD).unwrap()
                    })
                    .collect();
                median(&gaps)
            })
            .collect();
        assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
    }
}
