use serde::Serialize;

use super::{winding::ray_guard_limit, CenteredHom, CENTERING_TOLERANCE};
use crate::error::{Error, Result};
use crate::group::{GroupElement, Homomorphism};
use crate::measures::{noisy_coupling, FiniteMeasure, TrajectoryPair};
use crate::scalar::{pairwise_sum, Scalar};

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CovarianceMatrix2<T> {
    pub xx: T,
    pub xy: T,
    pub yy: T,
}

impl<T: Scalar> CovarianceMatrix2<T> {
    /// Checked constructor: entries finite and the matrix positive
    /// semi-definite up to a relative tolerance.
    pub fn new(xx: T, xy: T, yy: T) -> Result<Self> {
        let m = Self::symmetric(xx, xy, yy);
        if ![xx, xy, yy].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("covariance entries must be finite".into()));
        }
        let tol = T::mass_tolerance() * (T::one() + xx.abs() + yy.abs());
        if m.eigenvalues().0 < -tol {
            return Err(Error::InvalidArgument(format!(
                "matrix [[{xx}, {xy}], [{xy}, {yy}]] is not positive semi-definite"
            )));
        }
        Ok(m)
    }

    /// Any symmetric matrix (differences of covariances are indefinite).
    pub fn symmetric(xx: T, xy: T, yy: T) -> Self {
        Self { xx, xy, yy }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (T, T) {
        let two = T::one() + T::one();
        let mid = (self.xx + self.yy) / two;
        let half_gap = (self.xx - self.yy) / two;
        let r = half_gap.hypot(self.xy);
        (mid - r, mid + r)
    }

    /// Spectral norm `max |λ_i|`.
    pub fn operator_norm(&self) -> T {
        let (a, b) = self.eigenvalues();
        a.abs().max(b.abs())
    }

    pub fn determinant(&self) -> T {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: T) -> usize {
        let (a, b) = self.eigenvalues();
        usize::from(a > tol) + usize::from(b > tol)
    }

    pub fn scale(&self, c: T) -> Self {
        Self::symmetric(self.xx * c, self.xy * c, self.yy * c)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::symmetric(self.xx - other.xx, self.xy - other.xy, self.yy - other.yy)
    }

    /// Positive semi-definite square root (negative rounding noise in the
    /// eigenvalues is clamped to zero).
    pub fn sqrt(&self) -> Self {
        let (l1, l2) = self.eigenvalues();
        let (s1, s2) = (l1.max(T::zero()).sqrt(), l2.max(T::zero()).sqrt());
        if (l2 - l1).abs() <= T::epsilon() * (T::one() + l2.abs()) {
            return Self::symmetric(s2, T::zero(), s2);
        }
        // A = l1 P1 + l2 P2 with P2 = (A − l1 I)/(l2 − l1)
        let p2 = Self::symmetric(self.xx - l1, self.xy, self.yy - l1).scale(T::one() / (l2 - l1));
        let p1 = Self::symmetric(T::one() - p2.xx, -p2.xy, T::one() - p2.yy);
        Self::symmetric(
            s1 * p1.xx + s2 * p2.xx,
            s1 * p1.xy + s2 * p2.xy,
            s1 * p1.yy + s2 * p2.yy,
        )
    }

    /// `M·(u, v)`.
    pub fn apply(&self, u: T, v: T) -> (T, T) {
        (self.xx * u + self.xy * v, self.xy * u + self.yy * v)
    }

    pub fn as_f64(&self) -> CovarianceMatrix2<f64> {
        CovarianceMatrix2::symmetric(self.xx.as_f64(), self.xy.as_f64(), self.yy.as_f64())
    }
}

/// `Cov((φ×φ)_*π^ρ)` by summing moments over the atoms of `π^ρ`.
pub fn cov_formula<T: Scalar>(mu: &FiniteMeasure<T>, phi: &Homomorphism<T>, rho: T) -> Result<CovarianceMatrix2<T>> {
    let (mean, _) = mu.pushforward_moments(phi);
    if mean.as_f64().abs() > CENTERING_TOLERANCE {
        return Err(Error::NotCentered { mean: mean.as_f64() });
    }
    let pi = noisy_coupling(mu, rho)?;
    let mut terms = [Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for ((x, y), p) in pi.atoms() {
        let (u, v) = (phi.apply(x), phi.apply(y));
        terms[0].push(*p * u);
        terms[1].push(*p * v);
        terms[2].push(*p * u * u);
        terms[3].push(*p * u * v);
        terms[4].push(*p * v * v);
    }
    let [eu, ev, euu, euv, evv] = terms.map(|t| pairwise_sum(&t));
    CovarianceMatrix2::new(euu - eu * eu, euv - eu * ev, evv - ev * ev)
}

/// `A = λ̂⁻¹ · Cov((φ×φ)_*π^ρ)`.
pub fn joint_matrix<T: Scalar>(
    mu: &FiniteMeasure<T>,
    phi: &Homomorphism<T>,
    rho: T,
    lambda_hat: T,
) -> Result<CovarianceMatrix2<T>> {
    if !(lambda_hat > T::zero()) {
        return Err(Error::OutOfRange {
            name: "lambda_hat",
            value: lambda_hat.as_f64(),
            range: "(0, ∞)",
        });
    }
    Ok(cov_formula(mu, phi, rho)?.scale(T::one() / lambda_hat))
}

/// Empirical covariance of normalized pair winding against its prediction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipseCheck {
    pub rho: f64,
    pub t: usize,
    pub samples: usize,
    pub empirical: CovarianceMatrix2<f64>,
    pub predicted: CovarianceMatrix2<f64>,
    /// `‖empirical − predicted‖` in operator norm.
    pub discrepancy: f64,
    /// `(φ(r¹(t)), φ(r²(t)))/√t` per pair, in sample order.
    #[serde(skip)]
    pub points: Vec<(f64, f64)>,
}

/// `(φ(r¹(t)), φ(r²(t)))/√t` for one pair, rays read off its endpoints.
pub fn ellipse_point(
    pair: &TrajectoryPair,
    phi: &CenteredHom,
    lambda_hat: f64,
    t: usize,
    eps: f64,
) -> Result<(f64, f64)> {
    if t == 0 {
        return Err(Error::InvalidArgument("t must be positive".into()));
    }
    let limit = ray_guard_limit(lambda_hat, pair.horizon(), eps);
    if t as f64 > limit {
        return Err(Error::BeyondGuard { time: t, limit });
    }
    let scale = (t as f64).sqrt();
    let read = |w: &GroupElement| -> Result<f64> {
        if w.len() < t {
            return Err(Error::PrefixTooLong {
                requested: t,
                length: w.len(),
            });
        }
        Ok(phi.phi().prefix_values(w)[t] / scale)
    };
    let (w1, w2) = pair.endpoints();
    Ok((read(w1)?, read(w2)?))
}

/// Compares the sample covariance of per-pair points (see
/// [`ellipse_point`]) with `λ̂⁻¹·Cov((φ×φ)_*π^ρ)`.
pub fn ellipse_from_points(
    points: Vec<(f64, f64)>,
    phi: &CenteredHom,
    lambda_hat: f64,
    rho: f64,
    t: usize,
) -> Result<EllipseCheck> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("need at least two pairs".into()));
    }
    let predicted = joint_matrix(phi.measure(), phi.phi(), rho, lambda_hat)?;
    let empirical = sample_covariance(&points);
    Ok(EllipseCheck {
        rho,
        t,
        samples: points.len(),
        discrepancy: empirical.sub(&predicted).operator_norm(),
        empirical,
        predicted,
        points,
    })
}

/// [`ellipse_from_points`] over a slice of sampled pairs.
pub fn joint_ellipse_check(
    pairs: &[TrajectoryPair],
    phi: &CenteredHom,
    lambda_hat: f64,
    rho: f64,
    t: usize,
    eps: f64,
) -> Result<EllipseCheck> {
    let points = pairs
        .iter()
        .map(|p| ellipse_point(p, phi, lambda_hat, t, eps))
        .collect::<Result<Vec<_>>>()?;
    ellipse_from_points(points, phi, lambda_hat, rho, t)
}

/// Unbiased sample covariance of 2-vectors.
fn sample_covariance(points: &[(f64, f64)]) -> CovarianceMatrix2<f64> {
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (mx, my) = (pairwise_sum(&xs) / m, pairwise_sum(&ys) / m);
    let prod = |f: &dyn Fn(&(f64, f64)) -> f64| pairwise_sum(&points.iter().map(f).collect::<Vec<_>>()) / (m - 1.0);
    CovarianceMatrix2::symmetric(
        prod(&|p| (p.0 - mx) * (p.0 - mx)),
        prod(&|p| (p.0 - mx) * (p.1 - my)),
        prod(&|p| (p.1 - my) * (p.1 - my)),
    )
}
