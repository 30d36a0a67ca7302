//! Noisy couplings of random walks on free and hyperbolic groups.
//!
//! The crate is organised bottom-up:
//!
//! * [`group`]: marked groups, reduced words, word metric, Gromov products.
//! * [`measures`]: finitely supported measures on Γ and Γ², the noisy
//!   coupling `π^ρ = ρ μ⊗μ + (1−ρ) μ_diag`, and seeded trajectory samplers.
//! * [`exact`]: sparse n-step convolution tables, total variation,
//!   Hahn–Jordan parts and the perturbation-tolerant separation `𝒰^s`
//!   computed by max-flow.
//! * [`stats`]: Monte Carlo estimators for escape rate, winding limit laws,
//!   the joint covariance ellipse, separation lower bounds and entropy.
//!
//! Mass-carrying types are generic over a [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision instances used throughout.

// NaN-rejecting range checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod group;
pub mod measures;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use group::{ElementPair, GroupElement, HalfInteger, Letter, MarkedGroup};
pub use scalar::Scalar;

/// Double-precision homomorphism.
pub type Hom = group::Homomorphism<f64>;
/// Double-precision measure on Γ.
pub type Measure = measures::FiniteMeasure<f64>;
/// Double-precision measure on Γ × Γ.
pub type Coupling = measures::PairMeasure<f64>;
/// Exact n-step law on Γ.
pub type Table = exact::ConvolutionTable<GroupElement, f64>;
/// Exact n-step law on Γ × Γ.
pub type PairTable = exact::ConvolutionTable<ElementPair, f64>;
/// Double-precision 2×2 covariance.
pub type Cov2 = stats::CovarianceMatrix2<f64>;

/// Single-precision measure on Γ.
pub type Measure32 = measures::FiniteMeasure<f32>;
/// Single-precision measure on Γ × Γ.
pub type Coupling32 = measures::PairMeasure<f32>;
