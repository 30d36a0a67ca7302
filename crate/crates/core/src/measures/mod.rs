//! Finitely supported probability measures on Γ and Γ × Γ.

mod sampling;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{ElementPair, GroupElement, MarkedGroup};
use crate::scalar::Scalar;

pub use sampling::{
    avalanche64, derive_master_seed, resampling_sampler, sample_pair_trajectory, sample_pair_with_law,
    sample_trajectory, PairLaw, SeedRecord, SingleLaw, Trajectory, TrajectoryPair,
};

/// Sorts, merges duplicate keys and checks positivity and unit total mass.
fn normalize_atoms<K: Ord, T: Scalar>(atoms: impl IntoIterator<Item = (K, T)>) -> Result<Vec<(K, T)>> {
    let mut merged: BTreeMap<K, T> = BTreeMap::new();
    for (k, p) in atoms {
        if !(p > T::zero()) || !p.is_finite() {
            return Err(Error::InvalidMeasure(format!(
                "atom mass {p} is not a positive finite number"
            )));
        }
        let e = merged.entry(k).or_insert_with(T::zero);
        *e = *e + p;
    }
    if merged.is_empty() {
        return Err(Error::InvalidMeasure("empty support".into()));
    }
    let out: Vec<(K, T)> = merged.into_iter().collect();
    check_unit_mass(&out)?;
    Ok(out)
}

fn check_unit_mass<K, T: Scalar>(atoms: &[(K, T)]) -> Result<()> {
    let total: T = atoms.iter().map(|a| a.1).sum();
    if (total - T::one()).abs() > T::mass_tolerance() {
        return Err(Error::InvalidMeasure(format!("masses sum to {total}, not 1")));
    }
    Ok(())
}

fn lookup<K: Ord, T: Scalar>(atoms: &[(K, T)], key: &K) -> T {
    atoms
        .binary_search_by(|(k, _)| k.cmp(key))
        .map(|i| atoms[i].1)
        .unwrap_or_else(|_| T::zero())
}

/// Probability measure on Γ with finite support; atoms in shortlex order.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMeasure<T> {
    atoms: Vec<(GroupElement, T)>,
}

impl<T: Scalar> FiniteMeasure<T> {
    /// Builds a measure, merging repeated elements. Masses must be positive
    /// and sum to one within [`Scalar::mass_tolerance`].
    pub fn new(atoms: impl IntoIterator<Item = (GroupElement, T)>) -> Result<Self> {
        Ok(Self {
            atoms: normalize_atoms(atoms)?,
        })
    }

    pub fn point(x: GroupElement) -> Self {
        Self {
            atoms: vec![(x, T::one())],
        }
    }

    /// Uniform measure on a list of distinct elements.
    pub fn uniform(elements: impl IntoIterator<Item = GroupElement>) -> Result<Self> {
        let elements: Vec<GroupElement> = elements.into_iter().collect();
        let n = T::from_usize(elements.len()).ok_or_else(|| Error::InvalidMeasure("support too large".into()))?;
        let p = T::one() / n;
        let m = Self::new(elements.into_iter().map(|e| (e, p)))?;
        if m.atoms.iter().any(|a| a.1 != p) {
            return Err(Error::InvalidMeasure("uniform support has repeated elements".into()));
        }
        Ok(m)
    }

    /// Simple random walk: uniform on the symmetric generating set.
    pub fn uniform_generators(group: &MarkedGroup) -> Self {
        Self::uniform(group.symmetric_generators()).expect("generators are distinct")
    }

    pub fn atoms(&self) -> &[(GroupElement, T)] {
        &self.atoms
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.atoms.iter().map(|a| &a.0)
    }

    pub fn support_len(&self) -> usize {
        self.atoms.len()
    }

    pub fn mass(&self, x: &GroupElement) -> T {
        lookup(&self.atoms, x)
    }

    pub fn total_mass(&self) -> T {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Checks that every atom is a canonical element of `group`.
    pub fn check_in(&self, group: &MarkedGroup) -> Result<()> {
        match self.atoms.iter().find(|(x, _)| !group.contains(x)) {
            Some((x, _)) => Err(Error::InvalidMeasure(format!(
                "atom {x:?} is not a canonical element of the group"
            ))),
            None => Ok(()),
        }
    }

    /// Mean and variance of `φ_*μ`.
    pub fn pushforward_moments(&self, phi: &crate::group::Homomorphism<T>) -> (T, T) {
        let mean: T = self.atoms.iter().map(|(x, p)| *p * phi.apply(x)).sum();
        let var: T = self
            .atoms
            .iter()
            .map(|(x, p)| {
                let d = phi.apply(x) - mean;
                *p * d * d
            })
            .sum();
        (mean, var)
    }
}

/// Probability measure on Γ × Γ with finite support; atoms ordered
/// lexicographically by shortlex coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMeasure<T> {
    atoms: Vec<(ElementPair, T)>,
}

impl<T: Scalar> PairMeasure<T> {
    pub fn new(atoms: impl IntoIterator<Item = (ElementPair, T)>) -> Result<Self> {
        Ok(Self {
            atoms: normalize_atoms(atoms)?,
        })
    }

    pub fn atoms(&self) -> &[(ElementPair, T)] {
        &self.atoms
    }

    pub fn support_len(&self) -> usize {
        self.atoms.len()
    }

    pub fn mass(&self, g: &ElementPair) -> T {
        lookup(&self.atoms, g)
    }

    pub fn total_mass(&self) -> T {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn first_marginal(&self) -> FiniteMeasure<T> {
        self.marginal(|p| &p.0)
    }

    pub fn second_marginal(&self) -> FiniteMeasure<T> {
        self.marginal(|p| &p.1)
    }

    fn marginal(&self, coord: impl Fn(&ElementPair) -> &GroupElement) -> FiniteMeasure<T> {
        let mut m: BTreeMap<GroupElement, T> = BTreeMap::new();
        for (g, p) in &self.atoms {
            let e = m.entry(coord(g).clone()).or_insert_with(T::zero);
            *e = *e + *p;
        }
        FiniteMeasure {
            atoms: m.into_iter().collect(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.atoms.iter().all(|((x, y), _)| x == y)
    }
}

/// `μ_diag((γ, γ)) = μ(γ)`.
pub fn diag_measure<T: Scalar>(mu: &FiniteMeasure<T>) -> PairMeasure<T> {
    PairMeasure {
        atoms: mu.atoms.iter().map(|(x, p)| ((x.clone(), x.clone()), *p)).collect(),
    }
}

/// Product measure `μ ⊗ ν`.
pub fn product_measure<T: Scalar>(mu: &FiniteMeasure<T>, nu: &FiniteMeasure<T>) -> PairMeasure<T> {
    let mut atoms = Vec::with_capacity(mu.atoms.len() * nu.atoms.len());
    for (x, p) in &mu.atoms {
        for (y, q) in &nu.atoms {
            atoms.push(((x.clone(), y.clone()), *p * *q));
        }
    }
    PairMeasure { atoms }
}

/// The noisy coupling `π^ρ = ρ μ⊗μ + (1−ρ) μ_diag`.
///
/// Diagonal atoms carry `ρμ(g)² + (1−ρ)μ(g)`, off-diagonal atoms `ρμ(g)μ(h)`;
/// zero-mass atoms are dropped so `ρ = 0` gives exactly `μ_diag`.
pub fn noisy_coupling<T: Scalar>(mu: &FiniteMeasure<T>, rho: T) -> Result<PairMeasure<T>> {
    if !(rho >= T::zero() && rho <= T::one()) {
        return Err(Error::OutOfRange {
            name: "rho",
            value: rho.as_f64(),
            range: "[0, 1]",
        });
    }
    let keep = T::one() - rho;
    let mut atoms = Vec::with_capacity(mu.atoms.len() * mu.atoms.len());
    for (x, p) in &mu.atoms {
        for (y, q) in &mu.atoms {
            let mut m = rho * *p * *q;
            if x == y {
                m = m + keep * *p;
            }
            if m > T::zero() {
                atoms.push(((x.clone(), y.clone()), m));
            }
        }
    }
    let pi = PairMeasure { atoms };
    check_unit_mass(&pi.atoms)?;
    Ok(pi)
}

/// Hypothesis report for a driving measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureReport {
    /// `μ(γ⁻¹) = μ(γ)` for every atom.
    pub symmetric: bool,
    /// Heuristic: the symmetrized support contains two non-commuting elements.
    pub non_elementary: bool,
    /// `μ(id) > 0`.
    pub lazy: bool,
    pub identity_mass: f64,
    pub warnings: Vec<String>,
}

impl MeasureReport {
    pub fn satisfies_hypotheses(&self) -> bool {
        self.symmetric && self.non_elementary
    }
}

/// Checks symmetry, laziness and the non-elementarity heuristic. Never
/// fails; problems are reported as flags and warnings.
pub fn validate_measure<T: Scalar>(group: &MarkedGroup, mu: &FiniteMeasure<T>) -> MeasureReport {
    let mut warnings = Vec::new();
    if let Err(e) = mu.check_in(group) {
        warnings.push(e.to_string());
    }
    let tol = T::mass_tolerance();
    let symmetric = mu
        .atoms
        .iter()
        .all(|(x, p)| (mu.mass(&group.inverse(x)) - *p).abs() <= tol);
    if !symmetric {
        warnings.push("measure is not symmetric".into());
    }
    let identity_mass = mu.mass(&group.identity()).as_f64();
    let lazy = identity_mass > 0.0;
    if lazy {
        warnings.push(format!("lazy walk: μ(id) = {identity_mass}"));
    }

    let mut sym_support: Vec<GroupElement> = Vec::new();
    for (x, _) in &mu.atoms {
        if x.is_identity() {
            continue;
        }
        for y in [x.clone(), group.inverse(x)] {
            if !sym_support.contains(&y) {
                sym_support.push(y);
            }
        }
    }
    let mut undecided = false;
    let mut non_elementary = false;
    'search: for (i, x) in sym_support.iter().enumerate() {
        for y in &sym_support[i + 1..] {
            match (group.multiply(x, y), group.multiply(y, x)) {
                (Ok(xy), Ok(yx)) if xy != yx => {
                    non_elementary = true;
                    break 'search;
                }
                (Ok(_), Ok(_)) => {}
                _ => undecided = true,
            }
        }
    }
    if !non_elementary {
        warnings.push(if undecided {
            "could not decide non-elementarity inside the computed ball".into()
        } else {
            "support elements pairwise commute: the walk is elementary (support generates a cyclic or abelian subgroup)"
                .into()
        });
    }
    let mut used = vec![false; group.rank()];
    for (x, _) in &mu.atoms {
        for l in x.letters() {
            used[l.generator()] = true;
        }
    }
    for (i, u) in used.iter().enumerate() {
        if !u {
            warnings.push(format!(
                "generator {} does not occur in the support; the support may lie in a proper subgroup",
                group.generator_names()[i]
            ));
        }
    }
    MeasureReport {
        symmetric,
        non_elementary,
        lazy,
        identity_mass,
        warnings,
    }
}
