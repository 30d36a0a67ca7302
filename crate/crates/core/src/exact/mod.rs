//! Exact n-step laws, total variation and the separation `𝒰^s`.

mod flow;
mod io;
mod separation;

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{ElementPair, GroupElement, MarkedGroup};
use crate::measures::{FiniteMeasure, PairMeasure};
use crate::scalar::{pairwise_sum, Scalar};

pub use flow::MaxFlow;
pub use io::{read_table, write_table, TABLE_SCHEMA_VERSION};
pub use separation::{perturbation_midpoint, separation_u, separation_u_capped, DEFAULT_EDGE_CAP};

/// Default cap on the number of atoms of a convolution table.
pub const DEFAULT_TABLE_CAP: u128 = 50_000_000;

/// Atoms per parallel work unit. Fixed so the merge order, and therefore
/// every floating-point sum, does not depend on the thread count.
const CHUNK: usize = 4096;

/// Key of a convolution table: a group element or a pair of them.
pub trait TableKey: Clone + Ord + Hash + Debug + Send + Sync {
    /// `"single"` or `"pair"`, as written in table headers.
    const KIND: &'static str;
    /// Number of word columns in the text format.
    const WORDS: usize;

    fn multiply(group: &MarkedGroup, x: &Self, y: &Self) -> Result<Self>;
    /// Word metric on Γ, l∞ metric on Γ × Γ.
    fn distance(group: &MarkedGroup, x: &Self, y: &Self) -> Result<usize>;
    fn identity() -> Self;
    fn words(&self) -> Vec<&GroupElement>;
    fn from_words(words: Vec<GroupElement>) -> Self;
}

impl TableKey for GroupElement {
    const KIND: &'static str = "single";
    const WORDS: usize = 1;

    fn multiply(group: &MarkedGroup, x: &Self, y: &Self) -> Result<Self> {
        group.multiply(x, y)
    }

    fn distance(group: &MarkedGroup, x: &Self, y: &Self) -> Result<usize> {
        group.distance(x, y)
    }

    fn identity() -> Self {
        GroupElement::identity()
    }

    fn words(&self) -> Vec<&GroupElement> {
        vec![self]
    }

    fn from_words(mut words: Vec<GroupElement>) -> Self {
        words.swap_remove(0)
    }
}

impl TableKey for ElementPair {
    const KIND: &'static str = "pair";
    const WORDS: usize = 2;

    fn multiply(group: &MarkedGroup, x: &Self, y: &Self) -> Result<Self> {
        Ok((group.multiply(&x.0, &y.0)?, group.multiply(&x.1, &y.1)?))
    }

    fn distance(group: &MarkedGroup, x: &Self, y: &Self) -> Result<usize> {
        group.pair_distance(x, y)
    }

    fn identity() -> Self {
        (GroupElement::identity(), GroupElement::identity())
    }

    fn words(&self) -> Vec<&GroupElement> {
        vec![&self.0, &self.1]
    }

    fn from_words(mut words: Vec<GroupElement>) -> Self {
        let second = words.pop().expect("two words");
        let first = words.pop().expect("two words");
        (first, second)
    }
}

/// Exact law of `w_n` as a sparse table sorted by key (shortlex, and
/// lexicographic in the coordinates for pairs).
#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionTable<K, T> {
    n: usize,
    atoms: Vec<(K, T)>,
}

impl<K: TableKey, T: Scalar> ConvolutionTable<K, T> {
    /// Law of `w_0`, the point mass at the identity.
    pub fn identity() -> Self {
        Self {
            n: 0,
            atoms: vec![(K::identity(), T::one())],
        }
    }

    /// Builds a table from arbitrary atoms; duplicate keys are merged and
    /// zero masses dropped. Total mass must be 1 within `max(n,1)` times the
    /// scalar tolerance.
    pub fn from_atoms(n: usize, atoms: impl IntoIterator<Item = (K, T)>) -> Result<Self> {
        let mut atoms: Vec<(K, T)> = atoms.into_iter().collect();
        if atoms.iter().any(|a| !(a.1 >= T::zero()) || !a.1.is_finite()) {
            return Err(Error::InvalidMeasure(
                "table masses must be finite and non-negative".into(),
            ));
        }
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let table = Self {
            n,
            atoms: merge_sorted(atoms),
        };
        table.check_mass()?;
        Ok(table)
    }

    fn check_mass(&self) -> Result<()> {
        let total = self.total_mass();
        let tol = T::mass_tolerance() * T::from_usize(self.n.max(1)).unwrap_or_else(T::one);
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidMeasure(format!(
                "table for n = {} has total mass {total}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        K::KIND
    }

    /// Step count `n`.
    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[(K, T)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn get(&self, key: &K) -> T {
        self.atoms
            .binary_search_by(|(k, _)| k.cmp(key))
            .map(|i| self.atoms[i].1)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn total_mass(&self) -> T {
        let masses: Vec<T> = self.atoms.iter().map(|a| a.1).collect();
        pairwise_sum(&masses)
    }

    /// Shannon entropy `−Σ p ln p` in nats.
    pub fn entropy(&self) -> T {
        let terms: Vec<T> = self.atoms.iter().map(|a| -a.1 * a.1.ln()).collect();
        pairwise_sum(&terms)
    }

    /// One further convolution step with the increment law `step`.
    pub fn convolve_step(&self, group: &MarkedGroup, step: &[(K, T)], cap: u128) -> Result<Self> {
        let projected = self.atoms.len() as u128 * step.len() as u128;
        if projected > cap {
            return Err(Error::TableCapExceeded { projected, cap });
        }
        let pieces: Vec<Vec<(K, T)>> = self
            .atoms
            .par_chunks(CHUNK)
            .map(|chunk| convolve_chunk(group, chunk, step))
            .collect::<Result<_>>()?;
        let mut all: Vec<(K, T)> = pieces.into_iter().flatten().collect();
        // stable: equal keys keep chunk order, so their sum order is fixed
        all.par_sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Self {
            n: self.n + 1,
            atoms: merge_sorted(all),
        })
    }
}

fn convolve_chunk<K: TableKey, T: Scalar>(
    group: &MarkedGroup,
    chunk: &[(K, T)],
    step: &[(K, T)],
) -> Result<Vec<(K, T)>> {
    let mut acc: HashMap<K, T> = HashMap::with_capacity(chunk.len() * step.len());
    for (x, p) in chunk {
        for (g, q) in step {
            let e = acc.entry(K::multiply(group, x, g)?).or_insert_with(T::zero);
            *e = *e + *p * *q;
        }
    }
    let mut out: Vec<(K, T)> = acc.into_iter().collect();
    out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Sums runs of equal keys (input sorted by key) and drops zero masses.
fn merge_sorted<K: Ord, T: Scalar>(sorted: Vec<(K, T)>) -> Vec<(K, T)> {
    let mut out: Vec<(K, T)> = Vec::with_capacity(sorted.len());
    for (k, p) in sorted {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 = last.1 + p,
            _ => out.push((k, p)),
        }
    }
    out.retain(|a| a.1 > T::zero());
    out
}

impl<T: Scalar> ConvolutionTable<ElementPair, T> {
    pub fn first_marginal(&self) -> ConvolutionTable<GroupElement, T> {
        self.marginal(|k| k.0.clone())
    }

    pub fn second_marginal(&self) -> ConvolutionTable<GroupElement, T> {
        self.marginal(|k| k.1.clone())
    }

    fn marginal(&self, coord: impl Fn(&ElementPair) -> GroupElement) -> ConvolutionTable<GroupElement, T> {
        let mut atoms: Vec<(GroupElement, T)> = self.atoms.iter().map(|(k, p)| (coord(k), *p)).collect();
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        ConvolutionTable {
            n: self.n,
            atoms: merge_sorted(atoms),
        }
    }

    /// `t1 ⊗ t2`, the law of two independent walks.
    pub fn product(t1: &ConvolutionTable<GroupElement, T>, t2: &ConvolutionTable<GroupElement, T>) -> Self {
        let mut atoms = Vec::with_capacity(t1.len() * t2.len());
        for (x, p) in &t1.atoms {
            for (y, q) in &t2.atoms {
                atoms.push(((x.clone(), y.clone()), *p * *q));
            }
        }
        Self {
            n: t1.n.max(t2.n),
            atoms,
        }
    }

    /// Pushes a single-walk law onto the diagonal.
    pub fn diagonal(t: &ConvolutionTable<GroupElement, T>) -> Self {
        Self {
            n: t.n,
            atoms: t.atoms.iter().map(|(x, p)| ((x.clone(), x.clone()), *p)).collect(),
        }
    }
}

/// Exact law `μ_n` with the default table cap.
pub fn convolve_n<T: Scalar>(
    group: &MarkedGroup,
    mu: &FiniteMeasure<T>,
    n: usize,
) -> Result<ConvolutionTable<GroupElement, T>> {
    convolve_n_capped(group, mu, n, DEFAULT_TABLE_CAP)
}

pub fn convolve_n_capped<T: Scalar>(
    group: &MarkedGroup,
    mu: &FiniteMeasure<T>,
    n: usize,
    cap: u128,
) -> Result<ConvolutionTable<GroupElement, T>> {
    Ok(convolve_grid(group, mu.atoms(), &[n], cap)?.pop().expect("one entry"))
}

/// Exact law `π_n` of the pair walk with the default table cap.
pub fn convolve_pair_n<T: Scalar>(
    group: &MarkedGroup,
    pi: &PairMeasure<T>,
    n: usize,
) -> Result<ConvolutionTable<ElementPair, T>> {
    convolve_pair_n_capped(group, pi, n, DEFAULT_TABLE_CAP)
}

pub fn convolve_pair_n_capped<T: Scalar>(
    group: &MarkedGroup,
    pi: &PairMeasure<T>,
    n: usize,
    cap: u128,
) -> Result<ConvolutionTable<ElementPair, T>> {
    Ok(convolve_grid(group, pi.atoms(), &[n], cap)?.pop().expect("one entry"))
}

/// Tables for every step count in `grid` (strictly increasing), computed
/// along a single convolution chain.
pub fn convolve_grid<K: TableKey, T: Scalar>(
    group: &MarkedGroup,
    step: &[(K, T)],
    grid: &[usize],
    cap: u128,
) -> Result<Vec<ConvolutionTable<K, T>>> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("step grid must be strictly increasing".into()));
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut current = ConvolutionTable::<K, T>::identity();
    for &n in grid {
        while current.n < n {
            current = current.convolve_step(group, step, cap)?;
        }
        current.check_mass()?;
        out.push(current.clone());
    }
    Ok(out)
}

/// Walks the union support of two sorted tables in key order, yielding the
/// masses on each side.
fn union_walk<'a, K: Ord, T: Scalar>(a: &'a [(K, T)], b: &'a [(K, T)], mut f: impl FnMut(&'a K, T, T)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match ord {
            std::cmp::Ordering::Less => {
                f(&a[i].0, a[i].1, T::zero());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                f(&b[j].0, T::zero(), b[j].1);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                f(&a[i].0, a[i].1, b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Total variation `½ Σ |t1 − t2|` over the union support.
pub fn tv_distance<K: TableKey, T: Scalar>(t1: &ConvolutionTable<K, T>, t2: &ConvolutionTable<K, T>) -> T {
    let half = T::from_f64_lossy(0.5);
    (half * total_variation_norm(t1, t2)).min(T::one())
}

/// `‖t1 − t2‖ = Σ |t1 − t2|`, the mass of the signed difference.
pub fn total_variation_norm<K: TableKey, T: Scalar>(t1: &ConvolutionTable<K, T>, t2: &ConvolutionTable<K, T>) -> T {
    let mut diffs = Vec::with_capacity(t1.len().max(t2.len()));
    union_walk(&t1.atoms, &t2.atoms, |_, p, q| diffs.push((p - q).abs()));
    pairwise_sum(&diffs)
}

/// Hahn–Jordan decomposition of `η = t1 − t2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HahnJordan<K, T> {
    /// `η₊(Z)`.
    pub positive: T,
    /// `η₋(Z)`.
    pub negative: T,
    /// Positive set `{η > 0}` in key order; `η(B) = η₊(Z)`.
    pub witness: Vec<K>,
}

pub fn hahn_jordan<K: TableKey, T: Scalar>(
    t1: &ConvolutionTable<K, T>,
    t2: &ConvolutionTable<K, T>,
) -> HahnJordan<K, T> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut witness = Vec::new();
    union_walk(&t1.atoms, &t2.atoms, |k, p, q| {
        if p > q {
            pos.push(p - q);
            witness.push(k.clone());
        } else if q > p {
            neg.push(q - p);
        }
    });
    HahnJordan {
        positive: pairwise_sum(&pos),
        negative: pairwise_sum(&neg),
        witness,
    }
}
