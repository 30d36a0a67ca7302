//! Seeded, reproducible trajectory sampling.
//!
//! Every trajectory owns a substream identified by `(master_seed, index)`.
//! The pair is folded into a 64-bit key with [`avalanche64`]; the key is
//! expanded into a ChaCha8 key and the generator runs from block counter 0.
//! Output therefore depends only on `(law, N, master_seed, index)`, never on
//! which thread produced it.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{noisy_coupling, FiniteMeasure, PairMeasure};
use crate::error::{Error, Result};
use crate::group::{GroupElement, MarkedGroup};
use crate::scalar::Scalar;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer: a bijective 64-bit avalanche mix.
pub fn avalanche64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Master seed of an independent family, e.g. one per experiment stage.
pub fn derive_master_seed(master: u64, family: u64) -> u64 {
    avalanche64(avalanche64(master) ^ family.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

/// Identifies one trajectory's random substream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub index: u64,
}

impl SeedRecord {
    pub fn new(master_seed: u64, index: u64) -> Self {
        Self { master_seed, index }
    }

    /// `avalanche64(avalanche64(master) + (index + 1)·γ)` with γ the golden
    /// ratio constant.
    pub fn key(&self) -> u64 {
        avalanche64(avalanche64(self.master_seed).wrapping_add(self.index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Fresh generator positioned at the start of the substream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut state = self.key();
        for chunk in seed.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&avalanche64(state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// Inverse-CDF sampler over a fixed list of masses.
#[derive(Clone, Debug)]
struct CumulativeSampler {
    cumulative: Vec<f64>,
}

impl CumulativeSampler {
    fn new(masses: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = masses
            .into_iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Self { cumulative }
    }

    #[inline]
    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty support");
        let u = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// Increment law of a single walk.
#[derive(Clone, Debug)]
pub struct SingleLaw {
    elements: Arc<[GroupElement]>,
    sampler: CumulativeSampler,
}

impl SingleLaw {
    pub fn new<T: Scalar>(mu: &FiniteMeasure<T>) -> Self {
        Self {
            elements: mu.atoms().iter().map(|a| a.0.clone()).collect(),
            sampler: CumulativeSampler::new(mu.atoms().iter().map(|a| a.1.as_f64())),
        }
    }

    pub fn elements(&self) -> &Arc<[GroupElement]> {
        &self.elements
    }

    #[inline]
    pub fn draw<R: Rng>(&self, rng: &mut R) -> u32 {
        self.sampler.sample(rng) as u32
    }
}

#[derive(Clone, Debug)]
enum PairLawKind {
    /// i.i.d. draws from a pair measure, mapped to element indices.
    Coupling {
        sampler: CumulativeSampler,
        pairs: Vec<(u32, u32)>,
    },
    /// Draw γ from μ, then keep it with probability 1−ρ or redraw.
    Resampling { sampler: CumulativeSampler, rho: f64 },
}

/// Increment law of a coupled pair walk.
#[derive(Clone, Debug)]
pub struct PairLaw {
    elements: Arc<[GroupElement]>,
    kind: PairLawKind,
}

impl PairLaw {
    pub fn coupling<T: Scalar>(pi: &PairMeasure<T>) -> Self {
        let mut elements: Vec<GroupElement> = pi
            .atoms()
            .iter()
            .flat_map(|((x, y), _)| [x.clone(), y.clone()])
            .collect();
        elements.sort();
        elements.dedup();
        let pos = |e: &GroupElement| elements.binary_search(e).expect("collected above") as u32;
        let pairs = pi.atoms().iter().map(|((x, y), _)| (pos(x), pos(y))).collect();
        Self {
            kind: PairLawKind::Coupling {
                sampler: CumulativeSampler::new(pi.atoms().iter().map(|a| a.1.as_f64())),
                pairs,
            },
            elements: elements.into(),
        }
    }

    pub fn resampling<T: Scalar>(mu: &FiniteMeasure<T>, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::OutOfRange {
                name: "rho",
                value: rho,
                range: "[0, 1]",
            });
        }
        let single = SingleLaw::new(mu);
        Ok(Self {
            elements: single.elements,
            kind: PairLawKind::Resampling {
                sampler: single.sampler,
                rho,
            },
        })
    }

    /// Noisy coupling of `μ` sampled directly from `π^ρ`.
    pub fn noisy<T: Scalar>(mu: &FiniteMeasure<T>, rho: T) -> Result<Self> {
        Ok(Self::coupling(&noisy_coupling(mu, rho)?))
    }

    pub fn elements(&self) -> &Arc<[GroupElement]> {
        &self.elements
    }

    #[inline]
    pub fn draw<R: Rng>(&self, rng: &mut R) -> (u32, u32) {
        match &self.kind {
            PairLawKind::Coupling { sampler, pairs } => pairs[sampler.sample(rng)],
            PairLawKind::Resampling { sampler, rho } => {
                let first = sampler.sample(rng) as u32;
                let resample = rng.random::<f64>() < *rho;
                let second = if resample { sampler.sample(rng) as u32 } else { first };
                (first, second)
            }
        }
    }
}

/// One sampled path `w_0 = id, w_n = w_{n−1}·γ_n`, `n ≤ N`.
///
/// Increments are stored as indices into the law's element table; positions
/// other than the endpoint are recomputed on demand.
#[derive(Clone, Debug)]
pub struct Trajectory {
    seed: SeedRecord,
    elements: Arc<[GroupElement]>,
    steps: Vec<u32>,
    lengths: Vec<u32>,
    endpoint: GroupElement,
}

impl Trajectory {
    fn start(seed: SeedRecord, elements: Arc<[GroupElement]>, horizon: usize) -> Self {
        let mut lengths = Vec::with_capacity(horizon + 1);
        lengths.push(0);
        Self {
            seed,
            elements,
            steps: Vec::with_capacity(horizon),
            lengths,
            endpoint: GroupElement::identity(),
        }
    }

    #[inline]
    fn push(&mut self, group: &MarkedGroup, step: u32) -> Result<()> {
        group.mul_assign(&mut self.endpoint, &self.elements[step as usize])?;
        self.steps.push(step);
        self.lengths.push(self.endpoint.len() as u32);
        Ok(())
    }

    pub fn seed(&self) -> SeedRecord {
        self.seed
    }

    /// Number of steps `N`.
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// Increment `γ_{i+1}` (zero-based `i`).
    pub fn increment(&self, i: usize) -> &GroupElement {
        &self.elements[self.steps[i] as usize]
    }

    pub fn increments(&self) -> impl Iterator<Item = &GroupElement> + '_ {
        self.steps.iter().map(|&s| &self.elements[s as usize])
    }

    /// `|w_n|` for `n = 0..=N`.
    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    /// `w_N`.
    pub fn endpoint(&self) -> &GroupElement {
        &self.endpoint
    }

    /// `w_n`, recomputed from the increments.
    pub fn position(&self, group: &MarkedGroup, n: usize) -> Result<GroupElement> {
        if n > self.horizon() {
            return Err(Error::InvalidArgument(format!(
                "time {n} beyond horizon {}",
                self.horizon()
            )));
        }
        if n == self.horizon() {
            return Ok(self.endpoint.clone());
        }
        let mut w = GroupElement::identity();
        for inc in self.increments().take(n) {
            group.mul_assign(&mut w, inc)?;
        }
        Ok(w)
    }

    /// `φ(w_n)` for `n = 0..=N`, from the additive increments.
    pub fn phi_path(&self, phi: &crate::group::Homomorphism<f64>) -> Vec<f64> {
        let per_element: Vec<f64> = self.elements.iter().map(|e| phi.apply(e)).collect();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(0.0);
        for &s in &self.steps {
            acc += per_element[s as usize];
            out.push(acc);
        }
        out
    }
}

/// A sampled path of the coupled walk on Γ × Γ.
#[derive(Clone, Debug)]
pub struct TrajectoryPair {
    pub first: Trajectory,
    pub second: Trajectory,
}

impl TrajectoryPair {
    pub fn seed(&self) -> SeedRecord {
        self.first.seed
    }

    pub fn horizon(&self) -> usize {
        self.first.horizon()
    }

    pub fn increment(&self, i: usize) -> (&GroupElement, &GroupElement) {
        (self.first.increment(i), self.second.increment(i))
    }

    pub fn endpoints(&self) -> (&GroupElement, &GroupElement) {
        (self.first.endpoint(), self.second.endpoint())
    }

    pub fn position(&self, group: &MarkedGroup, n: usize) -> Result<(GroupElement, GroupElement)> {
        Ok((self.first.position(group, n)?, self.second.position(group, n)?))
    }
}

/// Samples `N` steps of a single walk with increment law `law`.
pub fn sample_trajectory(group: &MarkedGroup, law: &SingleLaw, steps: usize, seed: SeedRecord) -> Result<Trajectory> {
    let mut rng = seed.rng();
    let mut t = Trajectory::start(seed, law.elements.clone(), steps);
    for _ in 0..steps {
        t.push(group, law.draw(&mut rng))?;
    }
    Ok(t)
}

/// Samples `N` steps of a pair walk with increment law `law`.
pub fn sample_pair_with_law(
    group: &MarkedGroup,
    law: &PairLaw,
    steps: usize,
    seed: SeedRecord,
) -> Result<TrajectoryPair> {
    let mut rng = seed.rng();
    let mut first = Trajectory::start(seed, law.elements.clone(), steps);
    let mut second = Trajectory::start(seed, law.elements.clone(), steps);
    for _ in 0..steps {
        let (i, j) = law.draw(&mut rng);
        first.push(group, i)?;
        second.push(group, j)?;
    }
    Ok(TrajectoryPair { first, second })
}

/// i.i.d. increments drawn from the pair measure `π`.
pub fn sample_pair_trajectory<T: Scalar>(
    group: &MarkedGroup,
    pi: &PairMeasure<T>,
    steps: usize,
    master_seed: u64,
    index: u64,
) -> Result<TrajectoryPair> {
    if steps == 0 {
        return Err(Error::InvalidArgument("trajectory needs at least one step".into()));
    }
    sample_pair_with_law(
        group,
        &PairLaw::coupling(pi),
        steps,
        SeedRecord::new(master_seed, index),
    )
}

/// Two-stage sampling: `γ_i ~ μ`, then `γ_i^ρ` is a fresh draw from `μ`
/// with probability `ρ` and equals `γ_i` otherwise.
pub fn resampling_sampler<T: Scalar>(
    group: &MarkedGroup,
    mu: &FiniteMeasure<T>,
    rho: f64,
    steps: usize,
    master_seed: u64,
    index: u64,
) -> Result<TrajectoryPair> {
    if steps == 0 {
        return Err(Error::InvalidArgument("trajectory needs at least one step".into()));
    }
    sample_pair_with_law(
        group,
        &PairLaw::resampling(mu, rho)?,
        steps,
        SeedRecord::new(master_seed, index),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{diag_measure, noisy_coupling};
    use std::collections::HashMap;

    fn f2() -> MarkedGroup {
        MarkedGroup::free(2).unwrap()
    }

    #[test]
    fn point_mass_trajectory() {
        let g = f2();
        let a = g.parse_word("a").unwrap();
        let pi = diag_measure(&FiniteMeasure::<f64>::point(a));
        let t = sample_pair_trajectory(&g, &pi, 3, 1, 0).unwrap();
        let aaa = g.parse_word("aaa").unwrap();
        assert_eq!(t.endpoints(), (&aaa, &aaa));
        assert_eq!(t.first.lengths(), &[0, 1, 2, 3]);
        assert_eq!(t.position(&g, 2).unwrap().0, g.parse_word("aa").unwrap());
        assert!(sample_pair_trajectory(&g, &pi, 0, 1, 0).is_err());
    }

    #[test]
    fn deterministic_per_seed_and_index() {
        let g = f2();
        let mu = FiniteMeasure::<f64>::uniform_generators(&g);
        let pi = noisy_coupling(&mu, 0.3).unwrap();
        let a = sample_pair_trajectory(&g, &pi, 200, 42, 7).unwrap();
        let b = sample_pair_trajectory(&g, &pi, 200, 42, 7).unwrap();
        let c = sample_pair_trajectory(&g, &pi, 200, 42, 8).unwrap();
        assert_eq!(a.endpoints(), b.endpoints());
        assert_eq!(a.first.lengths(), b.first.lengths());
        assert_ne!(a.first.lengths(), c.first.lengths());
        assert_eq!(a.seed(), SeedRecord::new(42, 7));
    }

    #[test]
    fn positions_follow_increments() {
        let g = f2();
        let mu = FiniteMeasure::<f64>::uniform_generators(&g);
        let t = resampling_sampler(&g, &mu, 0.5, 50, 3, 0).unwrap();
        let mut w = (g.identity(), g.identity());
        for n in 1..=50 {
            let (x, y) = t.increment(n - 1);
            w = (g.multiply(&w.0, x).unwrap(), g.multiply(&w.1, y).unwrap());
            assert_eq!(t.position(&g, n).unwrap(), w);
            assert_eq!(t.first.lengths()[n] as usize, w.0.len());
        }
    }

    #[test]
    fn resampling_extremes() {
        let g = f2();
        let mu = FiniteMeasure::<f64>::uniform_generators(&g);
        let t = resampling_sampler(&g, &mu, 0.0, 500, 9, 0).unwrap();
        assert_eq!(t.first.endpoint(), t.second.endpoint());
        let t = resampling_sampler(&g, &mu, 1.0, 2000, 9, 0).unwrap();
        let same = (0..2000).filter(|&i| t.increment(i).0 == t.increment(i).1).count();
        // independent draws agree with probability 1/4
        assert!((same as f64 / 2000.0 - 0.25).abs() < 0.05);
    }

    #[test]
    fn one_step_frequencies_match_coupling() {
        let g = f2();
        let mu = FiniteMeasure::<f64>::uniform_generators(&g);
        let pi = noisy_coupling(&mu, 0.5).unwrap();
        let law = PairLaw::coupling(&pi);
        let n = 1_000_000usize;
        let mut rng = SeedRecord::new(2024, 0).rng();
        let mut counts: HashMap<(u32, u32), usize> = HashMap::new();
        for _ in 0..n {
            *counts.entry(law.draw(&mut rng)).or_default() += 1;
        }
        for ((x, y), p) in pi.atoms() {
            let key = (
                law.elements().iter().position(|e| e == x).unwrap() as u32,
                law.elements().iter().position(|e| e == y).unwrap() as u32,
            );
            let freq = counts.get(&key).copied().unwrap_or(0) as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * sigma + 1e-12, "{x:?},{y:?}: {freq} vs {p}");
        }
    }

    /// Enumerates the two-stage sampling tree of the resampling sampler.
    #[test]
    fn resampling_one_step_law_is_the_noisy_coupling() {
        let g = f2();
        let a = g.parse_word("a").unwrap();
        let mu = FiniteMeasure::new(vec![
            (a.clone(), 0.5),
            (g.inverse(&a), 0.3),
            (g.parse_word("b").unwrap(), 0.2),
        ])
        .unwrap();
        for rho in [0.0, 0.2, 0.5, 1.0] {
            let mut tree: HashMap<(GroupElement, GroupElement), f64> = HashMap::new();
            for (x, p) in mu.atoms() {
                *tree.entry((x.clone(), x.clone())).or_default() += p * (1.0 - rho);
                for (y, q) in mu.atoms() {
                    *tree.entry((x.clone(), y.clone())).or_default() += p * rho * q;
                }
            }
            let pi = noisy_coupling(&mu, rho).unwrap();
            for (k, p) in &tree {
                assert!((pi.mass(k) - p).abs() < 1e-15);
            }
            assert_eq!(pi.support_len(), tree.values().filter(|&&p| p > 0.0).count());
        }
    }

    #[test]
    fn substream_keys_differ() {
        let keys: std::collections::HashSet<u64> = (0..10_000).map(|i| SeedRecord::new(1, i).key()).collect();
        assert_eq!(keys.len(), 10_000);
        assert_ne!(derive_master_seed(1, 0), derive_master_seed(1, 1));
        assert_eq!(avalanche64(0), 0);
    }
}
