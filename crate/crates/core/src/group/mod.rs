//! Marked groups: reduced words, the word metric, Gromov products and
//! geodesic prefixes.
//!
//! Two backends share one element representation. [`MarkedGroup::free`] is
//! the exact reference backend where freely reduced words are canonical and
//! geodesic. [`MarkedGroup::presentation`] precomputes a ball of finite radius
//! for a finite presentation and answers queries inside it only.

mod hom;
mod presentation;
mod word;

use std::cmp::Ordering;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use hom::Homomorphism;
use presentation::Ball;

/// A generator or its inverse, stored as a signed index (`±(i + 1)`).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter(i8);

impl Letter {
    pub const MAX_GENERATORS: usize = 127;

    pub fn new(generator: usize, inverse: bool) -> Self {
        assert!(
            generator < Self::MAX_GENERATORS,
            "generator index {generator} too large"
        );
        let v = generator as i8 + 1;
        Letter(if inverse { -v } else { v })
    }

    /// Letter with shortlex rank `rank` (order `a < a' < b < b' < ...`).
    pub fn from_rank(rank: usize) -> Self {
        Self::new(rank / 2, rank % 2 == 1)
    }

    pub fn generator(self) -> usize {
        (self.0.unsigned_abs() - 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    pub fn inverse(self) -> Self {
        Letter(-self.0)
    }

    pub fn rank(self) -> usize {
        2 * self.generator() + usize::from(self.is_inverse())
    }

    /// `+1` for a generator, `-1` for an inverse.
    pub fn sign(self) -> i64 {
        if self.is_inverse() {
            -1
        } else {
            1
        }
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}{}", self.generator(), if self.is_inverse() { "'" } else { "" })
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

/// Group element as its canonical word. Ordered shortlex.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct GroupElement {
    letters: Vec<Letter>,
}

/// Element of Γ × Γ.
pub type ElementPair = (GroupElement, GroupElement);

impl GroupElement {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Freely reduces `letters`. Canonical for the free backend; use
    /// [`MarkedGroup::canonicalize`] for presentations.
    pub fn free_reduce(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out = Self::identity();
        for l in letters {
            out.push_free(l);
        }
        out
    }

    pub(crate) fn from_letters_unchecked(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Number of letters of the canonical word, i.e. the word length.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    #[inline]
    fn push_free(&mut self, l: Letter) {
        if self.letters.last() == Some(&l.inverse()) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    fn inverse_letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.letters.iter().rev().map(|l| l.inverse())
    }

    fn prefix(&self, m: usize) -> Self {
        Self {
            letters: self.letters[..m].to_vec(),
        }
    }

    /// Length of the longest common prefix of the two words.
    pub fn common_prefix_len(&self, other: &Self) -> usize {
        self.letters
            .iter()
            .zip(&other.letters)
            .take_while(|(a, b)| a == b)
            .count()
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        f.debug_list().entries(&self.letters).finish()
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

/// Half-integer value such as a Gromov product, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInteger {
    twice: usize,
}

impl HalfInteger {
    pub fn from_twice(twice: usize) -> Self {
        Self { twice }
    }

    pub fn from_integer(v: usize) -> Self {
        Self { twice: 2 * v }
    }

    pub fn twice(self) -> usize {
        self.twice
    }

    pub fn is_integer(self) -> bool {
        self.twice.is_multiple_of(2)
    }

    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}.5", self.twice / 2)
        }
    }
}

/// Backend summary, used for descriptors and reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Free { rank: usize },
    Presentation { relators: Vec<String>, radius: usize },
}

#[derive(Clone)]
enum Backend {
    Free,
    Presentation(Box<Ball>),
}

/// A finitely generated group with a marked symmetric generating set.
///
/// Immutable after construction.
#[derive(Clone)]
pub struct MarkedGroup {
    names: Vec<String>,
    single_char_names: bool,
    backend: Backend,
}

impl fmt::Debug for MarkedGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkedGroup")
            .field("generators", &self.names)
            .field("backend", &self.kind())
            .finish()
    }
}

/// Default generator names: `a, b, c, ...` up to rank 26, then `g1, g2, ...`.
pub fn default_generator_names(rank: usize) -> Vec<String> {
    if rank <= 26 {
        (0..rank).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        (1..=rank).map(|i| format!("g{i}")).collect()
    }
}

impl MarkedGroup {
    /// Free group of rank `rank` on generators `a, b, ...`.
    pub fn free(rank: usize) -> Result<Self> {
        Self::free_with_names(default_generator_names(rank))
    }

    pub fn free_with_names(names: Vec<String>) -> Result<Self> {
        word::validate_names(&names)?;
        let single_char_names = names.iter().all(|n| n.len() == 1);
        Ok(Self {
            names,
            single_char_names,
            backend: Backend::Free,
        })
    }

    /// Finite presentation `⟨names | relators⟩` with the ball of radius
    /// `radius` computed breadth-first. Elements are represented by their
    /// shortlex-least geodesic word; equality of words is decided with Dehn's
    /// algorithm, which is exact for Dehn presentations.
    pub fn presentation(names: Vec<String>, relators: &[&str], radius: usize) -> Result<Self> {
        word::validate_names(&names)?;
        let single_char_names = names.iter().all(|n| n.len() == 1);
        let free = Self {
            names,
            single_char_names,
            backend: Backend::Free,
        };
        let mut rels = Vec::with_capacity(relators.len());
        for r in relators {
            let w = free.parse_word(r)?;
            if w.is_identity() {
                return Err(Error::InvalidGroup(format!("relator {r:?} is trivial")));
            }
            rels.push((r.trim().to_string(), w.letters));
        }
        let ball = Ball::build(free.rank(), rels, radius)?;
        Ok(Self {
            backend: Backend::Presentation(Box::new(ball)),
            ..free
        })
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn generator_names(&self) -> &[String] {
        &self.names
    }

    pub fn kind(&self) -> BackendKind {
        match &self.backend {
            Backend::Free => BackendKind::Free { rank: self.rank() },
            Backend::Presentation(ball) => BackendKind::Presentation {
                relators: ball.relator_names().to_vec(),
                radius: ball.radius(),
            },
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self.backend, Backend::Free)
    }

    /// Ball radius for presentation backends, `None` for the free backend.
    pub fn radius(&self) -> Option<usize> {
        match &self.backend {
            Backend::Free => None,
            Backend::Presentation(ball) => Some(ball.radius()),
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity()
    }

    pub fn generator(&self, i: usize) -> GroupElement {
        assert!(i < self.rank());
        GroupElement::from_letters_unchecked(vec![Letter::new(i, false)])
    }

    /// Symmetric generating set `a, a', b, b', ...` in shortlex order.
    pub fn symmetric_generators(&self) -> Vec<GroupElement> {
        (0..2 * self.rank())
            .map(|r| GroupElement::from_letters_unchecked(vec![Letter::from_rank(r)]))
            .collect()
    }

    /// Canonical element represented by an arbitrary word.
    pub fn canonicalize(&self, letters: &[Letter]) -> Result<GroupElement> {
        for l in letters {
            if l.generator() >= self.rank() {
                return Err(Error::InvalidWord {
                    word: format!("{letters:?}"),
                    reason: format!("generator index {} out of range", l.generator()),
                });
            }
        }
        match &self.backend {
            Backend::Free => Ok(GroupElement::free_reduce(letters.iter().copied())),
            Backend::Presentation(ball) => ball.canonicalize(letters),
        }
    }

    /// Canonical form of `x·y`.
    pub fn multiply(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        let mut out = x.clone();
        self.mul_assign(&mut out, y)?;
        Ok(out)
    }

    /// `x ← x·y`, in place on the free backend.
    pub fn mul_assign(&self, x: &mut GroupElement, y: &GroupElement) -> Result<()> {
        match &self.backend {
            Backend::Free => {
                for &l in &y.letters {
                    x.push_free(l);
                }
                Ok(())
            }
            Backend::Presentation(ball) => {
                *x = ball.multiply(x, y)?;
                Ok(())
            }
        }
    }

    pub fn inverse(&self, x: &GroupElement) -> GroupElement {
        match &self.backend {
            Backend::Free => GroupElement::from_letters_unchecked(x.inverse_letters().collect()),
            Backend::Presentation(ball) => ball
                .canonicalize(&x.inverse_letters().collect::<Vec<_>>())
                .expect("inverse of a ball element has the same length"),
        }
    }

    /// Word length `|x|`, the distance from `x` to the identity.
    pub fn word_length(&self, x: &GroupElement) -> usize {
        x.len()
    }

    /// Left-invariant word distance `|x⁻¹y|`.
    pub fn distance(&self, x: &GroupElement, y: &GroupElement) -> Result<usize> {
        match &self.backend {
            Backend::Free => {
                let c = x.common_prefix_len(y);
                Ok(x.len() + y.len() - 2 * c)
            }
            Backend::Presentation(ball) => ball.distance(x, y),
        }
    }

    /// Gromov product `(x|y) = ½(|x| + |y| − |x⁻¹y|)` based at the identity.
    pub fn gromov_product(&self, x: &GroupElement, y: &GroupElement) -> Result<HalfInteger> {
        let d = self.distance(x, y)?;
        Ok(HalfInteger::from_twice(x.len() + y.len() - d))
    }

    /// Length-`m` prefix of the canonical geodesic word of `x`.
    pub fn geodesic_prefix(&self, x: &GroupElement, m: usize) -> Result<GroupElement> {
        if m > x.len() {
            return Err(Error::PrefixTooLong {
                requested: m,
                length: x.len(),
            });
        }
        // Prefixes of shortlex-least geodesics are shortlex-least geodesics.
        Ok(x.prefix(m))
    }

    /// l∞ distance on Γ × Γ.
    pub fn pair_distance(&self, g: &ElementPair, h: &ElementPair) -> Result<usize> {
        Ok(self.distance(&g.0, &h.0)?.max(self.distance(&g.1, &h.1)?))
    }

    /// All elements of word length at most `r`, shortlex ordered.
    pub fn ball(&self, r: usize) -> Result<Vec<GroupElement>> {
        match &self.backend {
            Backend::Free => {
                let gens = self.symmetric_generators();
                let mut out = vec![GroupElement::identity()];
                let mut sphere = vec![GroupElement::identity()];
                for _ in 0..r {
                    let mut next = Vec::with_capacity(sphere.len() * (gens.len() - 1).max(1));
                    for x in &sphere {
                        for g in &gens {
                            let l = g.letters[0];
                            if x.last() == Some(l.inverse()) {
                                continue;
                            }
                            let mut y = x.clone();
                            y.letters.push(l);
                            next.push(y);
                        }
                    }
                    out.extend(next.iter().cloned());
                    sphere = next;
                }
                Ok(out)
            }
            Backend::Presentation(ball) => ball.elements_within(r),
        }
    }

    /// Whether the element is representable by this group (always true on
    /// the free backend when the generator indices are in range).
    pub fn contains(&self, x: &GroupElement) -> bool {
        match &self.backend {
            Backend::Free => {
                x.letters.iter().all(|l| l.generator() < self.rank())
                    && x.letters.windows(2).all(|w| w[1] != w[0].inverse())
            }
            Backend::Presentation(ball) => ball.contains(x),
        }
    }

    pub fn parse_word(&self, s: &str) -> Result<GroupElement> {
        let letters = word::parse_letters(&self.names, self.single_char_names, s)?;
        self.canonicalize(&letters)
    }

    pub fn format_word(&self, x: &GroupElement) -> String {
        word::format_letters(&self.names, self.single_char_names, &x.letters)
    }

    /// Canonical text describing the group, stable across runs.
    pub fn descriptor(&self) -> String {
        match self.kind() {
            BackendKind::Free { rank } => {
                format!("free;rank={rank};generators={}", self.names.join(","))
            }
            BackendKind::Presentation { relators, radius } => format!(
                "presentation;generators={};relators={};radius={radius}",
                self.names.join(","),
                relators.join(",")
            ),
        }
    }

    /// SHA-256 of [`MarkedGroup::descriptor`], lowercase hex.
    pub fn descriptor_hash(&self) -> String {
        let digest = Sha256::digest(self.descriptor().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashSet, VecDeque};

    use proptest::prelude::*;

    fn f2() -> MarkedGroup {
        MarkedGroup::free(2).unwrap()
    }

    fn w(g: &MarkedGroup, s: &str) -> GroupElement {
        g.parse_word(s).unwrap()
    }

    fn arb_word(rank: usize, max_len: usize) -> impl Strategy<Value = GroupElement> {
        prop::collection::vec(0..2 * rank, 0..=max_len)
            .prop_map(|ranks| GroupElement::free_reduce(ranks.into_iter().map(Letter::from_rank)))
    }

    #[test]
    fn multiply_examples() {
        let g = f2();
        assert_eq!(g.multiply(&w(&g, "ab"), &w(&g, "b'a")).unwrap(), w(&g, "aa"));
        assert!(g.multiply(&w(&g, "a"), &w(&g, "a'")).unwrap().is_identity());
    }

    #[test]
    fn word_length_examples() {
        let g = f2();
        assert_eq!(g.word_length(&g.identity()), 0);
        assert_eq!(g.word_length(&w(&g, "aba'")), 3);
    }

    #[test]
    fn gromov_product_examples() {
        let g = f2();
        let x = w(&g, "ab");
        let y = w(&g, "aba");
        assert_eq!(g.gromov_product(&x, &y).unwrap(), HalfInteger::from_integer(2));
        assert_eq!(g.gromov_product(&y, &y).unwrap(), HalfInteger::from_integer(3));
        assert_eq!(
            g.gromov_product(&w(&g, "a"), &w(&g, "a'")).unwrap(),
            HalfInteger::from_integer(0)
        );
    }

    #[test]
    fn geodesic_prefix_examples() {
        let g = f2();
        let x = w(&g, "abab");
        assert_eq!(g.geodesic_prefix(&x, 2).unwrap(), w(&g, "ab"));
        assert!(g.geodesic_prefix(&x, 0).unwrap().is_identity());
        assert_eq!(g.geodesic_prefix(&x, 4).unwrap(), x);
        assert!(matches!(
            g.geodesic_prefix(&x, 5),
            Err(Error::PrefixTooLong {
                requested: 5,
                length: 4
            })
        ));
    }

    #[test]
    fn pair_distance_examples() {
        let g = f2();
        let p = (w(&g, "a"), w(&g, "b"));
        assert_eq!(g.pair_distance(&p, &p).unwrap(), 0);
        let id = (g.identity(), g.identity());
        assert_eq!(g.pair_distance(&id, &(w(&g, "a"), w(&g, "ab"))).unwrap(), 2);
    }

    #[test]
    fn shortlex_order() {
        let g = f2();
        let mut v = [w(&g, "b"), w(&g, "aa"), w(&g, "a'"), w(&g, "1"), w(&g, "a")];
        v.sort();
        let names: Vec<_> = v.iter().map(|x| g.format_word(x)).collect();
        assert_eq!(names, ["1", "a", "a'", "b", "aa"]);
    }

    /// Cayley-graph BFS over raw words, identifying vertices by free
    /// reduction only through the `seen` set of reduced tuples.
    fn bfs_distances(rank: usize, radius: usize) -> std::collections::HashMap<Vec<i8>, usize> {
        let mut dist = std::collections::HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(Vec::<i8>::new(), 0);
        queue.push_back(Vec::<i8>::new());
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d == radius {
                continue;
            }
            for gen in 1..=rank as i8 {
                for s in [gen, -gen] {
                    let mut u = v.clone();
                    if u.last() == Some(&-s) {
                        u.pop();
                    } else {
                        u.push(s);
                    }
                    if !dist.contains_key(&u) {
                        dist.insert(u.clone(), d + 1);
                        queue.push_back(u);
                    }
                }
            }
        }
        dist
    }

    #[test]
    fn word_length_agrees_with_cayley_bfs() {
        let g = f2();
        let dist = bfs_distances(2, 8);
        let ball = g.ball(8).unwrap();
        assert_eq!(ball.len(), dist.len());
        for x in ball {
            let key: Vec<i8> = x.letters().iter().map(|l| l.0).collect();
            assert_eq!(dist[&key], g.word_length(&x));
        }
    }

    #[test]
    fn sphere_sizes_of_free_groups() {
        for rank in 1..=3usize {
            let g = MarkedGroup::free(rank).unwrap();
            let ball = g.ball(6).unwrap();
            for n in 1..=6usize {
                let count = ball.iter().filter(|x| x.len() == n).count();
                assert_eq!(count, 2 * rank * (2 * rank - 1).pow(n as u32 - 1), "rank {rank} n {n}");
            }
            let distinct: HashSet<_> = ball.iter().collect();
            assert_eq!(distinct.len(), ball.len());
        }
    }

    #[test]
    fn descriptor_hash_is_stable_hex() {
        let h = f2().descriptor_hash();
        assert_eq!(h.len(), 64);
        assert_eq!(h, f2().descriptor_hash());
        assert_ne!(h, MarkedGroup::free(3).unwrap().descriptor_hash());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn associativity(x in arb_word(2, 10), y in arb_word(2, 10), z in arb_word(2, 10)) {
            let g = f2();
            let left = g.multiply(&g.multiply(&x, &y).unwrap(), &z).unwrap();
            let right = g.multiply(&x, &g.multiply(&y, &z).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn canonical_form_idempotent(x in arb_word(3, 12)) {
            let g = MarkedGroup::free(3).unwrap();
            prop_assert_eq!(g.canonicalize(x.letters()).unwrap(), x.clone());
            prop_assert!(g.contains(&x));
        }

        #[test]
        fn inverse_length_and_product(x in arb_word(2, 12)) {
            let g = f2();
            let xi = g.inverse(&x);
            prop_assert_eq!(g.word_length(&xi), g.word_length(&x));
            prop_assert!(g.multiply(&x, &xi).unwrap().is_identity());
            prop_assert_eq!(g.word_length(&x) == 0, x.is_identity());
        }

        #[test]
        fn gromov_product_laws(x in arb_word(2, 10), y in arb_word(2, 10), z in arb_word(2, 10)) {
            let g = f2();
            let xy = g.gromov_product(&x, &y).unwrap();
            prop_assert_eq!(xy, g.gromov_product(&y, &x).unwrap());
            prop_assert!(xy.twice() <= 2 * x.len().min(y.len()));
            // Free groups: (x|y) is the common prefix length.
            prop_assert_eq!(xy, HalfInteger::from_integer(x.common_prefix_len(&y)));
            // δ = 0 hyperbolicity.
            let xz = g.gromov_product(&x, &z).unwrap();
            let yz = g.gromov_product(&y, &z).unwrap();
            prop_assert!(xz >= xy.min(yz));
        }

        #[test]
        fn pair_distance_triangle(
            a in (arb_word(2, 8), arb_word(2, 8)),
            b in (arb_word(2, 8), arb_word(2, 8)),
            c in (arb_word(2, 8), arb_word(2, 8)),
        ) {
            let g = f2();
            let ab = g.pair_distance(&a, &b).unwrap();
            let bc = g.pair_distance(&b, &c).unwrap();
            let ac = g.pair_distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc);
            prop_assert_eq!(ab, g.pair_distance(&b, &a).unwrap());
            prop_assert_eq!(g.pair_distance(&a, &a).unwrap(), 0);
        }

        #[test]
        fn geodesic_prefix_splits_length(x in arb_word(2, 12), frac in 0.0f64..=1.0) {
            let g = f2();
            let m = (frac * x.len() as f64).floor() as usize;
            let p = g.geodesic_prefix(&x, m).unwrap();
            prop_assert_eq!(p.len(), m);
            let rest = g.multiply(&g.inverse(&p), &x).unwrap();
            prop_assert_eq!(g.word_length(&rest), x.len() - m);
        }
    }
}
