//! Bounded-radius backend for finite presentations.

use std::collections::HashMap;

use num_rational::Rational64;
use num_traits::{One, Zero};

use super::{GroupElement, Letter};
use crate::error::{Error, Result};

/// Dehn's algorithm over the symmetrized relator set.
#[derive(Clone)]
struct Dehn {
    /// Cyclic permutations of every relator and its inverse.
    pieces: Vec<Vec<Letter>>,
}

impl Dehn {
    fn new(relators: &[Vec<Letter>]) -> Self {
        let mut pieces = Vec::new();
        for r in relators {
            let inv: Vec<Letter> = r.iter().rev().map(|l| l.inverse()).collect();
            for base in [r, &inv] {
                for shift in 0..base.len() {
                    let mut p = base[shift..].to_vec();
                    p.extend_from_slice(&base[..shift]);
                    if !pieces.contains(&p) {
                        pieces.push(p);
                    }
                }
            }
        }
        Self { pieces }
    }

    /// Replaces more-than-half relator pieces by their shorter complement
    /// until none remain.
    fn reduce(&self, word: &[Letter]) -> Vec<Letter> {
        let mut cur = GroupElement::free_reduce(word.iter().copied()).letters;
        'outer: loop {
            for i in 0..cur.len() {
                for p in &self.pieces {
                    let len = p.len();
                    let j = cur[i..].iter().zip(p).take_while(|(a, b)| a == b).count();
                    if 2 * j > len {
                        let replacement = p[j..].iter().rev().map(|l| l.inverse());
                        let mut next: Vec<Letter> = cur[..i].to_vec();
                        next.extend(replacement);
                        next.extend_from_slice(&cur[i + j..]);
                        cur = GroupElement::free_reduce(next).letters;
                        continue 'outer;
                    }
                }
            }
            return cur;
        }
    }

    fn is_trivial(&self, word: &[Letter]) -> bool {
        self.reduce(word).is_empty()
    }
}

/// Integer basis of the homomorphisms `Zⁿ → Q` that kill every relator's
/// exponent-sum vector. Images under it are invariants of group elements.
fn abelian_invariants(rank: usize, relators: &[Vec<Letter>]) -> Vec<Vec<i64>> {
    let mut rows: Vec<Vec<Rational64>> = relators
        .iter()
        .map(|r| {
            let mut v = vec![Rational64::zero(); rank];
            for l in r {
                v[l.generator()] += Rational64::from_integer(l.sign());
            }
            v
        })
        .collect();
    // Reduced row echelon form.
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..rank {
        let Some(p) = (row..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(row, p);
        let lead = rows[row][col];
        for v in rows[row].iter_mut() {
            *v /= lead;
        }
        for i in 0..rows.len() {
            if i != row && !rows[i][col].is_zero() {
                let f = rows[i][col];
                let pivot_row = rows[row].clone();
                for (a, b) in rows[i].iter_mut().zip(pivot_row) {
                    *a -= f * b;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == rows.len() {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in (0..rank).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Rational64::zero(); rank];
        v[free] = Rational64::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -rows[r][free];
        }
        let denom_lcm = v.iter().fold(1i64, |acc, x| num_integer_lcm(acc, *x.denom()));
        basis.push(
            v.iter()
                .map(|x| (x * Rational64::from_integer(denom_lcm)).to_integer())
                .collect(),
        );
    }
    basis
}

fn num_integer_lcm(a: i64, b: i64) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    (a / gcd(a, b) * b).abs()
}

#[derive(Clone)]
pub(super) struct Ball {
    radius: usize,
    relator_names: Vec<String>,
    #[cfg_attr(not(test), allow(dead_code))]
    dehn: Dehn,
    #[cfg_attr(not(test), allow(dead_code))]
    invariants: Vec<Vec<i64>>,
    words: Vec<GroupElement>,
    index: HashMap<GroupElement, u32>,
    /// `neighbors[id * nletters + rank]`: id of `word(id)·letter`, if inside.
    neighbors: Vec<Option<u32>>,
    nletters: usize,
}

impl Ball {
    pub(super) fn build(rank: usize, relators: Vec<(String, Vec<Letter>)>, radius: usize) -> Result<Self> {
        let (relator_names, rels): (Vec<String>, Vec<Vec<Letter>>) = relators.into_iter().unzip();
        let rels: Vec<Vec<Letter>> = rels.into_iter().map(cyclically_reduce).collect();
        let dehn = Dehn::new(&rels);
        let invariants = abelian_invariants(rank, &rels);
        let nletters = 2 * rank;

        let key_of = |w: &[Letter]| -> Vec<i64> {
            invariants
                .iter()
                .map(|f| w.iter().map(|l| l.sign() * f[l.generator()]).sum())
                .collect()
        };

        let mut words = vec![GroupElement::identity()];
        let mut index = HashMap::new();
        index.insert(GroupElement::identity(), 0u32);
        let mut neighbors: Vec<Option<u32>> = vec![None; nletters];
        let mut buckets: HashMap<(usize, Vec<i64>), Vec<u32>> = HashMap::new();
        buckets.insert((0, key_of(&[])), vec![0]);
        let mut sphere = vec![0u32];

        for k in 0..=radius {
            let mut next = Vec::new();
            for &u in &sphere {
                let uw = words[u as usize].letters.clone();
                for r in 0..nletters {
                    let l = Letter::from_rank(r);
                    let nb = if uw.last() == Some(&l.inverse()) {
                        Some(index[&GroupElement::from_letters_unchecked(uw[..uw.len() - 1].to_vec())])
                    } else {
                        let mut cand = uw.clone();
                        cand.push(l);
                        let key = key_of(&cand);
                        let lo = k.saturating_sub(1);
                        let found = (lo..=k + 1).find_map(|len| {
                            buckets.get(&(len, key.clone())).and_then(|ids| {
                                ids.iter().copied().find(|&v| {
                                    let mut probe: Vec<Letter> = cand.iter().rev().map(|l| l.inverse()).collect();
                                    probe.extend_from_slice(&words[v as usize].letters);
                                    dehn.is_trivial(&probe)
                                })
                            })
                        });
                        match found {
                            Some(v) => Some(v),
                            None if k < radius => {
                                let id = words.len() as u32;
                                let e = GroupElement::from_letters_unchecked(cand);
                                index.insert(e.clone(), id);
                                words.push(e);
                                neighbors.extend(std::iter::repeat_n(None, nletters));
                                buckets.entry((k + 1, key)).or_default().push(id);
                                next.push(id);
                                Some(id)
                            }
                            None => None,
                        }
                    };
                    neighbors[u as usize * nletters + r] = nb;
                }
            }
            sphere = next;
            if sphere.is_empty() {
                break;
            }
        }

        Ok(Self {
            radius,
            relator_names,
            dehn,
            invariants,
            words,
            index,
            neighbors,
            nletters,
        })
    }

    pub(super) fn radius(&self) -> usize {
        self.radius
    }

    pub(super) fn relator_names(&self) -> &[String] {
        &self.relator_names
    }

    fn walk(&self, start: u32, letters: &[Letter]) -> Result<u32> {
        let mut cur = start;
        for l in letters {
            cur = self.neighbors[cur as usize * self.nletters + l.rank()]
                .ok_or(Error::BallExceeded { radius: self.radius })?;
        }
        Ok(cur)
    }

    fn id_of(&self, x: &GroupElement) -> Result<u32> {
        self.index.get(x).copied().ok_or_else(|| Error::InvalidWord {
            word: format!("{x:?}"),
            reason: "not a canonical element of this presentation".into(),
        })
    }

    pub(super) fn canonicalize(&self, letters: &[Letter]) -> Result<GroupElement> {
        let id = self.walk(0, letters)?;
        Ok(self.words[id as usize].clone())
    }

    pub(super) fn multiply(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        let id = self.walk(self.id_of(x)?, y.letters())?;
        Ok(self.words[id as usize].clone())
    }

    pub(super) fn distance(&self, x: &GroupElement, y: &GroupElement) -> Result<usize> {
        let xi: Vec<Letter> = x.letters.iter().rev().map(|l| l.inverse()).collect();
        let start = self.walk(0, &xi)?;
        let id = self.walk(start, y.letters())?;
        Ok(self.words[id as usize].len())
    }

    pub(super) fn contains(&self, x: &GroupElement) -> bool {
        self.index.contains_key(x)
    }

    pub(super) fn elements_within(&self, r: usize) -> Result<Vec<GroupElement>> {
        if r > self.radius {
            return Err(Error::BallExceeded { radius: self.radius });
        }
        let mut out: Vec<GroupElement> = self.words.iter().filter(|w| w.len() <= r).cloned().collect();
        out.sort();
        Ok(out)
    }

    #[cfg(test)]
    pub(super) fn word_is_trivial(&self, word: &[Letter]) -> bool {
        self.dehn.is_trivial(word)
    }

    #[cfg(test)]
    pub(super) fn invariants(&self) -> &[Vec<i64>] {
        &self.invariants
    }
}

fn cyclically_reduce(word: Vec<Letter>) -> Vec<Letter> {
    let mut w = GroupElement::free_reduce(word).letters;
    while w.len() >= 2 && w[0] == w[w.len() - 1].inverse() {
        w.pop();
        w.remove(0);
    }
    w
}

#[cfg(test)]
mod tests {
    use crate::group::{default_generator_names, MarkedGroup};
    use crate::Error;

    fn sphere_sizes(g: &MarkedGroup, r: usize) -> Vec<usize> {
        let ball = g.ball(r).unwrap();
        (0..=r).map(|k| ball.iter().filter(|x| x.len() == k).count()).collect()
    }

    #[test]
    fn no_relators_matches_free_group() {
        let p = MarkedGroup::presentation(default_generator_names(2), &[], 4).unwrap();
        let f = MarkedGroup::free(2).unwrap();
        assert_eq!(p.ball(4).unwrap(), f.ball(4).unwrap());
        let x = p.parse_word("abb'a").unwrap();
        assert_eq!(p.format_word(&x), "aa");
    }

    #[test]
    fn z2_ball_is_l1_ball() {
        let g = MarkedGroup::presentation(default_generator_names(2), &["aba'b'"], 3).unwrap();
        assert_eq!(sphere_sizes(&g, 3), vec![1, 4, 8, 12]);
        // shortlex representative of ba is ab
        let ba = g.parse_word("ba").unwrap();
        assert_eq!(g.format_word(&ba), "ab");
        assert_eq!(g.word_length(&g.parse_word("a b a' b a").unwrap()), 3);
    }

    #[test]
    fn genus_two_surface_group_small_spheres() {
        let g = MarkedGroup::presentation(default_generator_names(4), &["aba'b'cdc'd'"], 4).unwrap();
        let s = sphere_sizes(&g, 4);
        assert_eq!(&s[..4], &[1, 8, 56, 392]);
        // Half-relator identification: ab = dcd'c'... a b a' b' = (c d c' d')⁻¹ = d c d' c'
        let x = g.parse_word("aba'b'").unwrap();
        let y = g.parse_word("dcd'c'").unwrap();
        assert_eq!(x, y);
        assert!(s[4] < 8 * 7 * 7 * 7);
    }

    #[test]
    fn queries_beyond_radius_fail() {
        let g = MarkedGroup::presentation(default_generator_names(2), &["aba'b'"], 2).unwrap();
        let x = g.parse_word("aa").unwrap();
        assert!(matches!(g.multiply(&x, &x), Err(Error::BallExceeded { radius: 2 })));
        assert!(g.parse_word("aaa").is_err());
        assert!(g.ball(3).is_err());
    }

    #[test]
    fn gromov_product_is_half_integer_in_odd_relator_groups() {
        // ⟨a, b | a³⟩-style odd relator gives odd cycles in the Cayley graph.
        let g = MarkedGroup::presentation(default_generator_names(2), &["aaa"], 3).unwrap();
        let a = g.parse_word("a").unwrap();
        let ai = g.parse_word("a'").unwrap();
        assert_eq!(g.distance(&a, &ai).unwrap(), 1);
        assert_eq!(g.gromov_product(&a, &ai).unwrap().to_f64(), 0.5);
    }

    #[test]
    fn abelian_invariants_of_surface_relator_are_full_rank() {
        let g = MarkedGroup::presentation(default_generator_names(2), &["aba'b'"], 1).unwrap();
        let crate::group::Backend::Presentation(ball) = &g.backend else {
            unreachable!()
        };
        assert_eq!(ball.invariants().len(), 2);
        let h = MarkedGroup::presentation(default_generator_names(2), &["aab"], 1).unwrap();
        let crate::group::Backend::Presentation(ball) = &h.backend else {
            unreachable!()
        };
        assert_eq!(ball.invariants().len(), 1);
        use crate::group::Letter;
        let (a, b) = (Letter::new(0, false), Letter::new(1, false));
        assert!(ball.word_is_trivial(&[a, a, b]));
        assert!(ball.word_is_trivial(&[a, b, a]));
        assert!(!ball.word_is_trivial(&[a, b]));
    }
}
