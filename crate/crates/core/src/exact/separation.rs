//! `𝒰^s` as an optimal partial matching.
//!
//! Two atoms `x`, `y` can be sent to a common target by perturbations of
//! size at most `⌊s⌋` iff `d(x, y) ≤ 2⌊s⌋`: one direction is the triangle
//! inequality, the other is [`perturbation_midpoint`]. The smallest
//! achievable `P(Z′₁ ≠ Z′₂)` is therefore the mass left unmatched by a
//! maximum flow through compatible pairs.

use std::collections::HashMap;

use super::flow::MaxFlow;
use super::{ConvolutionTable, TableKey};
use crate::error::{Error, Result};
use crate::group::{ElementPair, GroupElement, MarkedGroup};
use crate::scalar::Scalar;

/// Default cap on compatible edges in the flow network.
pub const DEFAULT_EDGE_CAP: u128 = 20_000_000;

/// Masses are scaled by 2^60 into integer capacities.
const SCALE: f64 = (1u64 << 60) as f64;

fn integer_radius(s: f64) -> Result<usize> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            range: "[0, ∞)",
        });
    }
    Ok(s.floor() as usize)
}

/// A common target `z` with `d(x, z) ≤ ⌊s⌋` and `d(y, z) ≤ ⌊s⌋`, built
/// coordinate-wise as `x_i · prefix(x_i⁻¹ y_i, ⌈d_i/2⌉)`; `None` when
/// `d(x, y) > 2⌊s⌋`. Exact on the free backend.
pub fn perturbation_midpoint(
    group: &MarkedGroup,
    x: &ElementPair,
    y: &ElementPair,
    s: f64,
) -> Result<Option<ElementPair>> {
    let r = integer_radius(s)?;
    if group.pair_distance(x, y)? > 2 * r {
        return Ok(None);
    }
    let mid = |a: &GroupElement, b: &GroupElement| -> Result<GroupElement> {
        let step = group.multiply(&group.inverse(a), b)?;
        let half = step.len().div_ceil(2);
        group.multiply(a, &group.geodesic_prefix(&step, half)?)
    };
    Ok(Some((mid(&x.0, &y.0)?, mid(&x.1, &y.1)?)))
}

/// `𝒰^s(t1, t2)` with the default edge cap.
pub fn separation_u<K: TableKey, T: Scalar>(
    group: &MarkedGroup,
    t1: &ConvolutionTable<K, T>,
    t2: &ConvolutionTable<K, T>,
    s: f64,
) -> Result<T> {
    separation_u_capped(group, t1, t2, s, DEFAULT_EDGE_CAP)
}

/// `𝒰^s(t1, t2) = 1 − M*`, with `M*` the largest mass of a partial coupling
/// supported on pairs at distance at most `2⌊s⌋`. Reported as the left
/// mass not carried by the maximum flow, so identical tables give 0.
pub fn separation_u_capped<K: TableKey, T: Scalar>(
    group: &MarkedGroup,
    t1: &ConvolutionTable<K, T>,
    t2: &ConvolutionTable<K, T>,
    s: f64,
    edge_cap: u128,
) -> Result<T> {
    let radius = 2 * integer_radius(s)?;
    let (left, right) = (t1.atoms(), t2.atoms());
    let edges = compatible_edges(group, left, right, radius, edge_cap)?;

    let (nl, nr) = (left.len(), right.len());
    let (source, sink) = (nl + nr, nl + nr + 1);
    let mut net = MaxFlow::with_edge_capacity(nl + nr + 2, edges.len() + nl + nr);
    let to_cap = |p: T| (p.as_f64() * SCALE).round() as u64;
    let mut left_caps = Vec::with_capacity(nl);
    for (i, (_, p)) in left.iter().enumerate() {
        let c = to_cap(*p);
        left_caps.push((net.add_edge(source, i, c), c));
    }
    for (j, (_, q)) in right.iter().enumerate() {
        net.add_edge(nl + j, sink, to_cap(*q));
    }
    for (i, j) in edges {
        net.add_edge(i as usize, nl + j as usize, MaxFlow::INFINITE);
    }
    net.max_flow(source, sink);

    let unmatched: u128 = left_caps.iter().map(|&(e, c)| (c - net.flow_on(e)) as u128).sum();
    let total: u128 = left_caps.iter().map(|&(_, c)| c as u128).sum();
    if unmatched > total {
        return Err(Error::FlowFailure("flow exceeds source capacity".into()));
    }
    let value = unmatched as f64 / SCALE;
    Ok(T::from_f64_lossy(value.clamp(0.0, 1.0)))
}

/// Compatible `(left, right)` index pairs. Either enumerates the radius-r
/// ball around each left atom and looks it up on the right, or scans the
/// right support directly, whichever touches fewer candidates.
fn compatible_edges<K: TableKey, T: Scalar>(
    group: &MarkedGroup,
    left: &[(K, T)],
    right: &[(K, T)],
    radius: usize,
    cap: u128,
) -> Result<Vec<(u32, u32)>> {
    if radius == 0 {
        // only identical keys are compatible
        let mut edges = Vec::new();
        let mut j = 0;
        for (i, (k, _)) in left.iter().enumerate() {
            while j < right.len() && right[j].0 < *k {
                j += 1;
            }
            if j < right.len() && right[j].0 == *k {
                edges.push((i as u32, j as u32));
            }
        }
        return Ok(edges);
    }

    let ball = group.ball(radius)?;
    let ball_candidates = (ball.len() as u128).pow(K::WORDS as u32);
    let per_left = ball_candidates.min(right.len() as u128);
    let projected = per_left * left.len() as u128;

    let mut edges: Vec<(u32, u32)> = Vec::new();
    let push = |edges: &mut Vec<(u32, u32)>, i: usize, j: usize| -> Result<()> {
        if edges.len() as u128 >= cap {
            return Err(Error::EdgeCapExceeded { projected, cap });
        }
        edges.push((i as u32, j as u32));
        Ok(())
    };

    if ball_candidates < right.len() as u128 && group.is_free() {
        let index: HashMap<&K, usize> = right.iter().enumerate().map(|(j, (k, _))| (k, j)).collect();
        let offsets = ball_offsets::<K>(&ball);
        for (i, (x, _)) in left.iter().enumerate() {
            let mut hits = Vec::new();
            for g in &offsets {
                let y = K::multiply(group, x, g)?;
                if let Some(&j) = index.get(&y) {
                    hits.push(j);
                }
            }
            hits.sort_unstable();
            for j in hits {
                push(&mut edges, i, j)?;
            }
        }
    } else {
        for (i, (x, _)) in left.iter().enumerate() {
            for (j, (y, _)) in right.iter().enumerate() {
                if K::distance(group, x, y)? <= radius {
                    push(&mut edges, i, j)?;
                }
            }
        }
    }
    Ok(edges)
}

/// Every key whose coordinates lie in `ball`.
fn ball_offsets<K: TableKey>(ball: &[GroupElement]) -> Vec<K> {
    let mut out: Vec<Vec<GroupElement>> = vec![Vec::new()];
    for _ in 0..K::WORDS {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                ball.iter().map(move |b| {
                    let mut v = prefix.clone();
                    v.push(b.clone());
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(K::from_words).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{convolve_pair_n, tv_distance};
    use crate::measures::{noisy_coupling, FiniteMeasure};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> MarkedGroup {
        MarkedGroup::free(2).unwrap()
    }

    /// Whether some `z` lies within `r` of both `x` and `y`, by listing the
    /// radius-r ball around `x` coordinate-wise and measuring with BFS-free
    /// reduced-word lengths.
    fn has_common_target(g: &MarkedGroup, x: &ElementPair, y: &ElementPair, r: usize) -> bool {
        let ball = g.ball(r).unwrap();
        let close = |a: &GroupElement, b: &GroupElement| {
            ball.iter().any(|h| {
                let z = g.multiply(a, h).unwrap();
                g.multiply(&g.inverse(&z), b).unwrap().len() <= r
            })
        };
        close(&x.0, &y.0) && close(&x.1, &y.1)
    }

    /// `1 − max flow` via max-flow/min-cut: min over left subsets `S` of
    /// `t1(L∖S) + t2(N(S))`.
    fn brute_force(
        g: &MarkedGroup,
        t1: &ConvolutionTable<ElementPair, f64>,
        t2: &ConvolutionTable<ElementPair, f64>,
        s: f64,
    ) -> f64 {
        let r = s.floor() as usize;
        let (l, rr) = (t1.atoms(), t2.atoms());
        let adj: Vec<Vec<bool>> = l
            .iter()
            .map(|(x, _)| rr.iter().map(|(y, _)| has_common_target(g, x, y, r)).collect())
            .collect();
        let mut best = f64::INFINITY;
        for mask in 0..(1u32 << l.len()) {
            let mut cut = 0.0;
            let mut nbr = vec![false; rr.len()];
            for (i, (_, p)) in l.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    cut += p;
                } else {
                    for (j, ok) in adj[i].iter().enumerate() {
                        nbr[j] |= ok;
                    }
                }
            }
            cut += rr
                .iter()
                .zip(&nbr)
                .filter(|(_, &b)| b)
                .map(|((_, q), _)| q)
                .sum::<f64>();
            best = best.min(cut);
        }
        1.0 - best
    }

    fn random_pair_table(rng: &mut ChaCha8Rng, g: &MarkedGroup) -> ConvolutionTable<ElementPair, f64> {
        let ball = g.ball(3).unwrap();
        let k = rng.random_range(1..=5);
        let atoms: Vec<(ElementPair, f64)> = (0..k)
            .map(|_| {
                let x = ball[rng.random_range(0..ball.len())].clone();
                let y = ball[rng.random_range(0..ball.len())].clone();
                ((x, y), rng.random_range(1..=20) as f64)
            })
            .collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        ConvolutionTable::from_atoms(1, atoms.into_iter().map(|(k, p)| (k, p / total))).unwrap()
    }

    #[test]
    fn flow_matches_brute_force() {
        let g = f2();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let t1 = random_pair_table(&mut rng, &g);
            let t2 = random_pair_table(&mut rng, &g);
            let s = rng.random_range(0.0..3.5);
            let u = separation_u(&g, &t1, &t2, s).unwrap();
            let oracle = brute_force(&g, &t1, &t2, s);
            assert!((u - oracle).abs() <= 1e-9, "s={s}: {u} vs {oracle}");
        }
    }

    #[test]
    fn hand_instance() {
        let g = f2();
        let id = g.identity();
        let a = g.parse_word("a").unwrap();
        let aa = g.parse_word("aa").unwrap();
        let t1 = ConvolutionTable::from_atoms(
            1,
            [
                ((id.clone(), id.clone()), 0.5),
                ((a.clone(), id.clone()), 0.25),
                ((aa.clone(), id.clone()), 0.25),
            ],
        )
        .unwrap();
        let t2 = ConvolutionTable::from_atoms(1, [((aa, id.clone()), 0.75), ((id.clone(), id.clone()), 0.25)]).unwrap();
        // s = 0: total variation
        assert!((separation_u(&g, &t1, &t2, 0.0).unwrap() - 0.5f64).abs() < 1e-15);
        // s = 1: everything within distance 2 is matchable
        assert_eq!(separation_u(&g, &t1, &t2, 1.0).unwrap(), 0.0);
        assert!((brute_force(&g, &t1, &t2, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_scale_is_total_variation_and_monotone() {
        let g = f2();
        let mu = FiniteMeasure::<f64>::uniform_generators(&g);
        let t1 = convolve_pair_n(&g, &noisy_coupling(&mu, 0.0).unwrap(), 3).unwrap();
        let t2 = convolve_pair_n(&g, &noisy_coupling(&mu, 1.0).unwrap(), 3).unwrap();
        let tv = tv_distance(&t1, &t2);
        let values: Vec<f64> = [0.0, 0.7, 1.0, 1.5, 2.0, 3.0]
            .iter()
            .map(|&s| separation_u(&g, &t1, &t2, s).unwrap())
            .collect();
        assert!((values[0] - tv).abs() < 1e-12);
        assert_eq!(values[0], values[1]);
        assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{values:?}");
        // supports have diameter at most 6 in each coordinate
        assert_eq!(*values.last().unwrap(), 0.0);
        assert_eq!(separation_u(&g, &t1, &t1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn both_edge_strategies_agree() {
        let g = f2();
        let mu = FiniteMeasure::<f64>::uniform_generators(&g);
        let t1 = convolve_pair_n(&g, &noisy_coupling(&mu, 0.2).unwrap(), 2).unwrap();
        let t2 = convolve_pair_n(&g, &noisy_coupling(&mu, 0.9).unwrap(), 2).unwrap();
        // radius 2: ball of 17 elements, 289 pair offsets > 169 right atoms -> scan
        let scan = separation_u(&g, &t1, &t2, 1.0).unwrap();
        let t3 = convolve_pair_n(&g, &noisy_coupling(&mu, 0.9).unwrap(), 4).unwrap();
        // 14641 right atoms -> ball lookup
        let lookup = separation_u(&g, &t1, &t3, 1.0).unwrap();
        let mut edges_scan = Vec::new();
        for (i, (x, _)) in t1.atoms().iter().enumerate() {
            for (j, (y, _)) in t3.atoms().iter().enumerate() {
                if g.pair_distance(x, y).unwrap() <= 2 {
                    edges_scan.push((i as u32, j as u32));
                }
            }
        }
        let edges_lookup = compatible_edges(&g, t1.atoms(), t3.atoms(), 2, u128::MAX).unwrap();
        assert_eq!(edges_scan, edges_lookup);
        assert!((0.0..=1.0).contains(&scan) && (0.0..=1.0).contains(&lookup));
    }

    #[test]
    fn edge_cap_is_enforced() {
        let g = f2();
        let mu = FiniteMeasure::<f64>::uniform_generators(&g);
        let t = convolve_pair_n(&g, &noisy_coupling(&mu, 0.5).unwrap(), 2).unwrap();
        assert!(matches!(
            separation_u_capped(&g, &t, &t, 1.0, 10),
            Err(Error::EdgeCapExceeded { cap: 10, .. })
        ));
        assert!(separation_u(&g, &t, &t, -1.0).is_err());
    }

    #[test]
    fn midpoints_exist_exactly_when_close() {
        let g = f2();
        let ball = g.ball(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let pick = |rng: &mut ChaCha8Rng| ball[rng.random_range(0..ball.len())].clone();
            let x = (pick(&mut rng), pick(&mut rng));
            let y = (pick(&mut rng), pick(&mut rng));
            let s: f64 = rng.random_range(0.0..4.0);
            let r = s.floor() as usize;
            let d = g.pair_distance(&x, &y).unwrap();
            match perturbation_midpoint(&g, &x, &y, s).unwrap() {
                Some(z) => {
                    assert!(d <= 2 * r);
                    assert!(g.pair_distance(&x, &z).unwrap() <= r);
                    assert!(g.pair_distance(&y, &z).unwrap() <= r);
                }
                None => {
                    assert!(d > 2 * r);
                    assert!(!has_common_target(&g, &x, &y, r));
                }
            }
        }
    }
}
