//! Checker for restricted α-strong adjacency faithfulness.
//!
//! For every topological ordering τ and prefix length m, the induced subgraph
//! on the first m nodes of τ must keep (i) every edge weight above `3α` and
//! (ii) every effective influence between a node and a member of its
//! (structural) Markov blanket above `3α / κ(α)`, where
//! `κ(α) = 1 − 2 / (1 + 9 |children| α²)` for non-terminal nodes and 1 for
//! terminal ones. A non-positive κ makes the bound vacuous; such pairs are
//! still required to have a non-zero effective influence, which is the
//! partial-correlation form of the condition.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{effective_influence, Dag, Gbn};

/// Default cap on the number of topological orderings examined.
pub const DEFAULT_ORDER_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsafCondition {
    /// An edge weight with `|w| ≤ 3α`.
    EdgeWeight,
    /// An effective influence with `|w̃| ≤ 3α / κ(α)` inside a prefix subgraph.
    EffectiveInfluence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsafWitness {
    pub condition: RsafCondition,
    /// Ordering whose prefix exposes the violation.
    pub ordering: Vec<usize>,
    pub prefix_size: usize,
    /// `(i, j)` in original labels.
    pub pair: (usize, usize),
    pub observed: f64,
    pub required: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsafReport {
    pub alpha: f64,
    pub satisfied: bool,
    pub violating_witness: Option<RsafWitness>,
    pub orderings_checked: usize,
    pub exhaustive: bool,
    /// Number of (prefix, node) pairs where `κ(α) ≤ 0` reduced condition (ii)
    /// to `w̃ ≠ 0`.
    pub vacuous_kappa: usize,
}

pub fn kappa(alpha: f64, children: usize) -> f64 {
    if children == 0 {
        1.0
    } else {
        1.0 - 2.0 / (1.0 + 9.0 * children as f64 * alpha * alpha)
    }
}

/// Checks both RSAF conditions. Orderings are enumerated exhaustively when
/// `p ≤ 8` or there are at most `order_budget` of them; otherwise
/// `order_budget` random topological sorts (seeded by `seed`) are examined
/// and the report is marked non-exhaustive.
pub fn check_rsaf(g: &Gbn, alpha: f64, order_budget: usize, seed: u64) -> RsafReport {
    let dag = g.dag();
    let b = g.weights();
    let p = dag.p();
    let mut report = RsafReport {
        alpha,
        satisfied: true,
        violating_witness: None,
        orderings_checked: 0,
        exhaustive: true,
        vacuous_kappa: 0,
    };

    let base_order = dag.topological_order().expect("Gbn holds a valid DAG");
    for &(c, q) in dag.edges() {
        let w = b[(c, q)].abs();
        if !(w > 3.0 * alpha) {
            report.satisfied = false;
            report.violating_witness = Some(RsafWitness {
                condition: RsafCondition::EdgeWeight,
                ordering: base_order.clone(),
                prefix_size: p,
                pair: (c, q),
                observed: w,
                required: 3.0 * alpha,
            });
            report.orderings_checked = 1;
            return report;
        }
    }

    let orderings = if p <= 8 {
        all_orderings(dag, usize::MAX).expect("unbounded enumeration")
    } else {
        match all_orderings(dag, order_budget.max(1)) {
            Some(all) => all,
            None => {
                report.exhaustive = false;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..order_budget.max(1))
                    .map(|_| random_ordering(dag, &mut rng))
                    .collect()
            }
        }
    };
    report.orderings_checked = orderings.len();

    // Each distinct prefix vertex set is checked once, smallest first, with
    // the first ordering that produced it as its representative.
    let mut prefixes: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
    for (k, tau) in orderings.iter().enumerate() {
        for m in 1..=p {
            let mut set = tau[..m].to_vec();
            set.sort_unstable();
            prefixes.entry((m, set)).or_insert(k);
        }
    }

    for ((m, set), k) in prefixes {
        let sub = dag.induced(&set);
        let sub_b = b.select(&set, &set);
        for i in 0..m {
            let kids = sub.children(i).len();
            let kap = kappa(alpha, kids);
            let required = if kap > 0.0 {
                3.0 * alpha / kap
            } else {
                report.vacuous_kappa += 1;
                0.0
            };
            for j in sub.structural_blanket(i) {
                let observed = effective_influence(&sub_b, i, j).abs();
                let violated = if kap > 0.0 {
                    !(observed > required)
                } else {
                    observed <= crate::model::ZERO_TOL
                };
                if violated {
                    report.satisfied = false;
                    report.violating_witness = Some(RsafWitness {
                        condition: RsafCondition::EffectiveInfluence,
                        ordering: orderings[k].clone(),
                        prefix_size: m,
                        pair: (set[i], set[j]),
                        observed,
                        required,
                    });
                    return report;
                }
            }
        }
    }
    report
}

/// Every topological ordering, or `None` once more than `limit` exist.
fn all_orderings(dag: &Dag, limit: usize) -> Option<Vec<Vec<usize>>> {
    let p = dag.p();
    let mut indeg = vec![0usize; p];
    let mut kids = vec![Vec::new(); p];
    for &(c, q) in dag.edges() {
        indeg[c] += 1;
        kids[q].push(c);
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(p);
    let mut used = vec![false; p];
    if extend(&mut prefix, &mut used, &mut indeg, &kids, &mut out, limit) {
        Some(out)
    } else {
        None
    }
}

fn extend(
    prefix: &mut Vec<usize>,
    used: &mut [bool],
    indeg: &mut [usize],
    kids: &[Vec<usize>],
    out: &mut Vec<Vec<usize>>,
    limit: usize,
) -> bool {
    if prefix.len() == used.len() {
        if out.len() >= limit {
            return false;
        }
        out.push(prefix.clone());
        return true;
    }
    for v in 0..used.len() {
        if used[v] || indeg[v] != 0 {
            continue;
        }
        used[v] = true;
        prefix.push(v);
        kids[v].iter().for_each(|&c| indeg[c] -= 1);
        let ok = extend(prefix, used, indeg, kids, out, limit);
        kids[v].iter().for_each(|&c| indeg[c] += 1);
        prefix.pop();
        used[v] = false;
        if !ok {
            return false;
        }
    }
    true
}

/// Kahn's algorithm choosing uniformly among the currently available sources.
fn random_ordering<R: Rng>(dag: &Dag, rng: &mut R) -> Vec<usize> {
    let p = dag.p();
    let mut indeg = vec![0usize; p];
    let mut kids = vec![Vec::new(); p];
    for &(c, q) in dag.edges() {
        indeg[c] += 1;
        kids[q].push(c);
    }
    let mut ready: BTreeSet<usize> = (0..p).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(p);
    while !ready.is_empty() {
        let pick = rng.random_range(0..ready.len());
        let v = *ready.iter().nth(pick).expect("index in range");
        ready.remove(&v);
        order.push(v);
        for &c in &kids[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancelling_pair_is_a_violation() {
        // 1 -> 0 (0.25), 0 -> 3, 1 -> 3 (0.5 each), 1 -> 2 (0.5)
        let g = Gbn::equal_variance(4, &[(0, 1, 0.25), (3, 0, 0.5), (3, 1, 0.5), (2, 1, 0.5)], 1.0).unwrap();
        let r = check_rsaf(&g, 0.05, DEFAULT_ORDER_BUDGET, 0);
        assert!(!r.satisfied);
        assert!(r.exhaustive);
        let w = r.violating_witness.unwrap();
        assert_eq!(w.condition, RsafCondition::EffectiveInfluence);
        assert_eq!(w.prefix_size, 3);
        let mut nodes = w.ordering[..3].to_vec();
        nodes.sort_unstable();
        assert_eq!(nodes, vec![0, 1, 3]);
        assert_eq!(w.observed, 0.0);
        assert!(w.observed <= w.required);
        let pair = (w.pair.0.min(w.pair.1), w.pair.0.max(w.pair.1));
        assert_eq!(pair, (0, 1));
    }

    #[test]
    fn chain_satisfies_with_vacuous_kappa() {
        let g = Gbn::equal_variance(2, &[(1, 0, 0.5)], 1.0).unwrap();
        assert!(kappa(0.1, 1) < 0.0);
        let r = check_rsaf(&g, 0.1, DEFAULT_ORDER_BUDGET, 0);
        assert!(r.satisfied);
        assert!(r.vacuous_kappa > 0);
        assert_eq!(r.orderings_checked, 1);
    }

    #[test]
    fn boundary_weight_fails() {
        let g = Gbn::equal_variance(2, &[(1, 0, 0.3)], 1.0).unwrap();
        let r = check_rsaf(&g, 0.1, DEFAULT_ORDER_BUDGET, 0);
        assert!(!r.satisfied);
        let w = r.violating_witness.unwrap();
        assert_eq!(w.condition, RsafCondition::EdgeWeight);
        assert!(w.observed <= w.required);
    }

    #[test]
    fn sampling_kicks_in_over_budget() {
        // 10 isolated nodes have 10! orderings.
        let g = Gbn::equal_variance(10, &[], 1.0).unwrap();
        let r = check_rsaf(&g, 0.1, 50, 7);
        assert!(!r.exhaustive);
        assert_eq!(r.orderings_checked, 50);
        assert!(r.satisfied);
        assert_eq!(r, check_rsaf(&g, 0.1, 50, 7));
    }

    #[test]
    fn ordering_enumeration_counts() {
        let d = Dag::new(3, [(2, 0), (2, 1)]).unwrap();
        assert_eq!(all_orderings(&d, usize::MAX).unwrap().len(), 2);
        assert!(all_orderings(&Dag::empty(4), 10).is_none());
        assert_eq!(all_orderings(&Dag::empty(4), 24).unwrap().len(), 24);
    }
}
