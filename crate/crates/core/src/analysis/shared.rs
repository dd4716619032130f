//! Shared-structure scoring between two transducers: the size of the largest
//! common label-preserving edge substructure under an injective state
//! mapping, normalized by the larger edge count. Exact branch-and-bound for
//! small machines, greedy label-guided matching above the size cap.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::mechanics::EpsilonTransducer;

/// Largest state count for which the exact search runs.
pub const EXACT_STATE_CAP: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedStructureScore {
    pub pair: (String, String),
    /// matched / max(edge counts), in [0, 1].
    pub score: f64,
    pub matched_edges: usize,
    pub max_edges: usize,
    /// State mapping of the witness substructure: (state of a, state of b).
    pub witness: Vec<(usize, usize)>,
    /// False when the greedy fallback produced a lower bound only.
    pub exact: bool,
}

/// Edge with interned (input, output) label.
#[derive(Debug, Clone, Copy)]
struct Edge {
    from: usize,
    to: usize,
    label: usize,
}

fn intern_edges(
    t: &EpsilonTransducer,
    labels: &mut HashMap<(String, String), usize>,
) -> Vec<Edge> {
    // Collapsed input classes carry their size in the label ("a[5]"); the
    // size is presentation detail, not structure, so it is ignored here.
    let base = |label: &str| -> String {
        label.split('[').next().unwrap_or(label).to_string()
    };
    t.transitions
        .iter()
        .filter(|e| e.p > 0.0)
        .map(|e| {
            let key = (base(&t.inputs[e.input]), t.outputs[e.output].clone());
            let next = labels.len();
            let label = *labels.entry(key).or_insert(next);
            Edge {
                from: e.from,
                to: e.to,
                label,
            }
        })
        .collect()
}

/// Matches between two edge sets under a fixed state mapping: per mapped
/// state pair and label, min of the two multiplicities.
fn matches_under(
    a_edges: &[Edge],
    b_edges: &[Edge],
    map_ab: &[Option<usize>],
) -> usize {
    let mut a_count: HashMap<(usize, usize, usize), usize> = HashMap::new();
    for e in a_edges {
        if let (Some(f), Some(t)) = (map_ab[e.from], map_ab[e.to]) {
            *a_count.entry((f, t, e.label)).or_insert(0) += 1;
        }
    }
    let mut b_count: HashMap<(usize, usize, usize), usize> = HashMap::new();
    for e in b_edges {
        *b_count.entry((e.from, e.to, e.label)).or_insert(0) += 1;
    }
    a_count
        .iter()
        .map(|(k, &c)| c.min(b_count.get(k).copied().unwrap_or(0)))
        .sum()
}

/// Node budget for the exact search; exhausting it downgrades the result to
/// a (still valid) lower bound.
const SEARCH_NODE_BUDGET: u64 = 2_000_000;

struct Search<'a> {
    a_edges: &'a [Edge],
    b_edges: &'a [Edge],
    /// Order in which a-states get assigned: by incident edge count, so the
    /// bound bites early.
    order: Vec<usize>,
    /// candidates[u]: b-states with any label overlap, best first.
    candidates: Vec<Vec<usize>>,
    /// b_label_total[l]: how many b-edges carry label l.
    b_label_total: HashMap<usize, usize>,
    nodes: u64,
    complete: bool,
    best: usize,
    best_map: Vec<Option<usize>>,
}

impl Search<'_> {
    /// Admissible upper bound: matches already fixed, plus — per label — the
    /// smaller of (pending a-edges, all b-edges) with that label. An a-edge
    /// is pending while either endpoint is still unassigned.
    fn bound(&self, assigned: &[bool], current: usize) -> usize {
        let mut pending: HashMap<usize, usize> = HashMap::new();
        for e in self.a_edges {
            if !(assigned[e.from] && assigned[e.to]) {
                *pending.entry(e.label).or_insert(0) += 1;
            }
        }
        let headroom: usize = pending
            .iter()
            .map(|(l, &n)| n.min(self.b_label_total.get(l).copied().unwrap_or(0)))
            .sum();
        current + headroom
    }

    fn descend(
        &mut self,
        depth: usize,
        map_ab: &mut Vec<Option<usize>>,
        used_b: &mut Vec<bool>,
        assigned: &mut Vec<bool>,
    ) {
        self.nodes += 1;
        if self.nodes > SEARCH_NODE_BUDGET {
            self.complete = false;
            return;
        }
        let current = matches_under(self.a_edges, self.b_edges, map_ab);
        if current > self.best {
            self.best = current;
            self.best_map = map_ab.clone();
        }
        if depth == self.order.len() {
            return;
        }
        if self.bound(assigned, current) <= self.best {
            return;
        }
        let u = self.order[depth];
        assigned[u] = true;
        for i in 0..self.candidates[u].len() {
            let w = self.candidates[u][i];
            if used_b[w] {
                continue;
            }
            map_ab[u] = Some(w);
            used_b[w] = true;
            self.descend(depth + 1, map_ab, used_b, assigned);
            used_b[w] = false;
            map_ab[u] = None;
        }
        // Also allow u to stay unmapped.
        self.descend(depth + 1, map_ab, used_b, assigned);
        assigned[u] = false;
    }
}

fn exact_match(
    a_edges: &[Edge],
    b_edges: &[Edge],
    a_states: usize,
    b_states: usize,
) -> (usize, Vec<Option<usize>>, bool) {
    let mut degree = vec![0usize; a_states];
    for e in a_edges {
        degree[e.from] += 1;
        degree[e.to] += 1;
    }
    let mut order: Vec<usize> = (0..a_states).collect();
    order.sort_by_key(|&s| std::cmp::Reverse(degree[s]));

    // Incident label multisets, for candidate filtering and ordering.
    let incident = |edges: &[Edge], n: usize| -> Vec<HashMap<usize, usize>> {
        let mut v = vec![HashMap::new(); n];
        for e in edges {
            *v[e.from].entry(e.label).or_insert(0) += 1;
            *v[e.to].entry(e.label).or_insert(0) += 1;
        }
        v
    };
    let inc_a = incident(a_edges, a_states);
    let inc_b = incident(b_edges, b_states);
    let candidates: Vec<Vec<usize>> = (0..a_states)
        .map(|u| {
            let mut with_compat: Vec<(usize, usize)> = (0..b_states)
                .filter_map(|w| {
                    let overlap: usize = inc_a[u]
                        .iter()
                        .map(|(l, &c)| c.min(inc_b[w].get(l).copied().unwrap_or(0)))
                        .sum();
                    (overlap > 0).then_some((overlap, w))
                })
                .collect();
            with_compat.sort_by_key(|&(overlap, w)| (std::cmp::Reverse(overlap), w));
            with_compat.into_iter().map(|(_, w)| w).collect()
        })
        .collect();

    let mut b_label_total: HashMap<usize, usize> = HashMap::new();
    for e in b_edges {
        *b_label_total.entry(e.label).or_insert(0) += 1;
    }

    let mut search = Search {
        a_edges,
        b_edges,
        order,
        candidates,
        b_label_total,
        nodes: 0,
        complete: true,
        best: 0,
        best_map: vec![None; a_states],
    };
    search.descend(
        0,
        &mut vec![None; a_states],
        &mut vec![false; b_states],
        &mut vec![false; a_states],
    );
    (search.best, search.best_map, search.complete)
}

/// Greedy lower bound: repeatedly assign the state pair with the best
/// immediate match gain, breaking ties by static label compatibility, then
/// by index.
fn greedy_match(
    a_edges: &[Edge],
    b_edges: &[Edge],
    a_states: usize,
    b_states: usize,
) -> (usize, Vec<Option<usize>>) {
    // Static compatibility: multiset overlap of incident labels.
    let incident = |edges: &[Edge], n: usize| -> Vec<HashMap<usize, usize>> {
        let mut v = vec![HashMap::new(); n];
        for e in edges {
            *v[e.from].entry(e.label).or_insert(0) += 1;
            *v[e.to].entry(e.label).or_insert(0) += 1;
        }
        v
    };
    let inc_a = incident(a_edges, a_states);
    let inc_b = incident(b_edges, b_states);
    let compat = |u: usize, w: usize| -> usize {
        inc_a[u]
            .iter()
            .map(|(l, &c)| c.min(inc_b[w].get(l).copied().unwrap_or(0)))
            .sum()
    };

    let mut map_ab: Vec<Option<usize>> = vec![None; a_states];
    let mut used_b = vec![false; b_states];
    let mut current = 0usize;
    loop {
        let mut best: Option<(usize, usize, usize, usize)> = None; // gain, compat, u, w
        for u in 0..a_states {
            if map_ab[u].is_some() {
                continue;
            }
            for w in 0..b_states {
                if used_b[w] {
                    continue;
                }
                map_ab[u] = Some(w);
                let gain = matches_under(a_edges, b_edges, &map_ab) - current;
                map_ab[u] = None;
                let c = compat(u, w);
                if c == 0 && gain == 0 {
                    continue;
                }
                let candidate = (gain, c, usize::MAX - u, usize::MAX - w);
                if best.map_or(true, |(g, cc, bu, bw)| candidate > (g, cc, bu, bw)) {
                    best = Some(candidate);
                }
            }
        }
        match best {
            Some((gain, _, bu, bw)) => {
                let (u, w) = (usize::MAX - bu, usize::MAX - bw);
                map_ab[u] = Some(w);
                used_b[w] = true;
                current += gain;
                if map_ab.iter().all(|m| m.is_some()) || used_b.iter().all(|&b| b) {
                    break;
                }
            }
            None => break,
        }
    }
    (matches_under(a_edges, b_edges, &map_ab), map_ab)
}

pub fn shared_structure(a: &EpsilonTransducer, b: &EpsilonTransducer) -> SharedStructureScore {
    let mut labels = HashMap::new();
    let a_edges = intern_edges(a, &mut labels);
    let b_edges = intern_edges(b, &mut labels);
    let max_edges = a_edges.len().max(b_edges.len());
    if max_edges == 0 {
        return SharedStructureScore {
            pair: (String::new(), String::new()),
            score: 1.0,
            matched_edges: 0,
            max_edges: 0,
            witness: Vec::new(),
            exact: true,
        };
    }

    // Map from the smaller side for a shallower search tree; the common
    // substructure itself is symmetric.
    let swap = a.states.len() > b.states.len();
    let (xe, ye, xs, ys) = if swap {
        (&b_edges, &a_edges, b.states.len(), a.states.len())
    } else {
        (&a_edges, &b_edges, a.states.len(), b.states.len())
    };

    let greedy_best = || {
        let forward = greedy_match(xe, ye, xs, ys);
        let backward = greedy_match(ye, xe, ys, xs);
        if backward.0 > forward.0 {
            let mut flipped = vec![None; xs];
            for (w, m) in backward.1.iter().enumerate() {
                if let Some(u) = m {
                    flipped[*u] = Some(w);
                }
            }
            (matches_under(xe, ye, &flipped), flipped)
        } else {
            forward
        }
    };

    let (matched, map_xy, exact) = if xs.max(ys) <= EXACT_STATE_CAP {
        let (m, map, complete) = exact_match(xe, ye, xs, ys);
        if complete {
            (m, map, true)
        } else {
            // Budget ran out: the truncated search is still a lower bound;
            // keep the better of it and the greedy result.
            let (gm, gmap) = greedy_best();
            if gm > m {
                (gm, gmap, false)
            } else {
                (m, map, false)
            }
        }
    } else {
        let (gm, gmap) = greedy_best();
        (gm, gmap, false)
    };

    let mut witness: Vec<(usize, usize)> = map_xy
        .iter()
        .enumerate()
        .filter_map(|(u, m)| m.map(|w| if swap { (w, u) } else { (u, w) }))
        .collect();
    witness.sort_unstable();
    SharedStructureScore {
        pair: (String::new(), String::new()),
        score: matched as f64 / max_edges as f64,
        matched_edges: matched,
        max_edges,
        witness,
        exact,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::TransducerEdge;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_transducer(states: usize, edges: usize, labels: usize, seed: u64) -> EpsilonTransducer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let transitions = (0..edges)
            .map(|_| TransducerEdge {
                from: rng.random_range(0..states),
                input: rng.random_range(0..labels),
                output: rng.random_range(0..labels),
                to: rng.random_range(0..states),
                p: 1.0,
            })
            .collect();
        EpsilonTransducer {
            inputs: (0..labels).map(|i| format!("x{i}")).collect(),
            input_multiplicity: vec![1; labels],
            outputs: (0..labels).map(|i| format!("y{i}")).collect(),
            states: (0..states).map(|i| format!("s{i}")).collect(),
            transitions,
        }
    }

    #[test]
    fn identical_machines_score_one() {
        let t = random_transducer(5, 10, 3, 1);
        let s = shared_structure(&t, &t);
        assert_eq!(s.score, 1.0);
        assert!(s.exact);
    }

    #[test]
    fn disjoint_output_alphabets_score_zero() {
        let a = random_transducer(4, 8, 2, 2);
        let mut b = random_transducer(4, 8, 2, 3);
        b.outputs = vec!["z0".into(), "z1".into()];
        let s = shared_structure(&a, &b);
        assert_eq!(s.score, 0.0);
    }

    #[test]
    fn symmetric_over_random_pairs() {
        for seed in 0..100u64 {
            let a = random_transducer(4, 7, 2, 2 * seed);
            let b = random_transducer(5, 8, 2, 2 * seed + 1);
            let ab = shared_structure(&a, &b);
            let ba = shared_structure(&b, &a);
            assert_eq!(ab.score, ba.score, "seed {seed}");
            assert_eq!(ab.matched_edges, ba.matched_edges);
        }
    }

    #[test]
    fn greedy_is_a_lower_bound() {
        for seed in 0..30u64 {
            let a = random_transducer(6, 10, 3, 100 + 2 * seed);
            let b = random_transducer(6, 10, 3, 101 + 2 * seed);
            let mut labels = HashMap::new();
            let ae = intern_edges(&a, &mut labels);
            let be = intern_edges(&b, &mut labels);
            let (exact, _, complete) = exact_match(&ae, &be, 6, 6);
            assert!(complete);
            let (greedy, _) = greedy_match(&ae, &be, 6, 6);
            assert!(greedy <= exact, "seed {seed}: greedy {greedy} > exact {exact}");
        }
    }

    #[test]
    fn witness_is_injective() {
        let a = random_transducer(6, 12, 2, 9);
        let b = random_transducer(6, 12, 2, 10);
        let s = shared_structure(&a, &b);
        let mut lhs: Vec<usize> = s.witness.iter().map(|&(u, _)| u).collect();
        let mut rhs: Vec<usize> = s.witness.iter().map(|&(_, w)| w).collect();
        lhs.dedup();
        rhs.sort_unstable();
        rhs.dedup();
        assert_eq!(lhs.len(), s.witness.len());
        assert_eq!(rhs.len(), s.witness.len());
    }
}
