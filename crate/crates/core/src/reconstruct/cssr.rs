//! Statistical reconstruction from an observed symbol stream by causal-state
//! splitting: estimate next-symbol distributions for fixed-length histories,
//! group statistically indistinguishable histories, then split groups until
//! the symbol-successor map is unifilar.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashMap;

use crate::error::ReconstructError;
use crate::mechanics::{EpsilonMachine, MachineEdge};

pub const MIN_HISTORY_COUNT: u64 = 5;

fn symbol_label(b: u8) -> String {
    if b.is_ascii_graphic() {
        (b as char).to_string()
    } else {
        format!("0x{b:02X}")
    }
}

fn history_label(h: &[u8]) -> String {
    h.iter().map(|&b| symbol_label(b)).collect::<Vec<_>>().join("")
}

/// Two-sample chi-square p-value for two count vectors over the same symbols.
fn chi_square_p(a: &[u64], b: &[u64]) -> f64 {
    let total_a: u64 = a.iter().sum();
    let total_b: u64 = b.iter().sum();
    let grand = (total_a + total_b) as f64;
    if total_a == 0 || total_b == 0 {
        return 1.0;
    }
    let mut statistic = 0.0;
    let mut dof = 0usize;
    for k in 0..a.len() {
        let col = (a[k] + b[k]) as f64;
        if col == 0.0 {
            continue;
        }
        dof += 1;
        for (observed, row_total) in [(a[k] as f64, total_a as f64), (b[k] as f64, total_b as f64)]
        {
            let expected = row_total * col / grand;
            statistic += (observed - expected).powi(2) / expected;
        }
    }
    if dof <= 1 {
        return 1.0;
    }
    let dist = ChiSquared::new((dof - 1) as f64).expect("positive dof");
    1.0 - dist.cdf(statistic)
}

/// Reconstruct an ε-machine from a symbol sequence.
///
/// Histories of length `l_max` whose empirical next-symbol distributions are
/// indistinguishable at significance `alpha` share a causal state; states
/// are then split until each (state, symbol) pair has a unique successor.
pub fn reconstruct_from_sequence(
    seq: &[u8],
    l_max: usize,
    alpha: f64,
) -> Result<EpsilonMachine, ReconstructError> {
    assert!(l_max >= 1, "l_max must be at least 1");
    if seq.len() < l_max + 1 {
        return Err(ReconstructError::InsufficientData {
            history: String::new(),
            count: seq.len() as u64,
        });
    }

    let mut alphabet: Vec<u8> = seq.to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();
    let sym_index: HashMap<u8, usize> = alphabet.iter().enumerate().map(|(i, &b)| (b, i)).collect();

    // Next-symbol counts per length-l_max history.
    let mut counts: HashMap<&[u8], Vec<u64>> = HashMap::new();
    for window in seq.windows(l_max + 1) {
        let (history, next) = window.split_at(l_max);
        counts.entry(history).or_insert_with(|| vec![0; alphabet.len()])[sym_index[&next[0]]] += 1;
    }

    let mut histories: Vec<&[u8]> = counts.keys().copied().collect();
    histories.sort_unstable();
    for &h in &histories {
        let total: u64 = counts[h].iter().sum();
        if total < MIN_HISTORY_COUNT {
            return Err(ReconstructError::InsufficientData {
                history: history_label(h),
                count: total,
            });
        }
    }

    // Agglomerative grouping by the significance test.
    let mut cluster_of: HashMap<&[u8], usize> = HashMap::new();
    let mut pooled: Vec<Vec<u64>> = Vec::new();
    for &h in &histories {
        let mut assigned = None;
        for (c, pool) in pooled.iter().enumerate() {
            if chi_square_p(&counts[h], pool) >= alpha {
                assigned = Some(c);
                break;
            }
        }
        match assigned {
            Some(c) => {
                for (k, v) in counts[h].iter().enumerate() {
                    pooled[c][k] += v;
                }
                cluster_of.insert(h, c);
            }
            None => {
                pooled.push(counts[h].clone());
                cluster_of.insert(h, pooled.len() - 1);
            }
        }
    }

    // Successor of history h on symbol y is the history (h + y)[1..].
    let successor_cluster = |cluster_of: &HashMap<&[u8], usize>, h: &[u8], y: u8| -> Option<usize> {
        let mut next: Vec<u8> = h[1..].to_vec();
        next.push(y);
        cluster_of.get(next.as_slice()).copied()
    };

    // Split clusters until histories in a cluster agree on every successor.
    loop {
        let mut next_assignment: HashMap<&[u8], usize> = HashMap::new();
        let mut key_to_cluster: HashMap<(usize, Vec<(usize, Option<usize>)>), usize> =
            HashMap::new();
        for &h in &histories {
            let mut profile: Vec<(usize, Option<usize>)> = Vec::new();
            for (k, &c) in counts[h].iter().enumerate() {
                if c > 0 {
                    profile.push((k, successor_cluster(&cluster_of, h, alphabet[k])));
                }
            }
            let key = (cluster_of[h], profile);
            let next = key_to_cluster.len();
            next_assignment.insert(h, *key_to_cluster.entry(key).or_insert(next));
        }
        if histories.iter().all(|h| next_assignment[h] == cluster_of[h]) {
            break;
        }
        cluster_of = next_assignment;
    }

    // Assemble: one state per cluster, pooled next-symbol probabilities,
    // successors from any member (all agree after splitting).
    let cluster_count = cluster_of.values().max().map_or(0, |&c| c + 1);
    let mut members: Vec<Vec<&[u8]>> = vec![Vec::new(); cluster_count];
    for &h in &histories {
        members[cluster_of[h]].push(h);
    }
    // Canonical order by lexicographically smallest member history.
    let mut order: Vec<usize> = (0..cluster_count).collect();
    order.retain(|&c| !members[c].is_empty());
    order.sort_by_key(|&c| members[c][0]);
    let mut rank = vec![usize::MAX; cluster_count];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }

    let states: Vec<String> = order
        .iter()
        .map(|&c| history_label(members[c][0]))
        .collect();
    let mut transitions = Vec::new();
    for &c in &order {
        let mut pool = vec![0u64; alphabet.len()];
        for &h in &members[c] {
            for (k, v) in counts[h].iter().enumerate() {
                pool[k] += v;
            }
        }
        let total: u64 = pool.iter().sum();
        for (k, &count) in pool.iter().enumerate() {
            if count == 0 {
                continue;
            }
            // First member with a defined successor decides the target.
            let target = members[c]
                .iter()
                .find_map(|&h| successor_cluster(&cluster_of, h, alphabet[k]));
            if let Some(target) = target {
                transitions.push(MachineEdge {
                    from: rank[c],
                    symbol: k,
                    to: rank[target],
                    p: count as f64 / total as f64,
                });
            }
        }
    }

    // Edges dropped at the stream tail can leave rows slightly short;
    // renormalize per state.
    for s in 0..states.len() {
        let sum: f64 = transitions
            .iter()
            .filter(|e| e.from == s)
            .map(|e| e.p)
            .sum();
        if sum > 0.0 && (sum - 1.0).abs() > 0.0 {
            for e in transitions.iter_mut().filter(|e| e.from == s) {
                e.p /= sum;
            }
        }
    }

    let machine = EpsilonMachine {
        alphabet: alphabet.iter().map(|&b| symbol_label(b)).collect(),
        states,
        transitions,
    };
    machine.validate().map_err(ReconstructError::Mechanics)?;
    Ok(machine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::{statistical_complexity, Unifilar};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn sample_golden_mean(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = 0u8; // 0 = may emit 1, 1 = must emit 0
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            if state == 0 {
                if rng.random::<bool>() {
                    out.push(b'1');
                    state = 1;
                } else {
                    out.push(b'0');
                }
            } else {
                out.push(b'0');
                state = 0;
            }
        }
        out
    }

    #[test]
    fn all_zeros_gives_single_state() {
        let seq = vec![b'0'; 1000];
        let machine = reconstruct_from_sequence(&seq, 3, 0.001).unwrap();
        assert_eq!(machine.states.len(), 1);
        assert_eq!(statistical_complexity(&machine).unwrap(), 0.0);
    }

    #[test]
    fn iid_uniform_bits_give_single_state() {
        let mut hits = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let seq: Vec<u8> = (0..200_000)
                .map(|_| if rng.random::<bool>() { b'1' } else { b'0' })
                .collect();
            let machine = reconstruct_from_sequence(&seq, 4, 0.001).unwrap();
            if machine.states.len() == 1 {
                hits += 1;
            }
        }
        assert!(hits > 10, "only {hits}/20 seeds collapsed to one state");
    }

    #[test]
    fn golden_mean_recovered() {
        let mut hits = 0;
        for seed in 0..20u64 {
            let seq = sample_golden_mean(1_000_000, seed);
            let machine = reconstruct_from_sequence(&seq, 4, 0.001).unwrap();
            assert!(machine.is_unifilar());
            if machine.states.len() == 2 {
                let c = statistical_complexity(&machine).unwrap();
                if (c - 0.9182958340544896).abs() < 0.02 {
                    hits += 1;
                }
            }
        }
        assert!(hits > 10, "only {hits}/20 seeds recovered the process");
    }

    #[test]
    fn insufficient_data_reported() {
        let seq = b"010203040506070809".to_vec();
        assert!(matches!(
            reconstruct_from_sequence(&seq, 4, 0.01),
            Err(ReconstructError::InsufficientData { .. })
        ));
    }
}
