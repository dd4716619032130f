//! Building causal-state models: exact minimization of explicitly given
//! machines by partition refinement over the causal equivalence relation,
//! statistical reconstruction from observed symbol streams, and composition
//! of bundled tasks into environment transducers.

mod cssr;
mod task_model;

pub use cssr::reconstruct_from_sequence;
pub use task_model::{compose_task, transducer_from_task, DEFAULT_STATE_CAP};

use std::collections::HashMap;

use crate::error::ReconstructError;
use crate::mechanics::{EpsilonMachine, EpsilonTransducer, TransducerEdge, Unifilar};

/// A possibly non-minimal stochastic transducer awaiting minimization.
/// Same shape as [`EpsilonTransducer`] minus the guarantees.
pub type RawMachine = EpsilonTransducer;

const PROB_QUANTUM: f64 = 1e-12;

fn quantize(p: f64) -> i64 {
    (p / PROB_QUANTUM).round() as i64
}

/// Merge causally equivalent states of a unifilar transducer.
///
/// Partition refinement: initial blocks group states with identical
/// conditional output distributions per input; blocks are then split until
/// every (input, output) successor lands in a consistent block. The result
/// is minimal among unifilar presentations with the same conditional output
/// behavior at every depth. Block order follows each block's behavior
/// signature, then its smallest member, so output is canonical.
pub fn minimize(raw: &RawMachine) -> Result<EpsilonTransducer, ReconstructError> {
    let witnesses = raw.unifilarity_witnesses();
    if !witnesses.is_empty() {
        return Err(crate::error::MechanicsError::NotUnifilar { witnesses }.into());
    }
    let n = raw.states.len();

    // behavior[s]: sorted [(input, output, quantized p)]
    let mut behavior: Vec<Vec<(usize, usize, i64)>> = vec![Vec::new(); n];
    // successor[s]: (input, output) -> next state, for positive-probability edges
    let mut successor: Vec<HashMap<(usize, usize), usize>> = vec![HashMap::new(); n];
    for e in &raw.transitions {
        if e.p <= 0.0 {
            continue;
        }
        behavior[e.from].push((e.input, e.output, quantize(e.p)));
        successor[e.from].insert((e.input, e.output), e.to);
    }
    for b in &mut behavior {
        b.sort_unstable();
    }

    // Initial partition by output behavior.
    let mut block_of: Vec<usize> = vec![0; n];
    {
        let mut key_to_block: HashMap<&[(usize, usize, i64)], usize> = HashMap::new();
        for s in 0..n {
            let next = key_to_block.len();
            let b = *key_to_block.entry(behavior[s].as_slice()).or_insert(next);
            block_of[s] = b;
        }
    }

    // Refine until successor blocks are stable.
    loop {
        let mut key_to_block: HashMap<(usize, Vec<((usize, usize), usize)>), usize> =
            HashMap::new();
        let mut next_assignment = vec![0usize; n];
        for s in 0..n {
            let mut succ_profile: Vec<((usize, usize), usize)> = successor[s]
                .iter()
                .map(|(&k, &to)| (k, block_of[to]))
                .collect();
            succ_profile.sort_unstable();
            let key = (block_of[s], succ_profile);
            let next = key_to_block.len();
            next_assignment[s] = *key_to_block.entry(key).or_insert(next);
        }
        if next_assignment == block_of {
            break;
        }
        block_of = next_assignment;
    }

    // Canonical block order: by behavior signature, then smallest member.
    let block_count = block_of.iter().max().map_or(0, |&b| b + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); block_count];
    for s in 0..n {
        members[block_of[s]].push(s);
    }
    let mut order: Vec<usize> = (0..block_count).collect();
    order.sort_by(|&a, &b| {
        let sig_a = &behavior[members[a][0]];
        let sig_b = &behavior[members[b][0]];
        sig_a.cmp(sig_b).then(members[a][0].cmp(&members[b][0]))
    });
    let mut rank = vec![0usize; block_count];
    for (r, &b) in order.iter().enumerate() {
        rank[b] = r;
    }

    let states: Vec<String> = order
        .iter()
        .map(|&b| {
            members[b]
                .iter()
                .map(|&s| raw.states[s].as_str())
                .collect::<Vec<_>>()
                .join("+")
        })
        .collect();

    let mut transitions = Vec::new();
    for &b in &order {
        let representative = members[b][0];
        let mut edges: Vec<TransducerEdge> = raw
            .transitions
            .iter()
            .filter(|e| e.from == representative && e.p > 0.0)
            .map(|e| TransducerEdge {
                from: rank[block_of[e.from]],
                input: e.input,
                output: e.output,
                to: rank[block_of[e.to]],
                p: e.p,
            })
            .collect();
        edges.sort_by(|a, b| {
            (a.input, a.output, a.to)
                .cmp(&(b.input, b.output, b.to))
        });
        transitions.extend(edges);
    }

    let minimized = EpsilonTransducer {
        inputs: raw.inputs.clone(),
        input_multiplicity: raw.input_multiplicity.clone(),
        outputs: raw.outputs.clone(),
        states,
        transitions,
    };
    minimized.validate().map_err(ReconstructError::Mechanics)?;
    Ok(minimized)
}

/// Minimize a generative machine (single-input transducer view).
pub fn minimize_machine(raw: &EpsilonMachine) -> Result<EpsilonMachine, ReconstructError> {
    let minimized = minimize(&raw.as_transducer())?;
    minimized.into_machine().map_err(ReconstructError::Mechanics)
}

/// Brute-force conditional output distribution P(outputs | inputs, start)
/// for a word pair of equal length. Test oracle; exponential in word length.
pub fn conditional_word_probability(
    machine: &EpsilonTransducer,
    start: usize,
    inputs: &[usize],
    outputs: &[usize],
) -> f64 {
    if inputs.is_empty() {
        return 1.0;
    }
    let (x, y) = (inputs[0], outputs[0]);
    machine
        .transitions
        .iter()
        .filter(|e| e.from == start && e.input == x && e.output == y && e.p > 0.0)
        .map(|e| e.p * conditional_word_probability(machine, e.to, &inputs[1..], &outputs[1..]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::MachineEdge;

    fn golden_mean() -> EpsilonMachine {
        EpsilonMachine {
            alphabet: vec!["0".into(), "1".into()],
            states: vec!["A".into(), "B".into()],
            transitions: vec![
                MachineEdge { from: 0, symbol: 0, to: 0, p: 0.5 },
                MachineEdge { from: 0, symbol: 1, to: 1, p: 0.5 },
                MachineEdge { from: 1, symbol: 0, to: 0, p: 1.0 },
            ],
        }
    }

    #[test]
    fn duplicate_states_merge() {
        // Two states with identical rows and successors collapse to one.
        let raw = EpsilonMachine {
            alphabet: vec!["a".into()],
            states: vec!["p".into(), "q".into()],
            transitions: vec![
                MachineEdge { from: 0, symbol: 0, to: 1, p: 1.0 },
                MachineEdge { from: 1, symbol: 0, to: 0, p: 1.0 },
            ],
        };
        let minimized = minimize_machine(&raw).unwrap();
        assert_eq!(minimized.states.len(), 1);
    }

    #[test]
    fn golden_mean_is_already_minimal() {
        let gm = golden_mean();
        let minimized = minimize_machine(&gm).unwrap();
        assert_eq!(minimized.states.len(), 2);
        // Idempotence up to the canonical ordering.
        let again = minimize_machine(&minimized).unwrap();
        assert_eq!(again, minimized);
    }

    #[test]
    fn six_state_fixture_collapses_to_two() {
        // Three copies of each golden-mean state, wired between the copies.
        let mut transitions = Vec::new();
        for k in 0..3usize {
            let a = 2 * k;
            let b = 2 * k + 1;
            let a_next = (2 * (k + 1)) % 6;
            transitions.push(MachineEdge { from: a, symbol: 0, to: a_next, p: 0.5 });
            transitions.push(MachineEdge { from: a, symbol: 1, to: b, p: 0.5 });
            transitions.push(MachineEdge { from: b, symbol: 0, to: a_next, p: 1.0 });
        }
        let raw = EpsilonMachine {
            alphabet: vec!["0".into(), "1".into()],
            states: (0..6).map(|i| format!("s{i}")).collect(),
            transitions,
        };
        let minimized = minimize_machine(&raw).unwrap();
        assert_eq!(minimized.states.len(), 2);

        // Brute-force check over all words of length <= 6: every raw state
        // agrees with its merged image on conditional word probabilities.
        let raw_t = raw.as_transducer();
        let min_t = minimized.as_transducer();
        for s in 0..6usize {
            let image = s % 2; // canonical order puts the "A"-like block first
            for len in 1..=6usize {
                for word in 0..(1u32 << len) {
                    let outputs: Vec<usize> =
                        (0..len).map(|i| ((word >> i) & 1) as usize).collect();
                    let inputs = vec![0usize; len];
                    let p_raw = conditional_word_probability(&raw_t, s, &inputs, &outputs);
                    let p_min = conditional_word_probability(&min_t, image, &inputs, &outputs);
                    assert!(
                        (p_raw - p_min).abs() < 1e-12,
                        "state {s}, word {outputs:?}: {p_raw} vs {p_min}"
                    );
                }
            }
        }
    }

    #[test]
    fn non_unifilar_input_rejected() {
        let raw = EpsilonMachine {
            alphabet: vec!["a".into()],
            states: vec!["p".into(), "q".into()],
            transitions: vec![
                MachineEdge { from: 0, symbol: 0, to: 0, p: 0.5 },
                MachineEdge { from: 0, symbol: 0, to: 1, p: 0.5 },
                MachineEdge { from: 1, symbol: 0, to: 0, p: 1.0 },
            ],
        };
        assert!(matches!(
            minimize_machine(&raw),
            Err(ReconstructError::Mechanics(
                crate::error::MechanicsError::NotUnifilar { .. }
            ))
        ));
    }

    #[test]
    fn minimization_is_deterministic() {
        let gm = golden_mean();
        let a = minimize_machine(&gm).unwrap();
        let b = minimize_machine(&gm).unwrap();
        assert_eq!(a, b);
    }
}
