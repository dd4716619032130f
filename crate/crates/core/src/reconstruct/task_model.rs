//! Build the exact ε-transducer of a task run: the joint chain over
//! (sampled instance, hidden POMDP state, consecutive-reward counter), with
//! the full 256-byte action alphabet collapsed into behavior-equivalence
//! classes. Output symbols are (observation, reward) pairs — exactly what the
//! agent sees on the wire. Instances cycle when the counter reaches R*, so
//! the chain is recurrent and its stationary distribution exists; the hard
//! limit (an absorbing cutoff, not part of the repeating structure) is left
//! out of the model.

use std::collections::HashMap;

use crate::error::ReconstructError;
use crate::mechanics::{EpsilonTransducer, TransducerEdge};
use crate::stream::Reward;
use crate::task::{sample_instance, InstanceSpec, TaskSpec};

use super::{minimize, RawMachine};

pub const DEFAULT_STATE_CAP: usize = 100_000;

fn byte_label(b: u8) -> String {
    if b.is_ascii_graphic() {
        (b as char).to_string()
    } else {
        format!("0x{b:02X}")
    }
}

fn reward_label(r: Reward) -> &'static str {
    match r {
        Reward::Negative => "-1",
        Reward::Zero => "0",
        Reward::Positive => "+1",
    }
}

/// Group the 256 action bytes into classes that behave identically in every
/// state of every sampled instance. The class sizes are kept as input
/// multiplicities so a uniform-byte input assigns each class weight
/// size/256.
fn action_classes(specs: &[InstanceSpec]) -> (Vec<Vec<u8>>, Vec<usize>) {
    let mut key_to_class: HashMap<Vec<(i8, Vec<(usize, u64)>)>, usize> = HashMap::new();
    let mut members: Vec<Vec<u8>> = Vec::new();
    let mut class_of = vec![0usize; 256];
    for a in 0..256usize {
        let mut key = Vec::new();
        for spec in specs {
            for s in 0..spec.num_states {
                let row: Vec<(usize, u64)> = spec.transitions[s][a]
                    .iter()
                    .map(|&(to, p)| (to, p.to_bits()))
                    .collect();
                key.push((spec.rewards[s][a].as_i8(), row));
            }
        }
        let next = members.len();
        let class = *key_to_class.entry(key).or_insert(next);
        if class == members.len() {
            members.push(Vec::new());
        }
        members[class].push(a as u8);
        class_of[a] = class;
    }
    (members, class_of)
}

/// The raw (unminimized) joint transducer of `task` over the instances
/// sampled from `seeds`, which cycle in order as each is solved.
pub fn compose_task(task: &TaskSpec, seeds: &[u64]) -> Result<RawMachine, ReconstructError> {
    assert!(!seeds.is_empty(), "at least one instance seed required");
    let specs: Vec<InstanceSpec> = seeds
        .iter()
        .map(|&seed| {
            let inst = sample_instance(task, seed);
            inst.spec.validate().map_err(ReconstructError::Task)?;
            Ok(inst.spec)
        })
        .collect::<Result<_, ReconstructError>>()?;
    let r_star = task.req_reward.max(1) as usize;

    let upper_bound: usize = specs.iter().map(|s| s.num_states * r_star).sum();
    if upper_bound > DEFAULT_STATE_CAP {
        return Err(ReconstructError::StateExplosion {
            cap: DEFAULT_STATE_CAP,
        });
    }

    let (class_members, class_of) = action_classes(&specs);
    let inputs: Vec<String> = class_members
        .iter()
        .map(|m| {
            if m.len() == 1 {
                byte_label(m[0])
            } else {
                format!("{}[{}]", byte_label(m[0]), m.len())
            }
        })
        .collect();
    let input_multiplicity: Vec<u32> = class_members.iter().map(|m| m.len() as u32).collect();
    // Representative byte per class (all members behave identically).
    let reps: Vec<u8> = class_members.iter().map(|m| m[0]).collect();
    let _ = class_of;

    // Composed states discovered by forward search from the first instance.
    type Composed = (usize, usize, usize); // (instance, pomdp state, streak)
    let mut index: HashMap<Composed, usize> = HashMap::new();
    let mut frontier: Vec<Composed> = Vec::new();
    let start: Composed = (0, specs[0].initial_state, 0);
    index.insert(start, 0);
    frontier.push(start);

    let mut outputs: Vec<String> = Vec::new();
    let mut out_index: HashMap<(u8, i8), usize> = HashMap::new();
    let mut output_of = |obs: u8, r: Reward, outputs: &mut Vec<String>| -> usize {
        *out_index.entry((obs, r.as_i8())).or_insert_with(|| {
            outputs.push(format!("({}|{})", byte_label(obs), reward_label(r)));
            outputs.len() - 1
        })
    };

    let mut edges: HashMap<(usize, usize, usize, usize), f64> = HashMap::new();
    let mut ordered: Vec<Composed> = vec![start];
    while let Some(state @ (i, s, streak)) = frontier.pop() {
        let from = index[&state];
        let spec = &specs[i];
        for (class, &a) in reps.iter().enumerate() {
            let reward = spec.rewards[s][a as usize];
            let next_streak = match reward {
                Reward::Positive => streak + 1,
                Reward::Negative => 0,
                Reward::Zero => streak,
            };
            if next_streak >= r_star {
                // Instance solved: the next instance in the cycle starts and
                // primes, so the +1 reward arrives alongside its first
                // observation.
                let ni = (i + 1) % specs.len();
                let target: Composed = (ni, specs[ni].initial_state, 0);
                let to = *index.entry(target).or_insert_with(|| {
                    frontier.push(target);
                    ordered.push(target);
                    ordered.len() - 1
                });
                for &(obs, p_e) in &specs[ni].emissions[specs[ni].initial_state] {
                    let out = output_of(obs, reward, &mut outputs);
                    *edges.entry((from, class, out, to)).or_insert(0.0) += p_e;
                }
            } else {
                for &(next, p_t) in &spec.transitions[s][a as usize] {
                    let target: Composed = (i, next, next_streak);
                    let to = *index.entry(target).or_insert_with(|| {
                        frontier.push(target);
                        ordered.push(target);
                        ordered.len() - 1
                    });
                    for &(obs, p_e) in &spec.emissions[next] {
                        let out = output_of(obs, reward, &mut outputs);
                        *edges.entry((from, class, out, to)).or_insert(0.0) += p_t * p_e;
                    }
                }
            }
        }
    }

    let states: Vec<String> = ordered
        .iter()
        .map(|&(i, s, r)| format!("i{i}.s{s}.r{r}"))
        .collect();
    let mut transitions: Vec<TransducerEdge> = edges
        .into_iter()
        .map(|((from, input, output, to), p)| TransducerEdge {
            from,
            input,
            output,
            to,
            p,
        })
        .collect();
    transitions.sort_by_key(|e| (e.from, e.input, e.output, e.to));

    let raw = EpsilonTransducer {
        inputs,
        input_multiplicity,
        outputs,
        states,
        transitions,
    };
    raw.validate().map_err(ReconstructError::Mechanics)?;
    Ok(raw)
}

/// The minimal ε-transducer of `task` over the cycled instances of `seeds`.
pub fn transducer_from_task(
    task: &TaskSpec,
    seeds: &[u64],
) -> Result<EpsilonTransducer, ReconstructError> {
    minimize(&compose_task(task, seeds)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::{input_dependent_complexity, Unifilar};
    use crate::task::{builtin_task, builtin_task_ids, TaskKind};

    #[test]
    fn every_bundled_task_composes_unifilar() {
        for id in builtin_task_ids() {
            let task = builtin_task(id).unwrap();
            let raw = compose_task(&task, &[0, 1]).unwrap();
            assert!(
                raw.is_unifilar(),
                "{id}: composed transducer is not unifilar"
            );
            assert_eq!(
                raw.input_multiplicity.iter().map(|&m| m as u64).sum::<u64>(),
                256
            );
        }
    }

    #[test]
    fn minimization_shrinks_scripted_cycle() {
        // A reward script with an internal repeat: [+1, +1] over R* = 4
        // cycles through streak counters but every state behaves alike
        // modulo the script position, so the minimal machine is small.
        let task = TaskSpec::new(
            "s",
            TaskKind::Scripted {
                rewards: vec![1, 1],
            },
            4,
        );
        let raw = compose_task(&task, &[0]).unwrap();
        let minimal = transducer_from_task(&task, &[0]).unwrap();
        assert!(minimal.states.len() <= raw.states.len());
        // Always-rewarding single-emission environment: position in the
        // streak is invisible, one causal state remains.
        assert_eq!(minimal.states.len(), 1);
    }

    #[test]
    fn single_fixed_instance_collapses_to_one_state() {
        // One micro_fixed instance: every step looks identical on the wire
        // (same prompt, reward determined by the action alone), so even the
        // streak counter is invisible and one causal state remains.
        let task = builtin_task("micro_fixed").unwrap();
        let minimal = transducer_from_task(&task, &[3]).unwrap();
        assert_eq!(minimal.states.len(), 1);
    }

    #[test]
    fn two_fixed_instances_stay_distinguishable() {
        // Two instances with (almost surely) different prompts/targets:
        // the visible prompt separates them into distinct causal states.
        let task = builtin_task("micro_fixed").unwrap();
        let minimal = transducer_from_task(&task, &[0, 1]).unwrap();
        assert!(minimal.states.len() >= 2);
        let c = input_dependent_complexity(&minimal, &minimal.uniform_input()).unwrap();
        assert!(c.is_finite() && c >= 0.0);
    }

    #[test]
    fn state_cap_is_enforced() {
        let task = TaskSpec::new(
            "big",
            TaskKind::Scripted {
                rewards: vec![0, 1],
            },
            1_000_000,
        );
        assert!(matches!(
            compose_task(&task, &[0]),
            Err(ReconstructError::StateExplosion { .. })
        ));
    }
}
