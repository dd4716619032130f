//! Bundled micro/mini task library.
//!
//! Each builder samples one instance POMDP from a seeded stream. Observation
//! alphabets stay within printable ASCII so exported machine diagrams remain
//! legible; targets and the action alphabet use the full byte range.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::{delta_row, uniform_row, InstanceSpec, SparseRow, TaskSpec, ACTION_COUNT};
use crate::stream::Reward;

const LOWER: &[u8] = b"abcdefgh";
const UPPER: &[u8] = b"ABCDEFGH";

/// The sampling family a task draws its instances from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TaskKind {
    /// Hidden target byte; fixed prompt; emit the target.
    MicroFixed,
    /// Repeat the last observation byte.
    MicroEcho,
    /// One prompt letter mapped to one correct response letter.
    MicroMapA21,
    /// Like `MicroMapA21`, but the required response shifts once the agent
    /// has accumulated consecutive correct answers (adaptive reward).
    MicroMapA21Adaptive,
    /// Letters split into two groups; the correct response depends on the
    /// group of the emitted letter.
    MicroGroupA22,
    /// The instance first spells out its prompt->answer mapping, then queries.
    MiniDescribeA291,
    /// Regular-language membership: candidate string, then a query delimiter,
    /// then an accept/reject byte.
    MiniMembership,
    /// Task-level constant mapping (every instance identical); test fixture
    /// for persistence-sensitive checks.
    FixedMap { prompt: u8, response: u8 },
    /// Reward script replayed regardless of the agent's actions; test fixture
    /// for solve-loop traces.
    Scripted { rewards: Vec<i8> },
}

enum Rule {
    /// +1 on this exact action byte, -1 on anything else.
    Answer(u8),
    /// Same reward for every action.
    Fixed(Reward),
}

struct StateDef {
    emission: Vec<(u8, f64)>,
    rule: Rule,
    on_correct: SparseRow,
    /// Ignored for `Rule::Fixed`; `on_correct` then covers every action.
    on_wrong: SparseRow,
}

fn assemble(states: Vec<StateDef>, initial: usize, description_len: u64) -> InstanceSpec {
    let num_states = states.len();
    let mut observations: Vec<u8> = states
        .iter()
        .flat_map(|s| s.emission.iter().map(|&(b, _)| b))
        .collect();
    observations.sort_unstable();
    observations.dedup();

    let mut rewards = Vec::with_capacity(num_states);
    let mut transitions = Vec::with_capacity(num_states);
    let mut emissions = Vec::with_capacity(num_states);
    for def in states {
        let mut r_row = Vec::with_capacity(ACTION_COUNT);
        let mut t_row = Vec::with_capacity(ACTION_COUNT);
        for a in 0..ACTION_COUNT {
            match &def.rule {
                Rule::Answer(ans) => {
                    if a as u8 == *ans {
                        r_row.push(Reward::Positive);
                        t_row.push(def.on_correct.clone());
                    } else {
                        r_row.push(Reward::Negative);
                        t_row.push(def.on_wrong.clone());
                    }
                }
                Rule::Fixed(r) => {
                    r_row.push(*r);
                    t_row.push(def.on_correct.clone());
                }
            }
        }
        rewards.push(r_row);
        transitions.push(t_row);
        emissions.push(def.emission);
    }
    InstanceSpec {
        num_states,
        initial_state: initial,
        observations,
        rewards,
        transitions,
        emissions,
        discount: 1.0,
        horizon: u64::MAX,
        description_len,
        soft_limit: 0,
    }
}

fn pick(rng: &mut ChaCha8Rng, set: &[u8]) -> u8 {
    set[rng.random_range(0..set.len())]
}

fn pick_distinct(rng: &mut ChaCha8Rng, set: &[u8], n: usize) -> Vec<u8> {
    let mut pool = set.to_vec();
    pool.shuffle(rng);
    pool.truncate(n);
    pool
}

fn micro_fixed(rng: &mut ChaCha8Rng) -> InstanceSpec {
    let prompt = pick(rng, LOWER);
    let target: u8 = rng.random();
    assemble(
        vec![StateDef {
            emission: vec![(prompt, 1.0)],
            rule: Rule::Answer(target),
            on_correct: delta_row(0),
            on_wrong: delta_row(0),
        }],
        0,
        0,
    )
}

fn micro_echo(rng: &mut ChaCha8Rng) -> InstanceSpec {
    let letters = pick_distinct(rng, LOWER, 3);
    let all: Vec<usize> = (0..letters.len()).collect();
    let states = letters
        .iter()
        .map(|&l| StateDef {
            emission: vec![(l, 1.0)],
            rule: Rule::Answer(l),
            on_correct: uniform_row(&all),
            on_wrong: uniform_row(&all),
        })
        .collect();
    assemble(states, 0, 0)
}

fn micro_map_a21(rng: &mut ChaCha8Rng) -> InstanceSpec {
    let prompt = pick(rng, LOWER);
    let response = pick(rng, UPPER);
    fixed_map(prompt, response)
}

fn fixed_map(prompt: u8, response: u8) -> InstanceSpec {
    assemble(
        vec![StateDef {
            emission: vec![(prompt, 1.0)],
            rule: Rule::Answer(response),
            on_correct: delta_row(0),
            on_wrong: delta_row(0),
        }],
        0,
        0,
    )
}

fn micro_map_a21_adaptive(rng: &mut ChaCha8Rng) -> InstanceSpec {
    let prompt = pick(rng, LOWER);
    let responses = pick_distinct(rng, UPPER, 2);
    // States count consecutive correct answers; once the counter saturates,
    // the required response shifts to the second letter.
    let levels = 4usize;
    let states = (0..levels)
        .map(|n| StateDef {
            emission: vec![(prompt, 1.0)],
            rule: Rule::Answer(if n < levels - 1 {
                responses[0]
            } else {
                responses[1]
            }),
            on_correct: delta_row((n + 1).min(levels - 1)),
            on_wrong: delta_row(0),
        })
        .collect();
    assemble(states, 0, 0)
}

fn micro_group_a22(rng: &mut ChaCha8Rng) -> InstanceSpec {
    let letters = pick_distinct(rng, LOWER, 4);
    let responses = pick_distinct(rng, UPPER, 2);
    let all: Vec<usize> = (0..letters.len()).collect();
    let states = letters
        .iter()
        .enumerate()
        .map(|(i, &l)| StateDef {
            emission: vec![(l, 1.0)],
            // First two letters form group one, the rest group two.
            rule: Rule::Answer(responses[if i < 2 { 0 } else { 1 }]),
            on_correct: uniform_row(&all),
            on_wrong: uniform_row(&all),
        })
        .collect();
    assemble(states, 0, 0)
}

fn mini_describe_a291(rng: &mut ChaCha8Rng) -> InstanceSpec {
    let prompts = pick_distinct(rng, LOWER, 2);
    let answers = pick_distinct(rng, UPPER, 2);
    let description = [prompts[0], answers[0], prompts[1], answers[1]];
    // States 0..=3: description chain; 4 and 5: query states.
    let queries = [4usize, 5];
    let mut states = Vec::new();
    for (i, &b) in description.iter().enumerate() {
        states.push(StateDef {
            emission: vec![(b, 1.0)],
            rule: Rule::Fixed(Reward::Zero),
            on_correct: if i + 1 < description.len() {
                delta_row(i + 1)
            } else {
                uniform_row(&queries)
            },
            on_wrong: SparseRow::new(),
        });
    }
    for q in 0..2 {
        states.push(StateDef {
            emission: vec![(prompts[q], 1.0)],
            rule: Rule::Answer(answers[q]),
            on_correct: uniform_row(&queries),
            on_wrong: uniform_row(&queries),
        });
    }
    assemble(states, 0, description.len() as u64)
}

/// DFA for one bundled regular language over {a, b}.
struct Dfa {
    delta: Vec<[usize; 2]>,
    accept: Vec<bool>,
}

fn languages() -> Vec<Dfa> {
    vec![
        // contains the substring "ab"
        Dfa {
            delta: vec![[1, 0], [1, 2], [2, 2]],
            accept: vec![false, false, true],
        },
        // starts with 'a'
        Dfa {
            delta: vec![[1, 2], [1, 1], [2, 2]],
            accept: vec![false, true, false],
        },
        // ends with 'b'
        Dfa {
            delta: vec![[0, 1], [0, 1]],
            accept: vec![false, true],
        },
        // even number of 'b'
        Dfa {
            delta: vec![[0, 1], [1, 0]],
            accept: vec![true, false],
        },
    ]
}

fn mini_membership(rng: &mut ChaCha8Rng) -> InstanceSpec {
    const WORD_LEN: usize = 3;
    let dfa = &languages()[rng.random_range(0..4)];
    let letters = [b'a', b'b'];

    // Node layout: 0 is the '.' start delimiter; then one node per
    // (position, letter, dfa-state) reached while spelling the candidate;
    // then one '?' query node per dfa-state reachable after WORD_LEN letters.
    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    enum Node {
        Start,
        Letter(usize, usize, usize),
        Query(usize),
    }
    let mut index: HashMap<Node, usize> = HashMap::new();
    let mut order: Vec<Node> = Vec::new();
    let intern = |order: &mut Vec<Node>, index: &mut HashMap<Node, usize>, n: Node| -> usize {
        *index.entry(n).or_insert_with(|| {
            order.push(n);
            order.len() - 1
        })
    };

    intern(&mut order, &mut index, Node::Start);
    let mut frontier = vec![Node::Start];
    while let Some(node) = frontier.pop() {
        let succs: Vec<Node> = match node {
            Node::Start => (0..2)
                .map(|l| Node::Letter(1, l, dfa.delta[0][l]))
                .collect(),
            Node::Letter(pos, _, q) if pos < WORD_LEN => (0..2)
                .map(|l| Node::Letter(pos + 1, l, dfa.delta[q][l]))
                .collect(),
            Node::Letter(_, _, q) => vec![Node::Query(q)],
            // Every word goes through the '.' delimiter, including restarts
            // after a query; otherwise '.' would mark instance starts only
            // and leak the boundary into the stream.
            Node::Query(_) => vec![Node::Start],
        };
        for s in succs {
            if !index.contains_key(&s) {
                intern(&mut order, &mut index, s);
                frontier.push(s);
            }
        }
    }

    let states = order
        .iter()
        .map(|&node| {
            let succ_rows = |targets: Vec<Node>| -> SparseRow {
                let idx: Vec<usize> = targets.iter().map(|t| index[t]).collect();
                uniform_row(&idx)
            };
            match node {
                Node::Start => StateDef {
                    emission: vec![(b'.', 1.0)],
                    rule: Rule::Fixed(Reward::Zero),
                    on_correct: succ_rows(
                        (0..2).map(|l| Node::Letter(1, l, dfa.delta[0][l])).collect(),
                    ),
                    on_wrong: SparseRow::new(),
                },
                Node::Letter(pos, l, q) if pos < WORD_LEN => StateDef {
                    emission: vec![(letters[l], 1.0)],
                    rule: Rule::Fixed(Reward::Zero),
                    on_correct: succ_rows(
                        (0..2)
                            .map(|l2| Node::Letter(pos + 1, l2, dfa.delta[q][l2]))
                            .collect(),
                    ),
                    on_wrong: SparseRow::new(),
                },
                Node::Letter(_, l, q) => StateDef {
                    emission: vec![(letters[l], 1.0)],
                    rule: Rule::Fixed(Reward::Zero),
                    on_correct: succ_rows(vec![Node::Query(q)]),
                    on_wrong: SparseRow::new(),
                },
                Node::Query(q) => {
                    let restart = succ_rows(vec![Node::Start]);
                    StateDef {
                        emission: vec![(b'?', 1.0)],
                        rule: Rule::Answer(if dfa.accept[q] { b'y' } else { b'n' }),
                        on_correct: restart.clone(),
                        on_wrong: restart,
                    }
                }
            }
        })
        .collect();
    assemble(states, 0, 0)
}

fn scripted(rewards: &[i8]) -> InstanceSpec {
    let len = rewards.len();
    let states = rewards
        .iter()
        .enumerate()
        .map(|(i, &r)| StateDef {
            emission: vec![(b'.', 1.0)],
            rule: Rule::Fixed(Reward::from_i8(r).expect("scripted reward in {-1,0,1}")),
            on_correct: delta_row((i + 1) % len),
            on_wrong: SparseRow::new(),
        })
        .collect();
    assemble(states, 0, 0)
}

pub(super) fn build_instance(kind: &TaskKind, rng: &mut ChaCha8Rng) -> InstanceSpec {
    match kind {
        TaskKind::MicroFixed => micro_fixed(rng),
        TaskKind::MicroEcho => micro_echo(rng),
        TaskKind::MicroMapA21 => micro_map_a21(rng),
        TaskKind::MicroMapA21Adaptive => micro_map_a21_adaptive(rng),
        TaskKind::MicroGroupA22 => micro_group_a22(rng),
        TaskKind::MiniDescribeA291 => mini_describe_a291(rng),
        TaskKind::MiniMembership => mini_membership(rng),
        TaskKind::FixedMap { prompt, response } => fixed_map(*prompt, *response),
        TaskKind::Scripted { rewards } => scripted(rewards),
    }
}

pub fn builtin_task_ids() -> &'static [&'static str] {
    &[
        "micro_fixed",
        "micro_echo",
        "micro_map_a21",
        "micro_map_a21_adaptive",
        "micro_group_a22",
        "mini_describe_a291",
        "mini_membership",
    ]
}

/// Look up a bundled task by id with its default R_j of 5.
pub fn builtin_task(id: &str) -> Option<TaskSpec> {
    let kind = match id {
        "micro_fixed" => TaskKind::MicroFixed,
        "micro_echo" => TaskKind::MicroEcho,
        "micro_map_a21" => TaskKind::MicroMapA21,
        "micro_map_a21_adaptive" => TaskKind::MicroMapA21Adaptive,
        "micro_group_a22" => TaskKind::MicroGroupA22,
        "mini_describe_a291" => TaskKind::MiniDescribeA291,
        "mini_membership" => TaskKind::MiniMembership,
        _ => return None,
    };
    Some(TaskSpec::new(id, kind, 5))
}
