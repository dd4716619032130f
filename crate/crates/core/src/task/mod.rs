//! Tasks as distributions over finite stochastic transducer instances.
//!
//! A task instance is one sampled POMDP: finite states, the full 256-symbol
//! action alphabet, a per-state observation distribution, an action-indexed
//! reward table and transition table. All randomness of a live instance comes
//! from a seeded stream, so (task, seed) fully determines a run.

mod config;
mod library;

pub use config::{load_curriculum, save_curriculum, CurriculumConfig, TaskConfig};
pub use library::{builtin_task, builtin_task_ids, TaskKind};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::TaskError;
use crate::stream::{Reward, Symbol};

pub const ACTION_COUNT: usize = 256;
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Sparse probability row: (index, probability) pairs, indices strictly
/// increasing, probabilities summing to one.
pub type SparseRow = Vec<(usize, f64)>;

/// One sampled POMDP. Transition and reward tables are dense over the 256
/// possible action bytes; observation emission depends on the arrived state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub num_states: usize,
    pub initial_state: usize,
    /// Observation alphabet Ω (bytes that can ever be emitted).
    pub observations: Vec<u8>,
    /// rewards[s][a] = r(s, a).
    pub rewards: Vec<Vec<Reward>>,
    /// transitions[s][a] = row over successor states.
    pub transitions: Vec<Vec<SparseRow>>,
    /// emissions[s] = distribution over observation bytes emitted on entering s.
    pub emissions: Vec<Vec<(u8, f64)>>,
    /// Discount factor of the 8-tuple; carried, never used by the harness.
    pub discount: f64,
    /// Horizon, realized as the hard limit.
    pub horizon: u64,
    /// Steps spent in a reward-neutral description phase, if any.
    pub description_len: u64,
    /// Success budget: a solve within this many steps counts.
    pub soft_limit: u64,
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<(), TaskError> {
        let check_row = |sum: f64, context: String| {
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                Err(TaskError::RowNotNormalized { context, sum })
            } else {
                Ok(())
            }
        };
        for (s, rows) in self.transitions.iter().enumerate() {
            for (a, row) in rows.iter().enumerate() {
                check_row(
                    row.iter().map(|&(_, p)| p).sum(),
                    format!("transition ({s}, {a})"),
                )?;
            }
        }
        for (s, row) in self.emissions.iter().enumerate() {
            check_row(row.iter().map(|&(_, p)| p).sum(), format!("emission {s}"))?;
        }
        if self.soft_limit > self.horizon {
            return Err(TaskError::LimitOrder {
                soft: self.soft_limit,
                hard: self.horizon,
            });
        }
        // Reachability over the union of all actions.
        let mut seen = vec![false; self.num_states];
        let mut stack = vec![self.initial_state];
        seen[self.initial_state] = true;
        while let Some(s) = stack.pop() {
            for row in &self.transitions[s] {
                for &(next, p) in row {
                    if p > 0.0 && !seen[next] {
                        seen[next] = true;
                        stack.push(next);
                    }
                }
            }
        }
        if let Some(dead) = seen.iter().position(|&v| !v) {
            return Err(TaskError::UnreachableState(dead));
        }
        Ok(())
    }
}

/// Live simulation state of one instance.
#[derive(Debug, Clone)]
pub struct InstanceState {
    pub spec: InstanceSpec,
    pub current_state: usize,
    pub elapsed: u64,
    rng: ChaCha8Rng,
}

impl InstanceState {
    pub fn new(spec: InstanceSpec, seed: u64) -> Self {
        let initial = spec.initial_state;
        InstanceState {
            spec,
            current_state: initial,
            elapsed: 0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
        }
    }

    pub fn soft_limit(&self) -> u64 {
        self.spec.soft_limit
    }

    pub fn hard_limit(&self) -> u64 {
        self.spec.horizon
    }

    pub fn terminated(&self) -> bool {
        self.elapsed >= self.spec.horizon
    }

    fn draw_from<T: Copy>(rng: &mut ChaCha8Rng, row: &[(T, f64)]) -> T {
        let x: f64 = rng.random();
        let mut acc = 0.0;
        for &(item, p) in row {
            acc += p;
            if x < acc {
                return item;
            }
        }
        row.last().expect("non-empty probability row").0
    }

    /// One environment step. `None` is the priming step: reward zero, the
    /// initial observation is emitted, no transition, no elapsed time.
    pub fn env_step(&mut self, action: Option<Symbol>) -> Result<(Reward, Symbol), TaskError> {
        match action {
            None => {
                let obs = Self::draw_from(&mut self.rng, &self.spec.emissions[self.current_state]);
                Ok((Reward::Zero, Symbol(obs)))
            }
            Some(a) => {
                if self.terminated() {
                    return Err(TaskError::StepAfterTermination(self.elapsed));
                }
                let s = self.current_state;
                let reward = self.spec.rewards[s][a.0 as usize];
                let next =
                    Self::draw_from(&mut self.rng, &self.spec.transitions[s][a.0 as usize]);
                let obs = Self::draw_from(&mut self.rng, &self.spec.emissions[next]);
                self.current_state = next;
                self.elapsed += 1;
                Ok((reward, Symbol(obs)))
            }
        }
    }
}

/// Soft/hard limit policy: soft = description length + `per_reward` · R*,
/// hard = `hard_factor` · soft.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitPolicy {
    pub per_reward: u64,
    pub hard_factor: u64,
}

impl Default for LimitPolicy {
    fn default() -> Self {
        LimitPolicy {
            per_reward: 8,
            hard_factor: 4,
        }
    }
}

impl LimitPolicy {
    pub fn soft(&self, description_len: u64, r_star: u64) -> u64 {
        description_len + self.per_reward * r_star
    }

    pub fn hard(&self, description_len: u64, r_star: u64) -> u64 {
        self.hard_factor * self.soft(description_len, r_star)
    }
}

/// A task: a seeded distribution over instances plus its solve parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub kind: TaskKind,
    /// R_j: consecutive positive rewards required per instance.
    pub req_reward: u64,
    pub limit_policy: LimitPolicy,
}

impl TaskSpec {
    pub fn new(id: &str, kind: TaskKind, req_reward: u64) -> Self {
        TaskSpec {
            id: id.to_string(),
            kind,
            req_reward,
            limit_policy: LimitPolicy::default(),
        }
    }

    pub fn req_reward(&self) -> u64 {
        self.req_reward
    }
}

/// Ordered task list with the curriculum-wide solve parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSpec {
    pub tasks: Vec<TaskSpec>,
    /// N_s: consecutive successful instances required per task.
    pub n_s: u64,
    pub seed: u64,
}

/// Default instance-sampling seed of the bundled curriculum. The complexity
/// ordering below was verified (and frozen as a regression baseline) at this
/// seed; per-instance draws shift the estimates slightly at other seeds.
pub const DEFAULT_CURRICULUM_SEED: u64 = 11;

/// The bundled curriculum: all seven built-in tasks, ordered by measured
/// statistical complexity under uniform input (non-decreasing).
pub fn default_curriculum(seed: u64) -> CurriculumSpec {
    let order = [
        "micro_fixed",
        "micro_map_a21",
        "micro_map_a21_adaptive",
        "mini_describe_a291",
        "micro_echo",
        "micro_group_a22",
        "mini_membership",
    ];
    CurriculumSpec {
        tasks: order
            .iter()
            .map(|id| builtin_task(id).expect("bundled id"))
            .collect(),
        n_s: 2,
        seed,
    }
}

/// Sample a fresh instance of `task`. Identical seeds give identical specs.
pub fn sample_instance(task: &TaskSpec, seed: u64) -> InstanceState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = library::build_instance(&task.kind, &mut rng);
    spec.soft_limit = task.limit_policy.soft(spec.description_len, task.req_reward);
    spec.horizon = task.limit_policy.hard(spec.description_len, task.req_reward);
    debug_assert!(spec.validate().is_ok(), "bundled instance failed validation");
    InstanceState::new(spec, seed)
}

/// Convenience: a row putting all mass on one index.
pub fn delta_row(next: usize) -> SparseRow {
    vec![(next, 1.0)]
}

/// Convenience: a uniform row over the given indices.
pub fn uniform_row(targets: &[usize]) -> SparseRow {
    let p = 1.0 / targets.len() as f64;
    targets.iter().map(|&t| (t, p)).collect()
}

pub fn soft_limit(instance: &InstanceState) -> u64 {
    instance.soft_limit()
}

pub fn hard_limit(instance: &InstanceState) -> u64 {
    instance.hard_limit()
}

/// R_j for a task.
pub fn req_reward(task: &TaskSpec) -> u64 {
    task.req_reward
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(kind: TaskKind) -> TaskSpec {
        TaskSpec::new("t", kind, 5)
    }

    #[test]
    fn sampling_is_deterministic() {
        let t = task(TaskKind::MicroFixed);
        let a = sample_instance(&t, 7);
        let b = sample_instance(&t, 7);
        assert_eq!(a.spec, b.spec);
    }

    #[test]
    fn distinct_seeds_usually_differ() {
        // micro_fixed draws its target from the full byte range, so two
        // seeds collide with probability ~1/256.
        let t = task(TaskKind::MicroFixed);
        let mut differ = 0;
        for seed in 0..1000u64 {
            let a = sample_instance(&t, 2 * seed);
            let b = sample_instance(&t, 2 * seed + 1);
            if a.spec != b.spec {
                differ += 1;
            }
        }
        assert!(differ >= 980, "only {differ}/1000 pairs differed");
    }

    #[test]
    fn all_bundled_instances_validate() {
        for id in builtin_task_ids() {
            let t = builtin_task(id).unwrap();
            for seed in 0..100 {
                let inst = sample_instance(&t, seed);
                inst.spec.validate().unwrap();
                assert!(inst.soft_limit() <= inst.hard_limit());
            }
        }
    }

    #[test]
    fn limit_policy_examples() {
        let p = LimitPolicy::default();
        assert_eq!(p.soft(0, 5), 40);
        assert_eq!(p.hard(0, 5), 160);
        assert_eq!(p.soft(0, 1), 8);
        assert_eq!(p.hard(0, 1), 32);
        assert_eq!(p.soft(4, 5), 44);
    }

    #[test]
    fn echo_rewards_match_definition() {
        let t = task(TaskKind::MicroEcho);
        let mut inst = sample_instance(&t, 3);
        let (_, obs) = inst.env_step(None).unwrap();
        let (r, _) = inst.env_step(Some(obs)).unwrap();
        assert_eq!(r, Reward::Positive);

        let mut inst = sample_instance(&t, 3);
        let (_, obs) = inst.env_step(None).unwrap();
        let wrong = Symbol(if obs.0 == 0 { 1 } else { 0 });
        let (r, _) = inst.env_step(Some(wrong)).unwrap();
        assert_eq!(r, Reward::Negative);
    }

    #[test]
    fn priming_step_is_free() {
        let t = task(TaskKind::MicroFixed);
        let mut inst = sample_instance(&t, 1);
        let (r, _) = inst.env_step(None).unwrap();
        assert_eq!(r, Reward::Zero);
        assert_eq!(inst.elapsed, 0);
    }

    #[test]
    fn step_after_termination_rejected() {
        let mut t = task(TaskKind::MicroFixed);
        t.req_reward = 1;
        let mut inst = sample_instance(&t, 1);
        inst.env_step(None).unwrap();
        let hard = inst.hard_limit();
        for _ in 0..hard {
            inst.env_step(Some(Symbol(0))).unwrap();
        }
        assert!(matches!(
            inst.env_step(Some(Symbol(0))),
            Err(TaskError::StepAfterTermination(_))
        ));
    }

    #[test]
    fn replaying_actions_reproduces_stream() {
        for id in builtin_task_ids() {
            let t = builtin_task(id).unwrap();
            let mut first = sample_instance(&t, 42);
            let mut second = sample_instance(&t, 42);
            let mut actions = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut out_a = vec![first.env_step(None).unwrap()];
            for _ in 0..20 {
                let a = Symbol(rng.random::<u8>());
                actions.push(a);
                out_a.push(first.env_step(Some(a)).unwrap());
            }
            let mut out_b = vec![second.env_step(None).unwrap()];
            for &a in &actions {
                out_b.push(second.env_step(Some(a)).unwrap());
            }
            assert_eq!(out_a, out_b, "replay diverged for {id}");
        }
    }
}
