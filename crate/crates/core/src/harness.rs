//! The evaluation loops: solving one instance, progressing through a
//! curriculum, the step-count objective, and the transfer checks for
//! gradual learning and catastrophic forgetting.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use std::time::Instant;

use crate::agents::Agent;
use crate::error::HarnessError;
use crate::stream::{Reward, SessionLog, StepRecord};
use crate::task::{sample_instance, CurriculumSpec, InstanceState, TaskSpec};

/// Global run budgets. The official fixed wall-clock evaluation is replaced
/// by these configurable limits.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Budget {
    pub max_steps: Option<u64>,
    pub max_seconds: Option<f64>,
}

impl Budget {
    pub const UNLIMITED: Budget = Budget {
        max_steps: None,
        max_seconds: None,
    };
}

struct BudgetClock {
    budget: Budget,
    started: Instant,
    steps: u64,
}

impl BudgetClock {
    fn new(budget: Budget) -> Self {
        BudgetClock {
            budget,
            started: Instant::now(),
            steps: 0,
        }
    }

    fn tick(&mut self) -> Result<(), HarnessError> {
        self.steps += 1;
        if let Some(max) = self.budget.max_steps {
            if self.steps > max {
                return Err(HarnessError::BudgetExceeded { steps: self.steps });
            }
        }
        if let Some(max) = self.budget.max_seconds {
            if self.started.elapsed().as_secs_f64() > max {
                return Err(HarnessError::BudgetExceeded { steps: self.steps });
            }
        }
        Ok(())
    }
}

/// Outcome of one instance run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub steps: u64,
    pub solved_within_soft: bool,
    pub terminated_by_hard: bool,
    /// Slice of the session log covering this instance (priming included).
    pub log_range: Range<usize>,
}

/// Per-task accounting of a curriculum run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskRunStats {
    pub task_id: String,
    pub instances_attempted: u64,
    pub instances_successful: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CurriculumResult {
    pub total_steps: u64,
    pub per_task: Vec<TaskRunStats>,
    pub log: SessionLog,
}

/// Run the agent-environment loop on one instance until the agent collects
/// `r_star` consecutive positive rewards or the hard limit is reached.
///
/// The priming environment step (empty action) precedes the loop and is not
/// counted in the returned step count. A positive reward increments the
/// consecutive counter, a negative reward resets it, zero leaves it alone.
pub fn solve_instance(
    agent: &mut dyn Agent,
    instance: &mut InstanceState,
    r_star: u64,
    log: &mut SessionLog,
) -> Result<SolveResult, HarnessError> {
    solve_instance_budgeted(agent, instance, r_star, log, &mut BudgetClock::new(Budget::UNLIMITED))
}

fn solve_instance_budgeted(
    agent: &mut dyn Agent,
    instance: &mut InstanceState,
    r_star: u64,
    log: &mut SessionLog,
    clock: &mut BudgetClock,
) -> Result<SolveResult, HarnessError> {
    let start = log.records.len();
    let hard = instance.hard_limit();
    let soft = instance.soft_limit();
    let mut t: u64 = 0;
    let mut r_plus: u64 = 0;

    let (mut reward, mut observation) = instance.env_step(None)?;
    log.push(StepRecord {
        t: log.records.len() as u64,
        observation,
        reward,
        action: None,
    });

    loop {
        clock.tick()?;
        let action = agent.step(reward, observation)?;
        let (r, o) = instance.env_step(Some(action))?;
        t += 1;
        log.push(StepRecord {
            t: log.records.len() as u64,
            observation: o,
            reward: r,
            action: Some(action),
        });
        match r {
            Reward::Positive => r_plus += 1,
            Reward::Negative => r_plus = 0,
            Reward::Zero => {}
        }
        reward = r;
        observation = o;
        if r_plus == r_star || t == hard {
            break;
        }
    }

    let solved = r_plus == r_star;
    Ok(SolveResult {
        steps: t,
        solved_within_soft: solved && t <= soft,
        terminated_by_hard: !solved,
        log_range: start..log.records.len(),
    })
}

/// Run a full curriculum: per task, sample and solve instances until `n_s`
/// consecutive instances were solved within their soft limits. The agent is
/// never reset or notified between instances or tasks.
pub fn run_curriculum(
    agent: &mut dyn Agent,
    curriculum: &CurriculumSpec,
    n_s: u64,
    budget: Budget,
) -> Result<CurriculumResult, HarnessError> {
    let mut clock = BudgetClock::new(budget);
    let mut seed_stream = ChaCha8Rng::seed_from_u64(curriculum.seed);
    let mut log = SessionLog::new();
    let mut total_steps: u64 = 0;
    let mut per_task = Vec::with_capacity(curriculum.tasks.len());

    for task in &curriculum.tasks {
        let mut stats = TaskRunStats {
            task_id: task.id.clone(),
            instances_attempted: 0,
            instances_successful: 0,
        };
        let mut streak: u64 = 0;
        while streak < n_s {
            let seed: u64 = seed_stream.random();
            let mut instance = sample_instance(task, seed);
            log.mark_boundary(&task.id, seed);
            agent.on_instance_start(&instance.spec);
            let soft = instance.soft_limit();
            let result = solve_instance_budgeted(agent, &mut instance, task.req_reward, &mut log, &mut clock)?;
            total_steps += result.steps;
            stats.instances_attempted += 1;
            if result.steps <= soft && !result.terminated_by_hard {
                streak += 1;
                stats.instances_successful += 1;
            } else {
                streak = 0;
            }
        }
        per_task.push(stats);
    }

    Ok(CurriculumResult {
        total_steps,
        per_task,
        log,
    })
}

/// The objective functional: total simulation steps to complete the
/// curriculum with its own N_s.
pub fn rho(
    agent: &mut dyn Agent,
    curriculum: &CurriculumSpec,
    budget: Budget,
) -> Result<u64, HarnessError> {
    Ok(run_curriculum(agent, curriculum, curriculum.n_s, budget)?.total_steps)
}

/// Outcome of a gradual-learning or forgetting check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferReport {
    pub rho_primed: u64,
    pub rho_fresh: u64,
    pub passed: bool,
    /// The slack constant of the forgetting inequality; absent for the
    /// gradual-learning check, which is strict.
    pub constant_c: Option<f64>,
}

fn single_task_curriculum(task: &TaskSpec, n_s: u64, seed: u64) -> CurriculumSpec {
    CurriculumSpec {
        tasks: vec![task.clone()],
        n_s,
        seed,
    }
}

/// Gradual learning: an agent run through `pretrain` first must need strictly
/// fewer probe steps than an identically seeded fresh agent.
pub fn gradual_learning_check(
    agent_factory: &dyn Fn() -> Box<dyn Agent>,
    pretrain: &[TaskSpec],
    probe: &TaskSpec,
    n_s: u64,
    seed: u64,
    budget: Budget,
) -> Result<TransferReport, HarnessError> {
    let pretrain_curriculum = CurriculumSpec {
        tasks: pretrain.to_vec(),
        n_s,
        seed,
    };
    let probe_curriculum = single_task_curriculum(probe, n_s, seed.wrapping_add(1));

    let mut primed = agent_factory();
    run_curriculum(primed.as_mut(), &pretrain_curriculum, n_s, budget)?;
    let rho_primed = rho(primed.as_mut(), &probe_curriculum, budget)?;

    let mut fresh = agent_factory();
    let rho_fresh = rho(fresh.as_mut(), &probe_curriculum, budget)?;

    Ok(TransferReport {
        rho_primed,
        rho_fresh,
        passed: rho_primed < rho_fresh,
        constant_c: None,
    })
}

/// Catastrophic forgetting: after additionally learning the third task, the
/// agent may need at most `c` times its previous step count on the revisited
/// task.
pub fn forgetting_check(
    agent_factory: &dyn Fn() -> Box<dyn Agent>,
    sequence: (&TaskSpec, &TaskSpec, &TaskSpec),
    c: f64,
    n_s: u64,
    seed: u64,
    budget: Budget,
) -> Result<TransferReport, HarnessError> {
    assert!(c > 0.0, "forgetting constant must be positive");
    let (t1, t2, t3) = sequence;
    let train_curriculum = CurriculumSpec {
        tasks: vec![t1.clone(), t2.clone()],
        n_s,
        seed,
    };
    let extra_curriculum = single_task_curriculum(t3, n_s, seed.wrapping_add(1));
    let revisit_curriculum = single_task_curriculum(t2, n_s, seed.wrapping_add(2));

    let mut agent = agent_factory();
    run_curriculum(agent.as_mut(), &train_curriculum, n_s, budget)?;
    let snapshot = agent.snapshot()?;

    // Baseline: the agent as of finishing (T1, T2), measured on T2.
    let mut baseline = agent_factory();
    baseline.restore(&snapshot)?;
    let rho_before = rho(baseline.as_mut(), &revisit_curriculum, budget)?;

    // Continue training on T3, then revisit T2 with identical seeds.
    run_curriculum(agent.as_mut(), &extra_curriculum, n_s, budget)?;
    let rho_after = rho(agent.as_mut(), &revisit_curriculum, budget)?;

    Ok(TransferReport {
        rho_primed: rho_after,
        rho_fresh: rho_before,
        passed: (rho_after as f64) <= c * (rho_before as f64),
        constant_c: Some(c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{ConstantAgent, MemorizerAgent, OracleAgent};
    use crate::task::{TaskKind, TaskSpec};

    /// Straight-line transcription of the solve loop, used as an oracle for
    /// scripted reward traces.
    pub fn solve_trace_interpreter(rewards: &[i8], r_star: u64, hard_limit: u64) -> u64 {
        let mut t = 0u64;
        let mut r_plus = 0u64;
        loop {
            let r = rewards[(t as usize) % rewards.len()];
            t += 1;
            if r == 1 {
                r_plus += 1;
            } else if r == -1 {
                r_plus = 0;
            }
            if r_plus == r_star || t == hard_limit {
                return t;
            }
        }
    }

    fn scripted_task(rewards: Vec<i8>, r_star: u64) -> TaskSpec {
        TaskSpec::new("scripted", TaskKind::Scripted { rewards }, r_star)
    }

    fn run_script(rewards: Vec<i8>, r_star: u64) -> (u64, SolveResult) {
        let task = scripted_task(rewards.clone(), r_star);
        let mut instance = sample_instance(&task, 0);
        let hard = instance.hard_limit();
        let mut agent = ConstantAgent::new(0);
        let mut log = SessionLog::new();
        let result = solve_instance(&mut agent, &mut instance, r_star, &mut log).unwrap();
        (solve_trace_interpreter(&rewards, r_star, hard), result)
    }

    #[test]
    fn scripted_traces_match_interpreter() {
        let (expected, result) = run_script(vec![1, 1, 1, 1, 1], 5);
        assert_eq!(result.steps, 5);
        assert_eq!(result.steps, expected);

        let (expected, result) = run_script(vec![1, 1, -1, 1, 1, 1, 1, 1], 5);
        assert_eq!(result.steps, 8);
        assert_eq!(result.steps, expected);

        let (expected, result) = run_script(vec![-1], 5);
        assert_eq!(result.steps, 160);
        assert_eq!(result.steps, expected);
        assert!(result.terminated_by_hard);
        assert!(!result.solved_within_soft);
    }

    #[test]
    fn priming_step_not_counted() {
        let (_, result) = run_script(vec![1], 1);
        assert_eq!(result.steps, 1);
        // Log contains the priming record plus one acting record.
        assert_eq!(result.log_range.len(), 2);
    }

    #[test]
    fn perfect_agent_curriculum_total() {
        let curriculum = CurriculumSpec {
            tasks: vec![
                TaskSpec::new("a", TaskKind::MicroMapA21, 5),
                TaskSpec::new("b", TaskKind::MicroMapA21, 5),
            ],
            n_s: 2,
            seed: 9,
        };
        let mut agent = OracleAgent::new();
        let result = run_curriculum(&mut agent, &curriculum, 2, Budget::UNLIMITED).unwrap();
        assert_eq!(result.total_steps, 20);
        for stats in &result.per_task {
            assert_eq!(stats.instances_attempted, 2);
            assert_eq!(stats.instances_successful, 2);
        }
    }

    #[test]
    fn degenerate_single_instance_curriculum() {
        let curriculum = CurriculumSpec {
            tasks: vec![TaskSpec::new("a", TaskKind::MicroMapA21, 5)],
            n_s: 1,
            seed: 1,
        };
        let mut agent = OracleAgent::new();
        let result = run_curriculum(&mut agent, &curriculum, 1, Budget::UNLIMITED).unwrap();
        assert_eq!(result.total_steps, 5);
    }

    #[test]
    fn step_accounting_matches_log() {
        let curriculum = CurriculumSpec {
            tasks: vec![TaskSpec::new("a", TaskKind::MicroFixed, 3)],
            n_s: 2,
            seed: 4,
        };
        let mut agent = MemorizerAgent::new(0);
        let result = run_curriculum(&mut agent, &curriculum, 2, Budget::UNLIMITED).unwrap();
        assert_eq!(result.total_steps, result.log.action_count());
    }

    #[test]
    fn rho_is_deterministic() {
        let curriculum = CurriculumSpec {
            tasks: vec![TaskSpec::new("a", TaskKind::MicroFixed, 2)],
            n_s: 2,
            seed: 123,
        };
        let a = rho(&mut MemorizerAgent::new(5), &curriculum, Budget::UNLIMITED).unwrap();
        let b = rho(&mut MemorizerAgent::new(5), &curriculum, Budget::UNLIMITED).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_exceeded_surfaces() {
        let curriculum = CurriculumSpec {
            tasks: vec![TaskSpec::new("a", TaskKind::MicroFixed, 5)],
            n_s: 2,
            seed: 0,
        };
        let mut agent = ConstantAgent::new(0);
        let err = run_curriculum(
            &mut agent,
            &curriculum,
            2,
            Budget {
                max_steps: Some(50),
                max_seconds: None,
            },
        );
        assert!(matches!(err, Err(HarnessError::BudgetExceeded { .. })));
    }
}
