//! Deliberately simple agents used as harness test fixtures: one that only
//! performs well after a warm-up (exhibits transfer), and one that throws
//! its memory away whenever it sees a novel prompt (exhibits forgetting).

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::{restore_as, snapshot_of, Agent, AgentSnapshot};
use crate::error::HarnessError;
use crate::stream::{Reward, Symbol};

/// Answers correctly only after it has lived through `warmup` steps.
///
/// Primed through any pretraining, it solves the probe task immediately;
/// started fresh it wastes the warm-up answering wrong.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WarmupAgent {
    pub correct: u8,
    pub warmup: u64,
    pub seen: u64,
}

impl WarmupAgent {
    pub fn new(correct: u8, warmup: u64) -> Self {
        WarmupAgent {
            correct,
            warmup,
            seen: 0,
        }
    }
}

impl Agent for WarmupAgent {
    fn step(&mut self, _reward: Reward, _observation: Symbol) -> Result<Symbol, HarnessError> {
        self.seen += 1;
        if self.seen > self.warmup {
            Ok(Symbol(self.correct))
        } else {
            Ok(Symbol(self.correct.wrapping_add(1)))
        }
    }

    fn snapshot(&self) -> Result<AgentSnapshot, HarnessError> {
        snapshot_of("warmup", self)
    }

    fn restore(&mut self, snapshot: &AgentSnapshot) -> Result<(), HarnessError> {
        *self = restore_as("warmup", snapshot)?;
        Ok(())
    }
}

/// Adversarial counterpart of the memorizer: learns a prompt->action table by
/// sequential scanning, but wipes the whole table whenever a never-seen
/// prompt byte arrives. Learning a new task destroys the old one.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AmnesicAgent {
    table: HashMap<u8, u8>,
    scan: HashMap<u8, u16>,
    seen: Vec<u8>,
    last: Option<(u8, u8)>,
}

impl AmnesicAgent {
    pub fn new() -> Self {
        AmnesicAgent::default()
    }
}

impl Agent for AmnesicAgent {
    fn step(&mut self, reward: Reward, observation: Symbol) -> Result<Symbol, HarnessError> {
        if let Some((obs, action)) = self.last.take() {
            if reward == Reward::Positive {
                self.table.insert(obs, action);
            }
        }
        let obs = observation.0;
        if !self.seen.contains(&obs) {
            self.seen.push(obs);
            self.table.clear();
            self.scan.clear();
        }
        let action = match self.table.get(&obs) {
            Some(&a) => a,
            None => {
                let counter = self.scan.entry(obs).or_insert(0);
                let a = (*counter % 256) as u8;
                *counter = counter.wrapping_add(1);
                a
            }
        };
        self.last = Some((obs, action));
        Ok(Symbol(action))
    }

    fn snapshot(&self) -> Result<AgentSnapshot, HarnessError> {
        snapshot_of("amnesic", self)
    }

    fn restore(&mut self, snapshot: &AgentSnapshot) -> Result<(), HarnessError> {
        *self = restore_as("amnesic", snapshot)?;
        Ok(())
    }
}
