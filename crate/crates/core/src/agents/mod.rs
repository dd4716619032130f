//! Baseline and scripted agents for exercising the harness.
//!
//! Agents are opaque step functions (reward, observation) -> action with a
//! snapshot/restore capability. The harness additionally notifies agents of
//! instance starts; only the test-oriented OracleAgent uses that hook, the
//! byte stream itself carries no such information.

mod external;
pub mod fixtures;

pub use external::ExternalAgent;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::HarnessError;
use crate::stream::{Reward, Symbol};
use crate::task::InstanceSpec;

/// Opaque serialized agent state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub version: u32,
    pub agent: String,
    pub payload: serde_json::Value,
}

impl AgentSnapshot {
    pub fn new(agent: &str, payload: serde_json::Value) -> Self {
        AgentSnapshot {
            version: 1,
            agent: agent.to_string(),
            payload,
        }
    }
}

/// JSON objects key on strings only; byte-vector-keyed maps go through a
/// sorted pair list instead.
pub(crate) mod map_as_pairs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::HashMap;
    use std::hash::Hash;

    pub fn serialize<K, V, S>(map: &HashMap<K, V>, ser: S) -> Result<S::Ok, S::Error>
    where
        K: Serialize + Ord,
        V: Serialize,
        S: Serializer,
    {
        let mut pairs: Vec<(&K, &V)> = map.iter().collect();
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        pairs.serialize(ser)
    }

    pub fn deserialize<'de, K, V, D>(de: D) -> Result<HashMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Eq + Hash,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(de)?.into_iter().collect())
    }
}

fn snapshot_of<T: Serialize>(name: &str, state: &T) -> Result<AgentSnapshot, HarnessError> {
    let payload = serde_json::to_value(state)
        .map_err(|e| HarnessError::AgentFailure(format!("snapshot: {e}")))?;
    Ok(AgentSnapshot::new(name, payload))
}

fn restore_as<T: for<'de> Deserialize<'de>>(
    name: &str,
    snapshot: &AgentSnapshot,
) -> Result<T, HarnessError> {
    if snapshot.agent != name {
        return Err(HarnessError::AgentFailure(format!(
            "snapshot for {:?} cannot restore a {name}",
            snapshot.agent
        )));
    }
    serde_json::from_value(snapshot.payload.clone())
        .map_err(|e| HarnessError::AgentFailure(format!("restore: {e}")))
}

pub trait Agent {
    fn step(&mut self, reward: Reward, observation: Symbol) -> Result<Symbol, HarnessError>;

    fn snapshot(&self) -> Result<AgentSnapshot, HarnessError>;

    fn restore(&mut self, snapshot: &AgentSnapshot) -> Result<(), HarnessError>;

    /// Harness-side notification that a freshly sampled instance begins.
    /// Test agents may inspect the spec; stream-only agents ignore it.
    fn on_instance_start(&mut self, _spec: &InstanceSpec) {}
}

/// Uniform random actions from a seeded stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        RandomAgent {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Agent for RandomAgent {
    fn step(&mut self, _reward: Reward, _observation: Symbol) -> Result<Symbol, HarnessError> {
        Ok(Symbol(self.rng.random()))
    }

    fn snapshot(&self) -> Result<AgentSnapshot, HarnessError> {
        snapshot_of("random", self)
    }

    fn restore(&mut self, snapshot: &AgentSnapshot) -> Result<(), HarnessError> {
        *self = restore_as("random", snapshot)?;
        Ok(())
    }
}

/// Always replies with one fixed byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantAgent {
    pub action: u8,
}

impl ConstantAgent {
    pub fn new(action: u8) -> Self {
        ConstantAgent { action }
    }
}

impl Agent for ConstantAgent {
    fn step(&mut self, _reward: Reward, _observation: Symbol) -> Result<Symbol, HarnessError> {
        Ok(Symbol(self.action))
    }

    fn snapshot(&self) -> Result<AgentSnapshot, HarnessError> {
        snapshot_of("constant", self)
    }

    fn restore(&mut self, snapshot: &AgentSnapshot) -> Result<(), HarnessError> {
        *self = restore_as("constant", snapshot)?;
        Ok(())
    }
}

/// Repeats the last observation byte.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EchoAgent;

impl Agent for EchoAgent {
    fn step(&mut self, _reward: Reward, observation: Symbol) -> Result<Symbol, HarnessError> {
        Ok(observation)
    }

    fn snapshot(&self) -> Result<AgentSnapshot, HarnessError> {
        snapshot_of("echo", self)
    }

    fn restore(&mut self, snapshot: &AgentSnapshot) -> Result<(), HarnessError> {
        *self = restore_as("echo", snapshot)?;
        Ok(())
    }
}

/// Bounded-context memorizer.
///
/// Keys an action table by suffixes of the recent observation window. On a
/// context with no known suffix it scans untried actions sequentially,
/// with an epsilon chance of a random probe instead; epsilon decays with
/// each positive reward. Positive reward stores the action under every
/// suffix of the context that produced it, negative reward evicts the
/// entry that was used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemorizerAgent {
    window: usize,
    epsilon: f64,
    context: Vec<u8>,
    #[serde(with = "map_as_pairs")]
    table: HashMap<Vec<u8>, u8>,
    #[serde(with = "map_as_pairs")]
    scan: HashMap<Vec<u8>, u16>,
    rng: ChaCha8Rng,
    last: Option<LastMove>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LastMove {
    context: Vec<u8>,
    action: u8,
    used_key: Option<Vec<u8>>,
}

impl MemorizerAgent {
    pub const DEFAULT_WINDOW: usize = 4;
    pub const DEFAULT_EPSILON: f64 = 0.1;

    pub fn new(seed: u64) -> Self {
        Self::with_params(seed, Self::DEFAULT_WINDOW, Self::DEFAULT_EPSILON)
    }

    pub fn with_params(seed: u64, window: usize, epsilon: f64) -> Self {
        MemorizerAgent {
            window,
            epsilon,
            context: Vec::new(),
            table: HashMap::new(),
            scan: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            last: None,
        }
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    fn suffixes(context: &[u8]) -> impl Iterator<Item = Vec<u8>> + '_ {
        (0..context.len()).map(|i| context[i..].to_vec())
    }

    fn learn(&mut self, reward: Reward) {
        let Some(last) = self.last.take() else { return };
        match reward {
            Reward::Positive => {
                for key in Self::suffixes(&last.context) {
                    self.table.insert(key, last.action);
                }
                self.epsilon *= 0.95;
            }
            Reward::Negative => {
                if let Some(key) = last.used_key {
                    if self.table.get(&key) == Some(&last.action) {
                        self.table.remove(&key);
                    }
                }
            }
            Reward::Zero => {}
        }
    }
}

impl Agent for MemorizerAgent {
    fn step(&mut self, reward: Reward, observation: Symbol) -> Result<Symbol, HarnessError> {
        self.learn(reward);
        self.context.push(observation.0);
        let start = self.context.len().saturating_sub(self.window);
        let context: Vec<u8> = self.context[start..].to_vec();
        self.context = context.clone();

        // Longest known suffix wins.
        let mut chosen: Option<(Vec<u8>, u8)> = None;
        for key in Self::suffixes(&context) {
            if let Some(&a) = self.table.get(&key) {
                chosen = Some((key, a));
                break;
            }
        }
        let (used_key, action) = match chosen {
            Some((key, a)) => (Some(key), a),
            None => {
                if self.rng.random::<f64>() < self.epsilon {
                    (None, self.rng.random())
                } else {
                    // Scan progress is shared across contexts via the
                    // longest suffix that already has a counter, so growing
                    // the context does not restart the scan.
                    let scan_key = Self::suffixes(&context)
                        .find(|key| self.scan.contains_key(key))
                        .unwrap_or_else(|| context.clone());
                    let counter = self.scan.entry(scan_key).or_insert(0);
                    let a = (*counter % 256) as u8;
                    *counter = counter.wrapping_add(1);
                    (None, a)
                }
            }
        };
        self.last = Some(LastMove {
            context,
            action,
            used_key,
        });
        Ok(Symbol(action))
    }

    fn snapshot(&self) -> Result<AgentSnapshot, HarnessError> {
        snapshot_of("memorizer", self)
    }

    fn restore(&mut self, snapshot: &AgentSnapshot) -> Result<(), HarnessError> {
        *self = restore_as("memorizer", snapshot)?;
        Ok(())
    }
}

/// Scripted optimal policy for bundled tasks: tracks the instance spec it is
/// told about and the exact environment state, then answers with a
/// positively rewarded action whenever one exists. Used by acceptance tests.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OracleAgent {
    spec: Option<InstanceSpec>,
    state: usize,
    last_action: Option<u8>,
}

impl OracleAgent {
    pub fn new() -> Self {
        OracleAgent::default()
    }

    fn track(&mut self, observation: u8) {
        let Some(spec) = &self.spec else { return };
        if let Some(a) = self.last_action {
            let candidates: Vec<usize> = spec.transitions[self.state][a as usize]
                .iter()
                .filter(|&&(_, p)| p > 0.0)
                .map(|&(s, _)| s)
                .filter(|&s| {
                    spec.emissions[s]
                        .iter()
                        .any(|&(o, p)| o == observation && p > 0.0)
                })
                .collect();
            if let Some(&next) = candidates.first() {
                self.state = next;
            }
        }
    }
}

impl Agent for OracleAgent {
    fn step(&mut self, _reward: Reward, observation: Symbol) -> Result<Symbol, HarnessError> {
        self.track(observation.0);
        let action = match &self.spec {
            Some(spec) => spec.rewards[self.state]
                .iter()
                .position(|&r| r == Reward::Positive)
                .map(|a| a as u8)
                .unwrap_or(0),
            None => observation.0,
        };
        self.last_action = Some(action);
        Ok(Symbol(action))
    }

    fn snapshot(&self) -> Result<AgentSnapshot, HarnessError> {
        snapshot_of("oracle", self)
    }

    fn restore(&mut self, snapshot: &AgentSnapshot) -> Result<(), HarnessError> {
        *self = restore_as("oracle", snapshot)?;
        Ok(())
    }

    fn on_instance_start(&mut self, spec: &InstanceSpec) {
        self.state = spec.initial_state;
        self.spec = Some(spec.clone());
        self.last_action = None;
    }
}
