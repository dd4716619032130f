//! Byte/reward alphabet and the lockstep wire encoding between the
//! environment and an agent.
//!
//! The environment sends a two-octet frame (observation byte, reward byte)
//! per simulation step and receives a single raw octet back. Frames strictly
//! alternate, environment first, with no delimiters.

use serde::{Deserialize, Serialize};

use crate::error::StreamError;

/// One octet of observation or action data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(pub u8);

impl Symbol {
    pub fn value(self) -> u8 {
        self.0
    }
}

impl From<u8> for Symbol {
    fn from(v: u8) -> Self {
        Symbol(v)
    }
}

/// Ternary reward delivered with every environment frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reward {
    Negative,
    Zero,
    Positive,
}

impl Reward {
    pub fn as_i8(self) -> i8 {
        match self {
            Reward::Negative => -1,
            Reward::Zero => 0,
            Reward::Positive => 1,
        }
    }

    pub fn from_i8(v: i8) -> Result<Reward, StreamError> {
        match v {
            -1 => Ok(Reward::Negative),
            0 => Ok(Reward::Zero),
            1 => Ok(Reward::Positive),
            other => Err(StreamError::RewardOutOfRange(other as u8)),
        }
    }
}

/// One step of the agent-visible stream plus the agent's response.
///
/// `action` is absent only on the priming record that opens an instance run
/// before the agent has acted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub observation: Symbol,
    pub reward: Reward,
    pub action: Option<Symbol>,
}

/// Harness-side annotation of where instances and tasks begin in a log.
/// Never visible through the agent-facing interface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    /// Index into `records` of the first step of the new instance.
    pub at: usize,
    pub task_id: String,
    pub instance_seed: u64,
}

/// The full (observation, reward, action) stream one agent experienced.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SessionLog {
    pub records: Vec<StepRecord>,
    pub boundaries: Vec<Boundary>,
}

impl SessionLog {
    pub fn new() -> Self {
        SessionLog::default()
    }

    pub fn push(&mut self, record: StepRecord) {
        self.records.push(record);
    }

    pub fn mark_boundary(&mut self, task_id: &str, instance_seed: u64) {
        self.boundaries.push(Boundary {
            at: self.records.len(),
            task_id: task_id.to_string(),
            instance_seed,
        });
    }

    /// Number of agent actions in the log (priming records excluded).
    pub fn action_count(&self) -> u64 {
        self.records.iter().filter(|r| r.action.is_some()).count() as u64
    }
}

/// Encode an environment frame: octet 0 is the observation, octet 1 the
/// reward in two's complement (-1 -> 0xFF, 0 -> 0x00, +1 -> 0x01).
pub fn encode_frame(observation: Symbol, reward: Reward) -> [u8; 2] {
    [observation.0, reward.as_i8() as u8]
}

/// Inverse of [`encode_frame`].
pub fn decode_frame(frame: [u8; 2]) -> Result<(Symbol, Reward), StreamError> {
    let reward = match frame[1] {
        0xFF => Reward::Negative,
        0x00 => Reward::Zero,
        0x01 => Reward::Positive,
        other => return Err(StreamError::RewardOutOfRange(other)),
    };
    Ok((Symbol(frame[0]), reward))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_examples() {
        assert_eq!(encode_frame(Symbol(0x41), Reward::Positive), [0x41, 0x01]);
        assert_eq!(encode_frame(Symbol(0x00), Reward::Zero), [0x00, 0x00]);
        assert_eq!(encode_frame(Symbol(0x7A), Reward::Negative), [0x7A, 0xFF]);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(
            decode_frame([0x41, 0x01]).unwrap(),
            (Symbol(0x41), Reward::Positive)
        );
        assert_eq!(
            decode_frame([0x00, 0x00]).unwrap(),
            (Symbol(0x00), Reward::Zero)
        );
        assert!(matches!(
            decode_frame([0x10, 0x07]),
            Err(StreamError::RewardOutOfRange(0x07))
        ));
    }

    #[test]
    fn action_count_skips_priming() {
        let mut log = SessionLog::new();
        log.push(StepRecord {
            t: 0,
            observation: Symbol(1),
            reward: Reward::Zero,
            action: None,
        });
        log.push(StepRecord {
            t: 1,
            observation: Symbol(2),
            reward: Reward::Positive,
            action: Some(Symbol(3)),
        });
        assert_eq!(log.action_count(), 1);
    }

    proptest! {
        #[test]
        fn frame_round_trip(obs in any::<u8>(), r in -1i8..=1) {
            let reward = Reward::from_i8(r).unwrap();
            let frame = encode_frame(Symbol(obs), reward);
            prop_assert_eq!(decode_frame(frame).unwrap(), (Symbol(obs), reward));
        }
    }
}
