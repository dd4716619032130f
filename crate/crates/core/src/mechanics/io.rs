//! Machine serialization: JSON with alphabets, state names, and sparse
//! transition records. f64 probabilities survive a round trip exactly
//! (serde_json emits shortest-round-trip decimal forms).

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{EpsilonMachine, EpsilonTransducer};
use crate::error::MechanicsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MachineFile {
    Machine(EpsilonMachine),
    Transducer(EpsilonTransducer),
}

impl MachineFile {
    pub fn validate(&self) -> Result<(), MechanicsError> {
        match self {
            MachineFile::Machine(m) => m.validate(),
            MachineFile::Transducer(t) => t.validate(),
        }
    }

    pub fn state_count(&self) -> usize {
        match self {
            MachineFile::Machine(m) => m.states.len(),
            MachineFile::Transducer(t) => t.states.len(),
        }
    }
}

pub fn save_machine_file(file: &MachineFile, path: &Path) -> Result<(), MechanicsError> {
    let text = serde_json::to_string_pretty(file).expect("machine serializes");
    std::fs::write(path, text)
        .map_err(|e| MechanicsError::Malformed(format!("{}: {e}", path.display())))
}

pub fn load_machine_file(path: &Path) -> Result<MachineFile, MechanicsError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MechanicsError::Malformed(format!("{}: {e}", path.display())))?;
    let file: MachineFile = serde_json::from_str(&text)
        .map_err(|e| MechanicsError::Malformed(format!("{}: {e}", path.display())))?;
    file.validate()?;
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::MachineEdge;

    #[test]
    fn probabilities_round_trip_exactly() {
        let machine = EpsilonMachine {
            alphabet: vec!["0".into(), "1".into()],
            states: vec!["A".into(), "B".into()],
            transitions: vec![
                MachineEdge { from: 0, symbol: 0, to: 0, p: 1.0 / 3.0 },
                MachineEdge { from: 0, symbol: 1, to: 1, p: 2.0 / 3.0 },
                MachineEdge { from: 1, symbol: 0, to: 0, p: 0.123456789012345678 },
                MachineEdge { from: 1, symbol: 1, to: 1, p: 1.0 - 0.123456789012345678 },
            ],
        };
        let file = MachineFile::Machine(machine.clone());
        let text = serde_json::to_string(&file).unwrap();
        let parsed: MachineFile = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, file);
    }
}
