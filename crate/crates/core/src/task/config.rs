//! Curriculum configuration files (versioned JSON).

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{builtin_task, CurriculumSpec, LimitPolicy, TaskKind, TaskSpec};
use crate::error::TaskError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskConfig {
    pub id: String,
    /// Omitted for bundled tasks whose id already names the family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<TaskKind>,
    #[serde(default = "default_req_reward")]
    pub req_reward: u64,
    #[serde(default)]
    pub limit_policy: LimitPolicy,
}

fn default_req_reward() -> u64 {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurriculumConfig {
    pub version: u32,
    pub seed: u64,
    pub n_s: u64,
    pub tasks: Vec<TaskConfig>,
}

impl CurriculumConfig {
    pub fn into_spec(self) -> Result<CurriculumSpec, TaskError> {
        if self.version != CONFIG_VERSION {
            return Err(TaskError::InvalidConfig(format!(
                "unsupported config version {}",
                self.version
            )));
        }
        if self.tasks.is_empty() {
            return Err(TaskError::InvalidConfig("empty task list".into()));
        }
        if self.n_s == 0 {
            return Err(TaskError::InvalidConfig("n_s must be positive".into()));
        }
        let mut tasks = Vec::with_capacity(self.tasks.len());
        for tc in self.tasks {
            if tc.req_reward == 0 {
                return Err(TaskError::InvalidConfig(format!(
                    "task {:?}: req_reward must be positive",
                    tc.id
                )));
            }
            let kind = match tc.kind {
                Some(k) => k,
                None => builtin_task(&tc.id)
                    .ok_or_else(|| TaskError::UnknownTask(tc.id.clone()))?
                    .kind,
            };
            if let TaskKind::Scripted { rewards } = &kind {
                if rewards.is_empty() {
                    return Err(TaskError::InvalidConfig(format!(
                        "task {:?}: empty reward script",
                        tc.id
                    )));
                }
            }
            tasks.push(TaskSpec {
                id: tc.id,
                kind,
                req_reward: tc.req_reward,
                limit_policy: tc.limit_policy,
            });
        }
        Ok(CurriculumSpec {
            tasks,
            n_s: self.n_s,
            seed: self.seed,
        })
    }

    pub fn from_spec(spec: &CurriculumSpec) -> Self {
        CurriculumConfig {
            version: CONFIG_VERSION,
            seed: spec.seed,
            n_s: spec.n_s,
            tasks: spec
                .tasks
                .iter()
                .map(|t| TaskConfig {
                    id: t.id.clone(),
                    kind: Some(t.kind.clone()),
                    req_reward: t.req_reward,
                    limit_policy: t.limit_policy,
                })
                .collect(),
        }
    }
}

pub fn load_curriculum(path: &Path) -> Result<CurriculumSpec, TaskError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TaskError::InvalidConfig(format!("{}: {e}", path.display())))?;
    let config: CurriculumConfig = serde_json::from_str(&text)
        .map_err(|e| TaskError::InvalidConfig(format!("{}: {e}", path.display())))?;
    config.into_spec()
}

pub fn save_curriculum(spec: &CurriculumSpec, path: &Path) -> Result<(), TaskError> {
    let config = CurriculumConfig::from_spec(spec);
    let text = serde_json::to_string_pretty(&config).expect("curriculum serializes");
    std::fs::write(path, text)
        .map_err(|e| TaskError::InvalidConfig(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_config() {
        let spec = CurriculumSpec {
            tasks: vec![
                builtin_task("micro_fixed").unwrap(),
                builtin_task("micro_map_a21").unwrap(),
            ],
            n_s: 3,
            seed: 11,
        };
        let config = CurriculumConfig::from_spec(&spec);
        let text = serde_json::to_string(&config).unwrap();
        let parsed: CurriculumConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.into_spec().unwrap(), spec);
    }

    #[test]
    fn bundled_id_needs_no_kind() {
        let text = r#"{
            "version": 1, "seed": 1, "n_s": 2,
            "tasks": [{"id": "micro_echo"}]
        }"#;
        let config: CurriculumConfig = serde_json::from_str(text).unwrap();
        let spec = config.into_spec().unwrap();
        assert_eq!(spec.tasks[0].kind, TaskKind::MicroEcho);
        assert_eq!(spec.tasks[0].req_reward, 5);
    }

    #[test]
    fn rejects_bad_configs() {
        let wrong_version = CurriculumConfig {
            version: 99,
            seed: 0,
            n_s: 1,
            tasks: vec![TaskConfig {
                id: "micro_fixed".into(),
                kind: None,
                req_reward: 5,
                limit_policy: LimitPolicy::default(),
            }],
        };
        assert!(wrong_version.into_spec().is_err());

        let unknown = CurriculumConfig {
            version: 1,
            seed: 0,
            n_s: 1,
            tasks: vec![TaskConfig {
                id: "no_such_task".into(),
                kind: None,
                req_reward: 5,
                limit_policy: LimitPolicy::default(),
            }],
        };
        assert!(matches!(
            unknown.into_spec(),
            Err(TaskError::UnknownTask(_))
        ));
    }
}
