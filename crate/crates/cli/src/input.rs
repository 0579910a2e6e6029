//! Instance files: a single JSON object describing the actions, the agent and
//! the welfare function.

use std::fs;
use std::path::Path;

use infodesign::{ActionSpec, Instance, PowerValue, RiskAttitude, SocialUtility};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    /// Non-default actions only; action 0 is implicit.
    pub actions: Vec<ActionSpec>,
    pub agent: AgentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub welfare: Option<SocialUtility>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub attitude: AttitudeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_function: Option<ValueFunctionSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttitudeName {
    RiskNeutral,
    RiskAverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueFunctionSpec {
    Power { alpha: f64, beta: f64 },
}

/// Validated contents of an instance file.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub instance: Instance,
    pub attitude: RiskAttitude,
    pub welfare: Option<SocialUtility>,
}

pub fn load_instance(path: &Path) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| match e {
        CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_instance(text: &str) -> Result<Loaded, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        let path = e.path().to_string();
        if path == "." {
            CliError::Usage(format!(
                "line {} column {}: {inner}",
                inner.line(),
                inner.column()
            ))
        } else {
            CliError::Usage(format!("{path}: {inner}"))
        }
    })?;
    file.validate()
}

impl InstanceFile {
    pub fn validate(&self) -> Result<Loaded, CliError> {
        let field = |msg: String| CliError::Usage(msg);
        if self.actions.is_empty() {
            return Err(field(
                "actions: at least one non-default action is required".into(),
            ));
        }
        for (i, a) in self.actions.iter().enumerate() {
            for (name, value) in [("reward", a.reward), ("cost", a.cost)] {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(field(format!(
                        "actions[{i}].{name}: must be a finite nonnegative number, got {value}"
                    )));
                }
            }
        }
        if self.actions[0].reward == 0.0 && self.actions[0].cost == 0.0 {
            return Err(field(
                "actions[0]: the default action (reward 0, cost 0) is implicit and must not be listed".into(),
            ));
        }
        let attitude = match (self.agent.attitude, self.agent.value_function) {
            (AttitudeName::RiskNeutral, None) => RiskAttitude::Neutral,
            (AttitudeName::RiskNeutral, Some(_)) => {
                return Err(field(
                    "agent.value_function: only allowed for a risk_averse agent".into(),
                ));
            }
            (AttitudeName::RiskAverse, None) => {
                return Err(field(
                    "agent.value_function: required for a risk_averse agent".into(),
                ));
            }
            (AttitudeName::RiskAverse, Some(ValueFunctionSpec::Power { alpha, beta })) => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(field(format!(
                        "agent.value_function.alpha: must lie in (0, 1), got {alpha}"
                    )));
                }
                if !(beta.is_finite() && beta > 0.0) {
                    return Err(field(format!(
                        "agent.value_function.beta: must be positive, got {beta}"
                    )));
                }
                let v = PowerValue::new(alpha, beta)
                    .map_err(|e| field(format!("agent.value_function: {e}")))?;
                RiskAttitude::averse(v)
            }
        };
        let instance = Instance::new(
            std::iter::once(ActionSpec::new(0.0, 0.0))
                .chain(self.actions.iter().copied())
                .collect(),
        )
        .map_err(|e| field(format!("actions: {e}")))?;
        Ok(Loaded {
            instance,
            attitude,
            welfare: self.welfare,
        })
    }
}
