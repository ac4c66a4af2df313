use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::purpose::{ActionPattern, TestPurpose};
use crate::efsm::{enabled_steps, fire, Configuration, Efsm, Instance, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectiveError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("signal `{signal}` has no parameter `{param}`")]
    UnknownParam { signal: String, param: String },
    #[error("{signal}({value}) enables {count} transitions at `{state}`")]
    NondeterministicAt {
        state: String,
        signal: String,
        value: Value,
        count: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objectives {
    pub purposes: Vec<TestPurpose>,
    /// One line per swept value that enabled no transition.
    pub warnings: Vec<String>,
}

/// Sweeps `param` of `input` over its domain at `state`, emitting one purpose
/// per value that fires exactly one transition.
///
/// Variables take their declared initial values; every other parameter of
/// the signal takes the first value of its domain.
pub fn generate_objectives(
    m: &Efsm,
    state: &str,
    input: &str,
    param: &str,
) -> Result<Objectives, ObjectiveError> {
    if !m.has_state(state) {
        return Err(ObjectiveError::UnknownState(state.to_string()));
    }
    let sig = m
        .signal(input)
        .ok_or_else(|| ObjectiveError::UnknownSignal(input.to_string()))?;
    let k = sig
        .params
        .iter()
        .position(|p| p.name == param)
        .ok_or_else(|| ObjectiveError::UnknownParam {
            signal: input.to_string(),
            param: param.to_string(),
        })?;
    let domains: Vec<Vec<Value>> = sig
        .params
        .iter()
        .map(|p| m.domain(&p.ty).unwrap_or_default())
        .collect();
    let cfg = Configuration {
        state: state.to_string(),
        ..Configuration::initial(m)
    };
    let mut out = Objectives::default();
    for v in &domains[k] {
        let args: Vec<Value> = domains
            .iter()
            .enumerate()
            .map(|(i, d)| if i == k { v.clone() } else { d[0].clone() })
            .collect();
        let inst = Instance::new(input, args.clone());
        let enabled = enabled_steps(m, &cfg, &inst);
        match enabled.as_slice() {
            [] => out
                .warnings
                .push(format!("{inst} fires no transition at `{state}`; skipped")),
            [t] => {
                let (post, output) = fire(m, &cfg, t, &inst).expect("enabled transition fires");
                let out_pattern = if output.args.is_empty() {
                    ActionPattern::any(output.signal)
                } else {
                    ActionPattern::exact(output.signal, output.args)
                };
                let n = out.purposes.len() + 1;
                out.purposes.push(
                    TestPurpose::named(format!("obj{n}"))
                        .with_instance(&m.process)
                        .with_source(state)
                        .with_destination(post.state)
                        .with_input(ActionPattern::exact(input, args))
                        .with_output(out_pattern),
                );
            }
            many => {
                return Err(ObjectiveError::NondeterministicAt {
                    state: state.to_string(),
                    signal: input.to_string(),
                    value: v.clone(),
                    count: many.len(),
                })
            }
        }
    }
    Ok(out)
}
