use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{eval_bool, eval_expr, Bindings, EvalError};
use super::model::{Efsm, Transition};
use super::value::Value;

/// Runtime state of the machine: control state plus a total valuation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub state: String,
    pub valuation: BTreeMap<String, Value>,
}

impl Configuration {
    pub fn initial(model: &Efsm) -> Self {
        Configuration {
            state: model.initial_state.clone(),
            valuation: model
                .variables
                .iter()
                .map(|v| (v.name.clone(), v.init.clone()))
                .collect(),
        }
    }

    pub fn at(state: impl Into<String>) -> Self {
        Configuration {
            state: state.into(),
            valuation: BTreeMap::new(),
        }
    }
}

/// A concrete signal occurrence: name plus argument values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Instance {
    pub signal: String,
    pub args: Vec<Value>,
}

pub type InputInstance = Instance;
pub type OutputInstance = Instance;

impl Instance {
    pub fn new(signal: impl Into<String>, args: impl IntoIterator<Item = Value>) -> Self {
        Instance {
            signal: signal.into(),
            args: args.into_iter().collect(),
        }
    }

    pub fn bare(signal: impl Into<String>) -> Self {
        Instance::new(signal, [])
    }

    fn join_args(&self) -> String {
        self.args
            .iter()
            .map(Value::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }

    /// `sig{a,b}` rendering used in test cases.
    pub fn braced(&self) -> String {
        format!("{}{{{}}}", self.signal, self.join_args())
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.signal, self.join_args())
    }
}

/// One fired transition with its surrounding configurations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub transition: String,
    pub input: InputInstance,
    pub output: OutputInstance,
    pub pre: Configuration,
    pub post: Configuration,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FireError {
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn bind(t: &Transition, input: &InputInstance) -> Option<Bindings> {
    if t.input.signal != input.signal || t.input.params.len() != input.args.len() {
        return None;
    }
    Some(
        t.input
            .params
            .iter()
            .cloned()
            .zip(input.args.iter().cloned())
            .collect(),
    )
}

fn is_enabled(model: &Efsm, t: &Transition, cfg: &Configuration, input: &InputInstance) -> bool {
    if t.source != cfg.state {
        return false;
    }
    let Some(bindings) = bind(t, input) else {
        return false;
    };
    match &t.predicate {
        None => true,
        Some(p) => eval_bool(model, p, cfg, &bindings).unwrap_or(false),
    }
}

/// Transitions that may fire on `input` from `cfg`, in declaration order.
pub fn enabled_steps<'m>(
    model: &'m Efsm,
    cfg: &Configuration,
    input: &InputInstance,
) -> Vec<&'m Transition> {
    model
        .transitions
        .iter()
        .filter(|t| is_enabled(model, t, cfg, input))
        .collect()
}

/// Fires `t`; actions and output arguments all read the pre-state.
pub fn fire(
    model: &Efsm,
    cfg: &Configuration,
    t: &Transition,
    input: &InputInstance,
) -> Result<(Configuration, OutputInstance), FireError> {
    if !is_enabled(model, t, cfg, input) {
        return Err(FireError::NotEnabled(t.id.clone()));
    }
    let bindings = bind(t, input).expect("enabled implies bindable");
    let args = t
        .output
        .args
        .iter()
        .map(|a| eval_expr(model, a, cfg, &bindings))
        .collect::<Result<Vec<_>, _>>()?;
    let updates = t
        .actions
        .iter()
        .map(|a| Ok((a.var.clone(), eval_expr(model, &a.value, cfg, &bindings)?)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    let mut valuation = cfg.valuation.clone();
    valuation.extend(updates);
    Ok((
        Configuration {
            state: t.target.clone(),
            valuation,
        },
        Instance::new(t.output.signal.clone(), args),
    ))
}

/// Every combination of values for a signal's parameters, first parameter
/// varying slowest, each in domain order.
pub fn argument_combinations(model: &Efsm, signal: &str) -> Vec<Vec<Value>> {
    let Some(sig) = model.signal(signal) else {
        return Vec::new();
    };
    let domains: Vec<Vec<Value>> = sig
        .params
        .iter()
        .map(|p| model.domain(&p.ty).unwrap_or_default())
        .collect();
    cartesian(&domains)
}

pub(crate) fn cartesian(domains: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        let mut next = Vec::with_capacity(out.len() * d.len());
        for prefix in &out {
            for v in d {
                let mut row = prefix.clone();
                row.push(v.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}

/// All steps possible from `cfg`: transitions in declaration order, then
/// argument combinations in domain order.
pub fn successors(model: &Efsm, cfg: &Configuration) -> Vec<Step> {
    let mut out = Vec::new();
    for t in model.transitions.iter().filter(|t| t.source == cfg.state) {
        for args in argument_combinations(model, &t.input.signal) {
            let input = Instance::new(t.input.signal.clone(), args);
            if let Ok((post, output)) = fire(model, cfg, t, &input) {
                out.push(Step {
                    transition: t.id.clone(),
                    input,
                    output,
                    pre: cfg.clone(),
                    post,
                });
            }
        }
    }
    out
}
