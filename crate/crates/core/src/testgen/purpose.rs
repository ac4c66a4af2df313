use std::fmt;

use serde::{Deserialize, Serialize};

use crate::efsm::{Instance, Step, Value};

/// `{process}index`; only index 0 exists in single-instance models.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcessInstance {
    pub process: String,
    pub index: u32,
}

impl fmt::Display for ProcessInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}{}", self.process, self.index)
    }
}

/// A signal, optionally pinned to exact argument values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionPattern {
    pub signal: String,
    /// `None` matches any arguments.
    pub args: Option<Vec<Value>>,
}

impl ActionPattern {
    pub fn any(signal: impl Into<String>) -> Self {
        ActionPattern {
            signal: signal.into(),
            args: None,
        }
    }

    pub fn exact(signal: impl Into<String>, args: impl IntoIterator<Item = Value>) -> Self {
        ActionPattern {
            signal: signal.into(),
            args: Some(args.into_iter().collect()),
        }
    }

    pub fn matches(&self, inst: &Instance) -> bool {
        self.signal == inst.signal && self.args.as_ref().is_none_or(|a| *a == inst.args)
    }
}

impl fmt::Display for ActionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.args {
            None => f.write_str(&self.signal),
            Some(args) => {
                let a: Vec<String> = args.iter().map(Value::to_string).collect();
                write!(f, "{}({})", self.signal, a.join(", "))
            }
        }
    }
}

/// Conjunction of step conditions; absent conditions are wildcards.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestPurpose {
    pub name: String,
    pub instance: Option<ProcessInstance>,
    pub source: Option<String>,
    pub destination: Option<String>,
    pub input: Option<ActionPattern>,
    pub output: Option<ActionPattern>,
}

impl TestPurpose {
    pub fn named(name: impl Into<String>) -> Self {
        TestPurpose {
            name: name.into(),
            instance: None,
            source: None,
            destination: None,
            input: None,
            output: None,
        }
    }

    pub fn with_instance(mut self, process: impl Into<String>) -> Self {
        self.instance = Some(ProcessInstance {
            process: process.into(),
            index: 0,
        });
        self
    }

    pub fn with_source(mut self, s: impl Into<String>) -> Self {
        self.source = Some(s.into());
        self
    }

    pub fn with_destination(mut self, s: impl Into<String>) -> Self {
        self.destination = Some(s.into());
        self
    }

    pub fn with_input(mut self, p: ActionPattern) -> Self {
        self.input = Some(p);
        self
    }

    pub fn with_output(mut self, p: ActionPattern) -> Self {
        self.output = Some(p);
        self
    }

    pub fn condition_count(&self) -> usize {
        usize::from(self.instance.is_some())
            + usize::from(self.source.is_some())
            + usize::from(self.destination.is_some())
            + usize::from(self.input.is_some())
            + usize::from(self.output.is_some())
    }
}

/// Ordered purposes that a generated test case must hit in turn.
pub type PurposeSequence = Vec<TestPurpose>;

/// Whether a step taken by `process` instance 0 satisfies every present condition.
pub fn step_matches(step: &Step, process: &str, p: &TestPurpose) -> bool {
    p.instance
        .as_ref()
        .is_none_or(|i| i.process == process && i.index == 0)
        && p.source.as_ref().is_none_or(|s| *s == step.pre.state)
        && p.destination.as_ref().is_none_or(|s| *s == step.post.state)
        && p.input.as_ref().is_none_or(|a| a.matches(&step.input))
        && p.output.as_ref().is_none_or(|a| a.matches(&step.output))
}
