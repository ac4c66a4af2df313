use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::efsm::{enabled_steps, fire, Configuration, Efsm, InputInstance, OutputInstance, Step};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestStep {
    /// Lines rendered as `//` comments above the step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comments: Vec<String>,
    /// Known when the step comes from a model run; absent for parsed `.tc` files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<String>,
    pub input: InputInstance,
    pub output: OutputInstance,
}

impl TestStep {
    pub fn new(input: InputInstance, output: OutputInstance) -> Self {
        TestStep {
            comments: Vec::new(),
            transition: None,
            input,
            output,
        }
    }

    pub fn with_comment(mut self, c: impl Into<String>) -> Self {
        self.comments.push(c.into());
        self
    }
}

impl From<&Step> for TestStep {
    fn from(s: &Step) -> Self {
        TestStep {
            comments: Vec::new(),
            transition: Some(s.transition.clone()),
            input: s.input.clone(),
            output: s.output.clone(),
        }
    }
}

/// Which step satisfied which purpose of the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitMarker {
    pub purpose: usize,
    pub step: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub steps: Vec<TestStep>,
    #[serde(default)]
    pub hits: Vec<HitMarker>,
}

impl TestCase {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("step {index}: no transition accepts {input} producing {output}")]
    Rejected {
        index: usize,
        input: String,
        output: String,
    },
}

/// Replays a test case from the initial configuration. Nondeterminism is
/// handled by tracking every configuration consistent with the steps so far.
pub fn replay(model: &Efsm, tc: &TestCase) -> Result<Vec<Configuration>, ReplayError> {
    let mut current: BTreeSet<Configuration> = BTreeSet::from([Configuration::initial(model)]);
    for (index, step) in tc.steps.iter().enumerate() {
        let mut next = BTreeSet::new();
        for cfg in &current {
            for t in enabled_steps(model, cfg, &step.input) {
                if step.transition.as_ref().is_some_and(|id| *id != t.id) {
                    continue;
                }
                if let Ok((post, out)) = fire(model, cfg, t, &step.input) {
                    if out == step.output {
                        next.insert(post);
                    }
                }
            }
        }
        if next.is_empty() {
            return Err(ReplayError::Rejected {
                index,
                input: step.input.to_string(),
                output: step.output.to_string(),
            });
        }
        current = next;
    }
    Ok(current.into_iter().collect())
}
