//! Human-steered simulation: list every enabled step, take one, undo.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::efsm::{successors, Configuration, Efsm, InputInstance, OutputInstance, Step, Value};
use crate::testgen::{TestCase, TestStep};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("no choice {index}; {available} available")]
    InvalidChoice { index: usize, available: usize },
    #[error("nothing to undo")]
    NothingToUndo,
}

/// One enabled step, numbered from 1 as in the listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub index: usize,
    pub transition: String,
    pub input: InputInstance,
    pub output: OutputInstance,
    pub next_state: String,
    pub next_valuation: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    model: Arc<Efsm>,
    current: Configuration,
    trace: Vec<Step>,
}

/// Serializable snapshot of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub steps: usize,
    pub state: String,
    pub valuation: BTreeMap<String, Value>,
    pub choices: Vec<Choice>,
    pub trace: Vec<TestStep>,
}

impl Session {
    pub fn new(model: Arc<Efsm>) -> Self {
        let current = Configuration::initial(&model);
        Session {
            model,
            current,
            trace: Vec::new(),
        }
    }

    pub fn model(&self) -> &Efsm {
        &self.model
    }

    pub fn current(&self) -> &Configuration {
        &self.current
    }

    pub fn trace(&self) -> &[Step] {
        &self.trace
    }

    pub fn step_count(&self) -> usize {
        self.trace.len()
    }

    /// Enabled steps in transition order, then argument domain order.
    pub fn list_choices(&self) -> Vec<Choice> {
        successors(&self.model, &self.current)
            .into_iter()
            .enumerate()
            .map(|(i, s)| Choice {
                index: i + 1,
                transition: s.transition,
                input: s.input,
                output: s.output,
                next_state: s.post.state,
                next_valuation: s.post.valuation,
            })
            .collect()
    }

    /// Takes the step numbered `index` in the current listing.
    pub fn step(&mut self, index: usize) -> Result<&Step, SimError> {
        let mut all = successors(&self.model, &self.current);
        if index == 0 || index > all.len() {
            return Err(SimError::InvalidChoice {
                index,
                available: all.len(),
            });
        }
        let step = all.swap_remove(index - 1);
        self.current = step.post.clone();
        self.trace.push(step);
        Ok(self.trace.last().unwrap())
    }

    pub fn undo(&mut self) -> Result<Step, SimError> {
        let step = self.trace.pop().ok_or(SimError::NothingToUndo)?;
        self.current = step.pre.clone();
        Ok(step)
    }

    pub fn reset(&mut self) {
        self.trace.clear();
        self.current = Configuration::initial(&self.model);
    }

    pub fn trace_to_testcase(&self) -> TestCase {
        TestCase {
            steps: self.trace.iter().map(TestStep::from).collect(),
            hits: Vec::new(),
        }
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            steps: self.step_count(),
            state: self.current.state.clone(),
            valuation: self.current.valuation.clone(),
            choices: self.list_choices(),
            trace: self.trace.iter().map(TestStep::from).collect(),
        }
    }

    /// Status block and numbered listing, without the prompt.
    pub fn render(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        let n = self.step_count();
        let _ = writeln!(s, "status: {n} step{}", if n == 1 { "" } else { "s" });
        let inst = format!("{{{}}}0", m.process);
        let _ = writeln!(s, "{inst} {{}}");
        let vals: Vec<String> = m
            .variables
            .iter()
            .filter_map(|v| self.current.valuation.get(&v.name))
            .map(Value::to_string)
            .collect();
        let _ = writeln!(s, "  @{} {{{}}}", self.current.state, vals.join(", "));
        let _ = writeln!(s);
        let _ = writeln!(s, "transitions :");
        for c in self.list_choices() {
            let _ = writeln!(
                s,
                "[{}] {inst} ?{} {inst} !{} -> {}",
                c.index,
                c.input.braced(),
                c.output.braced(),
                c.next_state
            );
        }
        s
    }
}
