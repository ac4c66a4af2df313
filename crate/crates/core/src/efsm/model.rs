use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::value::Value;

/// Name of the built-in boolean type.
pub const BOOLEAN: &str = "boolean";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstDecl {
    pub name: String,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeKind {
    Enum { symbols: Vec<String> },
    /// Inclusive integer range.
    Range { lo: i64, hi: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDecl {
    pub name: String,
    pub kind: TypeKind,
}

impl TypeDecl {
    pub fn domain(&self) -> Vec<Value> {
        match &self.kind {
            TypeKind::Enum { symbols } => symbols.iter().map(|s| Value::Sym(s.clone())).collect(),
            TypeKind::Range { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (&self.kind, v) {
            (TypeKind::Enum { symbols }, Value::Sym(s)) => symbols.contains(s),
            (TypeKind::Range { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            _ => false,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self.kind, TypeKind::Range { .. })
    }
}

/// A named subset of a type's domain, evaluated through its characteristic function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetDecl {
    pub name: String,
    pub ty: String,
    pub members: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamDecl {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalDecl {
    pub name: String,
    pub params: Vec<ParamDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub ty: String,
    pub init: Value,
}

/// Input side of a transition: a signal and the formal names bound to its arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputAction {
    pub signal: String,
    pub params: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputAction {
    pub signal: String,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub var: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    pub source: String,
    pub target: String,
    pub input: InputAction,
    pub output: OutputAction,
    /// `None` behaves exactly like a predicate that is always true.
    pub predicate: Option<Expr>,
    pub actions: Vec<Assignment>,
}

/// An extended finite-state machine with a single process instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Efsm {
    pub name: String,
    pub process: String,
    pub consts: Vec<ConstDecl>,
    pub types: Vec<TypeDecl>,
    pub sets: Vec<SetDecl>,
    pub signals: Vec<SignalDecl>,
    pub variables: Vec<VarDecl>,
    pub states: Vec<String>,
    pub initial_state: String,
    /// Kept grouped by source state, in state declaration order.
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub states: usize,
    pub transitions: usize,
    pub signals: usize,
}

impl std::fmt::Display for ModelStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.states, self.transitions, self.signals)
    }
}

impl Efsm {
    pub fn stats(&self) -> ModelStats {
        ModelStats {
            states: self.states.len(),
            transitions: self.transitions.len(),
            signals: self.signals.len(),
        }
    }

    pub fn type_decl(&self, name: &str) -> Option<&TypeDecl> {
        self.types.iter().find(|t| t.name == name)
    }

    /// Ordered domain of a type, including the built-in boolean type.
    pub fn domain(&self, ty: &str) -> Option<Vec<Value>> {
        if ty == BOOLEAN {
            return Some(vec![Value::Bool(false), Value::Bool(true)]);
        }
        self.type_decl(ty).map(TypeDecl::domain)
    }

    pub fn type_contains(&self, ty: &str, v: &Value) -> bool {
        if ty == BOOLEAN {
            return matches!(v, Value::Bool(_));
        }
        self.type_decl(ty).is_some_and(|t| t.contains(v))
    }

    /// The enum type declaring `symbol`, if any.
    pub fn symbol_type(&self, symbol: &str) -> Option<&TypeDecl> {
        self.types.iter().find(|t| match &t.kind {
            TypeKind::Enum { symbols } => symbols.iter().any(|s| s == symbol),
            TypeKind::Range { .. } => false,
        })
    }

    pub fn set(&self, name: &str) -> Option<&SetDecl> {
        self.sets.iter().find(|s| s.name == name)
    }

    pub fn signal(&self, name: &str) -> Option<&SignalDecl> {
        self.signals.iter().find(|s| s.name == name)
    }

    pub fn variable(&self, name: &str) -> Option<&VarDecl> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.id == id)
    }

    pub fn has_state(&self, s: &str) -> bool {
        self.states.iter().any(|x| x == s)
    }

    pub fn state_index(&self, s: &str) -> Option<usize> {
        self.states.iter().position(|x| x == s)
    }

    /// Declared type of one of a transition's formal input parameters.
    pub fn param_type(&self, t: &Transition, param: &str) -> Option<&str> {
        let pos = t.input.params.iter().position(|p| p == param)?;
        let sig = self.signal(&t.input.signal)?;
        sig.params.get(pos).map(|p| p.ty.as_str())
    }

    /// Stable-sorts transitions by source state so the list matches the
    /// grouping the text format writes out.
    pub fn canonicalize(&mut self) {
        let order = |s: &str| self.states.iter().position(|x| x == s).unwrap_or(usize::MAX);
        let mut keyed: Vec<(usize, Transition)> = self
            .transitions
            .drain(..)
            .map(|t| (order(&t.source), t))
            .collect();
        keyed.sort_by_key(|(k, _)| *k);
        self.transitions = keyed.into_iter().map(|(_, t)| t).collect();
    }

    /// A transition id of the form `t<n>` not yet used by this model.
    pub fn fresh_transition_id(&self) -> String {
        let mut n = self.transitions.len() + 1;
        loop {
            let id = format!("t{n}");
            if self.transition(&id).is_none() {
                return id;
            }
            n += 1;
        }
    }
}
