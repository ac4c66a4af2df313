use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::model::{Efsm, Transition, TypeKind, BOOLEAN};
use super::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    UnknownState,
    UnknownSignal,
    UnknownType,
    UnknownSet,
    UnboundName,
    ArityMismatch,
    TypeMismatch,
    EmptyDomain,
    ValueOutOfDomain,
    DuplicateName,
    NameClash,
}

/// The model element a diagnostic is about.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "snake_case")]
pub enum Subject {
    Model,
    Type(String),
    Set(String),
    Signal(String),
    Variable(String),
    State(String),
    Transition(String),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Model => f.write_str("model"),
            Subject::Type(n) => write!(f, "type {n}"),
            Subject::Set(n) => write!(f, "set {n}"),
            Subject::Signal(n) => write!(f, "signal {n}"),
            Subject::Variable(n) => write!(f, "var {n}"),
            Subject::State(n) => write!(f, "state {n}"),
            Subject::Transition(n) => write!(f, "transition {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub subject: Subject,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.kind, self.subject, self.message)
    }
}

/// Static type of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Ty {
    Bool,
    /// An integer; `Some` when it comes from a declared range type.
    Int(Option<String>),
    Enum(String),
}

impl Ty {
    fn of_decl(model: &Efsm, ty: &str) -> Option<Ty> {
        if ty == BOOLEAN {
            return Some(Ty::Bool);
        }
        model.type_decl(ty).map(|d| match d.kind {
            TypeKind::Enum { .. } => Ty::Enum(d.name.clone()),
            TypeKind::Range { .. } => Ty::Int(Some(d.name.clone())),
        })
    }

    fn compatible(&self, other: &Ty) -> bool {
        match (self, other) {
            (Ty::Int(_), Ty::Int(_)) => true,
            (a, b) => a == b,
        }
    }

    fn describe(&self) -> String {
        match self {
            Ty::Bool => BOOLEAN.to_string(),
            Ty::Int(Some(n)) => n.clone(),
            Ty::Int(None) => "integer".to_string(),
            Ty::Enum(n) => n.clone(),
        }
    }
}

struct Checker<'m> {
    model: &'m Efsm,
    out: Vec<Diagnostic>,
}

impl<'m> Checker<'m> {
    fn push(&mut self, kind: DiagnosticKind, subject: Subject, message: impl Into<String>) {
        self.out.push(Diagnostic {
            kind,
            subject,
            message: message.into(),
        });
    }

    fn value_ty(&self, v: &Value) -> Option<Ty> {
        match v {
            Value::Bool(_) => Some(Ty::Bool),
            Value::Int(_) => Some(Ty::Int(None)),
            Value::Sym(s) => self.model.symbol_type(s).map(|t| Ty::Enum(t.name.clone())),
        }
    }

    fn check_type_ref(&mut self, ty: &str, subject: &Subject) -> bool {
        if ty == BOOLEAN || self.model.type_decl(ty).is_some() {
            true
        } else {
            self.push(
                DiagnosticKind::UnknownType,
                subject.clone(),
                format!("undeclared type `{ty}`"),
            );
            false
        }
    }

    /// Infers the type of `e`, reporting problems; `None` when untypeable.
    fn infer(&mut self, e: &Expr, t: Option<&Transition>, subject: &Subject) -> Option<Ty> {
        match e {
            Expr::Lit(v) => {
                let ty = self.value_ty(v);
                if ty.is_none() {
                    self.push(
                        DiagnosticKind::UnboundName,
                        subject.clone(),
                        format!("symbol `{v}` belongs to no declared type"),
                    );
                }
                ty
            }
            Expr::Var(name) => match self.model.variable(name) {
                Some(v) => Ty::of_decl(self.model, &v.ty),
                None => {
                    self.push(
                        DiagnosticKind::UnboundName,
                        subject.clone(),
                        format!("undeclared variable `{name}`"),
                    );
                    None
                }
            },
            Expr::Param(name) => {
                let ty = t.and_then(|t| self.model.param_type(t, name));
                match ty {
                    Some(ty) => Ty::of_decl(self.model, ty),
                    None => {
                        self.push(
                            DiagnosticKind::UnboundName,
                            subject.clone(),
                            format!("`{name}` is not a parameter of this input"),
                        );
                        None
                    }
                }
            }
            Expr::Compare(op, l, r) => {
                let lt = self.infer(l, t, subject);
                let rt = self.infer(r, t, subject);
                if let (Some(lt), Some(rt)) = (lt, rt) {
                    if !lt.compatible(&rt) {
                        self.push(
                            DiagnosticKind::TypeMismatch,
                            subject.clone(),
                            format!(
                                "`{}` compares {} with {}",
                                op.symbol(),
                                lt.describe(),
                                rt.describe()
                            ),
                        );
                    } else if op.is_ordering() && !matches!(lt, Ty::Int(_)) {
                        self.push(
                            DiagnosticKind::TypeMismatch,
                            subject.clone(),
                            format!("`{}` needs integer operands, found {}", op.symbol(), lt.describe()),
                        );
                    }
                }
                Some(Ty::Bool)
            }
            Expr::And(xs) | Expr::Or(xs) => {
                for x in xs {
                    self.expect_bool(x, t, subject);
                }
                Some(Ty::Bool)
            }
            Expr::Not(x) => {
                self.expect_bool(x, t, subject);
                Some(Ty::Bool)
            }
            Expr::MemberOf(x, set) => {
                let xt = self.infer(x, t, subject);
                match self.model.set(set) {
                    None => self.push(
                        DiagnosticKind::UnknownSet,
                        subject.clone(),
                        format!("undeclared set `{set}`"),
                    ),
                    Some(decl) => {
                        if let (Some(xt), Some(st)) = (xt, Ty::of_decl(self.model, &decl.ty)) {
                            if !xt.compatible(&st) {
                                self.push(
                                    DiagnosticKind::TypeMismatch,
                                    subject.clone(),
                                    format!(
                                        "membership of {} in set `{set}` over {}",
                                        xt.describe(),
                                        st.describe()
                                    ),
                                );
                            }
                        }
                    }
                }
                Some(Ty::Bool)
            }
        }
    }

    fn expect_bool(&mut self, e: &Expr, t: Option<&Transition>, subject: &Subject) {
        if let Some(ty) = self.infer(e, t, subject) {
            if ty != Ty::Bool {
                self.push(
                    DiagnosticKind::TypeMismatch,
                    subject.clone(),
                    format!("expected boolean, found {}", ty.describe()),
                );
            }
        }
    }

    /// Checks that `e` can be stored in a slot of declared type `ty`.
    fn expect_assignable(&mut self, e: &Expr, ty: &str, t: &Transition, subject: &Subject) {
        let Some(actual) = self.infer(e, Some(t), subject) else {
            return;
        };
        let Some(expected) = Ty::of_decl(self.model, ty) else {
            return;
        };
        let ok = match (&expected, &actual) {
            // Integer literals must fit the range; other integers must share the range type.
            (Ty::Int(_), Ty::Int(None)) => match e {
                Expr::Lit(v) => self.model.type_contains(ty, v),
                _ => false,
            },
            (a, b) => a == b,
        };
        if !ok {
            self.push(
                DiagnosticKind::TypeMismatch,
                subject.clone(),
                format!("`{e}` does not fit type `{ty}`"),
            );
        }
    }

    fn check_declarations(&mut self) {
        let m = self.model;
        let mut names = BTreeSet::new();
        for t in &m.types {
            let subject = Subject::Type(t.name.clone());
            if t.name == BOOLEAN || !names.insert(t.name.clone()) {
                self.push(DiagnosticKind::DuplicateName, subject.clone(), "type declared twice");
            }
            if t.domain().is_empty() {
                self.push(DiagnosticKind::EmptyDomain, subject.clone(), "empty domain");
            }
            if let TypeKind::Enum { symbols } = &t.kind {
                for (i, s) in symbols.iter().enumerate() {
                    if symbols[..i].contains(s) {
                        self.push(
                            DiagnosticKind::DuplicateName,
                            subject.clone(),
                            format!("symbol `{s}` repeated"),
                        );
                    } else if m.symbol_type(s).is_some_and(|o| o.name != t.name) {
                        self.push(
                            DiagnosticKind::DuplicateName,
                            subject.clone(),
                            format!("symbol `{s}` already belongs to another type"),
                        );
                    }
                }
            }
        }

        let mut seen = BTreeSet::new();
        for s in &m.sets {
            let subject = Subject::Set(s.name.clone());
            if !seen.insert(&s.name) {
                self.push(DiagnosticKind::DuplicateName, subject.clone(), "set declared twice");
            }
            if self.check_type_ref(&s.ty, &subject) {
                for v in &s.members {
                    if !m.type_contains(&s.ty, v) {
                        self.push(
                            DiagnosticKind::ValueOutOfDomain,
                            subject.clone(),
                            format!("`{v}` is not in `{}`", s.ty),
                        );
                    }
                }
            }
        }

        let mut seen = BTreeSet::new();
        for sig in &m.signals {
            let subject = Subject::Signal(sig.name.clone());
            if !seen.insert(&sig.name) {
                self.push(DiagnosticKind::DuplicateName, subject.clone(), "signal declared twice");
            }
            for p in &sig.params {
                self.check_type_ref(&p.ty, &subject);
            }
        }

        let mut seen = BTreeSet::new();
        for v in &m.variables {
            let subject = Subject::Variable(v.name.clone());
            if !seen.insert(&v.name) {
                self.push(DiagnosticKind::DuplicateName, subject.clone(), "variable declared twice");
            }
            if m.symbol_type(&v.name).is_some() || m.consts.iter().any(|c| c.name == v.name) {
                self.push(
                    DiagnosticKind::NameClash,
                    subject.clone(),
                    format!("`{}` is also a symbol or constant", v.name),
                );
            }
            if self.check_type_ref(&v.ty, &subject) && !m.type_contains(&v.ty, &v.init) {
                self.push(
                    DiagnosticKind::ValueOutOfDomain,
                    subject.clone(),
                    format!("initial value `{}` is not in `{}`", v.init, v.ty),
                );
            }
        }

        let mut seen = BTreeSet::new();
        for s in &m.states {
            if !seen.insert(s) {
                self.push(
                    DiagnosticKind::DuplicateName,
                    Subject::State(s.clone()),
                    "state declared twice",
                );
            }
        }
        if !m.has_state(&m.initial_state) {
            self.push(
                DiagnosticKind::UnknownState,
                Subject::Model,
                format!("initial state `{}` is not declared", m.initial_state),
            );
        }
    }

    fn check_transition(&mut self, t: &Transition) {
        let m = self.model;
        let subject = Subject::Transition(t.id.clone());
        for s in [&t.source, &t.target] {
            if !m.has_state(s) {
                self.push(
                    DiagnosticKind::UnknownState,
                    subject.clone(),
                    format!("undeclared state `{s}`"),
                );
            }
        }
        match m.signal(&t.input.signal) {
            None => self.push(
                DiagnosticKind::UnknownSignal,
                subject.clone(),
                format!("undeclared input signal `{}`", t.input.signal),
            ),
            Some(sig) if sig.params.len() != t.input.params.len() => self.push(
                DiagnosticKind::ArityMismatch,
                subject.clone(),
                format!(
                    "`{}` takes {} parameter(s), {} given",
                    sig.name,
                    sig.params.len(),
                    t.input.params.len()
                ),
            ),
            Some(_) => {}
        }
        for (i, p) in t.input.params.iter().enumerate() {
            if t.input.params[..i].contains(p) {
                self.push(
                    DiagnosticKind::DuplicateName,
                    subject.clone(),
                    format!("parameter `{p}` repeated"),
                );
            }
            if m.variable(p).is_some() || m.symbol_type(p).is_some() || m.consts.iter().any(|c| &c.name == p) {
                self.push(
                    DiagnosticKind::NameClash,
                    subject.clone(),
                    format!("parameter `{p}` shadows a variable, symbol or constant"),
                );
            }
        }

        if let Some(p) = &t.predicate {
            self.expect_bool(p, Some(t), &subject);
        }

        match m.signal(&t.output.signal) {
            None => self.push(
                DiagnosticKind::UnknownSignal,
                subject.clone(),
                format!("undeclared output signal `{}`", t.output.signal),
            ),
            Some(sig) if sig.params.len() != t.output.args.len() => self.push(
                DiagnosticKind::ArityMismatch,
                subject.clone(),
                format!(
                    "`{}` takes {} argument(s), {} given",
                    sig.name,
                    sig.params.len(),
                    t.output.args.len()
                ),
            ),
            Some(sig) => {
                for (arg, p) in t.output.args.iter().zip(&sig.params) {
                    self.expect_assignable(arg, &p.ty, t, &subject);
                }
            }
        }

        for (i, a) in t.actions.iter().enumerate() {
            if t.actions[..i].iter().any(|b| b.var == a.var) {
                self.push(
                    DiagnosticKind::DuplicateName,
                    subject.clone(),
                    format!("`{}` assigned twice", a.var),
                );
            }
            match m.variable(&a.var) {
                None => self.push(
                    DiagnosticKind::UnboundName,
                    subject.clone(),
                    format!("assignment to undeclared variable `{}`", a.var),
                ),
                Some(v) => self.expect_assignable(&a.value, &v.ty, t, &subject),
            }
        }
    }
}

/// Checks every structural and typing invariant; an empty result means the model is valid.
pub fn validate_model(model: &Efsm) -> Vec<Diagnostic> {
    let mut c = Checker {
        model,
        out: Vec::new(),
    };
    c.check_declarations();
    let mut ids = BTreeSet::new();
    for t in &model.transitions {
        if !ids.insert(&t.id) {
            c.push(
                DiagnosticKind::DuplicateName,
                Subject::Transition(t.id.clone()),
                "transition id used twice",
            );
        }
        c.check_transition(t);
    }
    c.out
}
