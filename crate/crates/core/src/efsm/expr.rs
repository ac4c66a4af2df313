use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::Efsm;
use super::semantics::Configuration;
use super::value::Value;

/// Values bound to the formal parameters of the input being processed.
pub type Bindings = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<>")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl CompareOp {
    pub const ALL: [CompareOp; 6] = [
        CompareOp::Eq,
        CompareOp::Ne,
        CompareOp::Lt,
        CompareOp::Le,
        CompareOp::Gt,
        CompareOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "<>",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CompareOp::Eq | CompareOp::Ne)
    }
}

/// Boolean/comparison/set-membership expressions used for guards, actions and outputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Lit(Value),
    Var(String),
    Param(String),
    Compare(CompareOp, Box<Expr>, Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
    MemberOf(Box<Expr>, String),
}

impl Expr {
    pub fn truth() -> Self {
        Expr::Lit(Value::Bool(true))
    }

    pub fn falsity() -> Self {
        Expr::Lit(Value::Bool(false))
    }

    pub fn sym(s: impl Into<String>) -> Self {
        Expr::Lit(Value::Sym(s.into()))
    }

    pub fn var(s: impl Into<String>) -> Self {
        Expr::Var(s.into())
    }

    pub fn param(s: impl Into<String>) -> Self {
        Expr::Param(s.into())
    }

    pub fn compare(op: CompareOp, l: Expr, r: Expr) -> Self {
        Expr::Compare(op, Box::new(l), Box::new(r))
    }

    pub fn eq(l: Expr, r: Expr) -> Self {
        Expr::compare(CompareOp::Eq, l, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Self {
        Expr::Not(Box::new(e))
    }

    pub fn member_of(e: Expr, set: impl Into<String>) -> Self {
        Expr::MemberOf(Box::new(e), set.into())
    }

    /// Conjunction that collapses a single operand to itself.
    pub fn all(mut parts: Vec<Expr>) -> Self {
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Expr::And(parts)
        }
    }

    /// Disjunction that collapses a single operand to itself.
    pub fn any(mut parts: Vec<Expr>) -> Self {
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Expr::Or(parts)
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Expr::Lit(_) | Expr::Var(_) | Expr::Param(_))
    }

    /// Calls `f` on every node, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Param(_) => {}
            Expr::Compare(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            Expr::And(xs) | Expr::Or(xs) => xs.iter().for_each(|x| x.walk(f)),
            Expr::Not(x) | Expr::MemberOf(x, _) => x.walk(f),
        }
    }

    pub fn params(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Param(p) = e {
                if !out.contains(&p.as_str()) {
                    out.push(p.as_str());
                }
            }
        });
        out
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                if !out.contains(&v.as_str()) {
                    out.push(v.as_str());
                }
            }
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unknown set `{0}`")]
    UnknownSet(String),
}

/// Characteristic function of a declared subset: 1 iff `x` belongs to it.
pub fn characteristic(model: &Efsm, set: &str, x: &Value) -> Result<u8, EvalError> {
    let decl = model
        .set(set)
        .ok_or_else(|| EvalError::UnknownSet(set.to_string()))?;
    if !model.type_contains(&decl.ty, x) {
        return Err(EvalError::TypeMismatch(format!(
            "`{x}` is not in the domain of `{}` (set `{set}`)",
            decl.ty
        )));
    }
    Ok(u8::from(decl.members.contains(x)))
}

/// Evaluates `expr` against a configuration and input bindings.
pub fn eval_expr(
    model: &Efsm,
    expr: &Expr,
    cfg: &Configuration,
    bindings: &Bindings,
) -> Result<Value, EvalError> {
    match expr {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Var(name) => cfg
            .valuation
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundName(name.clone())),
        Expr::Param(name) => bindings
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundName(name.clone())),
        Expr::Compare(op, l, r) => {
            let l = eval_expr(model, l, cfg, bindings)?;
            let r = eval_expr(model, r, cfg, bindings)?;
            compare(*op, &l, &r).map(Value::Bool)
        }
        Expr::And(xs) => {
            let mut acc = true;
            for x in xs {
                acc &= eval_bool(model, x, cfg, bindings)?;
            }
            Ok(Value::Bool(acc))
        }
        Expr::Or(xs) => {
            let mut acc = false;
            for x in xs {
                acc |= eval_bool(model, x, cfg, bindings)?;
            }
            Ok(Value::Bool(acc))
        }
        Expr::Not(x) => Ok(Value::Bool(!eval_bool(model, x, cfg, bindings)?)),
        Expr::MemberOf(x, set) => {
            let v = eval_expr(model, x, cfg, bindings)?;
            Ok(Value::Bool(characteristic(model, set, &v)? == 1))
        }
    }
}

pub fn eval_bool(
    model: &Efsm,
    expr: &Expr,
    cfg: &Configuration,
    bindings: &Bindings,
) -> Result<bool, EvalError> {
    match eval_expr(model, expr, cfg, bindings)? {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::TypeMismatch(format!(
            "expected boolean, found {} `{other}`",
            other.kind()
        ))),
    }
}

fn compare(op: CompareOp, l: &Value, r: &Value) -> Result<bool, EvalError> {
    if std::mem::discriminant(l) != std::mem::discriminant(r) {
        return Err(EvalError::TypeMismatch(format!(
            "cannot compare {} `{l}` with {} `{r}`",
            l.kind(),
            r.kind()
        )));
    }
    match op {
        CompareOp::Eq => Ok(l == r),
        CompareOp::Ne => Ok(l != r),
        _ => {
            let (Value::Int(a), Value::Int(b)) = (l, r) else {
                return Err(EvalError::TypeMismatch(format!(
                    "ordering `{}` needs integers, found {}",
                    op.symbol(),
                    l.kind()
                )));
            };
            Ok(match op {
                CompareOp::Lt => a < b,
                CompareOp::Le => a <= b,
                CompareOp::Gt => a > b,
                CompareOp::Ge => a >= b,
                CompareOp::Eq | CompareOp::Ne => unreachable!(),
            })
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::text::model::write_expr(self))
    }
}
