//! Translation of rule conditions and targets into guard expressions over a
//! transition's input parameters and the machine's variables.
//!
//! Attribute ids bind by their last `:`-separated segment: `action-id` is the
//! transition's input signal, `resource-id` the process name, and any other id
//! names an input parameter or, failing that, a machine variable.

use thiserror::Error;

use super::ast::{Condition, DataType, Function, MatchFunction, Target};
use crate::efsm::{CompareOp, Efsm, Expr, Transition, Value, BOOLEAN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("attribute `{0}` names neither a parameter nor a variable")]
    UnresolvableAttribute(String),
    #[error("function `{0}` cannot be compiled")]
    UnsupportedFunction(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("`{value}` is not a value of type `{ty}`")]
    LiteralOutOfDomain { value: String, ty: String },
}

fn short_id(id: &str) -> &str {
    id.rsplit(':').next().unwrap_or(id)
}

#[derive(Debug, Clone)]
enum C {
    /// Known at weaving time (literals, `action-id`, `resource-id`, folded subterms).
    Static(Value),
    /// Depends on the run; carries the model type name.
    Dyn(Expr, String),
    Bag(Vec<Value>),
}

struct Ctx<'a> {
    model: &'a Efsm,
    t: &'a Transition,
}

impl Ctx<'_> {
    fn static_attr(&self, id: &str) -> Option<Value> {
        match short_id(id) {
            "action-id" => Some(Value::sym(&self.t.input.signal)),
            "resource-id" => Some(Value::sym(&self.model.process)),
            _ => None,
        }
    }

    fn resolve(&self, id: &str, dt: DataType) -> Result<C, CompileError> {
        if let Some(v) = self.static_attr(id) {
            if dt != DataType::String {
                return Err(CompileError::TypeMismatch(format!("`{id}` is a string attribute")));
            }
            return Ok(C::Static(v));
        }
        let name = short_id(id);
        let (expr, ty) = if let Some(ty) = self.model.param_type(self.t, name) {
            (Expr::param(name), ty.to_string())
        } else if let Some(v) = self.model.variable(name) {
            (Expr::var(name), v.ty.clone())
        } else {
            return Err(CompileError::UnresolvableAttribute(id.to_string()));
        };
        if !self.fits(&ty, dt) {
            return Err(CompileError::TypeMismatch(format!(
                "`{name}` has type `{ty}`, the policy reads it as {dt:?}"
            )));
        }
        Ok(C::Dyn(expr, ty))
    }

    fn fits(&self, ty: &str, dt: DataType) -> bool {
        match dt {
            DataType::Boolean => ty == BOOLEAN,
            DataType::Integer => self.model.type_decl(ty).is_some_and(|d| d.is_integer()),
            DataType::String => self.model.type_decl(ty).is_some_and(|d| !d.is_integer()),
        }
    }

    fn in_domain(&self, ty: &str, v: &Value) -> Result<(), CompileError> {
        if self.model.type_contains(ty, v) {
            Ok(())
        } else {
            Err(CompileError::LiteralOutOfDomain {
                value: v.to_string(),
                ty: ty.to_string(),
            })
        }
    }

    fn compare(&self, op: CompareOp, dt: DataType, a: C, b: C) -> Result<C, CompileError> {
        let check = |v: &Value| {
            if dt.admits(v) {
                Ok(())
            } else {
                Err(CompileError::TypeMismatch(format!("`{v}` is not {dt:?}")))
            }
        };
        match (a, b) {
            (C::Static(x), C::Static(y)) => {
                check(&x)?;
                check(&y)?;
                let r = match (op, &x, &y) {
                    (CompareOp::Eq, _, _) => x == y,
                    (_, Value::Int(i), Value::Int(j)) => match op {
                        CompareOp::Lt => i < j,
                        CompareOp::Le => i <= j,
                        CompareOp::Gt => i > j,
                        CompareOp::Ge => i >= j,
                        _ => i != j,
                    },
                    _ => return Err(CompileError::TypeMismatch("ordering on non-integers".into())),
                };
                Ok(C::Static(Value::Bool(r)))
            }
            (C::Dyn(e, ty), C::Static(v)) => {
                check(&v)?;
                self.in_domain(&ty, &v)?;
                Ok(C::Dyn(Expr::compare(op, e, Expr::Lit(v)), BOOLEAN.into()))
            }
            (C::Static(v), C::Dyn(e, ty)) => {
                check(&v)?;
                self.in_domain(&ty, &v)?;
                // Keep the run-dependent side on the left.
                let op = match op {
                    CompareOp::Lt => CompareOp::Gt,
                    CompareOp::Le => CompareOp::Ge,
                    CompareOp::Gt => CompareOp::Lt,
                    CompareOp::Ge => CompareOp::Le,
                    o => o,
                };
                Ok(C::Dyn(Expr::compare(op, e, Expr::Lit(v)), BOOLEAN.into()))
            }
            (C::Dyn(e1, t1), C::Dyn(e2, t2)) => {
                if t1 != t2 {
                    return Err(CompileError::TypeMismatch(format!(
                        "comparing `{t1}` with `{t2}`"
                    )));
                }
                Ok(C::Dyn(Expr::compare(op, e1, e2), BOOLEAN.into()))
            }
            _ => Err(CompileError::TypeMismatch("bag used as a single value".into())),
        }
    }

    fn boolean(&self, c: C) -> Result<C, CompileError> {
        match c {
            C::Static(Value::Bool(_)) => Ok(c),
            C::Dyn(_, ref ty) if ty == BOOLEAN => Ok(c),
            _ => Err(CompileError::TypeMismatch("expected a boolean".into())),
        }
    }

    fn connective(&self, is_and: bool, args: Vec<C>) -> Result<C, CompileError> {
        let mut parts = Vec::new();
        for a in args {
            match self.boolean(a)? {
                C::Static(Value::Bool(b)) if b == is_and => {}
                C::Static(v) => return Ok(C::Static(v)),
                C::Dyn(e, _) => parts.push(e),
                C::Bag(_) => unreachable!(),
            }
        }
        Ok(match parts.len() {
            0 => C::Static(Value::Bool(is_and)),
            _ if is_and => C::Dyn(Expr::all(parts), BOOLEAN.into()),
            _ => C::Dyn(Expr::any(parts), BOOLEAN.into()),
        })
    }

    fn is_in(&self, x: C, bag: C) -> Result<C, CompileError> {
        let C::Bag(mut members) = bag else {
            return Err(CompileError::TypeMismatch("string-is-in expects a bag".into()));
        };
        match x {
            C::Static(v) => Ok(C::Static(Value::Bool(members.contains(&v)))),
            C::Dyn(e, ty) => {
                for m in &members {
                    self.in_domain(&ty, m)?;
                }
                members.sort();
                members.dedup();
                let named = self.model.sets.iter().find(|s| {
                    let mut ms = s.members.clone();
                    ms.sort();
                    ms.dedup();
                    s.ty == ty && ms == members
                });
                if let Some(set) = named {
                    return Ok(C::Dyn(Expr::member_of(e, &set.name), BOOLEAN.into()));
                }
                if members.is_empty() {
                    return Ok(C::Static(Value::Bool(false)));
                }
                // Keep the domain order so the guard reads predictably.
                let domain = self.model.domain(&ty).unwrap_or_default();
                let eqs = domain
                    .into_iter()
                    .filter(|v| members.contains(v))
                    .map(|v| Expr::eq(e.clone(), Expr::Lit(v)))
                    .collect();
                Ok(C::Dyn(Expr::any(eqs), BOOLEAN.into()))
            }
            C::Bag(_) => Err(CompileError::TypeMismatch("bag inside a bag".into())),
        }
    }

    fn compile(&self, c: &Condition) -> Result<C, CompileError> {
        let (function, args) = match c {
            Condition::Literal(v) => return Ok(C::Static(v.clone())),
            Condition::Designator {
                attribute_id,
                data_type,
                ..
            } => return self.resolve(attribute_id, *data_type),
            Condition::Apply { function, args } => (*function, args),
        };
        let mut xs = args
            .iter()
            .map(|a| self.compile(a))
            .collect::<Result<Vec<_>, _>>()?;
        let arity = |n: usize| {
            if xs.len() == n {
                Ok(())
            } else {
                Err(CompileError::TypeMismatch(format!(
                    "{} takes {n} operand(s), {} given",
                    function.short_name(),
                    xs.len()
                )))
            }
        };
        use Function as F;
        let binary = |op, dt| -> Result<(CompareOp, DataType), CompileError> {
            arity(2)?;
            Ok((op, dt))
        };
        let cmp = match function {
            F::And => return self.connective(true, xs),
            F::Or => return self.connective(false, xs),
            F::Not => {
                arity(1)?;
                return match self.boolean(xs.pop().unwrap())? {
                    C::Static(Value::Bool(b)) => Ok(C::Static(Value::Bool(!b))),
                    C::Dyn(e, ty) => Ok(C::Dyn(Expr::not(e), ty)),
                    _ => unreachable!(),
                };
            }
            F::StringOneAndOnly | F::IntegerOneAndOnly | F::BooleanOneAndOnly => {
                arity(1)?;
                return Ok(xs.pop().unwrap());
            }
            F::StringBag => {
                let vs = xs
                    .into_iter()
                    .map(|x| match x {
                        C::Static(v @ Value::Sym(_)) => Ok(v),
                        _ => Err(CompileError::UnsupportedFunction(
                            "string-bag over non-literal operands".into(),
                        )),
                    })
                    .collect::<Result<_, _>>()?;
                return Ok(C::Bag(vs));
            }
            F::StringIsIn => {
                arity(2)?;
                let bag = xs.pop().unwrap();
                let x = xs.pop().unwrap();
                return self.is_in(x, bag);
            }
            F::StringEqual => binary(CompareOp::Eq, DataType::String)?,
            F::IntegerEqual => binary(CompareOp::Eq, DataType::Integer)?,
            F::BooleanEqual => binary(CompareOp::Eq, DataType::Boolean)?,
            F::IntegerGreaterThan => binary(CompareOp::Gt, DataType::Integer)?,
            F::IntegerGreaterThanOrEqual => binary(CompareOp::Ge, DataType::Integer)?,
            F::IntegerLessThan => binary(CompareOp::Lt, DataType::Integer)?,
            F::IntegerLessThanOrEqual => binary(CompareOp::Le, DataType::Integer)?,
        };
        let b = xs.pop().unwrap();
        let a = xs.pop().unwrap();
        self.compare(cmp.0, cmp.1, a, b)
    }

    fn finish(&self, c: C) -> Result<Expr, CompileError> {
        match self.boolean(c)? {
            C::Static(v) => Ok(Expr::Lit(v)),
            C::Dyn(e, _) => Ok(e),
            C::Bag(_) => unreachable!(),
        }
    }
}

/// Compiles a rule condition into a guard for transition `t` of `model`.
pub fn compile_condition(model: &Efsm, t: &Transition, c: &Condition) -> Result<Expr, CompileError> {
    let cx = Ctx { model, t };
    let r = cx.compile(c)?;
    cx.finish(r)
}

fn matcher_condition(m: &super::ast::Matcher) -> Condition {
    let (f, dt) = match m.function {
        MatchFunction::StringEqual => (Function::StringEqual, DataType::String),
        MatchFunction::IntegerEqual => (Function::IntegerEqual, DataType::Integer),
    };
    Condition::apply(
        f,
        vec![
            Condition::designator(m.category, &m.attribute_id, dt),
            Condition::Literal(m.value.clone()),
        ],
    )
}

/// Residual guard under which `target` applies to transition `t`.
///
/// `None` when the target can never match this transition (for instance an
/// `action-id` for another signal). Matchers on `action-id`/`resource-id` are
/// decided here; all other matchers become guard conjuncts.
pub fn compile_target(model: &Efsm, t: &Transition, target: &Target) -> Result<Option<Expr>, CompileError> {
    let cx = Ctx { model, t };
    // Static categories first, so that an unrelated target never reports
    // unresolvable attributes.
    for list in target.lists() {
        if list.is_empty() {
            continue;
        }
        let all_static = list.iter().all(|m| cx.static_attr(&m.attribute_id).is_some());
        let hit = list
            .iter()
            .any(|m| cx.static_attr(&m.attribute_id).is_some_and(|v| v == m.value));
        if all_static && !hit {
            return Ok(None);
        }
    }
    let mut lists = Vec::new();
    for list in target.lists() {
        if list.is_empty() {
            continue;
        }
        let ors = list.iter().map(|m| cx.compile(&matcher_condition(m))).collect::<Result<_, _>>()?;
        lists.push(cx.connective(false, ors)?);
    }
    match cx.connective(true, lists)? {
        C::Static(Value::Bool(false)) => Ok(None),
        c => cx.finish(c).map(Some),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::ast::Category;
    use crate::text::parse_model;

    const MODEL: &str = r#"
system S;
type cls = enum premium, regular endenum;
type pos = enum gin, gout endenum;
type lvl = range 0 .. 3;
set Home : pos = {gin};
signal go(class: cls, where: pos, n: lvl);
signal ok();
process srv(1);
var flag : boolean := false;
state A init;
  input go(class, where, n) output ok() nextstate A;
endstate;
endprocess;
endsystem;
"#;

    fn d(id: &str, dt: DataType) -> Condition {
        Condition::designator(Category::Subject, id, dt)
    }

    fn lit(s: &str) -> Condition {
        Condition::Literal(Value::sym(s))
    }

    fn compile(c: &Condition) -> Result<Expr, CompileError> {
        let m = parse_model(MODEL).unwrap();
        let t = m.transitions[0].clone();
        compile_condition(&m, &t, c)
    }

    #[test]
    fn equality_becomes_compare() {
        let c = Condition::apply(Function::StringEqual, vec![d("class", DataType::String), lit("premium")]);
        assert_eq!(compile(&c).unwrap(), Expr::eq(Expr::param("class"), Expr::sym("premium")));
        let c = Condition::apply(Function::StringEqual, vec![lit("premium"), d("class", DataType::String)]);
        assert_eq!(compile(&c).unwrap(), Expr::eq(Expr::param("class"), Expr::sym("premium")));
    }

    #[test]
    fn bag_equal_to_a_set_uses_member_of() {
        let bag = Condition::apply(Function::StringBag, vec![lit("gin")]);
        let c = Condition::apply(Function::StringIsIn, vec![d("where", DataType::String), bag]);
        assert_eq!(compile(&c).unwrap(), Expr::member_of(Expr::param("where"), "Home"));
        let bag = Condition::apply(Function::StringBag, vec![lit("gout")]);
        let c = Condition::apply(Function::StringIsIn, vec![d("where", DataType::String), bag]);
        assert_eq!(compile(&c).unwrap(), Expr::eq(Expr::param("where"), Expr::sym("gout")));
    }

    #[test]
    fn unknown_attribute_is_unresolvable() {
        let c = Condition::apply(Function::StringEqual, vec![d("role", DataType::String), lit("x")]);
        assert_eq!(compile(&c), Err(CompileError::UnresolvableAttribute("role".into())));
    }

    #[test]
    fn variables_and_urn_ids_resolve() {
        let c = Condition::apply(
            Function::BooleanEqual,
            vec![d("urn:example:flag", DataType::Boolean), Condition::Literal(Value::Bool(true))],
        );
        assert_eq!(compile(&c).unwrap(), Expr::eq(Expr::var("flag"), Expr::Lit(Value::Bool(true))));
    }

    #[test]
    fn static_parts_fold() {
        let action = Condition::designator(Category::Action, "action-id", DataType::String);
        let c = Condition::apply(Function::StringEqual, vec![action.clone(), lit("go")]);
        assert_eq!(compile(&c).unwrap(), Expr::truth());
        let c = Condition::apply(
            Function::And,
            vec![
                Condition::apply(Function::StringEqual, vec![action, lit("go")]),
                Condition::apply(Function::IntegerLessThan, vec![d("n", DataType::Integer), Condition::Literal(Value::Int(2))]),
            ],
        );
        assert_eq!(
            compile(&c).unwrap(),
            Expr::compare(CompareOp::Lt, Expr::param("n"), Expr::Lit(Value::Int(2)))
        );
    }

    #[test]
    fn type_errors() {
        let c = Condition::apply(Function::IntegerEqual, vec![d("class", DataType::Integer), Condition::Literal(Value::Int(1))]);
        assert!(matches!(compile(&c), Err(CompileError::TypeMismatch(_))));
        let c = Condition::apply(Function::StringEqual, vec![d("class", DataType::String), lit("gold")]);
        assert!(matches!(compile(&c), Err(CompileError::LiteralOutOfDomain { .. })));
    }

    #[test]
    fn target_for_other_action_is_skipped_before_resolution() {
        let m = parse_model(MODEL).unwrap();
        let t = &m.transitions[0];
        let target = Target {
            subjects: vec![super::super::ast::Matcher {
                category: Category::Subject,
                attribute_id: "role".into(),
                function: MatchFunction::StringEqual,
                value: Value::sym("admin"),
            }],
            actions: vec![super::super::ast::Matcher {
                category: Category::Action,
                attribute_id: "action-id".into(),
                function: MatchFunction::StringEqual,
                value: Value::sym("stop"),
            }],
            ..Target::default()
        };
        assert_eq!(compile_target(&m, t, &target), Ok(None));
        let mut go = target.clone();
        go.actions[0].value = Value::sym("go");
        assert_eq!(
            compile_target(&m, t, &go),
            Err(CompileError::UnresolvableAttribute("role".into()))
        );
        go.subjects[0].attribute_id = "class".into();
        go.subjects[0].value = Value::sym("regular");
        assert_eq!(
            compile_target(&m, t, &go),
            Ok(Some(Expr::eq(Expr::param("class"), Expr::sym("regular"))))
        );
        assert_eq!(compile_target(&m, t, &Target::default()), Ok(Some(Expr::truth())));
    }
}
