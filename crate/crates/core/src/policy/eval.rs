//! Request-level decisions over an attribute map.

use super::ast::{Attributes, Combining, Condition, Decision, Function, Matcher, Policy, Rule, Target};
use crate::efsm::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Val {
    One(Value),
    Bag(Vec<Value>),
}

/// Why a condition could not be evaluated; surfaces as `Indeterminate`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    MissingAttribute(String),
    TypeError(&'static str),
}

fn matcher_holds(m: &Matcher, attrs: &Attributes) -> bool {
    attrs
        .get(&(m.category, m.attribute_id.clone()))
        .is_some_and(|v| m.function.data_type().admits(v) && *v == m.value)
}

pub fn match_target(t: &Target, attrs: &Attributes) -> bool {
    t.lists()
        .iter()
        .all(|l| l.is_empty() || l.iter().any(|m| matcher_holds(m, attrs)))
}

fn one(v: Val) -> Result<Value, Fault> {
    match v {
        Val::One(v) => Ok(v),
        Val::Bag(_) => Err(Fault::TypeError("bag where a single value was expected")),
    }
}

fn boolean(v: Val) -> Result<bool, Fault> {
    one(v)?.as_bool().ok_or(Fault::TypeError("expected a boolean"))
}

fn int(v: Val) -> Result<i64, Fault> {
    one(v)?.as_int().ok_or(Fault::TypeError("expected an integer"))
}

fn string(v: Val) -> Result<String, Fault> {
    match one(v)? {
        Value::Sym(s) => Ok(s),
        _ => Err(Fault::TypeError("expected a string")),
    }
}

fn eval(c: &Condition, attrs: &Attributes) -> Result<Val, Fault> {
    let (function, args) = match c {
        Condition::Literal(v) => return Ok(Val::One(v.clone())),
        Condition::Designator {
            category,
            attribute_id,
            data_type,
        } => {
            let v = attrs
                .get(&(*category, attribute_id.clone()))
                .ok_or_else(|| Fault::MissingAttribute(attribute_id.clone()))?;
            if !data_type.admits(v) {
                return Err(Fault::TypeError("attribute has the wrong data type"));
            }
            return Ok(Val::One(v.clone()));
        }
        Condition::Apply { function, args } => (*function, args),
    };
    let arg = |i: usize| -> Result<Val, Fault> {
        args.get(i)
            .ok_or(Fault::TypeError("missing operand"))
            .and_then(|a| eval(a, attrs))
    };
    let pair_int = || -> Result<(i64, i64), Fault> { Ok((int(arg(0)?)?, int(arg(1)?)?)) };
    use Function as F;
    let b = match function {
        // Left to right, stopping at the first decisive operand.
        F::And => {
            for a in args {
                if !boolean(eval(a, attrs)?)? {
                    return Ok(Val::One(Value::Bool(false)));
                }
            }
            true
        }
        F::Or => {
            for a in args {
                if boolean(eval(a, attrs)?)? {
                    return Ok(Val::One(Value::Bool(true)));
                }
            }
            false
        }
        F::Not => !boolean(arg(0)?)?,
        F::StringEqual => string(arg(0)?)? == string(arg(1)?)?,
        F::IntegerEqual => {
            let (x, y) = pair_int()?;
            x == y
        }
        F::BooleanEqual => boolean(arg(0)?)? == boolean(arg(1)?)?,
        F::IntegerGreaterThan => {
            let (x, y) = pair_int()?;
            x > y
        }
        F::IntegerGreaterThanOrEqual => {
            let (x, y) = pair_int()?;
            x >= y
        }
        F::IntegerLessThan => {
            let (x, y) = pair_int()?;
            x < y
        }
        F::IntegerLessThanOrEqual => {
            let (x, y) = pair_int()?;
            x <= y
        }
        F::StringOneAndOnly | F::IntegerOneAndOnly | F::BooleanOneAndOnly => return arg(0),
        F::StringBag => {
            let vs = args
                .iter()
                .map(|a| eval(a, attrs).and_then(one))
                .collect::<Result<_, _>>()?;
            return Ok(Val::Bag(vs));
        }
        F::StringIsIn => {
            let x = string(arg(0)?)?;
            match arg(1)? {
                Val::Bag(vs) => vs.iter().any(|v| *v == Value::Sym(x.clone())),
                Val::One(_) => return Err(Fault::TypeError("string-is-in expects a bag")),
            }
        }
    };
    Ok(Val::One(Value::Bool(b)))
}

/// Truth value of a condition, or the reason it is indeterminate.
pub fn evaluate_condition(c: &Condition, attrs: &Attributes) -> Result<bool, Fault> {
    boolean(eval(c, attrs)?)
}

pub fn evaluate_rule(r: &Rule, attrs: &Attributes) -> Decision {
    if r.target.as_ref().is_some_and(|t| !match_target(t, attrs)) {
        return Decision::NotApplicable;
    }
    match &r.condition {
        None => r.effect.into(),
        Some(c) => match evaluate_condition(c, attrs) {
            Ok(true) => r.effect.into(),
            Ok(false) => Decision::NotApplicable,
            Err(_) => Decision::Indeterminate,
        },
    }
}

/// Folds individual rule decisions with a combining algorithm.
pub fn combine(alg: Combining, decisions: &[Decision]) -> Decision {
    let has = |d: Decision| decisions.contains(&d);
    match alg {
        Combining::DenyOverrides => [Decision::Deny, Decision::Indeterminate, Decision::Permit]
            .into_iter()
            .find(|d| has(*d))
            .unwrap_or(Decision::NotApplicable),
        Combining::PermitOverrides => [Decision::Permit, Decision::Indeterminate, Decision::Deny]
            .into_iter()
            .find(|d| has(*d))
            .unwrap_or(Decision::NotApplicable),
        Combining::FirstApplicable => decisions
            .iter()
            .copied()
            .find(|d| *d != Decision::NotApplicable)
            .unwrap_or(Decision::NotApplicable),
    }
}

pub fn evaluate_policy(p: &Policy, attrs: &Attributes) -> Decision {
    if !match_target(&p.target, attrs) {
        return Decision::NotApplicable;
    }
    let ds: Vec<Decision> = p.rules.iter().map(|r| evaluate_rule(r, attrs)).collect();
    combine(p.combining, &ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::ast::{Category, DataType, Effect, MatchFunction};
    use proptest::prelude::*;

    fn attrs(pairs: &[(Category, &str, Value)]) -> Attributes {
        pairs
            .iter()
            .map(|(c, k, v)| ((*c, k.to_string()), v.clone()))
            .collect()
    }

    fn action_target(a: &str) -> Target {
        Target {
            actions: vec![Matcher {
                category: Category::Action,
                attribute_id: "action-id".into(),
                function: MatchFunction::StringEqual,
                value: Value::sym(a),
            }],
            ..Target::default()
        }
    }

    #[test]
    fn empty_target_matches_anything() {
        assert!(match_target(&Target::default(), &Attributes::new()));
    }

    #[test]
    fn action_target_matching() {
        let t = action_target("ask_for_route");
        let yes = attrs(&[(Category::Action, "action-id", Value::sym("ask_for_route"))]);
        let no = attrs(&[(Category::Action, "action-id", Value::sym("exit_service"))]);
        assert!(match_target(&t, &yes));
        assert!(!match_target(&t, &no));
        assert!(!match_target(&t, &Attributes::new()));
    }

    #[test]
    fn missing_attribute_in_condition_is_indeterminate() {
        let r = Rule {
            id: "r".into(),
            effect: Effect::Permit,
            target: None,
            condition: Some(Condition::apply(
                Function::StringEqual,
                vec![
                    Condition::designator(Category::Subject, "login", DataType::String),
                    Condition::Literal(Value::sym("log1")),
                ],
            )),
        };
        assert_eq!(evaluate_rule(&r, &Attributes::new()), Decision::Indeterminate);
        let a = attrs(&[(Category::Subject, "login", Value::sym("log1"))]);
        assert_eq!(evaluate_rule(&r, &a), Decision::Permit);
        let a = attrs(&[(Category::Subject, "login", Value::sym("log2"))]);
        assert_eq!(evaluate_rule(&r, &a), Decision::NotApplicable);
        let a = attrs(&[(Category::Subject, "login", Value::Int(3))]);
        assert_eq!(evaluate_rule(&r, &a), Decision::Indeterminate);
    }

    #[test]
    fn failing_target_is_not_applicable() {
        let r = Rule {
            id: "r".into(),
            effect: Effect::Deny,
            target: Some(action_target("x")),
            condition: None,
        };
        assert_eq!(evaluate_rule(&r, &Attributes::new()), Decision::NotApplicable);
    }

    #[test]
    fn combining_examples() {
        use Decision::*;
        assert_eq!(combine(Combining::DenyOverrides, &[Permit, Deny]), Deny);
        assert_eq!(combine(Combining::DenyOverrides, &[NotApplicable, NotApplicable]), NotApplicable);
        assert_eq!(combine(Combining::FirstApplicable, &[NotApplicable, Permit, Deny]), Permit);
        assert_eq!(combine(Combining::PermitOverrides, &[Deny, Permit]), Permit);
        assert_eq!(combine(Combining::DenyOverrides, &[]), NotApplicable);
    }

    fn decision() -> impl Strategy<Value = Decision> {
        prop_oneof![
            Just(Decision::Permit),
            Just(Decision::Deny),
            Just(Decision::NotApplicable),
            Just(Decision::Indeterminate),
        ]
    }

    proptest! {
        #[test]
        fn deny_overrides_is_deny_iff_some_deny(ds in prop::collection::vec(decision(), 0..6)) {
            let r = combine(Combining::DenyOverrides, &ds);
            prop_assert_eq!(r == Decision::Deny, ds.contains(&Decision::Deny));
        }

        #[test]
        fn permit_overrides_is_permit_iff_some_permit(ds in prop::collection::vec(decision(), 0..6)) {
            let r = combine(Combining::PermitOverrides, &ds);
            prop_assert_eq!(r == Decision::Permit, ds.contains(&Decision::Permit));
        }

        #[test]
        fn all_not_applicable_stays_not_applicable(n in 0usize..6) {
            let ds = vec![Decision::NotApplicable; n];
            for alg in [Combining::DenyOverrides, Combining::PermitOverrides, Combining::FirstApplicable] {
                prop_assert_eq!(combine(alg, &ds), Decision::NotApplicable);
            }
        }
    }
}
