//! Reader for the XACML subset. Elements are matched by local name, so the
//! XACML 2.0 namespace may be present or absent.

use roxmltree::{Document, Node};

use super::ast::{
    Category, Combining, Condition, DataType, Effect, Function, MatchFunction, Matcher, Policy,
    Rule, Target,
};
use super::PolicyError;
use crate::efsm::Value;

pub fn parse_policy(xml: &str) -> Result<Policy, PolicyError> {
    let doc = Document::parse(xml).map_err(|e| PolicyError::Xml(e.to_string()))?;
    let root = doc.root_element();
    match root.tag_name().name() {
        "Policy" => policy(root),
        other => Err(PolicyError::UnsupportedFeature(other.to_string())),
    }
}

fn elements<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children().filter(|c| c.is_element())
}

fn required_attr<'a>(n: Node<'a, '_>, name: &str) -> Result<&'a str, PolicyError> {
    n.attribute(name).ok_or_else(|| {
        PolicyError::Schema(format!("<{}> lacks attribute {name}", n.tag_name().name()))
    })
}

fn policy(n: Node) -> Result<Policy, PolicyError> {
    let id = required_attr(n, "PolicyId")?.to_string();
    let alg = required_attr(n, "RuleCombiningAlgId")?;
    let combining = Combining::from_id(alg)
        .ok_or_else(|| PolicyError::UnsupportedFeature(alg.to_string()))?;
    let mut target = None;
    let mut rules = Vec::new();
    for c in elements(n) {
        match c.tag_name().name() {
            "Description" => {}
            "Target" if target.is_none() => target = Some(parse_target(c)?),
            "Target" => return Err(PolicyError::Schema("policy has two <Target> elements".into())),
            "Rule" => rules.push(rule(c)?),
            other => return Err(PolicyError::UnsupportedFeature(other.to_string())),
        }
    }
    if rules.is_empty() {
        return Err(PolicyError::Schema(format!("policy `{id}` has no rule")));
    }
    let mut seen = std::collections::BTreeSet::new();
    for r in &rules {
        if !seen.insert(r.id.as_str()) {
            return Err(PolicyError::Schema(format!("duplicate RuleId `{}`", r.id)));
        }
    }
    Ok(Policy {
        id,
        target: target.unwrap_or_default(),
        rules,
        combining,
    })
}

fn rule(n: Node) -> Result<Rule, PolicyError> {
    let id = required_attr(n, "RuleId")?.to_string();
    let effect = match required_attr(n, "Effect")? {
        "Permit" => Effect::Permit,
        "Deny" => Effect::Deny,
        other => return Err(PolicyError::Schema(format!("rule `{id}`: unknown effect `{other}`"))),
    };
    let mut target = None;
    let mut condition = None;
    for c in elements(n) {
        match c.tag_name().name() {
            "Description" => {}
            "Target" if target.is_none() => target = Some(parse_target(c)?),
            "Condition" if condition.is_none() => condition = Some(parse_condition(c, &id)?),
            "Target" | "Condition" => {
                return Err(PolicyError::Schema(format!(
                    "rule `{id}` has two <{}> elements",
                    c.tag_name().name()
                )))
            }
            other => return Err(PolicyError::UnsupportedFeature(other.to_string())),
        }
    }
    Ok(Rule {
        id,
        effect,
        target,
        condition,
    })
}

fn parse_target(n: Node) -> Result<Target, PolicyError> {
    let mut t = Target::default();
    for group in elements(n) {
        let name = group.tag_name().name();
        let Some(cat) = Category::ALL
            .into_iter()
            .find(|c| name.strip_suffix('s') == Some(c.stem()))
        else {
            return Err(PolicyError::UnsupportedFeature(name.to_string()));
        };
        for item in elements(group) {
            let iname = item.tag_name().name();
            if iname == format!("Any{}", cat.stem()) {
                continue;
            }
            if iname != cat.stem() {
                return Err(PolicyError::UnsupportedFeature(iname.to_string()));
            }
            let matches: Vec<Node> = elements(item).collect();
            if matches.len() != 1 {
                return Err(PolicyError::Schema(format!(
                    "<{iname}> must contain exactly one <{iname}Match>, found {}",
                    matches.len()
                )));
            }
            t.list_mut(cat).push(matcher(matches[0], cat)?);
        }
    }
    Ok(t)
}

fn matcher(n: Node, cat: Category) -> Result<Matcher, PolicyError> {
    let expected = format!("{}Match", cat.stem());
    if n.tag_name().name() != expected {
        return Err(PolicyError::UnsupportedFeature(n.tag_name().name().to_string()));
    }
    let mid = required_attr(n, "MatchId")?;
    let function = match Function::from_id(mid) {
        Some(Function::StringEqual) => MatchFunction::StringEqual,
        Some(Function::IntegerEqual) => MatchFunction::IntegerEqual,
        _ => return Err(PolicyError::UnsupportedFeature(mid.to_string())),
    };
    let mut value = None;
    let mut attribute = None;
    for c in elements(n) {
        match c.tag_name().name() {
            "AttributeValue" => value = Some(attribute_value(c)?),
            _ => {
                let Condition::Designator {
                    category,
                    attribute_id,
                    ..
                } = designator(c)?
                else {
                    unreachable!()
                };
                if category != cat {
                    return Err(PolicyError::Schema(format!(
                        "<{expected}> uses a {:?} designator",
                        category
                    )));
                }
                attribute = Some(attribute_id);
            }
        }
    }
    let (Some(value), Some(attribute_id)) = (value, attribute) else {
        return Err(PolicyError::Schema(format!(
            "<{expected}> needs an <AttributeValue> and a designator"
        )));
    };
    if !function.data_type().admits(&value) {
        return Err(PolicyError::Schema(format!(
            "<{expected}> on `{attribute_id}`: value `{value}` does not suit {mid}"
        )));
    }
    Ok(Matcher {
        category: cat,
        attribute_id,
        function,
        value,
    })
}

fn data_type(n: Node) -> Result<DataType, PolicyError> {
    let Some(dt) = n.attribute("DataType") else {
        return Ok(DataType::String);
    };
    let short = dt.rsplit('#').next().unwrap_or(dt);
    match short {
        "string" => Ok(DataType::String),
        "integer" => Ok(DataType::Integer),
        "boolean" => Ok(DataType::Boolean),
        _ => Err(PolicyError::UnsupportedFeature(dt.to_string())),
    }
}

fn attribute_value(n: Node) -> Result<Value, PolicyError> {
    let text = n.text().unwrap_or("").trim();
    match data_type(n)? {
        DataType::String => Ok(Value::Sym(text.to_string())),
        DataType::Integer => text
            .parse()
            .map(Value::Int)
            .map_err(|_| PolicyError::Schema(format!("`{text}` is not an integer"))),
        DataType::Boolean => match text {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(PolicyError::Schema(format!("`{text}` is not a boolean"))),
        },
    }
}

fn designator(n: Node) -> Result<Condition, PolicyError> {
    let name = n.tag_name().name();
    let category = name
        .strip_suffix("AttributeDesignator")
        .and_then(|stem| Category::ALL.into_iter().find(|c| c.stem() == stem))
        .ok_or_else(|| PolicyError::UnsupportedFeature(name.to_string()))?;
    let attribute_id = required_attr(n, "AttributeId")?;
    if attribute_id.is_empty() {
        return Err(PolicyError::Schema("empty AttributeId".into()));
    }
    Ok(Condition::designator(category, attribute_id, data_type(n)?))
}

fn parse_condition(n: Node, rule: &str) -> Result<Condition, PolicyError> {
    let mut kids = elements(n).filter(|c| c.tag_name().name() != "Description");
    let (Some(root), None) = (kids.next(), kids.next()) else {
        return Err(PolicyError::Schema(format!(
            "rule `{rule}`: <Condition> must hold one expression"
        )));
    };
    let c = expression(root)?;
    match type_of(&c)? {
        Ty::Bool => Ok(c),
        other => Err(PolicyError::Schema(format!(
            "rule `{rule}`: condition has type {other:?}, expected boolean"
        ))),
    }
}

fn expression(n: Node) -> Result<Condition, PolicyError> {
    match n.tag_name().name() {
        "Apply" => {
            let fid = required_attr(n, "FunctionId")?;
            let function = Function::from_id(fid)
                .ok_or_else(|| PolicyError::UnsupportedFeature(fid.to_string()))?;
            let args = elements(n)
                .filter(|c| c.tag_name().name() != "Description")
                .map(expression)
                .collect::<Result<_, _>>()?;
            Ok(Condition::Apply { function, args })
        }
        "AttributeValue" => Ok(Condition::Literal(attribute_value(n)?)),
        _ => designator(n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Str,
    Int,
    Bool,
    Bag,
}

fn ty_of_data(d: DataType) -> Ty {
    match d {
        DataType::String => Ty::Str,
        DataType::Integer => Ty::Int,
        DataType::Boolean => Ty::Bool,
    }
}

/// Checks arities and operand types; the result type of `c`.
fn type_of(c: &Condition) -> Result<Ty, PolicyError> {
    let (function, args) = match c {
        Condition::Literal(v) => {
            return Ok(match v {
                Value::Bool(_) => Ty::Bool,
                Value::Int(_) => Ty::Int,
                Value::Sym(_) => Ty::Str,
            })
        }
        Condition::Designator { data_type, .. } => return Ok(ty_of_data(*data_type)),
        Condition::Apply { function, args } => (*function, args),
    };
    let tys = args.iter().map(type_of).collect::<Result<Vec<_>, _>>()?;
    let fail = |what: &str| {
        Err(PolicyError::Schema(format!(
            "{}: {what} (got {tys:?})",
            function.short_name()
        )))
    };
    let all = |t: Ty| tys.iter().all(|x| *x == t);
    use Function as F;
    match function {
        F::And | F::Or => {
            if !all(Ty::Bool) {
                return fail("operands must be boolean");
            }
            Ok(Ty::Bool)
        }
        F::Not => {
            if tys != [Ty::Bool] {
                return fail("expects one boolean operand");
            }
            Ok(Ty::Bool)
        }
        F::StringEqual | F::IntegerEqual | F::BooleanEqual => {
            let want = match function {
                F::StringEqual => Ty::Str,
                F::IntegerEqual => Ty::Int,
                _ => Ty::Bool,
            };
            if tys.len() != 2 || !all(want) {
                return fail("expects two operands of its type");
            }
            Ok(Ty::Bool)
        }
        F::IntegerGreaterThan
        | F::IntegerGreaterThanOrEqual
        | F::IntegerLessThan
        | F::IntegerLessThanOrEqual => {
            if tys.len() != 2 || !all(Ty::Int) {
                return fail("expects two integer operands");
            }
            Ok(Ty::Bool)
        }
        F::StringOneAndOnly | F::IntegerOneAndOnly | F::BooleanOneAndOnly => {
            let want = match function {
                F::StringOneAndOnly => Ty::Str,
                F::IntegerOneAndOnly => Ty::Int,
                _ => Ty::Bool,
            };
            if tys != [want] || !matches!(args[0], Condition::Designator { .. }) {
                return fail("expects one attribute designator");
            }
            Ok(want)
        }
        F::StringBag => {
            if !args.iter().all(|a| matches!(a, Condition::Literal(Value::Sym(_)))) {
                return fail("expects string literals");
            }
            Ok(Ty::Bag)
        }
        F::StringIsIn => {
            if tys != [Ty::Str, Ty::Bag] {
                return fail("expects a string and a string-bag");
            }
            Ok(Ty::Bool)
        }
    }
}
