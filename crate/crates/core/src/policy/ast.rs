use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::efsm::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Subject,
    Resource,
    Action,
    Environment,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Subject,
        Category::Resource,
        Category::Action,
        Category::Environment,
    ];

    /// Element-name stem used by the XML form (`Subject`, `SubjectMatch`, ...).
    pub fn stem(self) -> &'static str {
        match self {
            Category::Subject => "Subject",
            Category::Resource => "Resource",
            Category::Action => "Action",
            Category::Environment => "Environment",
        }
    }
}

/// Request attributes keyed by category and attribute id.
pub type Attributes = BTreeMap<(Category, String), Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataType {
    String,
    Integer,
    Boolean,
}

impl DataType {
    pub fn uri(self) -> &'static str {
        match self {
            DataType::String => "http://www.w3.org/2001/XMLSchema#string",
            DataType::Integer => "http://www.w3.org/2001/XMLSchema#integer",
            DataType::Boolean => "http://www.w3.org/2001/XMLSchema#boolean",
        }
    }

    pub fn admits(self, v: &Value) -> bool {
        matches!(
            (self, v),
            (DataType::String, Value::Sym(_))
                | (DataType::Integer, Value::Int(_))
                | (DataType::Boolean, Value::Bool(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchFunction {
    StringEqual,
    IntegerEqual,
}

impl MatchFunction {
    pub fn data_type(self) -> DataType {
        match self {
            MatchFunction::StringEqual => DataType::String,
            MatchFunction::IntegerEqual => DataType::Integer,
        }
    }
}

/// One `<*Match>` element: the attribute must equal the literal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matcher {
    pub category: Category,
    pub attribute_id: String,
    pub function: MatchFunction,
    pub value: Value,
}

/// Empty lists match everything; a non-empty list needs one satisfied matcher.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub subjects: Vec<Matcher>,
    pub resources: Vec<Matcher>,
    pub actions: Vec<Matcher>,
    pub environments: Vec<Matcher>,
}

impl Target {
    pub fn lists(&self) -> [&[Matcher]; 4] {
        [
            &self.subjects,
            &self.resources,
            &self.actions,
            &self.environments,
        ]
    }

    pub fn list_mut(&mut self, c: Category) -> &mut Vec<Matcher> {
        match c {
            Category::Subject => &mut self.subjects,
            Category::Resource => &mut self.resources,
            Category::Action => &mut self.actions,
            Category::Environment => &mut self.environments,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lists().iter().all(|l| l.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Function {
    And,
    Or,
    Not,
    StringEqual,
    IntegerEqual,
    BooleanEqual,
    IntegerGreaterThan,
    IntegerGreaterThanOrEqual,
    IntegerLessThan,
    IntegerLessThanOrEqual,
    StringOneAndOnly,
    IntegerOneAndOnly,
    BooleanOneAndOnly,
    StringIsIn,
    StringBag,
}

impl Function {
    pub const ALL: [Function; 15] = [
        Function::And,
        Function::Or,
        Function::Not,
        Function::StringEqual,
        Function::IntegerEqual,
        Function::BooleanEqual,
        Function::IntegerGreaterThan,
        Function::IntegerGreaterThanOrEqual,
        Function::IntegerLessThan,
        Function::IntegerLessThanOrEqual,
        Function::StringOneAndOnly,
        Function::IntegerOneAndOnly,
        Function::BooleanOneAndOnly,
        Function::StringIsIn,
        Function::StringBag,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Function::And => "and",
            Function::Or => "or",
            Function::Not => "not",
            Function::StringEqual => "string-equal",
            Function::IntegerEqual => "integer-equal",
            Function::BooleanEqual => "boolean-equal",
            Function::IntegerGreaterThan => "integer-greater-than",
            Function::IntegerGreaterThanOrEqual => "integer-greater-than-or-equal",
            Function::IntegerLessThan => "integer-less-than",
            Function::IntegerLessThanOrEqual => "integer-less-than-or-equal",
            Function::StringOneAndOnly => "string-one-and-only",
            Function::IntegerOneAndOnly => "integer-one-and-only",
            Function::BooleanOneAndOnly => "boolean-one-and-only",
            Function::StringIsIn => "string-is-in",
            Function::StringBag => "string-bag",
        }
    }

    /// Accepts the bare name or any URN ending in `:<name>`.
    pub fn from_id(id: &str) -> Option<Function> {
        let short = id.rsplit(':').next().unwrap_or(id);
        Function::ALL.into_iter().find(|f| f.short_name() == short)
    }

    pub fn urn(self) -> String {
        format!("urn:oasis:names:tc:xacml:1.0:function:{}", self.short_name())
    }
}

/// Function-application tree of a rule condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Apply {
        function: Function,
        args: Vec<Condition>,
    },
    Designator {
        category: Category,
        attribute_id: String,
        data_type: DataType,
    },
    Literal(Value),
}

impl Condition {
    pub fn apply(function: Function, args: Vec<Condition>) -> Self {
        Condition::Apply { function, args }
    }

    pub fn designator(category: Category, attribute_id: impl Into<String>, data_type: DataType) -> Self {
        Condition::Designator {
            category,
            attribute_id: attribute_id.into(),
            data_type,
        }
    }

    pub fn designators(&self) -> Vec<(Category, &str)> {
        let mut out = Vec::new();
        self.collect_designators(&mut out);
        out
    }

    fn collect_designators<'a>(&'a self, out: &mut Vec<(Category, &'a str)>) {
        match self {
            Condition::Apply { args, .. } => args.iter().for_each(|a| a.collect_designators(out)),
            Condition::Designator {
                category,
                attribute_id,
                ..
            } => {
                if !out.iter().any(|(c, a)| c == category && a == attribute_id) {
                    out.push((*category, attribute_id));
                }
            }
            Condition::Literal(_) => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Effect {
    Permit,
    Deny,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub effect: Effect,
    /// `None` applies wherever the policy applies.
    pub target: Option<Target>,
    pub condition: Option<Condition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combining {
    DenyOverrides,
    PermitOverrides,
    FirstApplicable,
}

impl Combining {
    pub fn short_name(self) -> &'static str {
        match self {
            Combining::DenyOverrides => "deny-overrides",
            Combining::PermitOverrides => "permit-overrides",
            Combining::FirstApplicable => "first-applicable",
        }
    }

    pub fn from_id(id: &str) -> Option<Combining> {
        let short = id.rsplit(':').next().unwrap_or(id);
        [
            Combining::DenyOverrides,
            Combining::PermitOverrides,
            Combining::FirstApplicable,
        ]
        .into_iter()
        .find(|c| c.short_name() == short)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub id: String,
    pub target: Target,
    pub rules: Vec<Rule>,
    pub combining: Combining,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Permit,
    Deny,
    NotApplicable,
    Indeterminate,
}

impl From<Effect> for Decision {
    fn from(e: Effect) -> Self {
        match e {
            Effect::Permit => Decision::Permit,
            Effect::Deny => Decision::Deny,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
