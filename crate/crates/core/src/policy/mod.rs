//! XACML subset: parsing, request evaluation and compilation to guards.
//!
//! Accepted elements: `Policy`, `Description`, `Target`, `Subjects`/`Subject`/
//! `SubjectMatch` (and the `Resource`, `Action`, `Environment` analogues,
//! plus `AnySubject`-style wildcards), `Rule`, `Condition`, `Apply`,
//! `AttributeValue` and the four `*AttributeDesignator` elements. Functions
//! are listed in [`Function`].

pub mod ast;
pub mod compile;
pub mod eval;
pub mod xml;

use thiserror::Error;

pub use ast::{
    Attributes, Category, Combining, Condition, DataType, Decision, Effect, Function,
    MatchFunction, Matcher, Policy, Rule, Target,
};
pub use compile::{compile_condition, compile_target, CompileError};
pub use eval::{combine, evaluate_condition, evaluate_policy, evaluate_rule, match_target, Fault};
pub use xml::parse_policy;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("unsupported XACML feature `{0}`")]
    UnsupportedFeature(String),
    #[error("invalid policy: {0}")]
    Schema(String),
}
