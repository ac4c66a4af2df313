//! EFSM models with XACML-subset access-control weaving, interactive
//! simulation and purpose-guided (Hit-or-Jump) test generation.

pub mod corpus;
pub mod efsm;
pub mod policy;
pub mod simulator;
pub mod testgen;
pub mod text;
pub mod weaver;

pub mod testkit;

pub use efsm::{
    characteristic, enabled_steps, eval_expr, fire, model_stats, validate_model, Configuration,
    Diagnostic, Efsm, Expr, Instance, ModelStats, Step, Transition, Value,
};
pub use policy::{
    compile_condition, evaluate_policy, evaluate_rule, match_target, parse_policy, Decision,
    Policy, PolicyError,
};
pub use simulator::{Choice, Session, SessionView, SimError};
pub use testgen::{
    brute_force_reachable, generate_objectives, hit_or_jump, step_matches, GenError, GenParams,
    GenReport, TestCase, TestPurpose,
};
pub use text::{
    emit_testcase, parse_model, parse_purposes, parse_testcase, parse_weave_config, write_model,
    ParseError, SourceSpan,
};
pub use weaver::{weave, WeaveConfig, WeaveError, WeaveReport};
