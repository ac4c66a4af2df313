//! Extended finite-state machines: data model, expressions and one-step semantics.

pub mod expr;
pub mod model;
pub mod semantics;
pub mod validate;
pub mod value;

pub use expr::{characteristic, eval_bool, eval_expr, Bindings, CompareOp, EvalError, Expr};
pub use model::{
    Assignment, ConstDecl, Efsm, InputAction, ModelStats, OutputAction, ParamDecl, SetDecl,
    SignalDecl, Transition, TypeDecl, TypeKind, VarDecl, BOOLEAN,
};
pub use semantics::{
    argument_combinations, enabled_steps, fire, successors, Configuration, FireError, Instance,
    InputInstance, OutputInstance, Step,
};
pub use validate::{validate_model, Diagnostic, DiagnosticKind, Subject};
pub use value::Value;

/// Exact state, transition and signal counts.
pub fn model_stats(m: &Efsm) -> ModelStats {
    m.stats()
}
