//! Integration of a policy into a machine: permit conditions are OR-ed onto
//! a transition's predicate, deny conditions are negated and AND-ed, and an
//! optional observation transition makes the refused branch visible.

mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::efsm::semantics::cartesian;
use crate::efsm::{
    eval_bool, validate_model, Bindings, Configuration, Diagnostic, Efsm, Expr, OutputAction,
    SignalDecl, Transition,
};
use crate::policy::{compile_condition, compile_target, CompileError, Effect, Policy};

pub use report::{SynthesizedTransition, TransitionEntry, WeaveReport};

/// Where an observation transition leads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenyTarget {
    Stay,
    State(String),
}

/// Deny branch for one input signal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub input: String,
    pub deny_output: String,
    pub target: DenyTarget,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeaveConfig {
    pub emit_observations: bool,
    pub observations: Vec<Observation>,
}

impl WeaveConfig {
    pub fn observation(&self, input: &str) -> Option<&Observation> {
        self.observations.iter().find(|o| o.input == input)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeaveError {
    #[error("the input model is invalid: {}", first(.0))]
    InvalidModel(Vec<Diagnostic>),
    #[error("transition {transition}, rule {rule}: {source}")]
    Compile {
        transition: String,
        rule: String,
        #[source]
        source: CompileError,
    },
    #[error("no observation configured for input `{0}`")]
    MissingObservationMapping(String),
    #[error("observation for `{input}`: {message}")]
    InvalidObservation { input: String, message: String },
    #[error("the woven model is invalid: {}", first(.0))]
    InvalidResult(Vec<Diagnostic>),
}

fn first(ds: &[Diagnostic]) -> String {
    ds.first().map(|d| d.to_string()).unwrap_or_default()
}

/// Compiled conditions of the rules that apply to one transition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApplicableRules {
    pub permits: Vec<Expr>,
    pub denies: Vec<Expr>,
    /// Ids of every applicable rule, in policy order.
    pub rule_ids: Vec<String>,
}

impl ApplicableRules {
    pub fn is_empty(&self) -> bool {
        self.rule_ids.is_empty()
    }
}

fn literal_true(e: &Expr) -> bool {
    *e == Expr::truth()
}

/// Rules whose targets can match `t`, each reduced to the guard under which
/// it fires: residual target conjuncts and the compiled condition.
pub fn applicable_rules(model: &Efsm, p: &Policy, t: &Transition) -> Result<ApplicableRules, WeaveError> {
    let err = |rule: &str, source| WeaveError::Compile {
        transition: t.id.clone(),
        rule: rule.to_string(),
        source,
    };
    let mut out = ApplicableRules::default();
    let Some(policy_guard) = compile_target(model, t, &p.target).map_err(|e| err(&p.id, e))? else {
        return Ok(out);
    };
    for r in &p.rules {
        let rule_guard = match &r.target {
            None => Expr::truth(),
            Some(target) => match compile_target(model, t, target).map_err(|e| err(&r.id, e))? {
                None => continue,
                Some(g) => g,
            },
        };
        let cond = match &r.condition {
            None => Expr::truth(),
            Some(c) => compile_condition(model, t, c).map_err(|e| err(&r.id, e))?,
        };
        let mut parts: Vec<Expr> = [policy_guard.clone(), rule_guard, cond]
            .into_iter()
            .filter(|e| !literal_true(e))
            .collect();
        let guard = if parts.is_empty() {
            Expr::truth()
        } else if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Expr::And(parts)
        };
        out.rule_ids.push(r.id.clone());
        match r.effect {
            Effect::Permit => out.permits.push(guard),
            Effect::Deny => out.denies.push(guard),
        }
    }
    Ok(out)
}

/// `P := P ∧ ⋁ permits`, or `P := ⋁ permits` when `t` has no predicate.
pub fn weave_permissions(t: &Transition, permits: &[Expr]) -> Transition {
    let mut t = t.clone();
    if permits.is_empty() {
        return t;
    }
    let clause = Expr::any(permits.to_vec());
    t.predicate = Some(match t.predicate.take() {
        Some(p) => Expr::all(vec![p, clause]),
        None => clause,
    });
    t
}

/// `P := P ∧ ⋀ ¬deny`, or just the conjunction when `t` has no predicate.
pub fn weave_prohibitions(t: &Transition, denies: &[Expr]) -> Transition {
    let mut t = t.clone();
    if denies.is_empty() {
        return t;
    }
    let clause = Expr::all(denies.iter().cloned().map(Expr::not).collect());
    t.predicate = Some(match t.predicate.take() {
        Some(p) => Expr::all(vec![p, clause]),
        None => clause,
    });
    t
}

/// Adds one deny-branch transition per strengthened entry of `report`.
///
/// The new transition keeps the source and input of the original, emits the
/// configured zero-argument deny output and is guarded by `P ∧ ¬G`, where
/// `P` is the original predicate and `G` the conjunction of woven clauses.
pub fn synthesize_observations(
    m: &Efsm,
    report: &WeaveReport,
    cfg: &WeaveConfig,
) -> Result<(Efsm, Vec<SynthesizedTransition>), WeaveError> {
    let mut out = m.clone();
    let mut made = Vec::new();
    if !cfg.emit_observations {
        return Ok((out, made));
    }
    for entry in report.entries.iter().filter(|e| e.strengthened()) {
        let t = m
            .transition(&entry.transition)
            .expect("report entries name transitions of the model");
        let obs = cfg
            .observation(&t.input.signal)
            .ok_or_else(|| WeaveError::MissingObservationMapping(t.input.signal.clone()))?;
        let bad = |message: String| WeaveError::InvalidObservation {
            input: obs.input.clone(),
            message,
        };
        match out.signal(&obs.deny_output) {
            Some(s) if !s.params.is_empty() => {
                return Err(bad(format!("deny output `{}` takes parameters", obs.deny_output)))
            }
            Some(_) => {}
            None => out.signals.push(SignalDecl {
                name: obs.deny_output.clone(),
                params: Vec::new(),
            }),
        }
        let target = match &obs.target {
            DenyTarget::Stay => t.source.clone(),
            DenyTarget::State(s) if m.has_state(s) => s.clone(),
            DenyTarget::State(s) => return Err(bad(format!("unknown state `{s}`"))),
        };
        let guard = Expr::all(
            [entry.permission.clone(), entry.prohibition.clone()]
                .into_iter()
                .flatten()
                .collect(),
        );
        let refused = Expr::not(guard);
        let predicate = match &entry.before {
            Some(p) => Expr::all(vec![p.clone(), refused]),
            None => refused,
        };
        let id = out.fresh_transition_id();
        out.transitions.push(Transition {
            id: id.clone(),
            source: t.source.clone(),
            target,
            input: t.input.clone(),
            output: OutputAction {
                signal: obs.deny_output.clone(),
                args: Vec::new(),
            },
            predicate: Some(predicate.clone()),
            actions: Vec::new(),
        });
        made.push(SynthesizedTransition {
            id,
            observes: t.id.clone(),
            source: t.source.clone(),
            target: out.transitions.last().unwrap().target.clone(),
            input: t.input.signal.clone(),
            output: obs.deny_output.clone(),
            predicate,
        });
    }
    out.canonicalize();
    Ok((out, made))
}

/// Weaves `p` into `m`: permissions, then prohibitions, then observations.
pub fn weave(m: &Efsm, p: &Policy, cfg: &WeaveConfig) -> Result<(Efsm, WeaveReport), WeaveError> {
    let diags = validate_model(m);
    if !diags.is_empty() {
        return Err(WeaveError::InvalidModel(diags));
    }
    let mut woven = m.clone();
    let mut report = WeaveReport::new(&p.id, m.stats());
    if p.combining != crate::policy::Combining::DenyOverrides {
        report.warnings.push(format!(
            "policy combines rules with {}; woven guards always let a deny win",
            p.combining.short_name()
        ));
    }
    for t in woven.transitions.iter_mut() {
        let rules = applicable_rules(m, p, t)?;
        let before = t.predicate.clone();
        let permitted = weave_permissions(t, &rules.permits);
        let after = weave_prohibitions(&permitted, &rules.denies);
        let entry = TransitionEntry {
            transition: t.id.clone(),
            signal: t.input.signal.clone(),
            rule_ids: rules.rule_ids,
            permission: (!rules.permits.is_empty()).then(|| Expr::any(rules.permits.clone())),
            prohibition: (!rules.denies.is_empty())
                .then(|| Expr::all(rules.denies.iter().cloned().map(Expr::not).collect())),
            before,
            after: after.predicate.clone(),
            dead: false,
        };
        *t = after;
        report.entries.push(entry);
    }
    let (mut woven, synthesized) = synthesize_observations(&woven, &report, cfg)?;
    for e in report.entries.iter_mut().filter(|e| e.strengthened()) {
        let t = woven.transition(&e.transition).unwrap();
        if satisfiable(&woven, t, t.predicate.as_ref()) == Some(false) {
            e.dead = true;
            report
                .warnings
                .push(format!("transition {} can no longer fire", e.transition));
        }
    }
    for s in &synthesized {
        let t = woven.transition(&s.id).unwrap();
        if satisfiable(&woven, t, t.predicate.as_ref()) == Some(false) {
            report
                .warnings
                .push(format!("observation {} (for {}) can never fire", s.id, s.observes));
        }
    }
    report.synthesized = synthesized;
    woven.canonicalize();
    let diags = validate_model(&woven);
    if !diags.is_empty() {
        return Err(WeaveError::InvalidResult(diags));
    }
    report.after = woven.stats();
    Ok((woven, report))
}

/// Valuations examined before a guard check gives up.
pub const GUARD_CHECK_CAP: usize = 200_000;

/// Every pairing of variable valuation and input arguments that a guard of
/// `t` can observe, or `None` if there are more than `cap`.
pub fn guard_valuations(m: &Efsm, t: &Transition, cap: usize) -> Option<Vec<(Configuration, Bindings)>> {
    let var_domains: Vec<_> = m
        .variables
        .iter()
        .map(|v| m.domain(&v.ty).unwrap_or_default())
        .collect();
    let sig = m.signal(&t.input.signal)?;
    let param_domains: Vec<_> = sig
        .params
        .iter()
        .map(|p| m.domain(&p.ty).unwrap_or_default())
        .collect();
    let count = var_domains
        .iter()
        .chain(&param_domains)
        .try_fold(1usize, |acc, d| acc.checked_mul(d.len()))?;
    if count > cap {
        return None;
    }
    let mut out = Vec::with_capacity(count);
    for vals in cartesian(&var_domains) {
        let valuation: BTreeMap<_, _> = m
            .variables
            .iter()
            .map(|v| v.name.clone())
            .zip(vals)
            .collect();
        let cfg = Configuration {
            state: t.source.clone(),
            valuation,
        };
        for args in cartesian(&param_domains) {
            let b: Bindings = t.input.params.iter().cloned().zip(args).collect();
            out.push((cfg.clone(), b));
        }
    }
    Some(out)
}

/// Whether some valuation satisfies `guard`; `None` if too many to check.
pub fn satisfiable(m: &Efsm, t: &Transition, guard: Option<&Expr>) -> Option<bool> {
    let Some(g) = guard else {
        return Some(true);
    };
    let vals = guard_valuations(m, t, GUARD_CHECK_CAP)?;
    Some(
        vals.iter()
            .any(|(cfg, b)| eval_bool(m, g, cfg, b).unwrap_or(false)),
    )
}
