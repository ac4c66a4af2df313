use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secweave_core::corpus;
use secweave_core::efsm::{
    argument_combinations, enabled_steps, eval_bool, fire, model_stats, successors, Bindings,
    Configuration, Efsm, Expr, Instance, ModelStats, Transition, Value, BOOLEAN,
};
use secweave_core::policy::{
    evaluate_rule, match_target, Attributes, Category, Combining, Condition, DataType, Decision,
    Effect, Function, MatchFunction, Matcher, Policy, Rule, Target,
};
use secweave_core::testkit::{random_model_seeded, Shape};
use secweave_core::weaver::{
    applicable_rules, guard_valuations, synthesize_observations, weave, weave_permissions,
    weave_prohibitions, DenyTarget, Observation, WeaveConfig, WeaveError, WeaveReport,
};

fn holds(m: &Efsm, e: Option<&Expr>, cfg: &Configuration, b: &Bindings) -> bool {
    e.is_none_or(|e| eval_bool(m, e, cfg, b).unwrap())
}

fn short(id: &str) -> &str {
    id.rsplit(':').next().unwrap_or(id)
}

fn ids(p: &Policy) -> Vec<(Category, String)> {
    let mut out = Vec::new();
    let mut target = |t: &Target| {
        for l in t.lists() {
            out.extend(l.iter().map(|m| (m.category, m.attribute_id.clone())));
        }
    };
    target(&p.target);
    for r in &p.rules {
        if let Some(t) = &r.target {
            target(t);
        }
    }
    for r in &p.rules {
        if let Some(c) = &r.condition {
            out.extend(c.designators().into_iter().map(|(k, s)| (k, s.to_string())));
        }
    }
    out
}

/// The request a step of `t` would send under `(cfg, b)`.
fn request(m: &Efsm, p: &Policy, t: &Transition, cfg: &Configuration, b: &Bindings) -> Attributes {
    let mut attrs = Attributes::new();
    for (cat, id) in ids(p) {
        let v = match short(&id) {
            "action-id" => Some(Value::sym(&t.input.signal)),
            "resource-id" => Some(Value::sym(&m.process)),
            s => b.get(s).or_else(|| cfg.valuation.get(s)).cloned(),
        };
        if let Some(v) = v {
            attrs.insert((cat, id), v);
        }
    }
    attrs
}

/// Rule decisions at one valuation, evaluated directly on the request.
fn decisions(m: &Efsm, p: &Policy, t: &Transition, cfg: &Configuration, b: &Bindings) -> Vec<(Effect, Decision)> {
    let attrs = request(m, p, t, cfg, b);
    if !match_target(&p.target, &attrs) {
        return Vec::new();
    }
    p.rules.iter().map(|r| (r.effect, evaluate_rule(r, &attrs))).collect()
}

fn original_ids(m: &Efsm) -> BTreeSet<String> {
    m.transitions.iter().map(|t| t.id.clone()).collect()
}

/// Checks strengthening, permission completeness and the partition property
/// for one weave, against direct policy evaluation.
fn check_weave(m: &Efsm, p: &Policy, woven: &Efsm, report: &WeaveReport, observations: bool) {
    for t in &m.transitions {
        let w = woven.transition(&t.id).unwrap();
        let obs: Vec<&Transition> = report
            .synthesized
            .iter()
            .filter(|s| s.observes == t.id)
            .map(|s| woven.transition(&s.id).unwrap())
            .collect();
        let vals = guard_valuations(m, t, 1 << 16).unwrap();
        // Permit rules whose target this transition can satisfy.
        let relevant: Vec<bool> = p
            .rules
            .iter()
            .map(|r| {
                r.effect == Effect::Permit
                    && vals.iter().any(|(cfg, b)| {
                        let a = request(m, p, t, cfg, b);
                        match_target(&p.target, &a) && match_target(r.target.as_ref().unwrap_or(&Target::default()), &a)
                    })
            })
            .collect();
        for (cfg, b) in &vals {
            let before = holds(m, t.predicate.as_ref(), cfg, b);
            let after = holds(m, w.predicate.as_ref(), cfg, b);
            assert!(!after || before, "{}: woven guard does not imply the original at {cfg:?} {b:?}", t.id);

            let ds = decisions(m, p, t, cfg, b);
            let permitted = !relevant.iter().any(|r| *r)
                || ds.iter().any(|(e, d)| *e == Effect::Permit && *d == Decision::Permit);
            let denied = ds.iter().any(|(e, d)| *e == Effect::Deny && *d == Decision::Deny);
            assert_eq!(after, before && permitted && !denied, "{} at {cfg:?} {b:?}", t.id);

            let strengthened = report.entry(&t.id).unwrap().strengthened();
            if observations && strengthened {
                assert_eq!(obs.len(), 1);
                let o = holds(m, obs[0].predicate.as_ref(), cfg, b);
                assert_eq!(o, before && !after, "{} observation at {cfg:?} {b:?}", t.id);
            } else {
                assert!(obs.is_empty());
            }
        }
    }
}

/// Bounded exploration of the woven model: no original transition fires
/// where a deny rule decides Deny.
fn check_prohibition_safety(m: &Efsm, p: &Policy, woven: &Efsm, bound: usize) -> usize {
    let originals = original_ids(m);
    let mut seen = BTreeSet::from([Configuration::initial(woven)]);
    let mut level = vec![Configuration::initial(woven)];
    let mut fired = 0;
    for _ in 0..bound {
        let mut next = Vec::new();
        for cfg in &level {
            for s in successors(woven, cfg) {
                if originals.contains(&s.transition) {
                    let t = m.transition(&s.transition).unwrap();
                    let b: Bindings = t.input.params.iter().cloned().zip(s.input.args.clone()).collect();
                    let ds = decisions(m, p, t, cfg, &b);
                    assert!(
                        !ds.iter().any(|(e, d)| *e == Effect::Deny && *d == Decision::Deny),
                        "{} fired under a deny at {cfg:?}",
                        s.transition
                    );
                    fired += 1;
                }
                if seen.insert(s.post.clone()) {
                    next.push(s.post);
                }
            }
        }
        level = next;
    }
    fired
}

#[test]
fn drp_applicable_rules() {
    let m = corpus::drp_initial();
    let p = corpus::drp_policy();
    let r1 = applicable_rules(&m, &p, m.transition("t1").unwrap()).unwrap();
    assert_eq!(r1.rule_ids, ["Rule1"]);
    assert_eq!(r1.permits.len(), 1);
    assert!(r1.denies.is_empty());
    let r2 = applicable_rules(&m, &p, m.transition("t2").unwrap()).unwrap();
    assert_eq!(r2.rule_ids, ["Rule2", "Rule3"]);
    assert_eq!(r2.permits, [Expr::eq(Expr::param("class"), Expr::sym("premium"))]);
    assert_eq!(
        r2.denies,
        [Expr::And(vec![
            Expr::eq(Expr::param("class"), Expr::sym("regular")),
            Expr::not(Expr::member_of(Expr::param("destination"), "FranceDestinations")),
        ])]
    );
    let r3 = applicable_rules(&m, &p, m.transition("t3").unwrap()).unwrap();
    assert!(r3.is_empty() && r3.permits.is_empty() && r3.denies.is_empty());
}

#[test]
fn permission_and_prohibition_forms() {
    let m = corpus::drp_initial();
    let t1 = m.transition("t1").unwrap();
    let c = Expr::eq(Expr::param("login"), Expr::sym("log1"));
    assert_eq!(weave_permissions(t1, std::slice::from_ref(&c)).predicate, Some(c.clone()));
    assert_eq!(weave_permissions(t1, &[]), *t1);
    assert_eq!(weave_prohibitions(t1, &[]), *t1);
    assert_eq!(weave_prohibitions(t1, std::slice::from_ref(&c)).predicate, Some(Expr::not(c.clone())));

    let p = Expr::eq(Expr::param("password"), Expr::sym("pwd1"));
    let mut guarded = t1.clone();
    guarded.predicate = Some(p.clone());
    let w = weave_permissions(&guarded, std::slice::from_ref(&c));
    assert_eq!(w.predicate, Some(Expr::And(vec![p, c])));
    assert_eq!((&w.source, &w.target, &w.input, &w.output, &w.actions), (&t1.source, &t1.target, &t1.input, &t1.output, &t1.actions));

    let t2 = m.transition("t2").unwrap();
    let rules = applicable_rules(&m, &corpus::drp_policy(), t2).unwrap();
    let w = weave_prohibitions(&weave_permissions(t2, &rules.permits), &rules.denies);
    assert_eq!(
        w.predicate,
        Some(Expr::And(vec![rules.permits[0].clone(), Expr::not(rules.denies[0].clone())]))
    );
}

#[test]
fn drp_weave_matches_table() {
    let m = corpus::drp_initial();
    let (woven, report) = weave(&m, &corpus::drp_policy(), &corpus::drp_weave_config()).unwrap();
    assert_eq!(model_stats(&m), ModelStats { states: 3, transitions: 3, signals: 6 });
    assert_eq!(model_stats(&woven), ModelStats { states: 3, transitions: 5, signals: 8 });
    assert_eq!(report.before, model_stats(&m));
    assert_eq!(report.after, model_stats(&woven));
    assert_eq!(woven.states, m.states);
    let obs: Vec<_> = report
        .synthesized
        .iter()
        .map(|s| (s.id.as_str(), s.observes.as_str(), s.source.as_str(), s.target.as_str(), s.input.as_str(), s.output.as_str()))
        .collect();
    assert_eq!(
        obs,
        [
            ("t4", "t1", "S1", "S1", "ask_access", "access_denied"),
            ("t5", "t2", "S2", "S2", "ask_for_route", "need_premium_class"),
        ]
    );
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    assert!(report.render().contains("3/3/6"));
}

#[test]
fn observations_off_keep_counts() {
    let m = corpus::drp_initial();
    let cfg = WeaveConfig::default();
    let (woven, report) = weave(&m, &corpus::drp_policy(), &cfg).unwrap();
    assert_eq!(model_stats(&woven), model_stats(&m));
    assert!(report.synthesized.is_empty());
}

#[test]
fn missing_observation_mapping() {
    let m = corpus::drp_initial();
    let mut cfg = corpus::drp_weave_config();
    cfg.observations.retain(|o| o.input != "ask_for_route");
    assert_eq!(
        weave(&m, &corpus::drp_policy(), &cfg).unwrap_err(),
        WeaveError::MissingObservationMapping("ask_for_route".into())
    );
}

#[test]
fn synthesize_from_report() {
    let m = corpus::drp_initial();
    let p = corpus::drp_policy();
    let (strengthened, mut report) = weave(&m, &p, &WeaveConfig::default()).unwrap();
    let (out, made) = synthesize_observations(&strengthened, &report, &corpus::drp_weave_config()).unwrap();
    assert_eq!(made.len(), 2);
    assert_eq!(model_stats(&out), ModelStats { states: 3, transitions: 5, signals: 8 });
    report.synthesized = made;
    let (full, _) = weave(&m, &p, &corpus::drp_weave_config()).unwrap();
    assert_eq!(out, full);
}

#[test]
fn observation_to_another_state() {
    let m = corpus::drp_initial();
    let mut cfg = corpus::drp_weave_config();
    cfg.observations[1].target = DenyTarget::State("S1".into());
    let (woven, report) = weave(&m, &corpus::drp_policy(), &cfg).unwrap();
    let t5 = woven.transition(&report.synthesized[1].id).unwrap();
    assert_eq!((t5.source.as_str(), t5.target.as_str()), ("S2", "S1"));
}

#[test]
fn regular_user_abroad_is_refused() {
    let (woven, _) = corpus::drp_secured();
    let cfg = Configuration::at("S2");
    let input = Instance::new("ask_for_route", [Value::sym("destinationOut"), Value::sym("regular")]);
    let ts = enabled_steps(&woven, &cfg, &input);
    assert_eq!(ts.len(), 1);
    let (post, out) = fire(&woven, &cfg, ts[0], &input).unwrap();
    assert_eq!(out, Instance::bare("need_premium_class"));
    assert_eq!(post.state, "S2");
}

#[test]
fn corpus_weaves_are_exact() {
    let m = corpus::drp_initial();
    let p = corpus::drp_policy();
    let (w, r) = weave(&m, &p, &corpus::drp_weave_config()).unwrap();
    check_weave(&m, &p, &w, &r, true);
    assert!(check_prohibition_safety(&m, &p, &w, 12) > 0);

    let m = corpus::v2i();
    let p = corpus::v2i_policy();
    let (w, r) = weave(&m, &p, &corpus::v2i_weave_config()).unwrap();
    check_weave(&m, &p, &w, &r, true);
    check_prohibition_safety(&m, &p, &w, 12);
    assert!(r.entries.iter().any(|e| e.dead));
    assert!(r.warnings.iter().any(|w| w.contains("can no longer fire")));
}

#[test]
fn drp_never_routes_regular_users_abroad() {
    let (woven, _) = corpus::drp_secured();
    let mut seen = BTreeSet::from([Configuration::initial(&woven)]);
    let mut level = vec![Configuration::initial(&woven)];
    let bad = Instance::new("ask_for_route", [Value::sym("destinationOut"), Value::sym("regular")]);
    let mut checked = 0;
    for _ in 0..12 {
        let mut next = Vec::new();
        for cfg in &level {
            for s in successors(&woven, cfg) {
                if s.input == bad {
                    assert_eq!(s.output, Instance::bare("need_premium_class"));
                    checked += 1;
                }
                if seen.insert(s.post.clone()) {
                    next.push(s.post);
                }
            }
        }
        level = next;
    }
    assert!(checked > 0);
}

fn policy_with(rules: Vec<Rule>) -> Policy {
    Policy {
        id: "r".into(),
        target: Target::default(),
        rules,
        combining: Combining::DenyOverrides,
    }
}

fn action_target(signal: &str) -> Target {
    Target {
        actions: vec![Matcher {
            category: Category::Action,
            attribute_id: "action-id".into(),
            function: MatchFunction::StringEqual,
            value: Value::sym(signal),
        }],
        ..Target::default()
    }
}

#[test]
fn empty_weave_is_identity() {
    let ghost = policy_with(vec![Rule {
        id: "ghost".into(),
        effect: Effect::Deny,
        target: Some(action_target("no_such_signal")),
        condition: None,
    }]);
    for m in [corpus::drp_initial(), corpus::v2i()] {
        for cfg in [WeaveConfig::default(), corpus::drp_weave_config()] {
            let (w, r) = weave(&m, &ghost, &cfg).unwrap();
            assert_eq!(w, m);
            assert!(r.entries.iter().all(|e| !e.strengthened()));
        }
    }
    for seed in 0..200 {
        let m = random_model_seeded(seed, Shape::WIDE);
        let (w, _) = weave(&m, &ghost, &WeaveConfig::default()).unwrap();
        assert_eq!(w, m, "seed {seed}");
    }
}

fn data_type(m: &Efsm, ty: &str) -> DataType {
    if ty == BOOLEAN {
        DataType::Boolean
    } else if m.type_decl(ty).unwrap().is_integer() {
        DataType::Integer
    } else {
        DataType::String
    }
}

/// One comparison between a parameter of `signal` (or a variable) and a value
/// of its domain.
fn random_atom(rng: &mut ChaCha8Rng, m: &Efsm, signal: &str) -> Condition {
    let sig = m.signal(signal).unwrap();
    let mut names: Vec<(Category, String, String)> = sig
        .params
        .iter()
        .map(|p| (Category::Subject, p.name.clone(), p.ty.clone()))
        .collect();
    names.extend(m.variables.iter().map(|v| (Category::Environment, v.name.clone(), v.ty.clone())));
    let Some((cat, id, ty)) = names.choose(rng).cloned() else {
        return Condition::Literal(Value::Bool(rng.random_bool(0.5)));
    };
    let dt = data_type(m, &ty);
    let lit = Condition::Literal(m.domain(&ty).unwrap().choose(rng).unwrap().clone());
    let d = Condition::designator(cat, id, dt);
    let f = match dt {
        DataType::String => Function::StringEqual,
        DataType::Boolean => Function::BooleanEqual,
        DataType::Integer => *[Function::IntegerEqual, Function::IntegerLessThan, Function::IntegerGreaterThanOrEqual]
            .choose(rng)
            .unwrap(),
    };
    Condition::apply(f, vec![d, lit])
}

fn random_policy(rng: &mut ChaCha8Rng, m: &Efsm) -> Policy {
    let n = rng.random_range(0..=4);
    let rules = (0..n)
        .map(|i| {
            let signal = m.signals.choose(rng).unwrap().name.clone();
            let mut atoms: Vec<Condition> = (0..rng.random_range(1..=2)).map(|_| random_atom(rng, m, &signal)).collect();
            let condition = match atoms.len() {
                1 if rng.random_bool(0.3) => Condition::apply(Function::Not, atoms),
                1 => atoms.pop().unwrap(),
                _ => Condition::apply(if rng.random_bool(0.5) { Function::And } else { Function::Or }, atoms),
            };
            Rule {
                id: format!("R{i}"),
                effect: if rng.random_bool(0.5) { Effect::Permit } else { Effect::Deny },
                target: Some(action_target(&signal)),
                condition: Some(condition),
            }
        })
        .collect();
    policy_with(rules)
}

#[test]
fn random_weaves_strengthen_and_partition() {
    let mut woven_any = 0;
    for seed in 0..300 {
        let m = random_model_seeded(seed, Shape::SMALL);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let p = random_policy(&mut rng, &m);
        let cfg = WeaveConfig {
            emit_observations: true,
            observations: m
                .signals
                .iter()
                .map(|s| Observation {
                    input: s.name.clone(),
                    deny_output: "denied".into(),
                    target: DenyTarget::Stay,
                })
                .collect(),
        };
        let (w, r) = weave(&m, &p, &cfg).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        check_weave(&m, &p, &w, &r, true);
        check_prohibition_safety(&m, &p, &w, 4);
        if !r.synthesized.is_empty() {
            woven_any += 1;
        }
        // Every strengthened input signal still has a choice in each state.
        for t in m.transitions.iter().filter(|t| r.entry(&t.id).unwrap().strengthened()) {
            let cfg = Configuration::initial(&m);
            let cfg = Configuration { state: t.source.clone(), ..cfg };
            for args in argument_combinations(&m, &t.input.signal) {
                let i = Instance::new(t.input.signal.clone(), args);
                let before = enabled_steps(&m, &cfg, &i).len();
                let after = enabled_steps(&w, &cfg, &i).len();
                assert!(after >= before, "seed {seed}");
            }
        }
    }
    assert!(woven_any > 50, "{woven_any}");
}
