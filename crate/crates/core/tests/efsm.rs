use std::collections::BTreeMap;

use proptest::prelude::*;
use secweave_core::corpus;
use secweave_core::efsm::{
    argument_combinations, characteristic, enabled_steps, eval_expr, fire, model_stats,
    successors, validate_model, Bindings, CompareOp, Configuration, DiagnosticKind, Expr,
    Instance, ModelStats, Value,
};
use secweave_core::testkit::{random_model_seeded, Shape};
use secweave_core::text::{parse_model, parse_model_unchecked};

fn bind(pairs: &[(&str, Value)]) -> Bindings {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

#[test]
fn empty_conjunction_is_true() {
    let m = corpus::drp_initial();
    let cfg = Configuration::initial(&m);
    let v = eval_expr(&m, &Expr::And(vec![]), &cfg, &Bindings::new()).unwrap();
    assert_eq!(v, Value::Bool(true));
}

#[test]
fn login_equality() {
    let m = corpus::drp_initial();
    let cfg = Configuration::initial(&m);
    let e = Expr::eq(Expr::param("login"), Expr::sym("log1"));
    let v = eval_expr(&m, &e, &cfg, &bind(&[("login", Value::sym("log1"))])).unwrap();
    assert_eq!(v, Value::Bool(true));
}

#[test]
fn position_outside_france() {
    let m = corpus::drp_initial();
    let cfg = Configuration::initial(&m);
    let e = Expr::member_of(Expr::param("GPSposition"), "FranceArea");
    let v = eval_expr(&m, &e, &cfg, &bind(&[("GPSposition", Value::sym("GPSout"))])).unwrap();
    assert_eq!(v, Value::Bool(false));
}

#[test]
fn unbound_and_mistyped_names() {
    let m = corpus::drp_initial();
    let cfg = Configuration::initial(&m);
    let e = Expr::eq(Expr::param("login"), Expr::sym("log1"));
    assert!(eval_expr(&m, &e, &cfg, &Bindings::new()).is_err());
    let e = Expr::eq(Expr::param("login"), Expr::Lit(Value::Int(1)));
    assert!(eval_expr(&m, &e, &cfg, &bind(&[("login", Value::sym("log1"))])).is_err());
    let e = Expr::And(vec![Expr::Lit(Value::Int(1))]);
    assert!(eval_expr(&m, &e, &cfg, &Bindings::new()).is_err());
}

#[test]
fn characteristic_of_france_area() {
    let m = corpus::drp_initial();
    assert_eq!(characteristic(&m, "FranceArea", &Value::sym("GPSin")), Ok(1));
    assert_eq!(characteristic(&m, "FranceArea", &Value::sym("GPSout")), Ok(0));
    assert!(characteristic(&m, "Nowhere", &Value::sym("GPSin")).is_err());
}

/// Sets and their complements over the same type, declared side by side.
const SETS: &str = r#"
system Sets;
type Color = enum red, green, blue endenum;
type Small = range -1 .. 2;
set Warm : Color = {red};
set NotWarm : Color = {green, blue};
set Pos : Small = {1, 2};
set NotPos : Small = {-1, 0};
set Empty : Color = {};
set All : Color = {red, green, blue};
signal s();
process p(1);
  state A init;
  endstate;
endprocess;
endsystem;
"#;

#[test]
fn characteristic_complements_sum_to_one() {
    let m = parse_model(SETS).unwrap();
    for (s, c) in [("Warm", "NotWarm"), ("Pos", "NotPos"), ("Empty", "All")] {
        let ty = &m.set(s).unwrap().ty;
        for x in m.domain(ty).unwrap() {
            let a = characteristic(&m, s, &x).unwrap();
            let b = characteristic(&m, c, &x).unwrap();
            assert_eq!(a + b, 1, "{s}/{c} at {x}");
        }
    }
}

#[test]
fn member_of_agrees_with_characteristic_on_random_models() {
    for seed in 0..200 {
        let m = random_model_seeded(seed, Shape::WIDE);
        let cfg = Configuration::initial(&m);
        for set in &m.sets {
            for x in m.domain(&set.ty).unwrap() {
                let e = Expr::member_of(Expr::Lit(x.clone()), &set.name);
                let v = eval_expr(&m, &e, &cfg, &Bindings::new()).unwrap();
                let c = characteristic(&m, &set.name, &x).unwrap();
                assert_eq!(v, Value::Bool(c == 1));
            }
        }
    }
}

/// Two states; input A always answers X, and the guard P decides between
/// moving on with task T or staying with task T'.
const FIG1: &str = r#"
system Simple;
type Task = enum none, task_t, task_t_prime endenum;
signal A();
signal X();
process m(1);
  var p : boolean := true;
  var task : Task := none;
  state S0 init;
    input A() provided p output X() do task := task_t nextstate S1;
    input A() provided not p output X() do task := task_t_prime nextstate S0;
  endstate;
  state S1;
  endstate;
endprocess;
endsystem;
"#;

#[test]
fn guard_true_moves_on() {
    let m = parse_model(FIG1).unwrap();
    let cfg = Configuration::initial(&m);
    let a = Instance::bare("A");
    let ts = enabled_steps(&m, &cfg, &a);
    assert_eq!(ts.len(), 1);
    let (post, out) = fire(&m, &cfg, ts[0], &a).unwrap();
    assert_eq!(post.state, "S1");
    assert_eq!(out, Instance::bare("X"));
    assert_eq!(post.valuation["task"], Value::sym("task_t"));
}

#[test]
fn guard_false_stays_with_other_task() {
    let m = parse_model(FIG1).unwrap();
    let mut cfg = Configuration::initial(&m);
    cfg.valuation.insert("p".into(), Value::Bool(false));
    let a = Instance::bare("A");
    let ts = enabled_steps(&m, &cfg, &a);
    assert_eq!(ts.len(), 1);
    let (post, out) = fire(&m, &cfg, ts[0], &a).unwrap();
    assert_eq!(post.state, "S0");
    assert_eq!(out, Instance::bare("X"));
    assert_eq!(post.valuation["task"], Value::sym("task_t_prime"));
}

#[test]
fn firing_a_disabled_transition_fails() {
    let m = parse_model(FIG1).unwrap();
    let cfg = Configuration::initial(&m);
    let t = &m.transitions[1];
    assert!(fire(&m, &cfg, t, &Instance::bare("A")).is_err());
}

#[test]
fn no_actions_keep_the_valuation() {
    let m = corpus::v2i();
    let mut cfg = Configuration::initial(&m);
    cfg.state = "wait".into();
    let input = Instance::bare("request_information");
    let t = enabled_steps(&m, &cfg, &input)[0];
    let (post, _) = fire(&m, &cfg, t, &input).unwrap();
    assert_eq!(post.valuation, cfg.valuation);
}

#[test]
fn no_transition_for_this_state() {
    let m = corpus::drp_initial();
    let cfg = Configuration::initial(&m);
    assert!(enabled_steps(&m, &cfg, &Instance::bare("exit_service")).is_empty());
}

#[test]
fn secured_drp_login_choices() {
    let (m, _) = corpus::drp_secured();
    let cfg = Configuration::initial(&m);
    let ok = Instance::new("ask_access", ["log1", "pwd1", "GPSin"].map(Value::sym));
    let ids: Vec<&str> = enabled_steps(&m, &cfg, &ok).iter().map(|t| t.id.as_str()).collect();
    assert_eq!(ids, ["t1"]);
    let bad = Instance::new("ask_access", ["log1", "pwd2", "GPSout"].map(Value::sym));
    let ids: Vec<&str> = enabled_steps(&m, &cfg, &bad).iter().map(|t| t.id.as_str()).collect();
    assert_eq!(ids, ["t4"]);
}

#[test]
fn stats() {
    assert_eq!(
        model_stats(&corpus::drp_initial()),
        ModelStats { states: 3, transitions: 3, signals: 6 }
    );
    assert_eq!(
        model_stats(&corpus::drp_secured().0),
        ModelStats { states: 3, transitions: 5, signals: 8 }
    );
    let m = parse_model("system E; process p(1); state A init; endstate; endprocess; endsystem;").unwrap();
    assert_eq!(model_stats(&m), ModelStats { states: 1, transitions: 0, signals: 0 });
}

#[test]
fn validation_examples() {
    assert!(validate_model(&corpus::drp_initial()).is_empty());
    assert!(validate_model(&corpus::v2i()).is_empty());

    let mut m = corpus::drp_initial();
    m.transitions[0].input.signal = "teleport".into();
    let kinds: Vec<_> = validate_model(&m).into_iter().map(|d| d.kind).collect();
    assert_eq!(kinds, [DiagnosticKind::UnknownSignal]);

    let mut m = corpus::drp_initial();
    m.transitions[0].predicate = Some(Expr::eq(Expr::param("login"), Expr::Lit(Value::Int(3))));
    let kinds: Vec<_> = validate_model(&m).into_iter().map(|d| d.kind).collect();
    assert_eq!(kinds, [DiagnosticKind::TypeMismatch]);
}

#[test]
fn validation_catches_structural_errors() {
    let text = r#"
system Bad;
type T = enum a, b endenum;
type U = range 3 .. 1;
signal s(x: T);
process p(1);
  var v : T := a;
  state A init;
    input s(v) output s(a) nextstate A;
    input s(x) provided x < a output s(x) nextstate A;
  endstate;
endprocess;
endsystem;
"#;
    let m = parse_model_unchecked(text, "bad.mdl").unwrap();
    let kinds: Vec<_> = validate_model(&m).into_iter().map(|d| d.kind).collect();
    assert!(kinds.contains(&DiagnosticKind::EmptyDomain), "{kinds:?}");
    assert!(kinds.contains(&DiagnosticKind::NameClash), "{kinds:?}");
    assert!(kinds.contains(&DiagnosticKind::TypeMismatch), "{kinds:?}");
}

const SWAP: &str = r#"
system Swap;
type T = range 0 .. 3;
signal go();
process p(1);
  var a : T := 1;
  var b : T := 2;
  state A init;
    input go() output go() do a := b, b := a nextstate A;
  endstate;
endprocess;
endsystem;
"#;

proptest! {
    #[test]
    fn assignments_read_the_pre_state(a in 0i64..=3, b in 0i64..=3) {
        let m = parse_model(SWAP).unwrap();
        let cfg = Configuration {
            state: "A".into(),
            valuation: BTreeMap::from([("a".into(), Value::Int(a)), ("b".into(), Value::Int(b))]),
        };
        let (post, _) = fire(&m, &cfg, &m.transitions[0], &Instance::bare("go")).unwrap();
        prop_assert_eq!(&post.valuation["a"], &Value::Int(b));
        prop_assert_eq!(&post.valuation["b"], &Value::Int(a));
    }

    #[test]
    fn evaluation_is_deterministic(seed in 0u64..500) {
        let m = random_model_seeded(seed, Shape::WIDE);
        let cfg = Configuration::initial(&m);
        for t in m.transitions.iter().filter(|t| t.source == cfg.state) {
            for args in argument_combinations(&m, &t.input.signal) {
                let input = Instance::new(t.input.signal.clone(), args);
                let once = fire(&m, &cfg, t, &input);
                prop_assert_eq!(once, fire(&m, &cfg, t, &input));
            }
        }
    }

    #[test]
    fn firing_keeps_valuations_total_and_in_domain(seed in 0u64..500) {
        let m = random_model_seeded(seed, Shape::WIDE);
        let mut frontier = vec![Configuration::initial(&m)];
        for _ in 0..3 {
            let mut next = Vec::new();
            for cfg in &frontier {
                for s in successors(&m, cfg) {
                    prop_assert_eq!(s.post.valuation.len(), m.variables.len());
                    for v in &m.variables {
                        prop_assert!(m.type_contains(&v.ty, &s.post.valuation[&v.name]));
                    }
                    next.push(s.post);
                }
            }
            next.truncate(50);
            frontier = next;
        }
    }

    #[test]
    fn absent_predicate_behaves_as_true(seed in 0u64..300) {
        let m = random_model_seeded(seed, Shape::SMALL);
        let mut with_true = m.clone();
        let mut stripped = m.clone();
        for (a, b) in with_true.transitions.iter_mut().zip(stripped.transitions.iter_mut()) {
            a.predicate = Some(Expr::truth());
            b.predicate = None;
        }
        let cfg = Configuration::initial(&m);
        for sig in &m.signals {
            for args in argument_combinations(&m, &sig.name) {
                let i = Instance::new(sig.name.clone(), args);
                let x: Vec<_> = enabled_steps(&with_true, &cfg, &i).iter().map(|t| t.id.clone()).collect();
                let y: Vec<_> = enabled_steps(&stripped, &cfg, &i).iter().map(|t| t.id.clone()).collect();
                prop_assert_eq!(x, y);
            }
        }
    }
}

#[test]
fn comparison_operators_on_integers() {
    let m = parse_model(SWAP).unwrap();
    let cfg = Configuration::initial(&m);
    let cases = [
        (CompareOp::Eq, false),
        (CompareOp::Ne, true),
        (CompareOp::Lt, true),
        (CompareOp::Le, true),
        (CompareOp::Gt, false),
        (CompareOp::Ge, false),
    ];
    for (op, want) in cases {
        let e = Expr::compare(op, Expr::var("a"), Expr::var("b"));
        assert_eq!(eval_expr(&m, &e, &cfg, &Bindings::new()), Ok(Value::Bool(want)), "{op:?}");
    }
}
