//! Seeded generator of random valid models and purposes.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::efsm::{
    Assignment, CompareOp, ConstDecl, Efsm, Expr, InputAction, OutputAction, ParamDecl, SetDecl,
    SignalDecl, Transition, TypeDecl, TypeKind, Value, VarDecl, BOOLEAN,
};
use crate::testgen::{ActionPattern, TestPurpose};

/// Size limits for generated models.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_states: usize,
    pub max_types: usize,
    pub max_domain: usize,
    pub max_vars: usize,
    pub max_signals: usize,
    pub max_params: usize,
    pub max_transitions: usize,
    pub max_expr_depth: usize,
}

impl Shape {
    /// Small enough for exhaustive search: at most 6 states and 3 domains of
    /// at most 3 values.
    pub const SMALL: Shape = Shape {
        max_states: 6,
        max_types: 3,
        max_domain: 3,
        max_vars: 2,
        max_signals: 4,
        max_params: 2,
        max_transitions: 12,
        max_expr_depth: 2,
    };

    /// Wider variety for text round-trips.
    pub const WIDE: Shape = Shape {
        max_states: 8,
        max_types: 5,
        max_domain: 5,
        max_vars: 5,
        max_signals: 6,
        max_params: 3,
        max_transitions: 20,
        max_expr_depth: 3,
    };
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    m: Efsm,
    shape: Shape,
}

impl Gen<'_> {
    fn types(&mut self) {
        let n = self.rng.random_range(1..=self.shape.max_types);
        if self.rng.random_bool(0.3) {
            self.m.consts.push(ConstDecl {
                name: "C0".into(),
                value: self.rng.random_range(-2..=2),
            });
        }
        for i in 0..n {
            let size = self.rng.random_range(1..=self.shape.max_domain);
            let kind = if self.rng.random_bool(0.6) {
                TypeKind::Enum {
                    symbols: (0..size).map(|k| format!("a{i}_{k}")).collect(),
                }
            } else {
                let lo = self.rng.random_range(-3..=3);
                TypeKind::Range {
                    lo,
                    hi: lo + size as i64 - 1,
                }
            };
            self.m.types.push(TypeDecl {
                name: format!("T{i}"),
                kind,
            });
        }
        for (i, t) in self.m.types.clone().iter().enumerate() {
            if self.rng.random_bool(0.5) {
                let members = t
                    .domain()
                    .into_iter()
                    .filter(|_| self.rng.random_bool(0.5))
                    .collect();
                self.m.sets.push(SetDecl {
                    name: format!("Set{i}"),
                    ty: t.name.clone(),
                    members,
                });
            }
        }
    }

    /// A declared type name, or the builtin boolean.
    fn any_type(&mut self) -> String {
        let k = self.rng.random_range(0..=self.m.types.len());
        if k == self.m.types.len() {
            BOOLEAN.to_string()
        } else {
            self.m.types[k].name.clone()
        }
    }

    fn pick_value(&mut self, ty: &str) -> Value {
        let d = self.m.domain(ty).unwrap();
        d.choose(self.rng).unwrap().clone()
    }

    fn declarations(&mut self) {
        let nv = self.rng.random_range(0..=self.shape.max_vars);
        for i in 0..nv {
            let ty = self.any_type();
            let init = self.pick_value(&ty);
            self.m.variables.push(VarDecl {
                name: format!("v{i}"),
                ty,
                init,
            });
        }
        let ns = self.rng.random_range(1..=self.shape.max_signals);
        for i in 0..ns {
            let np = self.rng.random_range(0..=self.shape.max_params);
            let params = (0..np)
                .map(|k| ParamDecl {
                    name: format!("p{k}"),
                    ty: self.any_type(),
                })
                .collect();
            self.m.signals.push(SignalDecl {
                name: format!("s{i}"),
                params,
            });
        }
        let nstates = self.rng.random_range(1..=self.shape.max_states);
        self.m.states = (0..nstates).map(|i| format!("S{i}")).collect();
        self.m.initial_state = self.m.states[self.rng.random_range(0..nstates)].clone();
    }

    /// Expressions of declared type `ty` that may appear in transition `t`.
    fn typed_refs(&self, t: &Transition, ty: &str) -> Vec<Expr> {
        let mut out: Vec<Expr> = self
            .m
            .variables
            .iter()
            .filter(|v| v.ty == ty)
            .map(|v| Expr::var(&v.name))
            .collect();
        if let Some(sig) = self.m.signal(&t.input.signal) {
            out.extend(
                sig.params
                    .iter()
                    .zip(&t.input.params)
                    .filter(|(p, _)| p.ty == ty)
                    .map(|(_, name)| Expr::param(name)),
            );
        }
        out
    }

    fn value_expr(&mut self, t: &Transition, ty: &str) -> Expr {
        let refs = self.typed_refs(t, ty);
        if !refs.is_empty() && self.rng.random_bool(0.6) {
            refs.choose(self.rng).unwrap().clone()
        } else {
            Expr::Lit(self.pick_value(ty))
        }
    }

    fn atom(&mut self, t: &Transition) -> Expr {
        let ty = self.any_type();
        let refs = self.typed_refs(t, &ty);
        if ty == BOOLEAN {
            return match refs.choose(self.rng) {
                Some(r) if self.rng.random_bool(0.7) => r.clone(),
                _ => Expr::Lit(Value::Bool(self.rng.random_bool(0.5))),
            };
        }
        let Some(r) = refs.choose(self.rng).cloned() else {
            return Expr::Lit(Value::Bool(self.rng.random_bool(0.5)));
        };
        let sets: Vec<String> = self
            .m
            .sets
            .iter()
            .filter(|s| s.ty == ty)
            .map(|s| s.name.clone())
            .collect();
        if !sets.is_empty() && self.rng.random_bool(0.3) {
            return Expr::member_of(r, sets.choose(self.rng).unwrap());
        }
        let integer = self.m.type_decl(&ty).is_some_and(|d| d.is_integer());
        let op = if integer {
            *CompareOp::ALL.choose(self.rng).unwrap()
        } else if self.rng.random_bool(0.5) {
            CompareOp::Eq
        } else {
            CompareOp::Ne
        };
        let rhs = self.value_expr(t, &ty);
        if self.rng.random_bool(0.2) {
            Expr::compare(op, rhs, r)
        } else {
            Expr::compare(op, r, rhs)
        }
    }

    fn bool_expr(&mut self, t: &Transition, depth: usize) -> Expr {
        if depth == 0 || self.rng.random_bool(0.4) {
            return self.atom(t);
        }
        match self.rng.random_range(0..3) {
            0 => Expr::not(self.bool_expr(t, depth - 1)),
            k => {
                let n = self.rng.random_range(0..=3);
                let xs = (0..n).map(|_| self.bool_expr(t, depth - 1)).collect();
                if k == 1 {
                    Expr::And(xs)
                } else {
                    Expr::Or(xs)
                }
            }
        }
    }

    fn transitions(&mut self) {
        let n = self.rng.random_range(0..=self.shape.max_transitions);
        for i in 0..n {
            let source = self.m.states.choose(self.rng).unwrap().clone();
            let target = self.m.states.choose(self.rng).unwrap().clone();
            let input = self.m.signals.choose(self.rng).unwrap().clone();
            let output = self.m.signals.choose(self.rng).unwrap().clone();
            let mut t = Transition {
                id: format!("t{}", i + 1),
                source,
                target,
                input: InputAction {
                    signal: input.name.clone(),
                    params: input.params.iter().map(|p| p.name.clone()).collect(),
                },
                output: OutputAction {
                    signal: output.name.clone(),
                    args: Vec::new(),
                },
                predicate: None,
                actions: Vec::new(),
            };
            if self.rng.random_bool(0.6) {
                let d = self.shape.max_expr_depth;
                t.predicate = Some(self.bool_expr(&t, d));
            }
            t.output.args = output
                .params
                .iter()
                .map(|p| {
                    if p.ty == BOOLEAN && self.rng.random_bool(0.3) {
                        self.bool_expr(&t, 1)
                    } else {
                        self.value_expr(&t, &p.ty)
                    }
                })
                .collect();
            for v in self.m.variables.clone() {
                if self.rng.random_bool(0.3) {
                    let value = self.value_expr(&t, &v.ty);
                    t.actions.push(Assignment { var: v.name, value });
                }
            }
            self.m.transitions.push(t);
        }
        self.m.canonicalize();
    }
}

/// A random model that passes validation, drawn with `shape` limits.
pub fn random_model(rng: &mut ChaCha8Rng, shape: Shape) -> Efsm {
    let mut g = Gen {
        rng,
        m: Efsm {
            name: "R".into(),
            process: "proc".into(),
            consts: Vec::new(),
            types: Vec::new(),
            sets: Vec::new(),
            signals: Vec::new(),
            variables: Vec::new(),
            states: Vec::new(),
            initial_state: String::new(),
            transitions: Vec::new(),
        },
        shape,
    };
    g.types();
    g.declarations();
    g.transitions();
    g.m
}

pub fn random_model_seeded(seed: u64, shape: Shape) -> Efsm {
    random_model(&mut ChaCha8Rng::seed_from_u64(seed), shape)
}

/// A purpose built from a few random conditions over `m`'s names.
pub fn random_purpose(rng: &mut ChaCha8Rng, m: &Efsm) -> TestPurpose {
    let mut p = TestPurpose::named("rp");
    loop {
        if rng.random_bool(0.3) {
            p.source = Some(m.states.choose(rng).unwrap().clone());
        }
        if rng.random_bool(0.3) {
            p.destination = Some(m.states.choose(rng).unwrap().clone());
        }
        for slot in 0..2 {
            if rng.random_bool(0.4) {
                let sig = m.signals.choose(rng).unwrap();
                let pattern = if rng.random_bool(0.5) {
                    ActionPattern::any(&sig.name)
                } else {
                    let args = sig
                        .params
                        .iter()
                        .map(|q| m.domain(&q.ty).unwrap().choose(rng).unwrap().clone())
                        .collect::<Vec<_>>();
                    ActionPattern::exact(&sig.name, args)
                };
                if slot == 0 {
                    p.input = Some(pattern);
                } else {
                    p.output = Some(pattern);
                }
            }
        }
        if rng.random_bool(0.1) {
            p = p.with_instance(&m.process);
        }
        if p.condition_count() > 0 {
            return p;
        }
    }
}
