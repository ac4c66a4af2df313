//! The `.mdl` model format.
//!
//! ```text
//! system DRP;
//! const MAX = 3;
//! type position = enum GPSin, GPSout endenum;
//! type counter = range 0 .. MAX;
//! set FranceArea : position = { GPSin };
//! signal ask_access(login: login, password: password, position: position);
//!
//! process server(1);
//!   var tries : counter := 0;
//!   state S1 init;
//!     t1: input ask_access(login, password, GPSposition)
//!         provided GPSposition in FranceArea
//!         output access_authorized()
//!         do tries := 0
//!         nextstate S2;
//!   endstate;
//! endprocess;
//! endsystem;
//! ```
//!
//! Inside expressions a name resolves, in order, to an input parameter of the
//! enclosing transition, a variable, an enum symbol or a constant.

use std::collections::HashMap;

use super::lexer::{tokenize, Cursor, SourceSpan, Tok};
use super::ParseError;
use crate::efsm::{
    validate_model, Assignment, CompareOp, ConstDecl, Efsm, Expr, InputAction, OutputAction,
    ParamDecl, SetDecl, SignalDecl, Subject, Transition, TypeDecl, TypeKind, Value, VarDecl,
    BOOLEAN,
};

const RESERVED: &[&str] = &[
    "system", "const", "type", "enum", "endenum", "range", "set", "signal", "process", "var",
    "state", "init", "input", "provided", "output", "do", "nextstate", "endstate", "endprocess",
    "endsystem", "and", "or", "not", "in", "true", "false",
];

/// Parses and validates a model; any diagnostic becomes a resolution error.
pub fn parse_model(text: &str) -> Result<Efsm, ParseError> {
    parse_model_named(text, "<input>")
}

pub fn parse_model_named(text: &str, file: &str) -> Result<Efsm, ParseError> {
    let (model, spans) = parse_inner(text, file)?;
    if let Some(d) = validate_model(&model).into_iter().next() {
        let span = spans
            .get(&d.subject)
            .cloned()
            .unwrap_or_else(|| SourceSpan::new(file, 1, 1));
        return Err(ParseError::Resolution {
            span,
            message: d.to_string(),
        });
    }
    Ok(model)
}

/// Parses and resolves names without running model validation.
pub fn parse_model_unchecked(text: &str, file: &str) -> Result<Efsm, ParseError> {
    parse_inner(text, file).map(|(m, _)| m)
}

fn parse_inner(text: &str, file: &str) -> Result<(Efsm, HashMap<Subject, SourceSpan>), ParseError> {
    let mut p = Parser {
        cur: Cursor::new(tokenize(text, file)?),
        m: Efsm {
            name: String::new(),
            process: String::new(),
            consts: Vec::new(),
            types: Vec::new(),
            sets: Vec::new(),
            signals: Vec::new(),
            variables: Vec::new(),
            states: Vec::new(),
            initial_state: String::new(),
            transitions: Vec::new(),
        },
        spans: HashMap::new(),
        state_refs: Vec::new(),
    };
    p.system()?;
    Ok((p.m, p.spans))
}

struct Parser {
    cur: Cursor,
    m: Efsm,
    spans: HashMap<Subject, SourceSpan>,
    /// `nextstate` targets, checked once every state is known.
    state_refs: Vec<(String, SourceSpan)>,
}

impl Parser {
    fn ident(&mut self) -> Result<(String, SourceSpan), ParseError> {
        self.cur.expect_ident(RESERVED)
    }

    fn system(&mut self) -> Result<(), ParseError> {
        self.cur.expect_keyword("system")?;
        self.m.name = self.ident()?.0;
        self.cur.expect_punct(";")?;
        loop {
            if self.cur.eat_keyword("const") {
                self.const_decl()?;
            } else if self.cur.eat_keyword("type") {
                self.type_decl()?;
            } else if self.cur.eat_keyword("set") {
                self.set_decl()?;
            } else if self.cur.eat_keyword("signal") {
                self.signal_decl()?;
            } else {
                break;
            }
        }
        self.process()?;
        self.cur.expect_keyword("endsystem")?;
        self.cur.expect_punct(";")?;
        if !self.cur.at_eof() {
            return Err(ParseError::syntax(
                self.cur.span(),
                format!("unexpected {} after `endsystem`", self.cur.peek()),
            ));
        }
        Ok(())
    }

    fn const_decl(&mut self) -> Result<(), ParseError> {
        let (name, _) = self.ident()?;
        self.cur.expect_punct("=")?;
        let (value, _) = self.int_or_const()?;
        self.cur.expect_punct(";")?;
        self.m.consts.push(ConstDecl { name, value });
        Ok(())
    }

    fn int_or_const(&mut self) -> Result<(i64, SourceSpan), ParseError> {
        if let Tok::Ident(name) = self.cur.peek().clone() {
            let span = self.cur.bump().span;
            return match self.m.consts.iter().find(|c| c.name == name) {
                Some(c) => Ok((c.value, span)),
                None => Err(ParseError::resolution(span, format!("undeclared constant `{name}`"))),
            };
        }
        self.cur.expect_int()
    }

    fn type_decl(&mut self) -> Result<(), ParseError> {
        let (name, span) = self.ident()?;
        self.cur.expect_punct("=")?;
        let kind = if self.cur.eat_keyword("enum") {
            let mut symbols = vec![self.ident()?.0];
            while self.cur.eat_punct(",") {
                symbols.push(self.ident()?.0);
            }
            self.cur.expect_keyword("endenum")?;
            TypeKind::Enum { symbols }
        } else if self.cur.eat_keyword("range") {
            let (lo, _) = self.int_or_const()?;
            self.cur.expect_punct("..")?;
            let (hi, _) = self.int_or_const()?;
            TypeKind::Range { lo, hi }
        } else {
            return Err(ParseError::syntax(
                self.cur.span(),
                format!("expected `enum` or `range`, found {}", self.cur.peek()),
            ));
        };
        self.cur.expect_punct(";")?;
        self.spans.insert(Subject::Type(name.clone()), span);
        self.m.types.push(TypeDecl { name, kind });
        Ok(())
    }

    fn type_ref(&mut self) -> Result<String, ParseError> {
        let (ty, span) = self.ident()?;
        if ty != BOOLEAN && self.m.type_decl(&ty).is_none() {
            return Err(ParseError::resolution(span, format!("undeclared type `{ty}`")));
        }
        Ok(ty)
    }

    /// A literal value: integer, boolean, enum symbol or constant.
    fn value(&mut self) -> Result<Value, ParseError> {
        let span = self.cur.span();
        match self.cur.peek().clone() {
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.cur.bump();
                Ok(Value::Bool(s == "true"))
            }
            Tok::Ident(s) => {
                self.cur.bump();
                if self.m.symbol_type(&s).is_some() {
                    Ok(Value::Sym(s))
                } else if let Some(c) = self.m.consts.iter().find(|c| c.name == s) {
                    Ok(Value::Int(c.value))
                } else {
                    Err(ParseError::resolution(span, format!("unknown value `{s}`")))
                }
            }
            _ => Ok(Value::Int(self.cur.expect_int()?.0)),
        }
    }

    fn set_decl(&mut self) -> Result<(), ParseError> {
        let (name, span) = self.ident()?;
        self.cur.expect_punct(":")?;
        let ty = self.type_ref()?;
        self.cur.expect_punct("=")?;
        self.cur.expect_punct("{")?;
        let mut members = Vec::new();
        if !self.cur.at_punct("}") {
            members.push(self.value()?);
            while self.cur.eat_punct(",") {
                members.push(self.value()?);
            }
        }
        self.cur.expect_punct("}")?;
        self.cur.expect_punct(";")?;
        self.spans.insert(Subject::Set(name.clone()), span);
        self.m.sets.push(SetDecl { name, ty, members });
        Ok(())
    }

    fn signal_decl(&mut self) -> Result<(), ParseError> {
        let (name, span) = self.ident()?;
        self.cur.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.cur.at_punct(")") {
            loop {
                let (pname, _) = self.ident()?;
                self.cur.expect_punct(":")?;
                let ty = self.type_ref()?;
                params.push(ParamDecl { name: pname, ty });
                if !self.cur.eat_punct(",") {
                    break;
                }
            }
        }
        self.cur.expect_punct(")")?;
        self.cur.expect_punct(";")?;
        self.spans.insert(Subject::Signal(name.clone()), span);
        self.m.signals.push(SignalDecl { name, params });
        Ok(())
    }

    fn process(&mut self) -> Result<(), ParseError> {
        self.cur.expect_keyword("process")?;
        self.m.process = self.ident()?.0;
        self.cur.expect_punct("(")?;
        let (count, span) = self.cur.expect_int()?;
        if count != 1 {
            return Err(ParseError::syntax(span, "only single-instance processes are supported"));
        }
        self.cur.expect_punct(")")?;
        self.cur.expect_punct(";")?;

        while self.cur.eat_keyword("var") {
            let (name, span) = self.ident()?;
            self.cur.expect_punct(":")?;
            let ty = self.type_ref()?;
            let init = if self.cur.eat_punct(":=") {
                self.value()?
            } else {
                let domain = self.m.domain(&ty).unwrap_or_default();
                domain
                    .into_iter()
                    .next()
                    .ok_or_else(|| ParseError::resolution(span.clone(), format!("type `{ty}` is empty")))?
            };
            self.cur.expect_punct(";")?;
            self.spans.insert(Subject::Variable(name.clone()), span);
            self.m.variables.push(VarDecl { name, ty, init });
        }

        let mut initial: Option<(String, SourceSpan)> = None;
        while self.cur.eat_keyword("state") {
            let (name, span) = self.ident()?;
            if self.cur.eat_keyword("init") {
                if let Some((prev, _)) = &initial {
                    return Err(ParseError::syntax(
                        span,
                        format!("second initial state (`{prev}` is already initial)"),
                    ));
                }
                initial = Some((name.clone(), span.clone()));
            }
            self.cur.expect_punct(";")?;
            self.spans.insert(Subject::State(name.clone()), span);
            self.m.states.push(name.clone());
            while !self.cur.at_keyword("endstate") {
                self.transition(&name)?;
            }
            self.cur.expect_keyword("endstate")?;
            self.cur.expect_punct(";")?;
        }
        let end = self.cur.expect_keyword("endprocess")?;
        self.cur.expect_punct(";")?;

        let Some((init, _)) = initial else {
            return Err(ParseError::syntax(end, "no state is marked `init`"));
        };
        self.m.initial_state = init;
        for (s, span) in std::mem::take(&mut self.state_refs) {
            if !self.m.has_state(&s) {
                return Err(ParseError::resolution(span, format!("undeclared state `{s}`")));
            }
        }
        Ok(())
    }

    fn transition(&mut self, source: &str) -> Result<(), ParseError> {
        let start = self.cur.span();
        let id = if matches!(self.cur.peek(), Tok::Ident(s) if !RESERVED.contains(&s.as_str()))
            && matches!(self.cur.peek_at(1), Tok::Punct(":"))
        {
            let (id, _) = self.ident()?;
            self.cur.bump();
            id
        } else {
            format!("t{}", self.m.transitions.len() + 1)
        };
        self.cur.expect_keyword("input")?;
        let (signal, sig_span) = self.ident()?;
        if self.m.signal(&signal).is_none() {
            return Err(ParseError::resolution(sig_span, format!("undeclared signal `{signal}`")));
        }
        self.cur.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.cur.at_punct(")") {
            params.push(self.ident()?.0);
            while self.cur.eat_punct(",") {
                params.push(self.ident()?.0);
            }
        }
        self.cur.expect_punct(")")?;

        let predicate = if self.cur.eat_keyword("provided") {
            Some(self.expr(&params)?)
        } else {
            None
        };

        self.cur.expect_keyword("output")?;
        let (out_signal, out_span) = self.ident()?;
        if self.m.signal(&out_signal).is_none() {
            return Err(ParseError::resolution(out_span, format!("undeclared signal `{out_signal}`")));
        }
        self.cur.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.cur.at_punct(")") {
            args.push(self.expr(&params)?);
            while self.cur.eat_punct(",") {
                args.push(self.expr(&params)?);
            }
        }
        self.cur.expect_punct(")")?;

        let mut actions = Vec::new();
        if self.cur.eat_keyword("do") {
            loop {
                let (var, span) = self.ident()?;
                if self.m.variable(&var).is_none() {
                    return Err(ParseError::resolution(span, format!("undeclared variable `{var}`")));
                }
                self.cur.expect_punct(":=")?;
                let value = self.expr(&params)?;
                actions.push(Assignment { var, value });
                if !self.cur.eat_punct(",") {
                    break;
                }
            }
        }

        self.cur.expect_keyword("nextstate")?;
        let (target, target_span) = self.ident()?;
        self.state_refs.push((target.clone(), target_span));
        self.cur.expect_punct(";")?;

        self.spans.insert(Subject::Transition(id.clone()), start);
        self.m.transitions.push(Transition {
            id,
            source: source.to_string(),
            target,
            input: InputAction { signal, params },
            output: OutputAction {
                signal: out_signal,
                args,
            },
            predicate,
            actions,
        });
        Ok(())
    }

    // expr    := and_expr ("or" and_expr)*
    // and     := unary ("and" unary)*
    // unary   := "not" unary | relation
    // relation:= primary [cmp primary | "in" SET]
    // primary := literal | name | "(" expr ")" | ("and"|"or") "(" [expr ("," expr)*] ")"
    fn expr(&mut self, params: &[String]) -> Result<Expr, ParseError> {
        let first = self.and_expr(params)?;
        if !self.cur.at_keyword("or") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.cur.eat_keyword("or") {
            parts.push(self.and_expr(params)?);
        }
        Ok(Expr::Or(parts))
    }

    fn and_expr(&mut self, params: &[String]) -> Result<Expr, ParseError> {
        let first = self.unary(params)?;
        if !self.cur.at_keyword("and") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.cur.eat_keyword("and") {
            parts.push(self.unary(params)?);
        }
        Ok(Expr::And(parts))
    }

    fn unary(&mut self, params: &[String]) -> Result<Expr, ParseError> {
        if self.cur.eat_keyword("not") {
            return Ok(Expr::not(self.unary(params)?));
        }
        self.relation(params)
    }

    fn relation(&mut self, params: &[String]) -> Result<Expr, ParseError> {
        let lhs = self.primary(params)?;
        let op = match self.cur.peek() {
            Tok::Punct("=") => Some(CompareOp::Eq),
            Tok::Punct("<>") | Tok::Punct("!=") => Some(CompareOp::Ne),
            Tok::Punct("<") => Some(CompareOp::Lt),
            Tok::Punct("<=") => Some(CompareOp::Le),
            Tok::Punct(">") => Some(CompareOp::Gt),
            Tok::Punct(">=") => Some(CompareOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.cur.bump();
            let rhs = self.primary(params)?;
            return Ok(Expr::compare(op, lhs, rhs));
        }
        if self.cur.eat_keyword("in") {
            let (set, span) = self.ident()?;
            if self.m.set(&set).is_none() {
                return Err(ParseError::resolution(span, format!("undeclared set `{set}`")));
            }
            return Ok(Expr::member_of(lhs, set));
        }
        Ok(lhs)
    }

    fn primary(&mut self, params: &[String]) -> Result<Expr, ParseError> {
        let span = self.cur.span();
        match self.cur.peek().clone() {
            Tok::Punct("(") => {
                self.cur.bump();
                let e = self.expr(params)?;
                self.cur.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(kw) if (kw == "and" || kw == "or") && matches!(self.cur.peek_at(1), Tok::Punct("(")) => {
                self.cur.bump();
                self.cur.bump();
                let mut parts = Vec::new();
                if !self.cur.at_punct(")") {
                    parts.push(self.expr(params)?);
                    while self.cur.eat_punct(",") {
                        parts.push(self.expr(params)?);
                    }
                }
                self.cur.expect_punct(")")?;
                Ok(if kw == "and" { Expr::And(parts) } else { Expr::Or(parts) })
            }
            Tok::Int(_) | Tok::Punct("-") => Ok(Expr::Lit(Value::Int(self.cur.expect_int()?.0))),
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.cur.bump();
                Ok(Expr::Lit(Value::Bool(s == "true")))
            }
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.cur.bump();
                if params.contains(&s) {
                    Ok(Expr::Param(s))
                } else if self.m.variable(&s).is_some() {
                    Ok(Expr::Var(s))
                } else if self.m.symbol_type(&s).is_some() {
                    Ok(Expr::Lit(Value::Sym(s)))
                } else if let Some(c) = self.m.consts.iter().find(|c| c.name == s) {
                    Ok(Expr::Lit(Value::Int(c.value)))
                } else {
                    Err(ParseError::resolution(span, format!("unknown name `{s}`")))
                }
            }
            other => Err(ParseError::syntax(span, format!("expected an expression, found {other}"))),
        }
    }
}

fn write_value(v: &Value) -> String {
    v.to_string()
}

fn write_operand(e: &Expr) -> String {
    if e.is_atom() || matches!(e, Expr::And(_) | Expr::Or(_)) {
        write_expr(e)
    } else {
        format!("({})", write_expr(e))
    }
}

/// Renders an expression so that parsing it back yields the identical tree.
pub fn write_expr(e: &Expr) -> String {
    match e {
        Expr::Lit(v) => write_value(v),
        Expr::Var(n) | Expr::Param(n) => n.clone(),
        Expr::Compare(op, l, r) => format!("{} {} {}", write_operand(l), op.symbol(), write_operand(r)),
        Expr::And(xs) | Expr::Or(xs) if xs.len() < 2 => {
            let kw = if matches!(e, Expr::And(_)) { "and" } else { "or" };
            format!("{kw}({})", xs.iter().map(write_expr).collect::<Vec<_>>().join(", "))
        }
        Expr::And(xs) | Expr::Or(xs) => {
            let kw = if matches!(e, Expr::And(_)) { " and " } else { " or " };
            let parts: Vec<String> = xs
                .iter()
                .map(|x| match x {
                    Expr::Not(_) | Expr::Compare(..) | Expr::MemberOf(..) => write_expr(x),
                    _ => write_operand(x),
                })
                .collect();
            format!("({})", parts.join(kw))
        }
        Expr::Not(x) => format!("not {}", write_operand(x)),
        Expr::MemberOf(x, set) => format!("{} in {set}", write_operand(x)),
    }
}

/// Serializes a model to the `.mdl` format; comments are not preserved.
pub fn write_model(m: &Efsm) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "system {};", m.name);
    for c in &m.consts {
        let _ = writeln!(s, "const {} = {};", c.name, c.value);
    }
    for t in &m.types {
        match &t.kind {
            TypeKind::Enum { symbols } => {
                let _ = writeln!(s, "type {} = enum {} endenum;", t.name, symbols.join(", "));
            }
            TypeKind::Range { lo, hi } => {
                let _ = writeln!(s, "type {} = range {lo} .. {hi};", t.name);
            }
        }
    }
    for set in &m.sets {
        let members: Vec<String> = set.members.iter().map(write_value).collect();
        let _ = writeln!(s, "set {} : {} = {{ {} }};", set.name, set.ty, members.join(", "));
    }
    for sig in &m.signals {
        let params: Vec<String> = sig.params.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect();
        let _ = writeln!(s, "signal {}({});", sig.name, params.join(", "));
    }
    let _ = writeln!(s, "\nprocess {}(1);", m.process);
    for v in &m.variables {
        let _ = writeln!(s, "  var {} : {} := {};", v.name, v.ty, write_value(&v.init));
    }
    for state in &m.states {
        let init = if *state == m.initial_state { " init" } else { "" };
        let _ = writeln!(s, "  state {state}{init};");
        for t in m.transitions.iter().filter(|t| &t.source == state) {
            let _ = writeln!(s, "    {}: input {}({})", t.id, t.input.signal, t.input.params.join(", "));
            if let Some(p) = &t.predicate {
                let _ = writeln!(s, "      provided {}", write_expr(p));
            }
            let args: Vec<String> = t.output.args.iter().map(write_expr).collect();
            let _ = writeln!(s, "      output {}({})", t.output.signal, args.join(", "));
            if !t.actions.is_empty() {
                let acts: Vec<String> = t
                    .actions
                    .iter()
                    .map(|a| format!("{} := {}", a.var, write_expr(&a.value)))
                    .collect();
                let _ = writeln!(s, "      do {}", acts.join(", "));
            }
            let _ = writeln!(s, "      nextstate {};", t.target);
        }
        let _ = writeln!(s, "  endstate;");
    }
    let _ = writeln!(s, "endprocess;\nendsystem;");
    s
}
