//! The `.purposes` format. Each block is one purpose; its conditions are
//! numbered after the kind of thing they constrain:
//!
//! ```text
//! purpose obj1
//!   cond1 = process: instance = {vehicle}0
//!   cond2 = state: source: wait_certificate
//!   cond3 = state: destination: wait_info
//!   cond4 = action: input response(certificate01)
//!   cond5 = action: output require_info_login
//! end
//! ```
//!
//! An action without parentheses matches any arguments.

use super::lexer::{tokenize, Cursor, SourceSpan, Tok};
use super::ParseError;
use crate::efsm::{Efsm, Value};
use crate::testgen::{ActionPattern, ProcessInstance, TestPurpose};

pub fn parse_purposes(text: &str, m: &Efsm) -> Result<Vec<TestPurpose>, ParseError> {
    let mut cur = Cursor::new(tokenize(text, "<purposes>")?);
    let mut out = Vec::new();
    while !cur.at_eof() {
        cur.expect_keyword("purpose")?;
        let (name, span) = cur.expect_ident(&[])?;
        let mut p = TestPurpose::named(name);
        while !cur.eat_keyword("end") {
            condition(&mut cur, m, &mut p)?;
        }
        if p.condition_count() == 0 {
            return Err(ParseError::syntax(span, format!("purpose `{}` has no condition", p.name)));
        }
        out.push(p);
    }
    Ok(out)
}

fn condition(cur: &mut Cursor, m: &Efsm, p: &mut TestPurpose) -> Result<(), ParseError> {
    let (label, label_span) = cur.expect_ident(&["end"])?;
    cur.expect_punct("=")?;
    let slot = match label.as_str() {
        "cond1" => {
            cur.expect_keyword("process")?;
            cur.expect_punct(":")?;
            cur.expect_keyword("instance")?;
            cur.expect_punct("=")?;
            cur.expect_punct("{")?;
            let (process, span) = cur.expect_ident(&[])?;
            cur.expect_punct("}")?;
            let (index, ispan) = cur.expect_int()?;
            if process != m.process {
                return Err(ParseError::resolution(span, format!("unknown process `{process}`")));
            }
            if index != 0 {
                return Err(ParseError::resolution(ispan, format!("no instance {index} of `{process}`")));
            }
            p.instance.replace(ProcessInstance { process, index: 0 }).is_some()
        }
        "cond2" | "cond3" => {
            cur.expect_keyword("state")?;
            cur.expect_punct(":")?;
            let which = if label == "cond2" { "source" } else { "destination" };
            cur.expect_keyword(which)?;
            cur.expect_punct(":")?;
            let (state, span) = cur.expect_ident(&[])?;
            if !m.has_state(&state) {
                return Err(ParseError::resolution(span, format!("unknown state `{state}`")));
            }
            let slot = if label == "cond2" { &mut p.source } else { &mut p.destination };
            slot.replace(state).is_some()
        }
        "cond4" | "cond5" => {
            cur.expect_keyword("action")?;
            cur.expect_punct(":")?;
            let which = if label == "cond4" { "input" } else { "output" };
            cur.expect_keyword(which)?;
            let pattern = action(cur, m)?;
            let slot = if label == "cond4" { &mut p.input } else { &mut p.output };
            slot.replace(pattern).is_some()
        }
        other => {
            return Err(ParseError::syntax(
                label_span,
                format!("expected cond1..cond5, found `{other}`"),
            ))
        }
    };
    if slot {
        return Err(ParseError::syntax(label_span, format!("`{label}` given twice")));
    }
    Ok(())
}

fn action(cur: &mut Cursor, m: &Efsm) -> Result<ActionPattern, ParseError> {
    let (signal, span) = cur.expect_ident(&[])?;
    let Some(decl) = m.signal(&signal) else {
        return Err(ParseError::resolution(span, format!("unknown signal `{signal}`")));
    };
    if !cur.eat_punct("(") {
        return Ok(ActionPattern::any(signal));
    }
    let mut args = Vec::new();
    if !cur.at_punct(")") {
        loop {
            args.push(value(cur)?);
            if !cur.eat_punct(",") {
                break;
            }
        }
    }
    cur.expect_punct(")")?;
    if args.len() != decl.params.len() {
        return Err(ParseError::resolution(
            span,
            format!("`{signal}` takes {} argument(s), {} given", decl.params.len(), args.len()),
        ));
    }
    for ((v, vspan), p) in args.iter().zip(&decl.params) {
        if !m.type_contains(&p.ty, v) {
            return Err(ParseError::resolution(
                vspan.clone(),
                format!("`{v}` is not a value of `{}`", p.ty),
            ));
        }
    }
    Ok(ActionPattern::exact(signal, args.into_iter().map(|(v, _)| v)))
}

fn value(cur: &mut Cursor) -> Result<(Value, SourceSpan), ParseError> {
    let span = cur.span();
    match cur.peek().clone() {
        Tok::Ident(s) => {
            cur.bump();
            let v = match s.as_str() {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                _ => Value::Sym(s),
            };
            Ok((v, span))
        }
        _ => Ok((Value::Int(cur.expect_int()?.0), span)),
    }
}

pub fn write_purposes(purposes: &[TestPurpose]) -> String {
    let mut s = String::new();
    for (i, p) in purposes.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        s.push_str(&format!("purpose {}\n", p.name));
        if let Some(inst) = &p.instance {
            s.push_str(&format!("  cond1 = process: instance = {inst}\n"));
        }
        if let Some(src) = &p.source {
            s.push_str(&format!("  cond2 = state: source: {src}\n"));
        }
        if let Some(dst) = &p.destination {
            s.push_str(&format!("  cond3 = state: destination: {dst}\n"));
        }
        if let Some(a) = &p.input {
            s.push_str(&format!("  cond4 = action: input {a}\n"));
        }
        if let Some(a) = &p.output {
            s.push_str(&format!("  cond5 = action: output {a}\n"));
        }
        s.push_str("end\n");
    }
    s
}
