//! The `.tc` test-case format: one `?in{args} !out{args}` line per step,
//! optionally preceded by `//` comment lines.

use super::lexer::SourceSpan;
use super::ParseError;
use crate::efsm::{Instance, Value};
use crate::testgen::{TestCase, TestStep};

pub fn emit_testcase(tc: &TestCase) -> String {
    let mut out = String::new();
    for (i, step) in tc.steps.iter().enumerate() {
        if i > 0 && !step.comments.is_empty() {
            out.push('\n');
        }
        for c in &step.comments {
            out.push_str("//");
            out.push_str(c);
            out.push('\n');
        }
        out.push('?');
        out.push_str(&step.input.braced());
        out.push_str(" !");
        out.push_str(&step.output.braced());
        out.push('\n');
    }
    out
}

fn parse_value(s: &str) -> Value {
    match s {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => s.parse::<i64>().map(Value::Int).unwrap_or_else(|_| Value::sym(s)),
    }
}

fn parse_instance(s: &str, span: &SourceSpan) -> Result<Instance, ParseError> {
    let (name, rest) = s
        .split_once('{')
        .ok_or_else(|| ParseError::syntax(span.clone(), format!("expected `{{` in `{s}`")))?;
    let body = rest
        .strip_suffix('}')
        .ok_or_else(|| ParseError::syntax(span.clone(), format!("expected `}}` closing `{s}`")))?;
    if name.is_empty() {
        return Err(ParseError::syntax(span.clone(), "missing signal name"));
    }
    let args = if body.trim().is_empty() {
        Vec::new()
    } else {
        body.split(',').map(|a| parse_value(a.trim())).collect()
    };
    Ok(Instance::new(name, args))
}

/// Reads a `.tc` file back into steps; comments attach to the following step.
pub fn parse_testcase(text: &str) -> Result<TestCase, ParseError> {
    let mut tc = TestCase::default();
    let mut pending = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let span = SourceSpan::new("<testcase>", n + 1, raw.len() - raw.trim_start().len() + 1);
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix("//") {
            pending.push(c.to_string());
            continue;
        }
        let (inp, out) = line
            .split_once(' ')
            .ok_or_else(|| ParseError::syntax(span.clone(), "expected `?input !output`"))?;
        let inp = inp
            .strip_prefix('?')
            .ok_or_else(|| ParseError::syntax(span.clone(), "input must start with `?`"))?;
        let out = out
            .trim()
            .strip_prefix('!')
            .ok_or_else(|| ParseError::syntax(span.clone(), "output must start with `!`"))?;
        tc.steps.push(TestStep {
            comments: std::mem::take(&mut pending),
            transition: None,
            input: parse_instance(inp, &span)?,
            output: parse_instance(out, &span)?,
        });
    }
    Ok(tc)
}
