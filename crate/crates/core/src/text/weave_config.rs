//! The `.weave` format:
//!
//! ```text
//! emit_observations = true
//! observe ask_access -> access_denied stay
//! observe ask_for_route -> need_premium_class S2
//! ```
//!
//! A deny output that the model does not declare yet is added (with no
//! parameters) when observations are synthesized.

use super::lexer::{tokenize, Cursor, Tok};
use super::ParseError;
use crate::efsm::Efsm;
use crate::weaver::{DenyTarget, Observation, WeaveConfig};

pub fn parse_weave_config(text: &str, m: &Efsm) -> Result<WeaveConfig, ParseError> {
    let mut cur = Cursor::new(tokenize(text, "<weave>")?);
    let mut cfg = WeaveConfig::default();
    while !cur.at_eof() {
        if cur.eat_keyword("emit_observations") {
            cur.expect_punct("=")?;
            let span = cur.span();
            cfg.emit_observations = match cur.peek() {
                Tok::Ident(s) if s == "true" => true,
                Tok::Ident(s) if s == "false" => false,
                _ => return Err(ParseError::syntax(span, "expected `true` or `false`")),
            };
            cur.bump();
        } else if cur.eat_keyword("observe") {
            let (input, ispan) = cur.expect_ident(&[])?;
            if m.signal(&input).is_none() {
                return Err(ParseError::resolution(ispan, format!("undeclared signal `{input}`")));
            }
            if cfg.observation(&input).is_some() {
                return Err(ParseError::syntax(ispan, format!("`{input}` observed twice")));
            }
            cur.expect_punct("->")?;
            let (deny_output, ospan) = cur.expect_ident(&[])?;
            if m.signal(&deny_output).is_some_and(|s| !s.params.is_empty()) {
                return Err(ParseError::resolution(
                    ospan,
                    format!("deny output `{deny_output}` must take no parameters"),
                ));
            }
            let (target, tspan) = cur.expect_ident(&[])?;
            let target = if target == "stay" {
                DenyTarget::Stay
            } else if m.has_state(&target) {
                DenyTarget::State(target)
            } else {
                return Err(ParseError::resolution(tspan, format!("undeclared state `{target}`")));
            };
            cfg.observations.push(Observation {
                input,
                deny_output,
                target,
            });
        } else {
            return Err(ParseError::syntax(
                cur.span(),
                format!("expected `emit_observations` or `observe`, found {}", cur.peek()),
            ));
        }
        cur.eat_punct(";");
    }
    Ok(cfg)
}

pub fn write_weave_config(cfg: &WeaveConfig) -> String {
    let mut s = format!("emit_observations = {}\n", cfg.emit_observations);
    for o in &cfg.observations {
        let target = match &o.target {
            DenyTarget::Stay => "stay",
            DenyTarget::State(s) => s.as_str(),
        };
        s.push_str(&format!("observe {} -> {} {target}\n", o.input, o.deny_output));
    }
    s
}
