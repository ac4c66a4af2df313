//! Subcommand bodies. Each writes its normal output to `out` and reports
//! failure as a [`Failure`] carrying the process exit code.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use secweave_core::efsm::{model_stats, validate_model, Efsm};
use secweave_core::policy::{parse_policy, Policy};
use secweave_core::testgen::{generate_objectives, hit_or_jump, GenError, GenParams, ObjectiveError, TestPurpose};
use secweave_core::text::{
    emit_testcase, parse_model_named, parse_model_unchecked, parse_purposes, parse_weave_config,
    serialize_model, write_purposes,
};
use secweave_core::weaver::{weave, WeaveConfig};

/// The model was rejected: validation diagnostics, or an objective sweep hit
/// a nondeterministic choice.
pub const EXIT_REJECTED: u8 = 1;
/// A file could not be read, parsed or resolved.
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_WEAVE: u8 = 3;
/// Test generation gave up; the partial test case is still written.
pub const EXIT_EXHAUSTED: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(EXIT_INPUT, format!("i/o error: {e}"))
    }
}

pub fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot write {}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<Efsm, Failure> {
    let text = read(path)?;
    parse_model_named(&text, &path.display().to_string()).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))
}

pub fn load_policy(path: &Path) -> Result<Policy, Failure> {
    parse_policy(&read(path)?).map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

pub fn load_weave_config(path: &Path, m: &Efsm) -> Result<WeaveConfig, Failure> {
    parse_weave_config(&read(path)?, m).map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

pub fn load_purposes(path: &Path, m: &Efsm) -> Result<Vec<TestPurpose>, Failure> {
    parse_purposes(&read(path)?, m).map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

/// Prints every diagnostic; succeeds only for a clean model.
pub fn validate(model: &Path, out: &mut impl Write) -> Result<(), Failure> {
    let text = read(model)?;
    let m = parse_model_unchecked(&text, &model.display().to_string())
        .map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    let diags = validate_model(&m);
    for d in &diags {
        writeln!(out, "{}: {d}", model.display())?;
    }
    if !diags.is_empty() {
        return Err(Failure::new(
            EXIT_REJECTED,
            format!("{} diagnostic(s) in {}", diags.len(), model.display()),
        ));
    }
    let s = model_stats(&m);
    writeln!(
        out,
        "{}: ok ({} states, {} transitions, {} signals)",
        model.display(),
        s.states,
        s.transitions,
        s.signals
    )?;
    Ok(())
}

pub fn weave_files(
    model: &Path,
    policy: &Path,
    config: Option<&Path>,
    dest: &Path,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let m = load_model(model)?;
    let p = load_policy(policy)?;
    let cfg = match config {
        Some(c) => load_weave_config(c, &m)?,
        None => WeaveConfig::default(),
    };
    let (woven, report) = weave(&m, &p, &cfg).map_err(|e| Failure::new(EXIT_WEAVE, format!("weave failed: {e}")))?;
    write_file(dest, &serialize_model(&woven))?;
    out.write_all(report.render().as_bytes())?;
    writeln!(out, "wrote {}", dest.display())?;
    Ok(())
}

pub fn objectives(
    model: &Path,
    state: &str,
    input: &str,
    param: &str,
    dest: Option<&Path>,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let m = load_model(model)?;
    let o = generate_objectives(&m, state, input, param).map_err(|e| {
        let code = match e {
            ObjectiveError::NondeterministicAt { .. } => EXIT_REJECTED,
            _ => EXIT_INPUT,
        };
        Failure::new(code, e.to_string())
    })?;
    for w in &o.warnings {
        writeln!(out, "warning: {w}")?;
    }
    let text = write_purposes(&o.purposes);
    match dest {
        Some(d) => {
            write_file(d, &text)?;
            writeln!(out, "{} objective(s) written to {}", o.purposes.len(), d.display())?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn testgen(
    model: &Path,
    purposes: &Path,
    gp: &GenParams,
    dest: Option<&Path>,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let m = load_model(model)?;
    let seq = load_purposes(purposes, &m)?;
    let emit = |text: &str, out: &mut dyn Write| -> Result<(), Failure> {
        match dest {
            Some(d) => write_file(d, text),
            None => Ok(out.write_all(text.as_bytes())?),
        }
    };
    match hit_or_jump(&m, &seq, gp) {
        Ok(g) => {
            emit(&emit_testcase(&g.testcase), out)?;
            let r = &g.report;
            writeln!(
                out,
                "hits: {}  jumps: {}  explored: {}  steps: {}",
                r.hits, r.jumps, r.explored, r.steps
            )?;
            Ok(())
        }
        Err(e) => {
            let code = match e {
                GenError::Exhausted { .. } | GenError::DeadlockedCursor { .. } => EXIT_EXHAUSTED,
                _ => EXIT_INPUT,
            };
            if let Some(partial) = e.partial() {
                emit(&emit_testcase(partial), out)?;
            }
            Err(Failure::new(code, e.to_string()))
        }
    }
}
