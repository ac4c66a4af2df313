//! Line-oriented simulation loop: a choice number steps, `u` undoes, `r`
//! resets, `t` prints the trace as a test case, `q` quits.

use std::io::{self, BufRead, Write};

use secweave_core::simulator::Session;
use secweave_core::text::emit_testcase;

pub const PROMPT: &str = "choice ? ";

pub fn run(session: &mut Session, input: impl BufRead, out: &mut impl Write) -> io::Result<()> {
    out.write_all(session.render().as_bytes())?;
    write!(out, "{PROMPT}")?;
    out.flush()?;
    for line in input.lines() {
        let line = line?;
        let cmd = line.trim();
        match cmd {
            "q" | "quit" => return Ok(()),
            "" => {}
            "u" => match session.undo() {
                Ok(_) => out.write_all(session.render().as_bytes())?,
                Err(e) => writeln!(out, "{e}")?,
            },
            "r" => {
                session.reset();
                out.write_all(session.render().as_bytes())?;
            }
            "t" => out.write_all(emit_testcase(&session.trace_to_testcase()).as_bytes())?,
            _ => match cmd.parse::<usize>() {
                Ok(i) => match session.step(i) {
                    Ok(_) => out.write_all(session.render().as_bytes())?,
                    Err(e) => writeln!(out, "{e}")?,
                },
                Err(_) => writeln!(out, "expected a choice number, u, r, t or q")?,
            },
        }
        write!(out, "{PROMPT}")?;
        out.flush()?;
    }
    writeln!(out)?;
    Ok(())
}
