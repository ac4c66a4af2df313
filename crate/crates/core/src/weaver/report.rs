use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::efsm::{Expr, ModelStats};
use crate::text::write_expr;

/// What weaving did to one transition of the input model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub transition: String,
    pub signal: String,
    pub rule_ids: Vec<String>,
    /// `⋁ permits`, when some permit rule applies.
    pub permission: Option<Expr>,
    /// `⋀ ¬deny`, when some deny rule applies.
    pub prohibition: Option<Expr>,
    pub before: Option<Expr>,
    pub after: Option<Expr>,
    /// The woven predicate is unsatisfiable.
    pub dead: bool,
}

impl TransitionEntry {
    pub fn strengthened(&self) -> bool {
        self.permission.is_some() || self.prohibition.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesizedTransition {
    pub id: String,
    /// Transition whose refused branch this one makes visible.
    pub observes: String,
    pub source: String,
    pub target: String,
    pub input: String,
    pub output: String,
    pub predicate: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeaveReport {
    pub policy: String,
    pub entries: Vec<TransitionEntry>,
    pub synthesized: Vec<SynthesizedTransition>,
    pub before: ModelStats,
    pub after: ModelStats,
    pub warnings: Vec<String>,
}

fn show(e: &Option<Expr>) -> String {
    e.as_ref().map(write_expr).unwrap_or_else(|| "true".into())
}

impl WeaveReport {
    pub fn new(policy: &str, before: ModelStats) -> Self {
        WeaveReport {
            policy: policy.to_string(),
            entries: Vec::new(),
            synthesized: Vec::new(),
            before,
            after: before,
            warnings: Vec::new(),
        }
    }

    pub fn entry(&self, transition: &str) -> Option<&TransitionEntry> {
        self.entries.iter().find(|e| e.transition == transition)
    }

    /// Human-readable report: stats table, then per-transition details.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "policy {}", self.policy);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<10} {:>6} {:>11} {:>7}", "model", "states", "transitions", "signals");
        for (label, st) in [("initial", self.before), ("secured", self.after)] {
            let _ = writeln!(
                s,
                "{:<10} {:>6} {:>11} {:>7}",
                label, st.states, st.transitions, st.signals
            );
        }
        let _ = writeln!(s, "{} → {}", self.before, self.after);
        for e in self.entries.iter().filter(|e| !e.rule_ids.is_empty()) {
            let _ = writeln!(s);
            let _ = writeln!(s, "{} ({}): rules {}", e.transition, e.signal, e.rule_ids.join(", "));
            if let Some(p) = &e.permission {
                let _ = writeln!(s, "  permission:  {}", write_expr(p));
            }
            if let Some(p) = &e.prohibition {
                let _ = writeln!(s, "  prohibition: {}", write_expr(p));
            }
            let _ = writeln!(s, "  before:      {}", show(&e.before));
            let _ = writeln!(s, "  after:       {}", show(&e.after));
        }
        if !self.synthesized.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(s, "observation transitions:");
            for t in &self.synthesized {
                let _ = writeln!(
                    s,
                    "  {}: {} -> {} on {} / {} (refusals of {})",
                    t.id, t.source, t.target, t.input, t.output, t.observes
                );
            }
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(s);
            for w in &self.warnings {
                let _ = writeln!(s, "warning: {w}");
            }
        }
        s
    }
}
