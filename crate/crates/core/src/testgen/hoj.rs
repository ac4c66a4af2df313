//! Hit-or-Jump: bounded breadth-first search for the current purpose from a
//! cursor; on a miss, relocate the cursor to a random deepest frontier leaf.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::purpose::{step_matches, TestPurpose};
use super::testcase::{HitMarker, TestCase, TestStep};
use crate::efsm::{successors, Configuration, Efsm, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub depth_limit: usize,
    pub max_jumps: usize,
    pub rng_seed: u64,
    pub max_total_steps: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            depth_limit: 10,
            max_jumps: 100,
            rng_seed: 0,
            max_total_steps: 10_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenReport {
    pub hits: usize,
    pub jumps: usize,
    /// Configurations visited, summed over all searches.
    pub explored: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generated {
    pub testcase: TestCase,
    pub report: GenReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustReason {
    MaxJumps,
    MaxTotalSteps,
    /// The search saw every configuration reachable from the cursor.
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("no purpose given")]
    EmptySequence,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("generation exhausted ({reason:?}) while seeking purpose {purpose}")]
    Exhausted {
        reason: ExhaustReason,
        purpose: String,
        partial: TestCase,
        report: GenReport,
    },
    #[error("no transition leaves state `{state}` while seeking purpose {purpose}")]
    DeadlockedCursor {
        state: String,
        purpose: String,
        partial: TestCase,
        report: GenReport,
    },
}

impl GenError {
    /// Steps produced before failing, if any.
    pub fn partial(&self) -> Option<&TestCase> {
        match self {
            GenError::Exhausted { partial, .. } | GenError::DeadlockedCursor { partial, .. } => {
                Some(partial)
            }
            _ => None,
        }
    }
}

struct Node {
    cfg: Configuration,
    parent: Option<(usize, Step)>,
}

enum Outcome {
    Hit(Vec<Step>),
    /// Deepest non-empty level; level 0 is the cursor alone.
    Miss {
        leaves: Vec<usize>,
        depth: usize,
        complete: bool,
    },
}

struct Search {
    nodes: Vec<Node>,
}

impl Search {
    fn path(&self, mut i: usize) -> Vec<Step> {
        let mut out = Vec::new();
        while let Some((p, step)) = &self.nodes[i].parent {
            out.push(step.clone());
            i = *p;
        }
        out.reverse();
        out
    }

    fn run(m: &Efsm, cursor: &Configuration, purpose: &TestPurpose, depth_limit: usize) -> (Search, Outcome) {
        let mut s = Search {
            nodes: vec![Node {
                cfg: cursor.clone(),
                parent: None,
            }],
        };
        let mut seen: HashSet<Configuration> = HashSet::from([cursor.clone()]);
        let mut level = vec![0usize];
        let mut depth = 0;
        while depth < depth_limit {
            let mut next = Vec::new();
            for &i in &level {
                for step in successors(m, &s.nodes[i].cfg) {
                    if step_matches(&step, &m.process, purpose) {
                        let mut path = s.path(i);
                        path.push(step);
                        return (s, Outcome::Hit(path));
                    }
                    if seen.insert(step.post.clone()) {
                        s.nodes.push(Node {
                            cfg: step.post.clone(),
                            parent: Some((i, step)),
                        });
                        next.push(s.nodes.len() - 1);
                    }
                }
            }
            if next.is_empty() {
                return (
                    s,
                    Outcome::Miss {
                        leaves: level,
                        depth,
                        complete: true,
                    },
                );
            }
            level = next;
            depth += 1;
        }
        (
            s,
            Outcome::Miss {
                leaves: level,
                depth,
                complete: false,
            },
        )
    }
}

/// Generates a test case hitting every purpose of `seq` in order.
#[allow(clippy::result_large_err)]
pub fn hit_or_jump(m: &Efsm, seq: &[TestPurpose], gp: &GenParams) -> Result<Generated, GenError> {
    if seq.is_empty() {
        return Err(GenError::EmptySequence);
    }
    if gp.depth_limit == 0 {
        return Err(GenError::InvalidParams("depth_limit must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(gp.rng_seed);
    let mut tc = TestCase::default();
    let mut report = GenReport::default();
    let mut cursor = Configuration::initial(m);
    let mut k = 0;
    while k < seq.len() {
        let purpose = &seq[k];
        let (search, outcome) = Search::run(m, &cursor, purpose, gp.depth_limit);
        report.explored += search.nodes.len();
        let exhausted = |reason, tc: TestCase, report: GenReport| GenError::Exhausted {
            reason,
            purpose: purpose.name.clone(),
            partial: tc,
            report,
        };
        let path = match outcome {
            Outcome::Hit(path) => path,
            Outcome::Miss { depth: 0, complete, .. } => {
                if successors(m, &cursor).is_empty() {
                    return Err(GenError::DeadlockedCursor {
                        state: cursor.state.clone(),
                        purpose: purpose.name.clone(),
                        partial: tc,
                        report,
                    });
                }
                debug_assert!(complete);
                return Err(exhausted(ExhaustReason::Unreachable, tc, report));
            }
            Outcome::Miss {
                complete: true, ..
            } => return Err(exhausted(ExhaustReason::Unreachable, tc, report)),
            Outcome::Miss { leaves, .. } => {
                if report.jumps >= gp.max_jumps {
                    return Err(exhausted(ExhaustReason::MaxJumps, tc, report));
                }
                let pick = leaves[rng.random_range(0..leaves.len())];
                report.jumps += 1;
                let path = search.path(pick);
                if tc.steps.len() + path.len() > gp.max_total_steps {
                    return Err(exhausted(ExhaustReason::MaxTotalSteps, tc, report));
                }
                tc.steps.extend(path.iter().map(TestStep::from));
                report.steps = tc.steps.len();
                cursor = search.nodes[pick].cfg.clone();
                continue;
            }
        };
        if tc.steps.len() + path.len() > gp.max_total_steps {
            return Err(exhausted(ExhaustReason::MaxTotalSteps, tc, report));
        }
        cursor = path.last().unwrap().post.clone();
        tc.steps.extend(path.iter().map(TestStep::from));
        tc.hits.push(HitMarker {
            purpose: k,
            step: tc.steps.len() - 1,
        });
        report.hits += 1;
        report.steps = tc.steps.len();
        k += 1;
    }
    Ok(Generated {
        testcase: tc,
        report,
    })
}
