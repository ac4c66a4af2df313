//! Exhaustive bounded reachability, used to check Hit-or-Jump results.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::purpose::{step_matches, TestPurpose};
use crate::efsm::{successors, Configuration, Efsm, Step};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reachability {
    pub reachable: bool,
    /// Unexplored configurations remained at the bound, so a `false`
    /// answer may change with a larger bound.
    pub bound_limited: bool,
    /// A shortest run satisfying the sequence, when one exists.
    pub witness: Option<Vec<Step>>,
}

/// Breadth-first search over (configuration, purposes satisfied so far),
/// at most `bound` steps deep.
pub fn brute_force_reachable(m: &Efsm, seq: &[TestPurpose], bound: usize) -> Reachability {
    if seq.is_empty() {
        return Reachability {
            reachable: true,
            bound_limited: false,
            witness: Some(Vec::new()),
        };
    }
    type Key = (Configuration, usize);
    let start: Key = (Configuration::initial(m), 0);
    let mut nodes: Vec<(Key, Option<(usize, Step)>)> = vec![(start.clone(), None)];
    let mut seen: HashSet<Key> = HashSet::from([start]);
    let mut level = vec![0usize];
    let path = |nodes: &Vec<(Key, Option<(usize, Step)>)>, mut i: usize| {
        let mut out = Vec::new();
        while let Some((p, s)) = &nodes[i].1 {
            out.push(s.clone());
            i = *p;
        }
        out.reverse();
        out
    };
    for _ in 0..bound {
        let mut next = Vec::new();
        for &i in &level {
            let ((cfg, k), _) = &nodes[i];
            let (cfg, k) = (cfg.clone(), *k);
            for step in successors(m, &cfg) {
                let k2 = k + usize::from(step_matches(&step, &m.process, &seq[k]));
                if k2 == seq.len() {
                    let mut w = path(&nodes, i);
                    w.push(step);
                    return Reachability {
                        reachable: true,
                        bound_limited: false,
                        witness: Some(w),
                    };
                }
                let key = (step.post.clone(), k2);
                if seen.insert(key.clone()) {
                    nodes.push((key, Some((i, step))));
                    next.push(nodes.len() - 1);
                }
            }
        }
        if next.is_empty() {
            return Reachability {
                reachable: false,
                bound_limited: false,
                witness: None,
            };
        }
        level = next;
    }
    Reachability {
        reachable: false,
        bound_limited: true,
        witness: None,
    }
}
