//! Test purposes, objective generation, Hit-or-Jump generation and the
//! brute-force oracle.

pub mod hoj;
pub mod objectives;
pub mod oracle;
pub mod purpose;
pub mod testcase;

pub use hoj::{hit_or_jump, ExhaustReason, GenError, GenParams, GenReport, Generated};
pub use objectives::{generate_objectives, ObjectiveError, Objectives};
pub use oracle::{brute_force_reachable, Reachability};
pub use purpose::{step_matches, ActionPattern, ProcessInstance, PurposeSequence, TestPurpose};
pub use testcase::{replay, HitMarker, ReplayError, TestCase, TestStep};
