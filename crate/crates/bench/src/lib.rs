//! Fixtures shared by the pipeline benchmarks.

use secweave_core::corpus;
use secweave_core::efsm::Efsm;
use secweave_core::testgen::{GenParams, TestPurpose};
use secweave_core::testkit::{random_model_seeded, Shape};

/// The secured route-planning model and the full login scenario.
pub fn drp_scenario() -> (Efsm, Vec<TestPurpose>) {
    let (m, _) = corpus::drp_secured();
    (m, corpus::drp_purposes(corpus::DRP_RULE1_FULL))
}

/// Models small enough for exhaustive search, seeded `0..n`.
pub fn small_models(n: u64) -> Vec<Efsm> {
    (0..n).map(|s| random_model_seeded(s, Shape::SMALL)).collect()
}

pub fn wide_models(n: u64) -> Vec<Efsm> {
    (0..n).map(|s| random_model_seeded(s, Shape::WIDE)).collect()
}

pub fn params(depth: usize, seed: u64) -> GenParams {
    GenParams {
        depth_limit: depth,
        rng_seed: seed,
        ..GenParams::default()
    }
}
