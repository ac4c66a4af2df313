//! Bundled example models, policies and purposes.

use crate::efsm::Efsm;
use crate::policy::{parse_policy, Policy};
use crate::testgen::TestPurpose;
use crate::text::{parse_model_named, parse_purposes, parse_weave_config};
use crate::weaver::{weave, WeaveConfig, WeaveReport};

pub const DRP_INITIAL: &str = include_str!("../../../corpus/drp_initial.mdl");
pub const DRP_POLICY: &str = include_str!("../../../corpus/drp_policy.xml");
pub const DRP_WEAVE: &str = include_str!("../../../corpus/drp.weave");
pub const DRP_RULE1: &str = include_str!("../../../corpus/drp_rule1.purposes");
pub const DRP_RULE1_FULL: &str = include_str!("../../../corpus/drp_rule1_full.purposes");
pub const DRP_RULE3: &str = include_str!("../../../corpus/drp_rule3.purposes");
pub const V2I: &str = include_str!("../../../corpus/v2i.mdl");
pub const V2I_POLICY: &str = include_str!("../../../corpus/v2i_policy.xml");
pub const V2I_WEAVE: &str = include_str!("../../../corpus/v2i.weave");
pub const V2I_OBJECTIVES: &str = include_str!("../../../corpus/v2i_objectives.purposes");

/// Every bundled model source with its file name.
pub const MODELS: [(&str, &str); 2] = [("drp_initial.mdl", DRP_INITIAL), ("v2i.mdl", V2I)];

pub fn drp_initial() -> Efsm {
    parse_model_named(DRP_INITIAL, "drp_initial.mdl").expect("bundled model parses")
}

pub fn drp_policy() -> Policy {
    parse_policy(DRP_POLICY).expect("bundled policy parses")
}

pub fn drp_weave_config() -> WeaveConfig {
    parse_weave_config(DRP_WEAVE, &drp_initial()).expect("bundled weave config parses")
}

/// The DRP server with its three rules woven in.
pub fn drp_secured() -> (Efsm, WeaveReport) {
    weave(&drp_initial(), &drp_policy(), &drp_weave_config()).expect("bundled weave succeeds")
}

pub fn drp_purposes(text: &str) -> Vec<TestPurpose> {
    parse_purposes(text, &drp_secured().0).expect("bundled purposes parse")
}

pub fn v2i() -> Efsm {
    parse_model_named(V2I, "v2i.mdl").expect("bundled model parses")
}

pub fn v2i_policy() -> Policy {
    parse_policy(V2I_POLICY).expect("bundled policy parses")
}

pub fn v2i_weave_config() -> WeaveConfig {
    parse_weave_config(V2I_WEAVE, &v2i()).expect("bundled weave config parses")
}
