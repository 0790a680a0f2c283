//! Fuzzy inference and the fuzzy-logic map-matcher built on it.

pub mod config;
pub mod engine;
pub mod matcher;

pub use config::{default_rule_base, MatcherConfig, MatcherSettings, RuleBaseSpec};
pub use engine::{
    defuzzify_centroid, Aggregate, FuzzyVariable, MembershipFunction, Rule, RuleBase,
};
pub use matcher::{
    candidate_links, edge_sequence, match_trajectory, LinkCandidate, LinkState, MatchResult,
    MatchState, MatchedPoint, Matcher, Phase, TravelDirection,
};
