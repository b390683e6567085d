//! Metric-distortion voting with thresholded and exact preference strengths.
//!
//! Voters and candidates live in a metric space ([`metric`]). For a pair of
//! candidates each voter reports which one it prefers and, coarsely or
//! exactly, how strongly ([`tally`]). Weighted majority rules turn those
//! reports into a pairwise winner ([`rules`]); with more candidates the
//! pairwise winners form a tournament whose Copeland winner is selected
//! ([`tournament`]). [`lab`] measures how far the winner's social cost is from
//! the best candidate and the best point of the space, and [`search`] holds
//! the seeded oracles and worst-case searches used to check the bounds.

pub mod error;
pub mod fmt;
pub mod lab;
pub mod metric;
pub mod rules;
pub mod search;
pub mod tally;
pub mod tournament;

pub use error::{Error, Result};
pub use lab::{
    actual_distortion, evaluate, generate_lower_bound, ideal_distortion, ideal_point, ideal_tradeoff_bound,
    lambda_check, rule3_counterexample, DistortionReport, Exactness, IdealPoint, LowerBoundKind,
};
pub use metric::{InstanceSpec, Location, MetricInstance, PointId, Side, SpaceKind, Strength};
pub use rules::{
    bound_value, condition1_holds, decide, rule1_decide, rule2_decide, rule3_decide, rule4_decide, rule4_delta,
    rule5_decide, CandidateCount, PairwiseDecision, RuleId,
};
pub use search::{adversarial_search, brute_force_best, optimize_thresholds, verify_suite, SearchConfig, Suite};
pub use tally::{exact_profile, pairwise_tally, Boundary, ExactProfile, PairwiseTally, ThresholdScheme};
pub use tournament::{majority_graph, TournamentGraph};
