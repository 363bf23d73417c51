//! Game rules: seats, word groups, role assignment, vote tallying, outcomes
//! and the civilian win/miss metrics. Pure and deterministic.

mod metrics;
mod types;
mod vote;

pub use metrics::{compute_cmr, compute_cwr, MetricsReport, Ratio, ScoredGame};
pub use types::{
    assign_roles, Ablation, Description, GameConfig, Judgment, Phase, PlayerId, RoleAssignment, WordGroup, NUM_PLAYERS,
};
pub use vote::{determine_outcome, tally_votes, GameOutcome, OutcomeKind, Tallies, VoteMatrix};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("player index {0} is outside 1..=4")]
    PlayerOutOfRange(i64),
    #[error("invalid word group `{id}`: {reason}")]
    InvalidWordGroup { id: String, reason: String },
    #[error("invalid vote matrix: {0}")]
    InvalidVoteMatrix(String),
    #[error("invalid game config: {0}")]
    InvalidConfig(String),
    #[error("{0} needs at least one game")]
    EmptyInput(&'static str),
}
