//! Exhaustive solvers for small assistance games.
//!
//! Deterministic policies are enumerated on one side only; the other side answers with a
//! backward pass over its information-set tree. Actions that no later step can tell apart
//! are merged first, which keeps the built-in examples enumerable.

mod boltzmann;
mod channel;
mod checks;
mod classes;
mod engine;
mod naive;
mod policy_level;
mod solve;
mod tree;
mod virtual_policy;

use poag_game::{History, Player};

pub use boltzmann::boltzmann_response;
pub use channel::{add_channel, add_channel_with_layout, effective_obs, ChannelLayout, Direction, MessageSet};
pub use checks::{
    check_channel_clean, check_clean_optimum, check_honest_naive, check_policy_level_clean, full_information_value,
    Verdict,
};
pub use classes::{step_classes, Reduction, StepClasses};
pub use naive::{acts_naively, naive_violation, observes_naively};
pub use policy_level::{interferes_at_any_step, policy_interferes_policy_level};
pub use solve::{
    best_response, best_response_restricted, for_each_best_response, for_each_optimal_pair, optimal_pairs,
    optimal_pairs_restricted, optimal_value, optimal_value_restricted, policy_counts, ActionFilter, PairFlags,
    PairSearch, Restriction, SolveOptions, SolveReport, SolvedPair, DEFAULT_BUDGET,
};
pub use virtual_policy::{flatten_virtual_policy, VirtualStatePolicy};

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("{what} needs {needed} policies or nodes, above the budget of {budget}")]
    BudgetExceeded { what: &'static str, needed: u128, budget: u128 },
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("policy has no distribution at reachable history {0:?}")]
    UndefinedHistory(History),
    #[error("policy has {got} actions, game has {expected}")]
    WrongActionCount { expected: usize, got: usize },
    #[error("expected a {expected:?} policy")]
    WrongPlayer { expected: Player },
    #[error("{0}")]
    InvalidArgument(String),
}
