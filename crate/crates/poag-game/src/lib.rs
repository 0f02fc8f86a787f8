//! Finite partially observable assistance games (POAGs).
//!
//! A POAG is a two-player common-payoff game between a human `H` and an assistant `A`.
//! Only `H` observes the reward parameter theta. This crate holds the data model,
//! validation, exact evaluation of policy pairs, seeded trajectory sampling, and the
//! JSON formats used by the command-line tool.

pub mod eval;
pub mod game;
pub mod par;
pub mod policy;
pub mod random;
pub mod spec;

pub use eval::{evaluate_pair, sample_trajectory, EvalError, HistoryArena, Trajectory, TrajectoryStep};
pub use game::{Player, Poag, PrivateInfo, Violation, PROB_TOL};
pub use par::Exec;
pub use policy::{point_mass, History, Policy, Step};
pub use random::{all_histories, random_game, random_policy, relabel_states, RandomGameSpec};
