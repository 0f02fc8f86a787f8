//! Machine-readable documents written with `--out`.

use std::collections::BTreeMap;

use poag_game::spec::{HistorySpec, PolicySpec};
use poag_game::Player;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
pub struct PairDoc {
    pub value: f64,
    pub action_level: bool,
    pub policy_level: Option<bool>,
    pub acts_naively: bool,
    pub observes_naively: Option<bool>,
    pub human: PolicySpec,
    pub assistant: PolicySpec,
}

#[derive(Serialize, Deserialize)]
pub struct SolveDoc {
    pub value: f64,
    pub enumerated: Player,
    /// Decimal string, since counts can exceed 64 bits.
    pub n_policies: String,
    pub truncated: bool,
    pub pairs: Vec<PairDoc>,
}

#[derive(Serialize, Deserialize)]
pub struct FlaggedDoc {
    /// (interfering action, witness)
    pub flagged: Vec<(String, String)>,
    pub policy_action_level: Option<HistorySpec>,
    pub policy_level: Option<bool>,
}

#[derive(Serialize, Deserialize)]
pub struct BeliefDoc {
    pub states: BTreeMap<String, f64>,
    pub thetas: BTreeMap<String, f64>,
    pub entropy: f64,
}

#[derive(Serialize, Deserialize)]
pub struct CurveRow {
    pub beta: f64,
    pub eu_with: f64,
    pub eu_without: f64,
}
