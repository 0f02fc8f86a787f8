//! JSON documents for games, policies and histories. Entities are referenced by name.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Player, Poag};
use crate::policy::{History, Policy};

type Dist = BTreeMap<String, f64>;
type ByJoint<T> = BTreeMap<String, BTreeMap<String, BTreeMap<String, T>>>;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("unknown {kind} id {id:?}")]
    UnknownId { kind: &'static str, id: String },
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}

/// On-disk form of a [`Poag`]. Missing probability and reward entries mean 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameSpec {
    pub states: Vec<String>,
    pub human_actions: Vec<String>,
    pub assistant_actions: Vec<String>,
    pub thetas: Vec<String>,
    pub transition: ByJoint<Dist>,
    #[serde(default)]
    pub reward: ByJoint<Dist>,
    pub human_obs: Vec<String>,
    pub assistant_obs: Vec<String>,
    pub obs_kernel: ByJoint<BTreeMap<String, Dist>>,
    pub initial: BTreeMap<String, Dist>,
    pub gamma: f64,
    pub horizon: usize,
}

struct Ids(HashMap<String, usize>, &'static str);

impl Ids {
    fn new(names: &[String], kind: &'static str) -> Ids {
        Ids(names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect(), kind)
    }
    fn get(&self, id: &str) -> Result<usize, SpecError> {
        self.0
            .get(id)
            .copied()
            .ok_or_else(|| SpecError::UnknownId { kind: self.1, id: id.to_string() })
    }
}

impl GameSpec {
    /// Resolves names into a [`Poag`]. Probabilities are not checked here; use [`Poag::validate`].
    pub fn to_game(&self) -> Result<Poag, SpecError> {
        let mut g = Poag::new(
            self.states.clone(),
            self.human_actions.clone(),
            self.assistant_actions.clone(),
            self.thetas.clone(),
            self.human_obs.clone(),
            self.assistant_obs.clone(),
            self.gamma,
            self.horizon,
        );
        let s_ids = Ids::new(&self.states, "state");
        let h_ids = Ids::new(&self.human_actions, "human action");
        let a_ids = Ids::new(&self.assistant_actions, "assistant action");
        let t_ids = Ids::new(&self.thetas, "theta");
        let oh_ids = Ids::new(&self.human_obs, "human observation");
        let oa_ids = Ids::new(&self.assistant_obs, "assistant observation");

        for (s, by_h) in &self.transition {
            for (ah, by_a) in by_h {
                for (aa, dist) in by_a {
                    let row = dist
                        .iter()
                        .map(|(s2, &p)| Ok((s_ids.get(s2)?, p)))
                        .collect::<Result<Vec<_>, SpecError>>()?;
                    g.set_transition(s_ids.get(s)?, h_ids.get(ah)?, a_ids.get(aa)?, row);
                }
            }
        }
        for (s, by_h) in &self.reward {
            for (ah, by_a) in by_h {
                for (aa, by_t) in by_a {
                    for (th, &r) in by_t {
                        g.set_reward(s_ids.get(s)?, h_ids.get(ah)?, a_ids.get(aa)?, t_ids.get(th)?, r);
                    }
                }
            }
        }
        for (s, by_h) in &self.obs_kernel {
            for (ah, by_a) in by_h {
                for (aa, joint) in by_a {
                    let mut row = Vec::new();
                    for (oh, by_oa) in joint {
                        for (oa, &p) in by_oa {
                            row.push((oh_ids.get(oh)?, oa_ids.get(oa)?, p));
                        }
                    }
                    g.set_obs(s_ids.get(s)?, h_ids.get(ah)?, a_ids.get(aa)?, row);
                }
            }
        }
        for (s, by_t) in &self.initial {
            for (th, &p) in by_t {
                if p != 0.0 {
                    g.initial.push((s_ids.get(s)?, t_ids.get(th)?, p));
                }
            }
        }
        Ok(g)
    }

    pub fn from_game(g: &Poag) -> GameSpec {
        let mut transition = ByJoint::new();
        let mut reward = ByJoint::new();
        let mut obs_kernel = ByJoint::new();
        for (s, sn) in g.states.iter().enumerate() {
            for (ah, hn) in g.human_actions.iter().enumerate() {
                for (aa, an) in g.assistant_actions.iter().enumerate() {
                    let row: Dist = g.transition(s, ah, aa).iter().map(|&(s2, p)| (g.states[s2].clone(), p)).collect();
                    if !row.is_empty() {
                        insert3(&mut transition, sn, hn, an, row);
                    }
                    let rs: Dist = (0..g.n_thetas())
                        .filter(|&t| g.reward(s, ah, aa, t) != 0.0)
                        .map(|t| (g.thetas[t].clone(), g.reward(s, ah, aa, t)))
                        .collect();
                    if !rs.is_empty() {
                        insert3(&mut reward, sn, hn, an, rs);
                    }
                    let mut joint: BTreeMap<String, Dist> = BTreeMap::new();
                    for &(oh, oa, p) in g.obs(s, ah, aa) {
                        *joint
                            .entry(g.human_obs[oh].clone())
                            .or_default()
                            .entry(g.assistant_obs[oa].clone())
                            .or_default() += p;
                    }
                    if !joint.is_empty() {
                        insert3(&mut obs_kernel, sn, hn, an, joint);
                    }
                }
            }
        }
        let mut initial: BTreeMap<String, Dist> = BTreeMap::new();
        for &(s, t, p) in &g.initial {
            *initial.entry(g.states[s].clone()).or_default().entry(g.thetas[t].clone()).or_default() += p;
        }
        GameSpec {
            states: g.states.clone(),
            human_actions: g.human_actions.clone(),
            assistant_actions: g.assistant_actions.clone(),
            thetas: g.thetas.clone(),
            transition,
            reward,
            human_obs: g.human_obs.clone(),
            assistant_obs: g.assistant_obs.clone(),
            obs_kernel,
            initial,
            gamma: g.gamma,
            horizon: g.horizon,
        }
    }
}

fn insert3<T>(m: &mut ByJoint<T>, a: &str, b: &str, c: &str, v: T) {
    m.entry(a.to_string()).or_default().entry(b.to_string()).or_default().insert(c.to_string(), v);
}

pub fn game_from_json(text: &str) -> Result<Poag, SpecError> {
    let spec: GameSpec = serde_json::from_str(text)?;
    spec.to_game()
}

pub fn game_to_json(g: &Poag) -> String {
    serde_json::to_string_pretty(&GameSpec::from_game(g)).expect("game spec serializes")
}

/// On-disk form of a [`History`]: theta (human only) and `[action, observation]` pairs.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct HistorySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    pub steps: Vec<(String, String)>,
}

impl HistorySpec {
    pub fn to_history(&self, g: &Poag, player: Player) -> Result<History, SpecError> {
        let a_ids = Ids::new(g.action_names(player), "action");
        let o_ids = Ids::new(g.obs_names(player), "observation");
        let theta = match &self.theta {
            Some(t) => Some(Ids::new(&g.thetas, "theta").get(t)?),
            None => None,
        };
        let mut h = History::root(theta);
        for (a, o) in &self.steps {
            h = h.child(a_ids.get(a)?, o_ids.get(o)?);
        }
        Ok(h)
    }

    pub fn from_history(g: &Poag, player: Player, h: &History) -> HistorySpec {
        HistorySpec {
            theta: h.theta.map(|t| g.thetas[t].clone()),
            steps: h
                .steps
                .iter()
                .map(|st| (g.action_names(player)[st.action].clone(), g.obs_names(player)[st.obs].clone()))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RuleSpec {
    #[serde(flatten)]
    pub history: HistorySpec,
    pub dist: Dist,
}

/// On-disk form of a [`Policy`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicySpec {
    pub player: Player,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Dist>,
    #[serde(default)]
    pub rules: Vec<RuleSpec>,
}

fn dist_vec(g: &Poag, player: Player, d: &Dist) -> Result<Vec<f64>, SpecError> {
    let ids = Ids::new(g.action_names(player), "action");
    let mut v = vec![0.0; g.n_actions(player)];
    for (a, &p) in d {
        v[ids.get(a)?] += p;
    }
    Ok(v)
}

fn dist_map(g: &Poag, player: Player, v: &[f64]) -> Dist {
    v.iter()
        .enumerate()
        .filter(|(_, &p)| p != 0.0)
        .map(|(i, &p)| (g.action_names(player)[i].clone(), p))
        .collect()
}

impl PolicySpec {
    pub fn to_policy(&self, g: &Poag) -> Result<Policy, SpecError> {
        let mut pi = Policy::new(self.player, g.n_actions(self.player));
        if let Some(d) = &self.default {
            pi.set_default(dist_vec(g, self.player, d)?);
        }
        for r in &self.rules {
            pi.set(r.history.to_history(g, self.player)?, dist_vec(g, self.player, &r.dist)?);
        }
        Ok(pi)
    }

    pub fn from_policy(g: &Poag, pi: &Policy) -> PolicySpec {
        PolicySpec {
            player: pi.player,
            default: pi.default_dist().map(|d| dist_map(g, pi.player, d)),
            rules: pi
                .entries()
                .map(|(h, d)| RuleSpec {
                    history: HistorySpec::from_history(g, pi.player, h),
                    dist: dist_map(g, pi.player, d),
                })
                .collect(),
        }
    }
}

pub fn policy_from_json(g: &Poag, text: &str) -> Result<Policy, SpecError> {
    let spec: PolicySpec = serde_json::from_str(text)?;
    spec.to_policy(g)
}

pub fn policy_to_json(g: &Poag, pi: &Policy) -> String {
    serde_json::to_string_pretty(&PolicySpec::from_policy(g, pi)).expect("policy spec serializes")
}
