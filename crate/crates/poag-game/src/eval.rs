use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Player, Poag};
use crate::policy::{History, Policy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{player} policy is undefined at reachable history {history:?}")]
    UndefinedHistory { player: Player, history: History },
    #[error("{player} policy distribution has {got} entries, expected {expected}")]
    BadDistribution { player: Player, got: usize, expected: usize },
    #[error("policy is for player {got}, expected {expected}")]
    WrongPlayer { got: Player, expected: Player },
}

/// Interns histories so that forward passes can key on small integers.
#[derive(Default)]
pub struct HistoryArena {
    pub histories: Vec<History>,
    index: HashMap<(usize, usize, usize), usize>,
    roots: HashMap<Option<usize>, usize>,
}

impl HistoryArena {
    pub fn root(&mut self, theta: Option<usize>) -> usize {
        if let Some(&id) = self.roots.get(&theta) {
            return id;
        }
        let id = self.histories.len();
        self.histories.push(History::root(theta));
        self.roots.insert(theta, id);
        id
    }

    pub fn child(&mut self, parent: usize, action: usize, obs: usize) -> usize {
        if let Some(&id) = self.index.get(&(parent, action, obs)) {
            return id;
        }
        let id = self.histories.len();
        let h = self.histories[parent].child(action, obs);
        self.histories.push(h);
        self.index.insert((parent, action, obs), id);
        id
    }
}

pub(crate) fn lookup<'a>(pi: &'a Policy, h: &History, n: usize) -> Result<&'a [f64], EvalError> {
    let d = pi
        .dist(h)
        .ok_or_else(|| EvalError::UndefinedHistory { player: pi.player, history: h.clone() })?;
    if d.len() != n {
        return Err(EvalError::BadDistribution { player: pi.player, got: d.len(), expected: n });
    }
    Ok(d)
}

fn check_players(pi_h: &Policy, pi_a: &Policy) -> Result<(), EvalError> {
    if pi_h.player != Player::Human {
        return Err(EvalError::WrongPlayer { got: pi_h.player, expected: Player::Human });
    }
    if pi_a.player != Player::Assistant {
        return Err(EvalError::WrongPlayer { got: pi_a.player, expected: Player::Assistant });
    }
    Ok(())
}

/// Exact expected discounted return of a policy pair, by forward dynamic programming
/// over (state, theta, human history, assistant history).
pub fn evaluate_pair(game: &Poag, pi_h: &Policy, pi_a: &Policy) -> Result<f64, EvalError> {
    check_players(pi_h, pi_a)?;
    let (nh, na) = (game.human_actions.len(), game.assistant_actions.len());
    let mut ha = HistoryArena::default();
    let mut aa = HistoryArena::default();
    let root_a = aa.root(None);
    let mut layer: HashMap<(usize, usize, usize, usize), f64> = HashMap::new();
    for &(s, th, p) in &game.initial {
        let rh = ha.root(Some(th));
        *layer.entry((s, th, rh, root_a)).or_default() += p;
    }
    let mut total = 0.0;
    let mut disc = 1.0;
    for t in 0..game.horizon {
        let last = t + 1 == game.horizon;
        let mut next: HashMap<(usize, usize, usize, usize), f64> = HashMap::new();
        let mut keys: Vec<_> = layer.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let w = layer[&key];
            let (s, th, hh, h_a) = key;
            let dh = lookup(pi_h, &ha.histories[hh], nh)?.to_vec();
            let da = lookup(pi_a, &aa.histories[h_a], na)?.to_vec();
            for (ah, &ph) in dh.iter().enumerate().filter(|(_, &p)| p > 0.0) {
                for (a, &pa) in da.iter().enumerate().filter(|(_, &p)| p > 0.0) {
                    let wj = w * ph * pa;
                    total += disc * wj * game.reward(s, ah, a, th);
                    if last {
                        continue;
                    }
                    for &(s2, pt) in game.transition(s, ah, a) {
                        for &(oh, oa, po) in game.obs(s2, ah, a) {
                            let ch = ha.child(hh, ah, oh);
                            let ca = aa.child(h_a, a, oa);
                            *next.entry((s2, th, ch, ca)).or_default() += wj * pt * po;
                        }
                    }
                }
            }
        }
        layer = next;
        disc *= game.gamma;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub state: usize,
    pub human_action: usize,
    pub assistant_action: usize,
    pub next_state: usize,
    pub human_obs: usize,
    pub assistant_obs: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub theta: usize,
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut d = 1.0;
        let mut acc = 0.0;
        for st in &self.steps {
            acc += d * st.reward;
            d *= gamma;
        }
        acc
    }

    /// H's history after `t` steps.
    pub fn human_history(&self, t: usize) -> History {
        let mut h = History::root(Some(self.theta));
        for st in &self.steps[..t] {
            h = h.child(st.human_action, st.human_obs);
        }
        h
    }

    pub fn assistant_history(&self, t: usize) -> History {
        let mut h = History::root(None);
        for st in &self.steps[..t] {
            h = h.child(st.assistant_action, st.assistant_obs);
        }
        h
    }
}

pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, weights: impl IntoIterator<Item = (usize, f64)>) -> usize {
    let items: Vec<(usize, f64)> = weights.into_iter().filter(|&(_, p)| p > 0.0).collect();
    let total: f64 = items.iter().map(|&(_, p)| p).sum();
    let mut u = rng.random::<f64>() * total;
    for &(i, p) in &items {
        if u < p {
            return i;
        }
        u -= p;
    }
    items.last().map(|&(i, _)| i).unwrap_or(0)
}

/// Draws one episode. The same seed and inputs always give the same trajectory.
pub fn sample_trajectory(game: &Poag, pi_h: &Policy, pi_a: &Policy, seed: u64) -> Result<Trajectory, EvalError> {
    check_players(pi_h, pi_a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nh, na) = (game.human_actions.len(), game.assistant_actions.len());
    let i0 = sample_index(&mut rng, game.initial.iter().enumerate().map(|(i, &(_, _, p))| (i, p)));
    let (mut s, theta, _) = game.initial[i0];
    let mut hh = History::root(Some(theta));
    let mut h_a = History::root(None);
    let mut steps = Vec::with_capacity(game.horizon);
    for _ in 0..game.horizon {
        let ah = sample_index(&mut rng, lookup(pi_h, &hh, nh)?.iter().copied().enumerate());
        let a = sample_index(&mut rng, lookup(pi_a, &h_a, na)?.iter().copied().enumerate());
        let reward = game.reward(s, ah, a, theta);
        let s2 = sample_index(&mut rng, game.transition(s, ah, a).iter().copied());
        let orow = game.obs(s2, ah, a);
        let k = sample_index(&mut rng, orow.iter().enumerate().map(|(i, &(_, _, p))| (i, p)));
        let (oh, oa, _) = orow[k];
        steps.push(TrajectoryStep {
            state: s,
            human_action: ah,
            assistant_action: a,
            next_state: s2,
            human_obs: oh,
            assistant_obs: oa,
            reward,
        });
        hh = hh.child(ah, oh);
        h_a = h_a.child(a, oa);
        s = s2;
    }
    Ok(Trajectory { theta, steps })
}
