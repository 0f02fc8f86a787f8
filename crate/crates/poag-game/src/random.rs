//! Seeded generator of small random games, used by property tests and benchmarks.

use rand::Rng;

use crate::game::{Player, Poag};
use crate::policy::{History, Policy};

/// Size bounds for [`random_game`]. Every count is drawn uniformly from `1..=max`.
#[derive(Clone, Debug)]
pub struct RandomGameSpec {
    pub max_states: usize,
    pub max_human_actions: usize,
    pub max_assistant_actions: usize,
    pub max_thetas: usize,
    pub max_human_obs: usize,
    pub max_assistant_obs: usize,
    pub max_horizon: usize,
    /// `None` draws gamma uniformly from `{0.5, 0.9, 1.0}`.
    pub gamma: Option<f64>,
    /// When set, A's observation is a fixed function of H's, so A has no private information.
    pub assistant_obs_from_human: bool,
    /// Rewards are integers in `-reward_span..=reward_span`.
    pub reward_span: i32,
    /// When set, each assistant action copies the transitions and rewards of the previous
    /// one with probability 1/2, so same-effect actions with different observations occur.
    pub shared_effects: bool,
    /// With `shared_effects`, a copied action also blanks H's observation (every H
    /// observation becomes id 0), making it a garbled twin of the action it copies.
    pub garbled_copies: bool,
}

impl Default for RandomGameSpec {
    fn default() -> RandomGameSpec {
        RandomGameSpec {
            max_states: 4,
            max_human_actions: 3,
            max_assistant_actions: 3,
            max_thetas: 2,
            max_human_obs: 3,
            max_assistant_obs: 3,
            max_horizon: 2,
            gamma: None,
            assistant_obs_from_human: false,
            reward_span: 3,
            shared_effects: false,
            garbled_copies: false,
        }
    }
}

fn weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let w: Vec<u32> = (0..n).map(|_| if rng.random_bool(0.5) { rng.random_range(1..4) } else { 0 }).collect();
        let t: u32 = w.iter().sum();
        if t > 0 {
            return w.iter().map(|&x| x as f64 / t as f64).collect();
        }
    }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Draws a valid game within the bounds of `spec`.
pub fn random_game<R: Rng + ?Sized>(rng: &mut R, spec: &RandomGameSpec) -> Poag {
    let ns = rng.random_range(1..=spec.max_states);
    let nh = rng.random_range(1..=spec.max_human_actions);
    let na = rng.random_range(1..=spec.max_assistant_actions);
    let nt = rng.random_range(1..=spec.max_thetas);
    let noh = rng.random_range(1..=spec.max_human_obs);
    let noa = rng.random_range(1..=spec.max_assistant_obs);
    let horizon = rng.random_range(1..=spec.max_horizon);
    let gamma = spec.gamma.unwrap_or_else(|| [0.5, 0.9, 1.0][rng.random_range(0..3)]);
    let mut g = Poag::new(
        labels("s", ns),
        labels("h", nh),
        labels("a", na),
        labels("t", nt),
        labels("oh", noh),
        labels("oa", noa),
        gamma,
        horizon,
    );
    let f: Vec<usize> = (0..noh).map(|_| rng.random_range(0..noa)).collect();
    for s in 0..ns {
        for ah in 0..nh {
            for aa in 0..na {
                let t = weights(rng, ns);
                g.set_transition(s, ah, aa, t.into_iter().enumerate().collect());
                for th in 0..nt {
                    let r = rng.random_range(-spec.reward_span..=spec.reward_span);
                    g.set_reward(s, ah, aa, th, r as f64);
                }
                let row = if spec.assistant_obs_from_human {
                    weights(rng, noh).into_iter().enumerate().map(|(oh, p)| (oh, f[oh], p)).collect()
                } else {
                    weights(rng, noh * noa).into_iter().enumerate().map(|(k, p)| (k / noa, k % noa, p)).collect()
                };
                g.set_obs(s, ah, aa, row);
            }
        }
    }
    if spec.shared_effects {
        for aa in 1..na {
            if !rng.random_bool(0.5) {
                continue;
            }
            for s in 0..ns {
                for ah in 0..nh {
                    let t = g.transition(s, ah, aa - 1).to_vec();
                    g.set_transition(s, ah, aa, t);
                    for th in 0..nt {
                        let r = g.reward(s, ah, aa - 1, th);
                        g.set_reward(s, ah, aa, th, r);
                    }
                    if spec.garbled_copies {
                        let mut merged = vec![0.0; noa];
                        for &(_, oa, p) in g.obs(s, ah, aa - 1) {
                            merged[if spec.assistant_obs_from_human { f[0] } else { oa }] += p;
                        }
                        let row = merged.into_iter().enumerate().map(|(oa, p)| (0, oa, p)).collect();
                        g.set_obs(s, ah, aa, row);
                    }
                }
            }
        }
    }
    let init = weights(rng, ns * nt);
    g.initial = init.into_iter().enumerate().filter(|e| e.1 > 0.0).map(|(k, p)| (k / nt, k % nt, p)).collect();
    g
}

/// Every history of `player` with fewer than `horizon` steps, shortest first.
pub fn all_histories(g: &Poag, player: Player) -> Vec<History> {
    let mut out: Vec<History> = match player {
        Player::Human => (0..g.n_thetas()).map(|t| History::root(Some(t))).collect(),
        Player::Assistant => vec![History::root(None)],
    };
    let mut start = 0;
    for _ in 1..g.horizon {
        let end = out.len();
        for i in start..end {
            for a in 0..g.n_actions(player) {
                for o in 0..g.n_obs(player) {
                    let c = out[i].child(a, o);
                    out.push(c);
                }
            }
        }
        start = end;
    }
    out
}

/// A policy with an independent random rule at every history of [`all_histories`].
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, g: &Poag, player: Player, deterministic: bool) -> Policy {
    let n = g.n_actions(player);
    let mut pi = Policy::new(player, n);
    for h in all_histories(g, player) {
        if deterministic {
            pi.set_action(h, rng.random_range(0..n));
        } else {
            pi.set(h, weights(rng, n));
        }
    }
    pi
}

/// Same game with state ids permuted: old state `s` becomes `perm[s]`.
pub fn relabel_states(g: &Poag, perm: &[usize]) -> Poag {
    let ns = g.n_states();
    let mut names = vec![String::new(); ns];
    for s in 0..ns {
        names[perm[s]] = g.states[s].clone();
    }
    let mut out = Poag::new(
        names,
        g.human_actions.clone(),
        g.assistant_actions.clone(),
        g.thetas.clone(),
        g.human_obs.clone(),
        g.assistant_obs.clone(),
        g.gamma,
        g.horizon,
    );
    for s in 0..ns {
        for ah in 0..g.human_actions.len() {
            for aa in 0..g.assistant_actions.len() {
                out.set_transition(perm[s], ah, aa, g.transition(s, ah, aa).iter().map(|&(s2, p)| (perm[s2], p)).collect());
                out.set_obs(perm[s], ah, aa, g.obs(s, ah, aa).to_vec());
                for th in 0..g.n_thetas() {
                    out.set_reward(perm[s], ah, aa, th, g.reward(s, ah, aa, th));
                }
            }
        }
    }
    out.initial = g.initial.iter().map(|&(s, th, p)| (perm[s], th, p)).collect();
    out
}
