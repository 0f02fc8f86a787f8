//! Human belief formation.
//!
//! With the assistant's policy fixed, the game is a single-agent POMDP for H whose hidden state
//! is an [`AugmentedState`]: the state history, A's observation and action histories, and theta.
//! [`filter`] runs the exact Bayes filter on that POMDP.

use std::collections::HashMap;

use poag_game::{History, Poag, Policy, Player};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("history has probability zero after step {step}")]
    ZeroProbability { step: usize },
    #[error("history is inconsistent with every candidate assistant policy")]
    InconsistentHistory,
    #[error("assistant policy is undefined at {0:?}")]
    UndefinedPolicy(History),
    #[error("expected a {expected} policy")]
    WrongPlayer { expected: Player },
    #[error("prior is empty or has no positive mass")]
    EmptyPrior,
}

/// Hidden state of H's embedded POMDP after `t` steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AugmentedState {
    pub theta: usize,
    /// `s_0 .. s_t`.
    pub state_history: Vec<usize>,
    /// `oA_1 .. oA_t`.
    pub assistant_obs_history: Vec<usize>,
    /// `aA_0 .. aA_{t-1}`.
    pub assistant_actions: Vec<usize>,
}

impl AugmentedState {
    pub fn step(&self) -> usize {
        self.assistant_actions.len()
    }

    pub fn current_state(&self) -> usize {
        *self.state_history.last().expect("state history is never empty")
    }

    pub fn last_assistant_action(&self) -> Option<usize> {
        self.assistant_actions.last().copied()
    }

    /// A's own history, as A's policy sees it.
    pub fn assistant_history(&self) -> History {
        let mut h = History::root(None);
        for (&a, &o) in self.assistant_actions.iter().zip(&self.assistant_obs_history) {
            h = h.child(a, o);
        }
        h
    }
}

/// A posterior over augmented states. Probabilities sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief {
    pub support: Vec<(AugmentedState, f64)>,
}

impl Belief {
    /// Marginal of the current state.
    pub fn state_marginal(&self, n_states: usize) -> Vec<f64> {
        let mut m = vec![0.0; n_states];
        for (x, p) in &self.support {
            m[x.current_state()] += p;
        }
        m
    }

    /// Marginal of the state at an earlier step `t`.
    pub fn marginal_at(&self, t: usize, n_states: usize) -> Vec<f64> {
        let mut m = vec![0.0; n_states];
        for (x, p) in &self.support {
            m[x.state_history[t]] += p;
        }
        m
    }

    pub fn theta_marginal(&self, n_thetas: usize) -> Vec<f64> {
        let mut m = vec![0.0; n_thetas];
        for (x, p) in &self.support {
            m[x.theta] += p;
        }
        m
    }
}

/// Shannon entropy in nats, with `0 log 0 = 0`.
pub fn posterior_entropy(p: &[f64]) -> f64 {
    // Adding 0.0 turns a -0.0 result into 0.0.
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>() + 0.0
}

/// Expected entropy of the posterior over states after one observation drawn from
/// `likelihood[s][o]`, starting from `prior`.
pub fn expected_posterior_entropy(prior: &[f64], likelihood: &[Vec<f64>]) -> f64 {
    let n_obs = likelihood.first().map_or(0, Vec::len);
    let mut total = 0.0;
    for o in 0..n_obs {
        let joint: Vec<f64> = prior.iter().zip(likelihood).map(|(p, l)| p * l[o]).collect();
        let po: f64 = joint.iter().sum();
        if po > 0.0 {
            let post: Vec<f64> = joint.iter().map(|x| x / po).collect();
            total += po * posterior_entropy(&post);
        }
    }
    total
}

/// H's single-agent POMDP once A's policy is fixed.
pub struct EmbeddedPomdp<'a> {
    pub game: &'a Poag,
    pub assistant: &'a Policy,
}

/// Builds the embedded POMDP for a fixed assistant policy.
pub fn embed_pomdp<'a>(game: &'a Poag, pi_a: &'a Policy) -> Result<EmbeddedPomdp<'a>, BeliefError> {
    if pi_a.player != Player::Assistant {
        return Err(BeliefError::WrongPlayer { expected: Player::Assistant });
    }
    Ok(EmbeddedPomdp { game, assistant: pi_a })
}

impl EmbeddedPomdp<'_> {
    /// Initial distribution, restricted to `theta` when given. Unnormalized if restricted.
    pub fn initial(&self, theta: Option<usize>) -> Vec<(AugmentedState, f64)> {
        self.game
            .initial
            .iter()
            .filter(|&&(_, th, p)| p > 0.0 && theta.is_none_or(|t| t == th))
            .map(|&(s, th, p)| {
                (
                    AugmentedState {
                        theta: th,
                        state_history: vec![s],
                        assistant_obs_history: vec![],
                        assistant_actions: vec![],
                    },
                    p,
                )
            })
            .collect()
    }

    fn assistant_dist(&self, x: &AugmentedState) -> Result<Vec<f64>, BeliefError> {
        let h = x.assistant_history();
        self.assistant.dist(&h).map(<[f64]>::to_vec).ok_or(BeliefError::UndefinedPolicy(h))
    }

    /// Joint law of the next augmented state and H's observation, `(x', oH, p)`.
    pub fn step(&self, x: &AugmentedState, ah: usize) -> Result<Vec<(AugmentedState, usize, f64)>, BeliefError> {
        let s = x.current_state();
        let mut out = Vec::new();
        for (aa, &pa) in self.assistant_dist(x)?.iter().enumerate().filter(|e| *e.1 > 0.0) {
            for &(s2, pt) in self.game.transition(s, ah, aa) {
                for &(oh, oa, po) in self.game.obs(s2, ah, aa) {
                    let mut y = x.clone();
                    y.state_history.push(s2);
                    y.assistant_obs_history.push(oa);
                    y.assistant_actions.push(aa);
                    out.push((y, oh, pa * pt * po));
                }
            }
        }
        Ok(out)
    }

    /// Expected immediate reward of `ah` in augmented state `x`, averaged over A's action.
    pub fn reward(&self, x: &AugmentedState, ah: usize) -> Result<f64, BeliefError> {
        let s = x.current_state();
        Ok(self
            .assistant_dist(x)?
            .iter()
            .enumerate()
            .map(|(aa, &pa)| pa * self.game.reward(s, ah, aa, x.theta))
            .sum())
    }

    /// Augmented states with positive probability after `t` steps, under any H actions.
    pub fn reachable(&self, t: usize) -> Result<Vec<AugmentedState>, BeliefError> {
        let mut layer: Vec<AugmentedState> = self.initial(None).into_iter().map(|e| e.0).collect();
        for _ in 0..t {
            let mut next = HashMap::new();
            for x in &layer {
                for ah in 0..self.game.human_actions.len() {
                    for (y, _, p) in self.step(x, ah)? {
                        if p > 0.0 {
                            next.insert(y, ());
                        }
                    }
                }
            }
            let mut v: Vec<AugmentedState> = next.into_keys().collect();
            v.sort();
            layer = v;
        }
        Ok(layer)
    }
}

fn run_filter(
    pomdp: &EmbeddedPomdp<'_>,
    human_history: &History,
) -> Result<(Vec<(AugmentedState, f64)>, f64), BeliefError> {
    let mut particles = pomdp.initial(human_history.theta);
    let prior_mass: f64 = particles.iter().map(|e| e.1).sum();
    if prior_mass <= 0.0 {
        return Err(BeliefError::ZeroProbability { step: 0 });
    }
    for (t, st) in human_history.steps.iter().enumerate() {
        let mut next: HashMap<AugmentedState, f64> = HashMap::new();
        for (x, w) in &particles {
            for (y, oh, p) in pomdp.step(x, st.action)? {
                if oh == st.obs && p > 0.0 {
                    *next.entry(y).or_default() += w * p;
                }
            }
        }
        if next.is_empty() {
            return Err(BeliefError::ZeroProbability { step: t });
        }
        let mut v: Vec<(AugmentedState, f64)> = next.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        particles = v;
    }
    let mass: f64 = particles.iter().map(|e| e.1).sum();
    Ok((particles, mass))
}

fn normalize(particles: Vec<(AugmentedState, f64)>, mass: f64) -> Belief {
    Belief { support: particles.into_iter().map(|(x, w)| (x, w / mass)).collect() }
}

/// Exact posterior over augmented states given H's history (theta, actions, observations).
pub fn filter(game: &Poag, pi_a: &Policy, human_history: &History) -> Result<Belief, BeliefError> {
    let pomdp = embed_pomdp(game, pi_a)?;
    let (particles, mass) = run_filter(&pomdp, human_history)?;
    Ok(normalize(particles, mass))
}

/// Probability of H's observations in `human_history` given its theta and actions.
pub fn likelihood(game: &Poag, pi_a: &Policy, human_history: &History) -> Result<f64, BeliefError> {
    let pomdp = embed_pomdp(game, pi_a)?;
    let theta_mass: f64 = pomdp.initial(human_history.theta).iter().map(|e| e.1).sum();
    match run_filter(&pomdp, human_history) {
        Ok((_, mass)) => Ok(mass / theta_mass),
        Err(BeliefError::ZeroProbability { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Predictive distribution of H's next observation after taking `ah` at `human_history`.
pub fn predictive(game: &Poag, pi_a: &Policy, human_history: &History, ah: usize) -> Result<Vec<f64>, BeliefError> {
    let pomdp = embed_pomdp(game, pi_a)?;
    let belief = filter(game, pi_a, human_history)?;
    let mut out = vec![0.0; game.human_obs.len()];
    for (x, w) in &belief.support {
        for (_, oh, p) in pomdp.step(x, ah)? {
            out[oh] += w * p;
        }
    }
    Ok(out)
}

/// Joint posterior over candidate assistant policies and augmented states.
///
/// Returns the posterior over candidates (in input order) and the belief marginalized over them.
pub fn filter_with_policy_prior(
    game: &Poag,
    prior: &[(Policy, f64)],
    human_history: &History,
) -> Result<(Vec<f64>, Belief), BeliefError> {
    let joint = joint_posterior(game, prior, human_history)?;
    let mut post = vec![0.0; prior.len()];
    let mut merged: HashMap<AugmentedState, f64> = HashMap::new();
    for (i, parts) in joint.iter().enumerate() {
        for (x, w) in parts {
            post[i] += w;
            *merged.entry(x.clone()).or_default() += w;
        }
    }
    let mut support: Vec<(AugmentedState, f64)> = merged.into_iter().collect();
    support.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((post, Belief { support }))
}

/// Normalized joint weights, grouped per candidate.
fn joint_posterior(
    game: &Poag,
    prior: &[(Policy, f64)],
    human_history: &History,
) -> Result<Vec<Vec<(AugmentedState, f64)>>, BeliefError> {
    if prior.iter().all(|e| e.1 <= 0.0) {
        return Err(BeliefError::EmptyPrior);
    }
    let mut groups = Vec::with_capacity(prior.len());
    let mut total = 0.0;
    for (pi, q) in prior {
        if *q <= 0.0 {
            groups.push(Vec::new());
            continue;
        }
        let pomdp = embed_pomdp(game, pi)?;
        let theta_mass: f64 = pomdp.initial(human_history.theta).iter().map(|e| e.1).sum();
        match run_filter(&pomdp, human_history) {
            Ok((parts, _)) => {
                let scaled: Vec<(AugmentedState, f64)> =
                    parts.into_iter().map(|(x, w)| (x, q * w / theta_mass)).collect();
                total += scaled.iter().map(|e| e.1).sum::<f64>();
                groups.push(scaled);
            }
            Err(BeliefError::ZeroProbability { .. }) => groups.push(Vec::new()),
            Err(e) => return Err(e),
        }
    }
    if total <= 0.0 {
        return Err(BeliefError::InconsistentHistory);
    }
    for g in &mut groups {
        for e in g.iter_mut() {
            e.1 /= total;
        }
    }
    Ok(groups)
}

/// H's prior over A's policy for the next iteration of a repeated game.
///
/// `update` maps A's current policy and the episode as A experienced it (the augmented state,
/// which carries A's observations and actions) to A's next policy. The result is the pushforward
/// of the joint posterior through `update`, with equal policies merged, in first-seen order.
pub fn next_iteration_prior<F>(
    game: &Poag,
    prior: &[(Policy, f64)],
    human_history: &History,
    update: F,
) -> Result<Vec<(Policy, f64)>, BeliefError>
where
    F: Fn(&Policy, &AugmentedState) -> Policy,
{
    let joint = joint_posterior(game, prior, human_history)?;
    let mut out: Vec<(Policy, f64)> = Vec::new();
    for ((pi, _), parts) in prior.iter().zip(&joint) {
        for (x, w) in parts {
            let next = update(pi, x);
            match out.iter_mut().find(|e| e.0 == next) {
                Some(e) => e.1 += w,
                None => out.push((next, *w)),
            }
        }
    }
    Ok(out)
}
