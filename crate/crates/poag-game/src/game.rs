use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Probability mass tolerance used by validation.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    #[serde(rename = "H")]
    Human,
    #[serde(rename = "A")]
    Assistant,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::Human => Player::Assistant,
            Player::Assistant => Player::Human,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Human => f.write_str("H"),
            Player::Assistant => f.write_str("A"),
        }
    }
}

/// A problem found by [`Poag::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub entry: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entry, self.message)
    }
}

/// A finite two-player common-payoff game where only H observes theta.
///
/// Ids are dense indices into the name vectors. Tables are stored flat, indexed by
/// `(s, aH, aA)` (and theta for rewards). Rows are sparse lists of positive mass.
#[derive(Clone, Debug, PartialEq)]
pub struct Poag {
    pub states: Vec<String>,
    pub human_actions: Vec<String>,
    pub assistant_actions: Vec<String>,
    pub thetas: Vec<String>,
    pub human_obs: Vec<String>,
    pub assistant_obs: Vec<String>,
    transition: Vec<Vec<(usize, f64)>>,
    reward: Vec<f64>,
    obs_kernel: Vec<Vec<(usize, usize, f64)>>,
    pub initial: Vec<(usize, usize, f64)>,
    pub gamma: f64,
    pub horizon: usize,
}

fn names<S: Into<String>>(v: impl IntoIterator<Item = S>) -> Vec<String> {
    v.into_iter().map(Into::into).collect()
}

impl Poag {
    /// Builds a game with empty transition and observation tables and zero rewards.
    #[allow(clippy::too_many_arguments)]
    pub fn new<S: Into<String>>(
        states: impl IntoIterator<Item = S>,
        human_actions: impl IntoIterator<Item = S>,
        assistant_actions: impl IntoIterator<Item = S>,
        thetas: impl IntoIterator<Item = S>,
        human_obs: impl IntoIterator<Item = S>,
        assistant_obs: impl IntoIterator<Item = S>,
        gamma: f64,
        horizon: usize,
    ) -> Poag {
        let states = names(states);
        let human_actions = names(human_actions);
        let assistant_actions = names(assistant_actions);
        let thetas = names(thetas);
        let rows = states.len() * human_actions.len() * assistant_actions.len();
        Poag {
            transition: vec![Vec::new(); rows],
            reward: vec![0.0; rows * thetas.len()],
            obs_kernel: vec![Vec::new(); rows],
            states,
            human_actions,
            assistant_actions,
            thetas,
            human_obs: names(human_obs),
            assistant_obs: names(assistant_obs),
            initial: Vec::new(),
            gamma,
            horizon,
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }
    pub fn n_thetas(&self) -> usize {
        self.thetas.len()
    }
    pub fn n_actions(&self, p: Player) -> usize {
        match p {
            Player::Human => self.human_actions.len(),
            Player::Assistant => self.assistant_actions.len(),
        }
    }
    pub fn n_obs(&self, p: Player) -> usize {
        match p {
            Player::Human => self.human_obs.len(),
            Player::Assistant => self.assistant_obs.len(),
        }
    }
    pub fn action_names(&self, p: Player) -> &[String] {
        match p {
            Player::Human => &self.human_actions,
            Player::Assistant => &self.assistant_actions,
        }
    }
    pub fn obs_names(&self, p: Player) -> &[String] {
        match p {
            Player::Human => &self.human_obs,
            Player::Assistant => &self.assistant_obs,
        }
    }

    #[inline]
    fn row(&self, s: usize, ah: usize, aa: usize) -> usize {
        (s * self.human_actions.len() + ah) * self.assistant_actions.len() + aa
    }

    /// Next-state distribution for `(s, aH, aA)`.
    #[inline]
    pub fn transition(&self, s: usize, ah: usize, aa: usize) -> &[(usize, f64)] {
        &self.transition[self.row(s, ah, aa)]
    }

    pub fn set_transition(&mut self, s: usize, ah: usize, aa: usize, dist: Vec<(usize, f64)>) {
        let r = self.row(s, ah, aa);
        self.transition[r] = dist.into_iter().filter(|&(_, p)| p != 0.0).collect();
    }

    #[inline]
    pub fn reward(&self, s: usize, ah: usize, aa: usize, theta: usize) -> f64 {
        self.reward[self.row(s, ah, aa) * self.thetas.len() + theta]
    }

    pub fn set_reward(&mut self, s: usize, ah: usize, aa: usize, theta: usize, r: f64) {
        let i = self.row(s, ah, aa) * self.thetas.len() + theta;
        self.reward[i] = r;
    }

    /// Joint observation distribution `(oH, oA, p)` given the next state and joint action.
    #[inline]
    pub fn obs(&self, s_next: usize, ah: usize, aa: usize) -> &[(usize, usize, f64)] {
        &self.obs_kernel[self.row(s_next, ah, aa)]
    }

    pub fn set_obs(&mut self, s_next: usize, ah: usize, aa: usize, dist: Vec<(usize, usize, f64)>) {
        let r = self.row(s_next, ah, aa);
        self.obs_kernel[r] = dist.into_iter().filter(|&(_, _, p)| p != 0.0).collect();
    }

    /// Marginal of the joint kernel for one player.
    pub fn marginal_obs(&self, player: Player, s_next: usize, ah: usize, aa: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_obs(player)];
        for &(oh, oa, p) in self.obs(s_next, ah, aa) {
            match player {
                Player::Human => out[oh] += p,
                Player::Assistant => out[oa] += p,
            }
        }
        out
    }

    /// Checks every invariant and reports each offending entry.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |entry: String, message: String| out.push(Violation { entry, message });

        for (label, set) in [
            ("states", &self.states),
            ("human_actions", &self.human_actions),
            ("assistant_actions", &self.assistant_actions),
            ("thetas", &self.thetas),
            ("human_obs", &self.human_obs),
            ("assistant_obs", &self.assistant_obs),
        ] {
            if set.is_empty() {
                push(label.to_string(), "set is empty".into());
            }
            let mut seen = HashSet::new();
            for n in set {
                if !seen.insert(n) {
                    push(label.to_string(), format!("duplicate id {n:?}"));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            push("gamma".into(), format!("{} is outside [0, 1]", self.gamma));
        }
        if self.horizon < 1 {
            push("horizon".into(), "must be at least 1".into());
        }

        let ns = self.n_states();
        let (nh, na, nt) = (self.human_actions.len(), self.assistant_actions.len(), self.n_thetas());
        let (noh, noa) = (self.human_obs.len(), self.assistant_obs.len());
        for s in 0..ns {
            for ah in 0..nh {
                for aa in 0..na {
                    let ctx = format!(
                        "({}, {}, {})",
                        self.states[s], self.human_actions[ah], self.assistant_actions[aa]
                    );
                    let row = self.transition(s, ah, aa);
                    if row.is_empty() {
                        push(format!("transition{ctx}"), "missing entry".into());
                    } else {
                        check_row(
                            &format!("transition{ctx}"),
                            row.iter().map(|&(i, p)| (i < ns, p)),
                            &mut push,
                        );
                    }
                    let orow = self.obs(s, ah, aa);
                    if orow.is_empty() {
                        push(format!("obs_kernel{ctx}"), "missing entry".into());
                    } else {
                        check_row(
                            &format!("obs_kernel{ctx}"),
                            orow.iter().map(|&(h, a, p)| (h < noh && a < noa, p)),
                            &mut push,
                        );
                    }
                    for th in 0..nt {
                        let r = self.reward(s, ah, aa, th);
                        if !r.is_finite() {
                            push(format!("reward{ctx}[{}]", self.thetas[th]), format!("{r} is not finite"));
                        }
                    }
                }
            }
        }
        if self.initial.is_empty() {
            push("initial".into(), "missing entry".into());
        } else {
            check_row(
                "initial",
                self.initial.iter().map(|&(s, t, p)| (s < ns && t < nt, p)),
                &mut push,
            );
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Support of the state at each step under arbitrary play, `reach[t][s]`.
    pub fn reachable_states(&self) -> Vec<Vec<bool>> {
        let ns = self.n_states();
        let mut cur = vec![false; ns];
        for &(s, _, p) in &self.initial {
            if p > 0.0 {
                cur[s] = true;
            }
        }
        let mut out = vec![cur.clone()];
        for _ in 1..self.horizon {
            let mut next = vec![false; ns];
            for s in (0..ns).filter(|&s| cur[s]) {
                for ah in 0..self.human_actions.len() {
                    for aa in 0..self.assistant_actions.len() {
                        for &(s2, p) in self.transition(s, ah, aa) {
                            if p > 0.0 {
                                next[s2] = true;
                            }
                        }
                    }
                }
            }
            out.push(next.clone());
            cur = next;
        }
        out
    }

    /// Whether one player's observation is a function of the other's on the kernel support.
    ///
    /// With `player = Assistant` this asks whether A has no private information.
    pub fn has_no_private_info(&self, player: Player) -> PrivateInfo {
        let n_from = match player {
            Player::Assistant => self.human_obs.len(),
            Player::Human => self.assistant_obs.len(),
        };
        let mut f: Vec<Option<usize>> = vec![None; n_from];
        for row in &self.obs_kernel {
            for &(oh, oa, p) in row {
                if p <= 0.0 {
                    continue;
                }
                let (from, to) = match player {
                    Player::Assistant => (oh, oa),
                    Player::Human => (oa, oh),
                };
                match f[from] {
                    None => f[from] = Some(to),
                    Some(prev) if prev != to => {
                        return PrivateInfo::Conflict { observed: from, first: prev, second: to };
                    }
                    _ => {}
                }
            }
        }
        PrivateInfo::Witness(f)
    }
}

fn check_row(
    entry: &str,
    items: impl Iterator<Item = (bool, f64)>,
    push: &mut impl FnMut(String, String),
) {
    let mut sum = 0.0;
    for (in_range, p) in items {
        if !in_range {
            push(entry.to_string(), "references an unknown id".into());
        }
        if !p.is_finite() || p < 0.0 {
            push(entry.to_string(), format!("has invalid mass {p}"));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        push(entry.to_string(), format!("sums to {sum}"));
    }
}

/// Result of [`Poag::has_no_private_info`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrivateInfo {
    /// `f[o]` is the other player's observation whenever `o` is seen; `None` for unseen `o`.
    Witness(Vec<Option<usize>>),
    /// Observation `observed` co-occurs with two different observations of the other player.
    Conflict { observed: usize, first: usize, second: usize },
}

impl PrivateInfo {
    pub fn holds(&self) -> bool {
        matches!(self, PrivateInfo::Witness(_))
    }
}
