//! Communication channels: each sender's action gains a message component that the receiver
//! sees alongside its own observation. Messages never change rewards or transitions.

use poag_game::{History, Player, Poag, Trajectory, TrajectoryStep};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// A sends, H receives.
    AtoH,
    /// H sends, A receives.
    HtoA,
    Both,
}

impl Direction {
    pub fn assistant_sends(self) -> bool {
        matches!(self, Direction::AtoH | Direction::Both)
    }
    pub fn human_sends(self) -> bool {
        matches!(self, Direction::HtoA | Direction::Both)
    }
}

/// Which sender observations become messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MessageSet {
    /// Observations that have positive probability somewhere in the game.
    #[default]
    Effective,
    /// Every declared observation.
    Full,
}

/// How the product game's ids decompose.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelLayout {
    pub direction: Direction,
    pub base_human_actions: usize,
    pub base_assistant_actions: usize,
    pub base_human_obs: usize,
    pub base_assistant_obs: usize,
    /// Messages H can send, as ids of H observations. Empty when H does not send.
    pub human_messages: Vec<usize>,
    /// Messages A can send, as ids of A observations. Empty when A does not send.
    pub assistant_messages: Vec<usize>,
}

fn split(id: usize, m: usize) -> (usize, Option<usize>) {
    if m == 0 {
        (id, None)
    } else {
        (id / m, Some(id % m))
    }
}

impl ChannelLayout {
    fn sent(&self, p: Player) -> usize {
        match p {
            Player::Human => self.human_messages.len(),
            Player::Assistant => self.assistant_messages.len(),
        }
    }

    /// Base action and message index of a product action.
    pub fn action(&self, p: Player, id: usize) -> (usize, Option<usize>) {
        split(id, self.sent(p))
    }

    /// Base observation and received message index of a product observation.
    pub fn obs(&self, p: Player, id: usize) -> (usize, Option<usize>) {
        split(id, self.sent(p.other()))
    }

    pub fn action_id(&self, p: Player, base: usize, msg: Option<usize>) -> usize {
        let m = self.sent(p);
        if m == 0 {
            base
        } else {
            base * m + msg.unwrap_or(0)
        }
    }

    /// A's message is the literal report of its latest base observation (the first message
    /// before any observation). Non-message actions are always honest.
    pub fn honest_assistant(&self, h: &History, action: usize) -> bool {
        let (_, msg) = self.action(Player::Assistant, action);
        let Some(m) = msg else { return true };
        match h.steps.last() {
            None => m == 0,
            Some(step) => {
                let (base, _) = self.obs(Player::Assistant, step.obs);
                self.assistant_messages[m] == base
            }
        }
    }

    /// The base-game trajectory underneath a product-game trajectory.
    pub fn strip(&self, tr: &Trajectory) -> Trajectory {
        Trajectory {
            theta: tr.theta,
            steps: tr
                .steps
                .iter()
                .map(|st| TrajectoryStep {
                    state: st.state,
                    human_action: self.action(Player::Human, st.human_action).0,
                    assistant_action: self.action(Player::Assistant, st.assistant_action).0,
                    next_state: st.next_state,
                    human_obs: self.obs(Player::Human, st.human_obs).0,
                    assistant_obs: self.obs(Player::Assistant, st.assistant_obs).0,
                    reward: st.reward,
                })
                .collect(),
        }
    }
}

/// Observation ids of `p` with positive probability in some kernel entry.
pub fn effective_obs(g: &Poag, p: Player) -> Vec<usize> {
    let mut seen = vec![false; g.n_obs(p)];
    for s in 0..g.n_states() {
        for ah in 0..g.human_actions.len() {
            for aa in 0..g.assistant_actions.len() {
                for &(oh, oa, q) in g.obs(s, ah, aa) {
                    if q > 0.0 {
                        seen[if p == Player::Human { oh } else { oa }] = true;
                    }
                }
            }
        }
    }
    (0..seen.len()).filter(|&o| seen[o]).collect()
}

/// The game with a channel in `direction`, using the effective message sets.
pub fn add_channel(g: &Poag, direction: Direction) -> Poag {
    add_channel_with_layout(g, direction, MessageSet::Effective).0
}

pub fn add_channel_with_layout(g: &Poag, direction: Direction, set: MessageSet) -> (Poag, ChannelLayout) {
    let msgs = |p: Player, sends: bool| -> Vec<usize> {
        match (sends, set) {
            (false, _) => Vec::new(),
            (true, MessageSet::Effective) => effective_obs(g, p),
            (true, MessageSet::Full) => (0..g.n_obs(p)).collect(),
        }
    };
    let lay = ChannelLayout {
        direction,
        base_human_actions: g.human_actions.len(),
        base_assistant_actions: g.assistant_actions.len(),
        base_human_obs: g.human_obs.len(),
        base_assistant_obs: g.assistant_obs.len(),
        human_messages: msgs(Player::Human, direction.human_sends()),
        assistant_messages: msgs(Player::Assistant, direction.assistant_sends()),
    };
    let product = |names: &[String], msgs: &[usize], labels: &[String]| -> Vec<String> {
        if msgs.is_empty() {
            return names.to_vec();
        }
        names.iter().flat_map(|n| msgs.iter().map(move |&m| format!("{n}|{}", labels[m]))).collect()
    };
    let mut out = Poag::new(
        g.states.clone(),
        product(&g.human_actions, &lay.human_messages, &g.human_obs),
        product(&g.assistant_actions, &lay.assistant_messages, &g.assistant_obs),
        g.thetas.clone(),
        product(&g.human_obs, &lay.assistant_messages, &g.assistant_obs),
        product(&g.assistant_obs, &lay.human_messages, &g.human_obs),
        g.gamma,
        g.horizon,
    );
    let (mh, ma) = (lay.human_messages.len(), lay.assistant_messages.len());
    for s in 0..g.n_states() {
        for ah2 in 0..out.human_actions.len() {
            let (ah, hm) = lay.action(Player::Human, ah2);
            for aa2 in 0..out.assistant_actions.len() {
                let (aa, am) = lay.action(Player::Assistant, aa2);
                out.set_transition(s, ah2, aa2, g.transition(s, ah, aa).to_vec());
                for th in 0..g.n_thetas() {
                    out.set_reward(s, ah2, aa2, th, g.reward(s, ah, aa, th));
                }
                let row = g
                    .obs(s, ah, aa)
                    .iter()
                    .map(|&(oh, oa, p)| {
                        let oh2 = if ma == 0 { oh } else { oh * ma + am.unwrap_or(0) };
                        let oa2 = if mh == 0 { oa } else { oa * mh + hm.unwrap_or(0) };
                        (oh2, oa2, p)
                    })
                    .collect();
                out.set_obs(s, ah2, aa2, row);
            }
        }
    }
    out.initial = g.initial.clone();
    (out, lay)
}
