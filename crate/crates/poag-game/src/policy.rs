use std::collections::BTreeMap;

use crate::game::Player;

/// One decision step of a history: the action taken and the observation received after it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub action: usize,
    pub obs: usize,
}

/// A player's information at time `t`: its own `t` (action, observation) steps.
/// Human histories also carry theta, which H observes privately.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History {
    pub theta: Option<usize>,
    pub steps: Vec<Step>,
}

impl History {
    pub fn root(theta: Option<usize>) -> History {
        History { theta, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn child(&self, action: usize, obs: usize) -> History {
        let mut steps = Vec::with_capacity(self.steps.len() + 1);
        steps.extend_from_slice(&self.steps);
        steps.push(Step { action, obs });
        History { theta: self.theta, steps }
    }

    pub fn prefix(&self, t: usize) -> History {
        History { theta: self.theta, steps: self.steps[..t].to_vec() }
    }
}

/// A tabular, history-conditioned action rule.
///
/// Histories not listed fall back to `default` when one is set.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub player: Player,
    pub n_actions: usize,
    rule: BTreeMap<History, Vec<f64>>,
    default: Option<Vec<f64>>,
}

impl Policy {
    pub fn new(player: Player, n_actions: usize) -> Policy {
        Policy { player, n_actions, rule: BTreeMap::new(), default: None }
    }

    /// The policy that plays `action` at every history.
    pub fn constant(player: Player, n_actions: usize, action: usize) -> Policy {
        let mut p = Policy::new(player, n_actions);
        p.default = Some(point_mass(n_actions, action));
        p
    }

    pub fn uniform(player: Player, n_actions: usize) -> Policy {
        let mut p = Policy::new(player, n_actions);
        p.default = Some(vec![1.0 / n_actions as f64; n_actions]);
        p
    }

    pub fn set_default(&mut self, dist: Vec<f64>) {
        self.default = Some(dist);
    }

    pub fn default_dist(&self) -> Option<&[f64]> {
        self.default.as_deref()
    }

    pub fn set(&mut self, h: History, dist: Vec<f64>) {
        self.rule.insert(h, dist);
    }

    pub fn set_action(&mut self, h: History, action: usize) {
        let d = point_mass(self.n_actions, action);
        self.rule.insert(h, d);
    }

    pub fn dist(&self, h: &History) -> Option<&[f64]> {
        self.rule.get(h).or(self.default.as_ref()).map(Vec::as_slice)
    }

    /// The action at `h` if the rule there is a point mass.
    pub fn action(&self, h: &History) -> Option<usize> {
        self.dist(h).and_then(point_of)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&History, &Vec<f64>)> {
        self.rule.iter()
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty() && self.default.is_none()
    }

    /// True iff every listed distribution (and the default) is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.rule.values().chain(self.default.iter()).all(|d| point_of(d).is_some())
    }
}

pub fn point_mass(n: usize, a: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[a] = 1.0;
    v
}

fn point_of(d: &[f64]) -> Option<usize> {
    let mut found = None;
    for (i, &p) in d.iter().enumerate() {
        if p == 1.0 && found.is_none() {
            found = Some(i);
        } else if p != 0.0 {
            return None;
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_flag_tracks_point_masses() {
        let mut p = Policy::constant(Player::Assistant, 2, 1);
        assert!(p.is_deterministic());
        p.set(History::root(None).child(0, 0), vec![0.5, 0.5]);
        assert!(!p.is_deterministic());
    }

    #[test]
    fn rule_overrides_default() {
        let mut p = Policy::constant(Player::Human, 3, 0);
        let h = History::root(Some(0)).child(2, 1);
        p.set_action(h.clone(), 2);
        assert_eq!(p.action(&h), Some(2));
        assert_eq!(p.action(&History::root(Some(0))), Some(0));
    }
}
