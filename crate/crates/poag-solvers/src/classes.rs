//! Per-step equivalence classes of actions.

use poag_game::{Player, Poag};

/// How much of the observation kernel two actions must share to be merged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Compare only the observations of players who still have a real choice later.
    /// Exact for values, the default for solving.
    #[default]
    Value,
    /// Compare the full joint observation kernel. Needed when informativeness matters.
    Exact,
}

/// Joint transition and observation law, `succ[(s, ah, aa)] = [(s', oh, oa, p)]`.
pub(crate) struct Succ {
    nh: usize,
    na: usize,
    rows: Vec<Vec<(u32, u32, u32, f64)>>,
}

impl Succ {
    pub fn new(g: &Poag) -> Succ {
        let (nh, na) = (g.human_actions.len(), g.assistant_actions.len());
        let mut rows = Vec::with_capacity(g.n_states() * nh * na);
        for s in 0..g.n_states() {
            for ah in 0..nh {
                for aa in 0..na {
                    let mut row = Vec::new();
                    for &(s2, pt) in g.transition(s, ah, aa) {
                        for &(oh, oa, po) in g.obs(s2, ah, aa) {
                            if pt * po > 0.0 {
                                row.push((s2 as u32, oh as u32, oa as u32, pt * po));
                            }
                        }
                    }
                    rows.push(row);
                }
            }
        }
        Succ { nh, na, rows }
    }

    pub fn get(&self, s: usize, ah: usize, aa: usize) -> &[(u32, u32, u32, f64)] {
        &self.rows[(s * self.nh + ah) * self.na + aa]
    }
}

/// `classes[t]` partitions the player's actions at step `t`. Classes are ordered by their
/// lowest member and members are ascending.
#[derive(Clone, Debug)]
pub struct StepClasses {
    pub human: Vec<Vec<Vec<usize>>>,
    pub assistant: Vec<Vec<Vec<usize>>>,
}

impl StepClasses {
    pub fn of(&self, p: Player) -> &[Vec<Vec<usize>>] {
        match p {
            Player::Human => &self.human,
            Player::Assistant => &self.assistant,
        }
    }
}

const SIG_TOL: f64 = 1e-12;

type Signature = Vec<(u64, f64)>;

fn same(a: &Signature, b: &Signature) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() <= SIG_TOL)
}

fn normalize(mut sig: Signature) -> Signature {
    sig.sort_by_key(|e| e.0);
    let mut out: Signature = Vec::with_capacity(sig.len());
    for (k, v) in sig {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += v,
            _ => out.push((k, v)),
        }
    }
    out.retain(|e| e.1.abs() > SIG_TOL);
    out
}

/// Which observations matter when comparing actions.
#[derive(Clone, Copy)]
struct Relevant {
    human: bool,
    assistant: bool,
}

fn signature(g: &Poag, p: Player, a: usize, reach: &[bool], rel: Option<Relevant>) -> Signature {
    let (noh, noa) = (g.human_obs.len() as u64, g.assistant_obs.len() as u64);
    let nc = g.n_actions(p.other());
    let mut sig = Signature::new();
    let mut sub = Signature::new();
    for s in (0..g.n_states()).filter(|&s| reach[s]) {
        for c in 0..nc {
            let (ah, aa) = match p {
                Player::Human => (a, c),
                Player::Assistant => (c, a),
            };
            // Keys: a tag in the top bits, then (s, c, ...) packed.
            let base = ((s as u64) * nc as u64 + c as u64) << 32;
            for th in 0..g.n_thetas() {
                let r = g.reward(s, ah, aa, th);
                if r != 0.0 {
                    sig.push(((1 << 62) | base | th as u64, r));
                }
            }
            let Some(rel) = rel else { continue };
            sub.clear();
            for &(s2, pt) in g.transition(s, ah, aa) {
                sub.push(((2 << 60) | base | s2 as u64, pt));
                if !(rel.human || rel.assistant) {
                    continue;
                }
                for &(oh, oa, po) in g.obs(s2, ah, aa) {
                    let o = match (rel.human, rel.assistant) {
                        (true, true) => oh as u64 * noa + oa as u64,
                        (true, false) => oh as u64,
                        _ => oa as u64,
                    };
                    let key = (3 << 60) | base | ((s2 as u64 * (noh * noa + 1) + o) & 0xffff_ffff);
                    sub.push((key, pt * po));
                }
            }
            sig.extend(sub.drain(..));
        }
    }
    normalize(sig)
}

fn partition(g: &Poag, p: Player, reach: &[bool], rel: Option<Relevant>) -> Vec<Vec<usize>> {
    let sigs: Vec<Signature> = (0..g.n_actions(p)).map(|a| signature(g, p, a, reach, rel)).collect();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for a in 0..sigs.len() {
        match classes.iter_mut().find(|c| same(&sigs[c[0]], &sigs[a])) {
            Some(c) => c.push(a),
            None => classes.push(vec![a]),
        }
    }
    classes
}

/// Computes the classes of both players, backward from the last step.
pub fn step_classes(g: &Poag, reduction: Reduction) -> StepClasses {
    let reach = g.reachable_states();
    let horizon = g.horizon;
    let mut human = vec![Vec::new(); horizon];
    let mut assistant = vec![Vec::new(); horizon];
    let mut later_h = false;
    let mut later_a = false;
    for t in (0..horizon).rev() {
        let rel = if t + 1 == horizon {
            None
        } else {
            Some(match reduction {
                Reduction::Exact => Relevant { human: true, assistant: true },
                Reduction::Value => Relevant { human: later_h, assistant: later_a },
            })
        };
        human[t] = partition(g, Player::Human, &reach[t], rel);
        assistant[t] = partition(g, Player::Assistant, &reach[t], rel);
        later_h |= human[t].len() > 1;
        later_a |= assistant[t].len() > 1;
    }
    StepClasses { human, assistant }
}
