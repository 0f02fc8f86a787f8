//! Information-set trees of one player.

use std::collections::BTreeMap;

use poag_game::{History, Player, Poag, Policy};

use crate::classes::Succ;
use crate::SolveError;

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub depth: usize,
    pub history: History,
    /// `(state, theta)` pairs that are possible here under some opponent behaviour.
    pub support: Vec<(u32, u32)>,
    /// Actions available at this node, by local index.
    pub allowed: Vec<usize>,
    /// `kids[i * n_obs + o]`: child after local action `i` and observation `o`.
    pub kids: Vec<u32>,
}

#[derive(Clone, Debug)]
pub(crate) struct InfoTree {
    pub player: Player,
    pub n_obs: usize,
    pub nodes: Vec<Node>,
    pub roots: Vec<u32>,
    /// Root of each theta for the human tree; the single root for the assistant.
    pub root_of_theta: Vec<u32>,
}

impl InfoTree {
    /// Breadth-first construction, so children always have larger ids than parents.
    ///
    /// `allowed(history, depth)` lists the actions at a node, `opponent[t]` the opponent
    /// actions considered at step `t`. Nodes exist for depths below `max_depth`.
    pub fn build(
        g: &Poag,
        succ: &Succ,
        player: Player,
        max_depth: usize,
        opponent: &[Vec<usize>],
        node_limit: usize,
        mut allowed: impl FnMut(&History, usize) -> Vec<usize>,
    ) -> Result<InfoTree, SolveError> {
        let n_obs = g.n_obs(player);
        let nt = g.n_thetas();
        let mut nodes: Vec<Node> = Vec::new();
        let mut roots = Vec::new();
        let mut root_of_theta = vec![NONE; nt];
        match player {
            Player::Human => {
                for th in 0..nt {
                    let support: Vec<(u32, u32)> = init_support(g, |t| t == th);
                    if support.is_empty() {
                        continue;
                    }
                    let h = History::root(Some(th));
                    let a = allowed(&h, 0);
                    root_of_theta[th] = nodes.len() as u32;
                    roots.push(nodes.len() as u32);
                    nodes.push(Node { depth: 0, history: h, support, allowed: a, kids: Vec::new() });
                }
            }
            Player::Assistant => {
                let h = History::root(None);
                let a = allowed(&h, 0);
                root_of_theta = vec![0; nt];
                roots.push(0);
                nodes.push(Node { depth: 0, history: h, support: init_support(g, |_| true), allowed: a, kids: Vec::new() });
            }
        }
        let mut i = 0;
        while i < nodes.len() {
            let depth = nodes[i].depth;
            if depth + 1 >= max_depth.min(g.horizon) {
                i += 1;
                continue;
            }
            let n_allowed = nodes[i].allowed.len();
            let mut kids = vec![NONE; n_allowed * n_obs];
            let mut next: BTreeMap<(usize, usize), Vec<(u32, u32)>> = BTreeMap::new();
            for (li, &a) in nodes[i].allowed.iter().enumerate() {
                for &(s, th) in &nodes[i].support {
                    for &c in &opponent[depth] {
                        let (ah, aa) = match player {
                            Player::Human => (a, c),
                            Player::Assistant => (c, a),
                        };
                        for &(s2, oh, oa, _) in succ.get(s as usize, ah, aa) {
                            let o = match player {
                                Player::Human => oh,
                                Player::Assistant => oa,
                            } as usize;
                            next.entry((li, o)).or_default().push((s2, th));
                        }
                    }
                }
            }
            for ((li, o), mut support) in next {
                support.sort_unstable();
                support.dedup();
                let h = nodes[i].history.child(nodes[i].allowed[li], o);
                let a = allowed(&h, depth + 1);
                kids[li * n_obs + o] = nodes.len() as u32;
                nodes.push(Node { depth: depth + 1, history: h, support, allowed: a, kids: Vec::new() });
            }
            if nodes.len() > node_limit {
                return Err(SolveError::BudgetExceeded {
                    what: "information-set tree",
                    needed: nodes.len() as u128,
                    budget: node_limit as u128,
                });
            }
            nodes[i].kids = kids;
            i += 1;
        }
        Ok(InfoTree { player, n_obs, nodes, roots, root_of_theta })
    }

    #[inline]
    pub fn kid(&self, node: u32, local: u32, obs: usize) -> u32 {
        let n = &self.nodes[node as usize];
        if n.kids.is_empty() {
            NONE
        } else {
            n.kids[local as usize * self.n_obs + obs]
        }
    }

    /// Children of `node` after local action `local`.
    pub fn kids_of(&self, node: u32, local: u32) -> impl Iterator<Item = u32> + '_ {
        let n = &self.nodes[node as usize];
        let range = if n.kids.is_empty() { 0..0 } else { local as usize * self.n_obs..(local as usize + 1) * self.n_obs };
        n.kids[range].iter().copied().filter(|&k| k != NONE)
    }

    /// Number of self-consistent deterministic policies rooted at each node, saturating.
    pub fn counts(&self) -> Vec<u128> {
        let mut c = vec![0u128; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let n = &self.nodes[i];
            c[i] = if n.kids.is_empty() {
                n.allowed.len() as u128
            } else {
                let mut total = 0u128;
                for li in 0..n.allowed.len() {
                    let prod = self
                        .kids_of(i as u32, li as u32)
                        .fold(1u128, |acc, k| acc.saturating_mul(c[k as usize]));
                    total = total.saturating_add(prod);
                }
                total
            };
        }
        c
    }

    pub fn total(&self, counts: &[u128]) -> u128 {
        self.roots.iter().fold(1u128, |acc, &r| acc.saturating_mul(counts[r as usize]))
    }

    /// The `index`-th self-consistent deterministic policy, as a local action per node.
    /// Nodes off the policy's own path keep [`NONE`].
    pub fn decode(&self, counts: &[u128], mut index: u128, out: &mut Vec<u32>) {
        out.clear();
        out.resize(self.nodes.len(), NONE);
        let mut stack: Vec<(u32, u128)> = Vec::new();
        for &r in &self.roots {
            let c = counts[r as usize];
            stack.push((r, index % c));
            index /= c;
        }
        while let Some((node, mut idx)) = stack.pop() {
            let n = &self.nodes[node as usize];
            for li in 0..n.allowed.len() {
                let c = self.kids_of(node, li as u32).fold(1u128, |acc, k| acc.saturating_mul(counts[k as usize]));
                if idx < c {
                    out[node as usize] = li as u32;
                    for k in self.kids_of(node, li as u32) {
                        let ck = counts[k as usize];
                        stack.push((k, idx % ck));
                        idx /= ck;
                    }
                    break;
                }
                idx -= c;
            }
        }
    }

    /// Nodes reachable from the roots when each node plays `choice[node]`.
    pub fn consistent_nodes(&self, choice: &[u32]) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack: Vec<u32> = self.roots.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            let li = choice[n as usize];
            if li != NONE {
                let mut ks: Vec<u32> = self.kids_of(n, li).collect();
                ks.reverse();
                stack.extend(ks);
            }
        }
        out.sort_unstable();
        out
    }

    /// A policy that plays `choice` on its own consistent nodes and `default` elsewhere.
    pub fn to_policy(&self, g: &Poag, choice: &[u32], default: usize) -> Policy {
        let mut pi = Policy::new(self.player, g.n_actions(self.player));
        for n in self.consistent_nodes(choice) {
            let node = &self.nodes[n as usize];
            let li = choice[n as usize];
            let a = if li == NONE { node.allowed.first().copied().unwrap_or(default) } else { node.allowed[li as usize] };
            pi.set_action(node.history.clone(), a);
        }
        pi.set_default(poag_game::point_mass(g.n_actions(self.player), default));
        pi
    }
}

fn init_support(g: &Poag, keep: impl Fn(usize) -> bool) -> Vec<(u32, u32)> {
    let mut v: Vec<(u32, u32)> =
        g.initial.iter().filter(|e| e.2 > 0.0 && keep(e.1)).map(|&(s, th, _)| (s as u32, th as u32)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// The tree of histories a stochastic policy can reach, with its action probabilities.
pub(crate) struct PolicyTree {
    pub tree: InfoTree,
    pub probs: Vec<Vec<f64>>,
    /// True where the policy has no rule and no default.
    pub undefined: Vec<bool>,
}

impl PolicyTree {
    pub fn build(
        g: &Poag,
        succ: &Succ,
        pi: &Policy,
        max_depth: usize,
        opponent: &[Vec<usize>],
        node_limit: usize,
    ) -> Result<PolicyTree, SolveError> {
        let n = g.n_actions(pi.player);
        let tree = InfoTree::build(g, succ, pi.player, max_depth, opponent, node_limit, |h, _| match pi.dist(h) {
            Some(d) if d.len() == n => (0..n).filter(|&a| d[a] > 0.0).collect(),
            _ => Vec::new(),
        })?;
        let mut probs = Vec::with_capacity(tree.nodes.len());
        let mut undefined = Vec::with_capacity(tree.nodes.len());
        for node in &tree.nodes {
            match pi.dist(&node.history) {
                Some(d) if d.len() == n => {
                    probs.push(node.allowed.iter().map(|&a| d[a]).collect());
                    undefined.push(false);
                }
                _ => {
                    probs.push(Vec::new());
                    undefined.push(true);
                }
            }
        }
        Ok(PolicyTree { tree, probs, undefined })
    }
}
