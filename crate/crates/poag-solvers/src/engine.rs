//! Forward and backward passes over one player's tree against a fixed opponent.

use poag_game::{History, Player, Poag};

use crate::classes::Succ;
use crate::tree::{InfoTree, PolicyTree, NONE};

/// The fixed player's side: what it plays at a node and where it moves next.
pub(crate) trait Opponent: Sync {
    fn tree(&self) -> &InfoTree;
    /// `(action, local index, probability)` triples at `node`. Empty if undefined.
    fn acts(&self, node: u32, out: &mut Vec<(usize, u32, f64)>);
    fn defined(&self, _node: u32) -> bool {
        true
    }
}

/// A deterministic policy on an enumeration tree, one local action per node.
pub(crate) struct DetSide<'a> {
    pub tree: &'a InfoTree,
    pub choice: &'a [u32],
}

impl Opponent for DetSide<'_> {
    fn tree(&self) -> &InfoTree {
        self.tree
    }
    fn acts(&self, node: u32, out: &mut Vec<(usize, u32, f64)>) {
        out.clear();
        let li = self.choice[node as usize];
        if li != NONE {
            out.push((self.tree.nodes[node as usize].allowed[li as usize], li, 1.0));
        }
    }
}

impl Opponent for PolicyTree {
    fn tree(&self) -> &InfoTree {
        &self.tree
    }
    fn acts(&self, node: u32, out: &mut Vec<(usize, u32, f64)>) {
        out.clear();
        let n = &self.tree.nodes[node as usize];
        for (li, (&a, &p)) in n.allowed.iter().zip(&self.probs[node as usize]).enumerate() {
            out.push((a, li as u32, p));
        }
    }
    fn defined(&self, node: u32) -> bool {
        !self.undefined[node as usize]
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Particle {
    pub s: u32,
    pub th: u32,
    pub x: u32,
    pub w: f64,
}

pub(crate) struct Forward {
    /// Probability of reaching each node if the responder plays its history's actions.
    pub mass: Vec<f64>,
    /// Unnormalized expected immediate reward of each local action.
    pub q_imm: Vec<Vec<f64>>,
    /// Merged particles per node, when requested.
    pub particles: Option<Vec<Vec<Particle>>>,
}

fn merge(ps: &mut Vec<Particle>) {
    ps.sort_unstable_by_key(|p| (p.s, p.th, p.x));
    let mut out: Vec<Particle> = Vec::with_capacity(ps.len());
    for p in ps.drain(..) {
        match out.last_mut() {
            Some(l) if (l.s, l.th, l.x) == (p.s, p.th, p.x) => l.w += p.w,
            _ => out.push(p),
        }
    }
    *ps = out;
}

/// Pushes the joint law forward through `ytree` with the opponent fixed.
///
/// Errors with the opponent's history when a reachable opponent node has no rule.
pub(crate) fn forward<O: Opponent + ?Sized>(
    g: &Poag,
    succ: &Succ,
    ytree: &InfoTree,
    x: &O,
    keep: bool,
) -> Result<Forward, History> {
    let n = ytree.nodes.len();
    let xtree = x.tree();
    let mut parts: Vec<Vec<Particle>> = vec![Vec::new(); n];
    for &(s, th, p) in &g.initial {
        if p <= 0.0 {
            continue;
        }
        let (y, xr) = match ytree.player {
            Player::Human => (ytree.root_of_theta[th], xtree.root_of_theta[th]),
            Player::Assistant => (ytree.roots[0], xtree.root_of_theta[th]),
        };
        if y == NONE || xr == NONE {
            continue;
        }
        parts[y as usize].push(Particle { s: s as u32, th: th as u32, x: xr, w: p });
    }
    let mut mass = vec![0.0; n];
    let mut q_imm: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut kept: Vec<Vec<Particle>> = if keep { Vec::with_capacity(n) } else { Vec::new() };
    let mut acts = Vec::new();
    for y in 0..n {
        let mut ps = std::mem::take(&mut parts[y]);
        merge(&mut ps);
        let node = &ytree.nodes[y];
        let mut q = vec![0.0; node.allowed.len()];
        let leaf = node.kids.is_empty();
        for p in &ps {
            mass[y] += p.w;
            if !x.defined(p.x) {
                if p.w > 0.0 {
                    return Err(xtree.nodes[p.x as usize].history.clone());
                }
                continue;
            }
            x.acts(p.x, &mut acts);
            for &(xa, xl, px) in &acts {
                if px <= 0.0 {
                    continue;
                }
                let wx = p.w * px;
                for (li, &ya) in node.allowed.iter().enumerate() {
                    let (ah, aa) = match ytree.player {
                        Player::Human => (ya, xa),
                        Player::Assistant => (xa, ya),
                    };
                    q[li] += wx * g.reward(p.s as usize, ah, aa, p.th as usize);
                    if leaf {
                        continue;
                    }
                    for &(s2, oh, oa, pp) in succ.get(p.s as usize, ah, aa) {
                        let (yo, xo) = match ytree.player {
                            Player::Human => (oh, oa),
                            Player::Assistant => (oa, oh),
                        };
                        let yk = ytree.kid(y as u32, li as u32, yo as usize);
                        let xk = xtree.kid(p.x, xl, xo as usize);
                        if yk == NONE || xk == NONE {
                            continue;
                        }
                        parts[yk as usize].push(Particle { s: s2, th: p.th, x: xk, w: wx * pp });
                    }
                }
            }
        }
        q_imm.push(q);
        if keep {
            kept.push(ps);
        }
    }
    Ok(Forward { mass, q_imm, particles: keep.then_some(kept) })
}

/// Tie tolerance used when comparing action values at a node.
pub(crate) fn tie_tol(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

pub(crate) struct Backward {
    pub value: Vec<f64>,
    pub choice: Vec<u32>,
    /// Action values per node, unnormalized.
    pub q: Vec<Vec<f64>>,
}

/// Backward induction with lowest-index tie-breaking. Zero-mass nodes take local action 0.
pub(crate) fn backward_max(g: &Poag, ytree: &InfoTree, fw: &Forward) -> Backward {
    let n = ytree.nodes.len();
    let mut value = vec![0.0; n];
    let mut choice = vec![NONE; n];
    let mut qs = vec![Vec::new(); n];
    for y in (0..n).rev() {
        let node = &ytree.nodes[y];
        if node.allowed.is_empty() {
            continue;
        }
        let q: Vec<f64> = (0..node.allowed.len())
            .map(|li| {
                fw.q_imm[y][li] + g.gamma * ytree.kids_of(y as u32, li as u32).map(|k| value[k as usize]).sum::<f64>()
            })
            .collect();
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = tie_tol(best);
        let li = if fw.mass[y] > 0.0 { q.iter().position(|&v| v >= best - tol).unwrap_or(0) } else { 0 };
        value[y] = best;
        choice[y] = li as u32;
        qs[y] = q;
    }
    Backward { value, choice, q: qs }
}

/// Value of a fixed choice per node, given forward immediate rewards.
pub(crate) fn evaluate_choice(g: &Poag, ytree: &InfoTree, fw: &Forward, choice: &[u32]) -> f64 {
    let n = ytree.nodes.len();
    let mut value = vec![0.0; n];
    for y in (0..n).rev() {
        let li = choice[y];
        if li == NONE {
            continue;
        }
        value[y] = fw.q_imm[y][li as usize] + g.gamma * ytree.kids_of(y as u32, li).map(|k| value[k as usize]).sum::<f64>();
    }
    ytree.roots.iter().map(|&r| value[r as usize]).sum()
}

/// Softmax backward pass. Returns action probabilities per node; zero-mass nodes are uniform.
pub(crate) fn backward_soft(g: &Poag, ytree: &InfoTree, fw: &Forward, beta: f64) -> Vec<Vec<f64>> {
    let n = ytree.nodes.len();
    let mut vun = vec![0.0; n];
    let mut pis = vec![Vec::new(); n];
    for y in (0..n).rev() {
        let node = &ytree.nodes[y];
        let k = node.allowed.len();
        if k == 0 {
            continue;
        }
        let qun: Vec<f64> = (0..k)
            .map(|li| fw.q_imm[y][li] + g.gamma * ytree.kids_of(y as u32, li as u32).map(|c| vun[c as usize]).sum::<f64>())
            .collect();
        let m = fw.mass[y];
        let pi = if m > 0.0 {
            let q: Vec<f64> = qun.iter().map(|v| v / m).collect();
            softmax(&q, beta)
        } else {
            vec![1.0 / k as f64; k]
        };
        vun[y] = pi.iter().zip(&qun).map(|(p, v)| p * v).sum();
        pis[y] = pi;
    }
    pis
}

pub(crate) fn softmax(q: &[f64], beta: f64) -> Vec<f64> {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = q.iter().map(|v| (beta * (v - m)).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}
