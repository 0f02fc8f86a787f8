//! Interference at the policy level: could A, at step `t`, switch to actions with the same
//! effect on transitions and rewards that make H's next observation strictly more
//! informative about the next state, whatever H has done so far?

use poag_blackwell::{at_most_as_informative, same_effect_at, ObservationFamily};
use poag_game::{Player, Poag, Policy};

use crate::classes::Reduction;
use crate::solve::{check_game, Restriction, Setup, SolveOptions};
use crate::tree::{InfoTree, PolicyTree, NONE};
use crate::SolveError;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Opt {
    Orig,
    Act(usize),
}

struct Infoset {
    node: u32,
    options: Vec<Opt>,
}

/// Per human partial policy: joint law of (s', oH) contributed by each infoset and option.
struct Scenario {
    /// `contrib[i][k]`, dense over `s' * noh + oh`.
    contrib: Vec<Vec<Vec<f64>>>,
    /// States with positive mass and the infosets that feed them.
    states: Vec<(usize, Vec<usize>)>,
}

/// An alternative assistant policy that differs from `pi_a` only at step `t` and makes
/// H's step-`t+1` observation family strictly more informative for every human partial
/// policy, if one exists.
pub fn policy_interferes_policy_level(
    g: &Poag,
    pi_a: &Policy,
    t: usize,
    opts: &SolveOptions,
) -> Result<Option<Policy>, SolveError> {
    check_game(g)?;
    if pi_a.player != Player::Assistant {
        return Err(SolveError::WrongPlayer { expected: Player::Assistant });
    }
    if t + 1 >= g.horizon {
        return Ok(None);
    }
    let setup = Setup::new(g, Reduction::Exact, opts.exec);
    let (nh, na, noh, ns) = (g.human_actions.len(), g.assistant_actions.len(), g.human_obs.len(), g.n_states());
    let all_h: Vec<Vec<usize>> = vec![(0..nh).collect(); g.horizon];
    let all_a: Vec<Vec<usize>> = vec![(0..na).collect(); g.horizon];
    let a_tree = PolicyTree::build(g, &setup.succ, pi_a, t + 1, &all_h, opts.node_limit)?;
    let infosets: Vec<Infoset> = a_tree
        .tree
        .nodes
        .iter()
        .enumerate()
        .filter(|(i, n)| n.depth == t && !a_tree.undefined[*i] && !n.allowed.is_empty())
        .map(|(i, n)| Infoset { node: i as u32, options: options(g, n.allowed.as_slice(), &a_tree.probs[i], &n.support) })
        .collect();
    if infosets.iter().all(|s| s.options.len() <= 1) {
        return Ok(None);
    }
    let r = Restriction::none();
    let h_tree = InfoTree::build(g, &setup.succ, Player::Human, t + 1, &all_a, opts.node_limit, |h, d| {
        setup.allowed(Player::Human, h, d, &r)
    })?;
    let counts = h_tree.counts();
    let n = h_tree.total(&counts);
    if n > opts.budget {
        return Err(SolveError::BudgetExceeded { what: "human partial policies", needed: n, budget: opts.budget });
    }
    let index_of: std::collections::HashMap<u32, usize> =
        infosets.iter().enumerate().map(|(i, s)| (s.node, i)).collect();
    let mut scenarios = Vec::with_capacity(n as usize);
    let mut choice = Vec::new();
    for k in 0..n {
        h_tree.decode(&counts, k, &mut choice);
        scenarios.push(scenario(g, &setup, &h_tree, &choice, &a_tree, &infosets, &index_of, t, ns, noh)?);
    }
    let order: Vec<usize> = (0..infosets.len()).filter(|&i| infosets[i].options.len() > 1).collect();
    let mut sigma: Vec<usize> = infosets.iter().map(|s| s.options.iter().position(|o| *o == Opt::Orig).unwrap_or(0)).collect();
    let orig = sigma.clone();
    let mut assigned: Vec<bool> = infosets.iter().map(|s| s.options.len() <= 1).collect();
    let mut visits = 0u128;
    let found = dfs(&infosets, &scenarios, &order, 0, &mut sigma, &orig, &mut assigned, noh, &mut visits, opts.budget)?;
    if !found {
        return Ok(None);
    }
    let mut alt = pi_a.clone();
    for (i, s) in infosets.iter().enumerate() {
        if let Opt::Act(a) = s.options[sigma[i]] {
            if sigma[i] != orig[i] {
                alt.set_action(a_tree.tree.nodes[s.node as usize].history.clone(), a);
            }
        }
    }
    Ok(Some(alt))
}

/// True iff `pi_a` interferes at the policy level at some step.
pub fn interferes_at_any_step(g: &Poag, pi_a: &Policy, opts: &SolveOptions) -> Result<bool, SolveError> {
    for t in 0..g.horizon.saturating_sub(1) {
        if policy_interferes_policy_level(g, pi_a, t, opts)?.is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Same-effect alternatives at an infoset, one per distinct human observation kernel.
fn options(g: &Poag, supp: &[usize], probs: &[f64], support: &[(u32, u32)]) -> Vec<Opt> {
    let nh = g.human_actions.len();
    let effect_ok = |c: usize| {
        supp.iter().all(|&a0| support.iter().all(|&(s, _)| (0..nh).all(|ah| same_effect_at(g, s as usize, ah, a0, c))))
    };
    let kernel = |c: usize| -> Vec<f64> {
        let mut v = Vec::new();
        for &(s, _) in support {
            for ah in 0..nh {
                for &(s2, _) in g.transition(s as usize, ah, c) {
                    v.extend(g.marginal_obs(Player::Human, s2, ah, c));
                }
            }
        }
        v
    };
    let same = |x: &[f64], y: &[f64]| x.len() == y.len() && x.iter().zip(y).all(|(a, b)| (a - b).abs() <= 1e-12);
    let deterministic = supp.len() == 1 || probs.iter().filter(|&&p| p > 0.0).count() == 1;
    let a0 = supp[probs.iter().position(|&p| p > 0.0).unwrap_or(0)];
    let mut out: Vec<(Opt, Vec<f64>)> = Vec::new();
    if !deterministic {
        out.push((Opt::Orig, Vec::new()));
    }
    let cands: Vec<usize> = (0..g.assistant_actions.len()).filter(|&c| effect_ok(c)).collect();
    let orig_kernel = kernel(a0);
    for c in cands {
        let k = kernel(c);
        if deterministic && c != a0 && same(&k, &orig_kernel) {
            continue;
        }
        if out.iter().any(|(o, k2)| *o != Opt::Orig && same(k2, &k)) {
            continue;
        }
        let opt = if deterministic && c == a0 { Opt::Orig } else { Opt::Act(c) };
        out.push((opt, k));
    }
    out.into_iter().map(|e| e.0).collect()
}

#[allow(clippy::too_many_arguments)]
fn scenario(
    g: &Poag,
    setup: &Setup,
    h_tree: &InfoTree,
    choice: &[u32],
    a_tree: &PolicyTree,
    infosets: &[Infoset],
    index_of: &std::collections::HashMap<u32, usize>,
    t: usize,
    ns: usize,
    noh: usize,
) -> Result<Scenario, SolveError> {
    // (s, theta, human node, assistant node, weight)
    let mut layer: Vec<(usize, usize, u32, u32, f64)> = Vec::new();
    for &(s, th, p) in &g.initial {
        let hr = h_tree.root_of_theta[th];
        if p > 0.0 && hr != NONE {
            layer.push((s, th, hr, a_tree.tree.roots[0], p));
        }
    }
    for _ in 0..t {
        let mut next = Vec::new();
        for &(s, th, hn, an, w) in &layer {
            if a_tree.undefined[an as usize] {
                return Err(SolveError::UndefinedHistory(a_tree.tree.nodes[an as usize].history.clone()));
            }
            let hl = choice[hn as usize];
            let ah = h_tree.nodes[hn as usize].allowed[hl as usize];
            let anode = &a_tree.tree.nodes[an as usize];
            for (al, (&aa, &pa)) in anode.allowed.iter().zip(&a_tree.probs[an as usize]).enumerate() {
                if pa <= 0.0 {
                    continue;
                }
                for &(s2, oh, oa, pp) in setup.succ.get(s, ah, aa) {
                    let hk = h_tree.kid(hn, hl, oh as usize);
                    let ak = a_tree.tree.kid(an, al as u32, oa as usize);
                    if hk != NONE && ak != NONE {
                        next.push((s2 as usize, th, hk, ak, w * pa * pp));
                    }
                }
            }
        }
        layer = next;
    }
    let mut contrib: Vec<Vec<Vec<f64>>> =
        infosets.iter().map(|s| vec![vec![0.0; ns * noh]; s.options.len()]).collect();
    for &(s, _, hn, an, w) in &layer {
        let Some(&i) = index_of.get(&an) else { continue };
        let hl = choice[hn as usize];
        let ah = h_tree.nodes[hn as usize].allowed[hl as usize];
        let anode = &a_tree.tree.nodes[an as usize];
        for (k, opt) in infosets[i].options.iter().enumerate() {
            let mix: Vec<(usize, f64)> = match opt {
                Opt::Orig => anode.allowed.iter().copied().zip(a_tree.probs[an as usize].iter().copied()).collect(),
                Opt::Act(c) => vec![(*c, 1.0)],
            };
            for (aa, pa) in mix {
                for &(s2, oh, _, pp) in setup.succ.get(s, ah, aa) {
                    contrib[i][k][s2 as usize * noh + oh as usize] += w * pa * pp;
                }
            }
        }
    }
    let mut states = Vec::new();
    for s2 in 0..ns {
        let feeds: Vec<usize> = (0..infosets.len())
            .filter(|&i| {
                let k = infosets[i].options.iter().position(|o| *o == Opt::Orig).unwrap_or(0);
                contrib[i][k][s2 * noh..(s2 + 1) * noh].iter().sum::<f64>() > 0.0
            })
            .collect();
        if !feeds.is_empty() {
            states.push((s2, feeds));
        }
    }
    Ok(Scenario { contrib, states })
}

/// Families over the complete states of `sc` under assignments `a` and `b`.
fn families(
    sc: &Scenario,
    a: &[usize],
    b: &[usize],
    assigned: &[bool],
    noh: usize,
) -> Option<(ObservationFamily, ObservationFamily)> {
    let mut states = Vec::new();
    let (mut da, mut db) = (Vec::new(), Vec::new());
    for (s2, feeds) in &sc.states {
        if !feeds.iter().all(|&i| assigned[i]) {
            continue;
        }
        let row = |sig: &[usize]| -> Vec<f64> {
            let mut r = vec![0.0; noh];
            for &i in feeds {
                for (o, v) in sc.contrib[i][sig[i]][s2 * noh..(s2 + 1) * noh].iter().enumerate() {
                    r[o] += v;
                }
            }
            let z: f64 = r.iter().sum();
            r.iter_mut().for_each(|v| *v /= z);
            r
        };
        states.push(*s2);
        da.push(row(a));
        db.push(row(b));
    }
    if states.is_empty() {
        return None;
    }
    Some((ObservationFamily::new(states.clone(), da).ok()?, ObservationFamily::new(states, db).ok()?))
}

fn at_least(alt: &ObservationFamily, orig: &ObservationFamily) -> bool {
    matches!(at_most_as_informative(orig, alt), Ok(Some(_)))
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    infosets: &[Infoset],
    scenarios: &[Scenario],
    order: &[usize],
    pos: usize,
    sigma: &mut Vec<usize>,
    orig: &[usize],
    assigned: &mut Vec<bool>,
    noh: usize,
    visits: &mut u128,
    budget: u128,
) -> Result<bool, SolveError> {
    *visits += 1;
    if *visits > budget {
        return Err(SolveError::BudgetExceeded { what: "policy-level search", needed: *visits, budget });
    }
    if pos == order.len() {
        let strict = scenarios.iter().all(|sc| match families(sc, sigma, orig, assigned, noh) {
            Some((alt, base)) => at_least(&alt, &base) && !at_least(&base, &alt),
            None => false,
        });
        return Ok(strict);
    }
    let i = order[pos];
    assigned[i] = true;
    for k in 0..infosets[i].options.len() {
        sigma[i] = k;
        let ok = scenarios.iter().all(|sc| match families(sc, sigma, orig, assigned, noh) {
            Some((alt, base)) => at_least(&alt, &base),
            None => true,
        });
        if ok && dfs(infosets, scenarios, order, pos + 1, sigma, orig, assigned, noh, visits, budget)? {
            return Ok(true);
        }
    }
    sigma[i] = orig[i];
    assigned[i] = false;
    Ok(false)
}
