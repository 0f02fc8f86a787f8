//! Naive observation and naive action by the human.

use poag_blackwell::simplex::feasible;
use poag_game::par;
use poag_game::{History, Player, Poag, Policy};

use crate::engine::{backward_max, evaluate_choice, forward, DetSide};
use crate::solve::{check_game, Restriction, Setup, SolveOptions};
use crate::tree::{InfoTree, PolicyTree};
use crate::SolveError;

/// A deterministic assistant policy that never plays a flagged action and to which `pi_h`
/// is a best response, if one exists. Candidates are tried in enumeration order.
pub fn observes_naively(g: &Poag, pi_h: &Policy, opts: &SolveOptions) -> Result<Option<Policy>, SolveError> {
    check_game(g)?;
    if pi_h.player != Player::Human {
        return Err(SolveError::WrongPlayer { expected: Player::Human });
    }
    let setup = Setup::new(g, opts.reduction, opts.exec);
    let r = Restriction::non_flagged();
    let all_h: Vec<Vec<usize>> = vec![(0..g.human_actions.len()).collect(); g.horizon];
    let a_tree = InfoTree::build(g, &setup.succ, Player::Assistant, g.horizon, &all_h, opts.node_limit, |h, d| {
        setup.allowed(Player::Assistant, h, d, &r)
    })?;
    let counts = a_tree.counts();
    let n = a_tree.total(&counts);
    if n > opts.budget {
        return Err(SolveError::BudgetExceeded { what: "assistant policies", needed: n, budget: opts.budget });
    }
    // Value of pi_h against every candidate comes from one forward pass over A's tree.
    let a_opp: Vec<Vec<usize>> = (0..g.horizon).map(|t| setup.possible(Player::Assistant, t, &r)).collect();
    let h_fixed = PolicyTree::build(g, &setup.succ, pi_h, g.horizon, &a_opp, opts.node_limit)?;
    let fw_a = forward(g, &setup.succ, &a_tree, &h_fixed, false).map_err(SolveError::UndefinedHistory)?;
    let h_tree = setup.rep_tree(g, Player::Human, &r, opts)?;
    let found = par::find_first(opts.exec, n as usize, |i| {
        let mut choice = Vec::new();
        a_tree.decode(&counts, i as u128, &mut choice);
        let mine = evaluate_choice(g, &a_tree, &fw_a, &choice);
        let side = DetSide { tree: &a_tree, choice: &choice };
        let fw = forward(g, &setup.succ, &h_tree, &side, false).ok()?;
        let bw = backward_max(g, &h_tree, &fw);
        let best: f64 = h_tree.roots.iter().map(|&r| bw.value[r as usize]).sum();
        (mine >= best - opts.tol * best.abs().max(1.0)).then_some(choice)
    });
    Ok(found.map(|(_, choice)| a_tree.to_policy(g, &choice, setup.default_action(Player::Assistant))))
}

/// Slack allowed when comparing expected immediate rewards.
const NAIVE_TOL: f64 = 1e-9;

/// True iff at every history that has positive probability under the pair and where H's
/// action cannot change the transition, every action `pi_h` may play maximizes expected
/// immediate reward against some distribution over A's actions.
pub fn acts_naively(g: &Poag, pi_h: &Policy, pi_a: &Policy) -> Result<bool, SolveError> {
    Ok(naive_violation(g, pi_h, pi_a)?.is_none())
}

/// The first history (breadth-first) where `pi_h` fails to act naively.
pub fn naive_violation(g: &Poag, pi_h: &Policy, pi_a: &Policy) -> Result<Option<History>, SolveError> {
    check_game(g)?;
    if pi_h.player != Player::Human {
        return Err(SolveError::WrongPlayer { expected: Player::Human });
    }
    if pi_a.player != Player::Assistant {
        return Err(SolveError::WrongPlayer { expected: Player::Assistant });
    }
    let setup = Setup::new(g, crate::Reduction::Exact, par::Exec::Sequential);
    let (nh, na) = (g.human_actions.len(), g.assistant_actions.len());
    let all_a: Vec<Vec<usize>> = vec![(0..na).collect(); g.horizon];
    let all_h: Vec<Vec<usize>> = vec![(0..nh).collect(); g.horizon];
    let limit = SolveOptions::default().node_limit;
    // H's tree follows pi_h's support only, so it stays small.
    let h_tree = PolicyTree::build(g, &setup.succ, pi_h, g.horizon, &all_a, limit)?;
    let a_tree = PolicyTree::build(g, &setup.succ, pi_a, g.horizon, &all_h, limit)?;
    let fw = forward(g, &setup.succ, &h_tree.tree, &a_tree, true).map_err(SolveError::UndefinedHistory)?;
    let parts = fw.particles.as_ref().expect("particles were kept");
    for (i, node) in h_tree.tree.nodes.iter().enumerate() {
        if fw.mass[i] <= 0.0 {
            continue;
        }
        if h_tree.undefined[i] {
            return Err(SolveError::UndefinedHistory(node.history.clone()));
        }
        let inert = node.support.iter().all(|&(s, _)| {
            (0..na).all(|aa| (1..nh).all(|ah| same_row(g.transition(s as usize, 0, aa), g.transition(s as usize, ah, aa))))
        });
        if !inert {
            continue;
        }
        let th = node.history.theta.expect("human histories carry theta");
        let mut rbar = vec![vec![0.0; na]; nh];
        for p in &parts[i] {
            for (ah, row) in rbar.iter_mut().enumerate() {
                for (aa, v) in row.iter_mut().enumerate() {
                    *v += p.w * g.reward(p.s as usize, ah, aa, th);
                }
            }
        }
        for row in rbar.iter_mut() {
            for v in row.iter_mut() {
                *v /= fw.mass[i];
            }
        }
        if !undominated(&rbar, &node.allowed) {
            return Ok(Some(node.history.clone()));
        }
    }
    Ok(None)
}

fn same_row(x: &[(usize, f64)], y: &[(usize, f64)]) -> bool {
    let mass = |row: &[(usize, f64)], s: usize| row.iter().filter(|e| e.0 == s).map(|e| e.1).sum::<f64>();
    x.iter().chain(y).all(|&(s, _)| (mass(x, s) - mass(y, s)).abs() <= 1e-12)
}

/// Whether some belief over A's actions makes every action in `support` a maximizer of
/// `rbar[ah][aa]`. Decided as a feasibility program over the belief and slack variables.
fn undominated(rbar: &[Vec<f64>], support: &[usize]) -> bool {
    let (nh, na) = (rbar.len(), rbar[0].len());
    let pairs: Vec<(usize, usize)> =
        support.iter().flat_map(|&a| (0..nh).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    let nv = na + pairs.len();
    let mut rows = Vec::with_capacity(1 + pairs.len());
    let mut rhs = Vec::with_capacity(1 + pairs.len());
    let mut sum = vec![0.0; nv];
    sum[..na].iter_mut().for_each(|v| *v = 1.0);
    rows.push(sum);
    rhs.push(1.0);
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let mut row = vec![0.0; nv];
        for aa in 0..na {
            row[aa] = rbar[a][aa] - rbar[b][aa];
        }
        row[na + k] = -1.0;
        rows.push(row);
        rhs.push(-NAIVE_TOL);
    }
    feasible(&rows, &rhs).solution.is_some()
}
