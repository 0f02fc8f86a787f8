use poag_game::{Player, Poag, Policy};

use crate::classes::Succ;
use crate::engine::{backward_soft, forward};
use crate::solve::{check_game, SolveOptions};
use crate::tree::{InfoTree, PolicyTree};
use crate::SolveError;

/// Boltzmann-rational response of H to `pi_a`: at every history,
/// `pi(a | h) ∝ exp(beta * Q(h, a))`, where `Q` continues under the response itself.
///
/// Histories of probability zero get the uniform distribution, which is also the default.
pub fn boltzmann_response(g: &Poag, pi_a: &Policy, beta: f64) -> Result<Policy, SolveError> {
    check_game(g)?;
    if pi_a.player != Player::Assistant {
        return Err(SolveError::WrongPlayer { expected: Player::Assistant });
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(SolveError::InvalidArgument(format!("beta must be positive and finite, got {beta}")));
    }
    let succ = Succ::new(g);
    let (nh, na) = (g.human_actions.len(), g.assistant_actions.len());
    let all_a: Vec<Vec<usize>> = vec![(0..na).collect(); g.horizon];
    let all_h: Vec<Vec<usize>> = vec![(0..nh).collect(); g.horizon];
    let limit = SolveOptions::default().node_limit;
    let h_tree = InfoTree::build(g, &succ, Player::Human, g.horizon, &all_a, limit, |_, _| (0..nh).collect())?;
    let a_tree = PolicyTree::build(g, &succ, pi_a, g.horizon, &all_h, limit)?;
    let fw = forward(g, &succ, &h_tree, &a_tree, false).map_err(SolveError::UndefinedHistory)?;
    let pis = backward_soft(g, &h_tree, &fw, beta);
    let mut pi = Policy::uniform(Player::Human, nh);
    for (node, d) in h_tree.nodes.iter().zip(pis) {
        pi.set(node.history.clone(), d);
    }
    Ok(pi)
}
