//! Existence checks for clean optimal pairs.
//!
//! Each check first tries exact enumeration. When the game is too large, it falls back to
//! alternating best responses from a few seeds; a pair found that way only counts when its
//! value reaches an upper bound on every pair's value.

use std::fmt;
use std::ops::ControlFlow;

use poag_game::{Player, Poag, Policy};

use crate::channel::{add_channel_with_layout, ChannelLayout, Direction, MessageSet};
use crate::naive::acts_naively;
use crate::policy_level::interferes_at_any_step;
use crate::solve::{
    best_response, best_response_restricted, for_each_best_response, for_each_optimal_pair, optimal_value,
    optimal_value_restricted, Restriction, Setup, SolveOptions,
};
use crate::{Reduction, SolveError};

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Holds(String),
    Violated(String),
    Skipped(String),
}

impl Verdict {
    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated(_))
    }
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds(s) => write!(f, "holds: {s}"),
            Verdict::Violated(s) => write!(f, "VIOLATED: {s}"),
            Verdict::Skipped(s) => write!(f, "skipped: {s}"),
        }
    }
}

fn skip(e: SolveError) -> Verdict {
    Verdict::Skipped(e.to_string())
}

/// Value when both players see the state and theta and act jointly. Bounds every pair.
pub fn full_information_value(g: &Poag) -> f64 {
    let (ns, nt) = (g.n_states(), g.n_thetas());
    let mut next = vec![vec![0.0; nt]; ns];
    for _ in 0..g.horizon {
        let mut cur = vec![vec![0.0; nt]; ns];
        for s in 0..ns {
            for th in 0..nt {
                let mut best = f64::NEG_INFINITY;
                for ah in 0..g.human_actions.len() {
                    for aa in 0..g.assistant_actions.len() {
                        let cont: f64 = g.transition(s, ah, aa).iter().map(|&(s2, p)| p * next[s2][th]).sum();
                        best = best.max(g.reward(s, ah, aa, th) + g.gamma * cont);
                    }
                }
                cur[s][th] = best;
            }
        }
        next = cur;
    }
    g.initial.iter().map(|&(s, th, p)| p * next[s][th]).sum()
}

/// With no private information for A, some optimal pair has an assistant that never
/// plays an interfering action.
pub fn check_clean_optimum(g: &Poag, opts: &SolveOptions) -> Verdict {
    if !g.has_no_private_info(Player::Assistant).holds() {
        return Verdict::Skipped("assistant has private information".into());
    }
    let v = match optimal_value(g, opts) {
        Ok(v) => v,
        Err(e) => return skip(e),
    };
    let vr = match optimal_value_restricted(g, &Restriction::non_flagged(), opts) {
        Ok(v) => v,
        Err(e) => return skip(e),
    };
    if vr >= v - opts.tol_at(v) {
        Verdict::Holds(format!("restricted optimum {vr} matches {v}"))
    } else {
        Verdict::Violated(format!("restricted optimum {vr} below {v}"))
    }
}

/// Some optimal pair has an assistant that is clean at the policy level at every step.
pub fn check_policy_level_clean(g: &Poag, opts: &SolveOptions) -> Verdict {
    let o = SolveOptions { reduction: Reduction::Exact, ..opts.clone() };
    let mut checked: Vec<Policy> = Vec::new();
    let mut found = None;
    let mut err = None;
    let search = for_each_optimal_pair(g, &Restriction::none(), &o, |_, a, _| {
        if checked.contains(a) {
            return ControlFlow::Continue(());
        }
        match interferes_at_any_step(g, a, &o) {
            Ok(false) => {
                found = Some(a.clone());
                ControlFlow::Break(())
            }
            Ok(true) => {
                checked.push(a.clone());
                ControlFlow::Continue(())
            }
            Err(e) => {
                err = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    let search = match search {
        Ok(s) => s,
        Err(e) => return skip(e),
    };
    if let Some(e) = err {
        return skip(e);
    }
    match found {
        Some(_) => Verdict::Holds(format!("clean optimal assistant after {} pairs", search.pairs_seen)),
        None if search.truncated => {
            Verdict::Skipped(format!("no clean assistant among the first {} optimal pairs", search.pairs_seen))
        }
        None => Verdict::Violated(format!("all {} optimal assistants interfere", checked.len())),
    }
}

/// After adding an A→H channel, some optimal pair has a non-interfering assistant.
pub fn check_channel_clean(g: &Poag, opts: &SolveOptions) -> Verdict {
    channel_check(g, Direction::AtoH, false, opts)
}

/// After adding channels both ways, some optimal pair has a non-interfering assistant and
/// a human who acts naively.
pub fn check_honest_naive(g: &Poag, opts: &SolveOptions) -> Verdict {
    channel_check(g, Direction::Both, true, opts)
}

fn channel_check(g: &Poag, dir: Direction, need_naive: bool, opts: &SolveOptions) -> Verdict {
    let (cg, lay) = add_channel_with_layout(g, dir, MessageSet::Effective);
    let r = Restriction::non_flagged();
    let exact = match optimal_value(&cg, opts) {
        Ok(v) => Some(v),
        Err(SolveError::BudgetExceeded { .. }) => None,
        Err(e) => return skip(e),
    };
    if let Some(vstar) = exact {
        match exact_channel(&cg, &r, vstar, need_naive, opts) {
            Err(SolveError::BudgetExceeded { .. }) => {}
            Err(e) => return skip(e),
            Ok(v) => return v,
        }
    }
    let (bound, kind) = match exact {
        Some(v) => (v, "optimum"),
        None => (full_information_value(&cg), "full-information bound"),
    };
    match certify(&cg, &lay, &r, bound, need_naive, opts) {
        Ok(Some(v)) => Verdict::Holds(format!("pair of value {v} reaches the {kind} {bound}")),
        Ok(None) => Verdict::Skipped(format!("no certified pair reaching the {kind} {bound}")),
        Err(e) => skip(e),
    }
}

fn exact_channel(cg: &Poag, r: &Restriction, vstar: f64, need_naive: bool, opts: &SolveOptions) -> Result<Verdict, SolveError> {
    let tol = opts.tol_at(vstar);
    if !need_naive {
        let vr = optimal_value_restricted(cg, r, opts)?;
        return Ok(if vr >= vstar - tol {
            Verdict::Holds(format!("restricted optimum {vr} matches {vstar}"))
        } else {
            Verdict::Violated(format!("restricted optimum {vr} below {vstar}"))
        });
    }
    let mut found = false;
    let mut err = None;
    let search = for_each_optimal_pair(cg, r, opts, |h, a, _| match acts_naively(cg, h, a) {
        Ok(true) => {
            found = true;
            ControlFlow::Break(())
        }
        Ok(false) => ControlFlow::Continue(()),
        Err(e) => {
            err = Some(e);
            ControlFlow::Break(())
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(if search.value < vstar - tol {
        Verdict::Violated(format!("restricted optimum {} below {vstar}", search.value))
    } else if found {
        Verdict::Holds(format!("naive pair at the optimum {vstar}"))
    } else if search.truncated {
        Verdict::Skipped(format!("no naive pair among the first {} optimal pairs", search.pairs_seen))
    } else {
        Verdict::Violated(format!("none of the {} optimal restricted pairs is naive", search.pairs_seen))
    })
}

const MAX_ROUNDS: usize = 8;

/// Alternating best responses from an honest assistant and, when H can talk, from a human
/// who announces theta. Returns the value of a pair that reaches `bound`.
fn certify(
    cg: &Poag,
    lay: &ChannelLayout,
    r: &Restriction,
    bound: f64,
    need_naive: bool,
    opts: &SolveOptions,
) -> Result<Option<f64>, SolveError> {
    let setup = Setup::new(cg, opts.reduction, opts.exec);
    let tol = opts.tol_at(bound);
    let mut seeds: Vec<Policy> = Vec::new();
    let honest = {
        let l = lay.clone();
        Restriction {
            assistant_allowed: Some(std::sync::Arc::new(move |h, a| l.honest_assistant(h, a))),
            ..Restriction::non_flagged()
        }
    };
    let a_tree = setup.rep_tree(cg, Player::Assistant, &honest, opts)?;
    seeds.push(a_tree.to_policy(cg, &vec![0; a_tree.nodes.len()], setup.default_action(Player::Assistant)));
    let mh = lay.human_messages.len();
    if mh > 0 {
        let l = lay.clone();
        let announce = Restriction {
            human_allowed: Some(std::sync::Arc::new(move |h, a| {
                let th = h.theta.unwrap_or(0);
                l.action(Player::Human, a).1.is_none_or(|m| m == th % mh)
            })),
            ..Restriction::none()
        };
        // Uniform over everything else, so A learns to read the message at every history.
        let h_tree = setup.rep_tree(cg, Player::Human, &announce, opts)?;
        let nh = cg.human_actions.len();
        let mut h0 = Policy::uniform(Player::Human, nh);
        for node in &h_tree.nodes {
            let mut d = vec![0.0; nh];
            for &a in &node.allowed {
                d[a] = 1.0 / node.allowed.len() as f64;
            }
            h0.set(node.history.clone(), d);
        }
        seeds.push(h0);
    }
    for seed in seeds {
        let mut a = match seed.player {
            Player::Assistant => seed,
            Player::Human => best_response_restricted(cg, &seed, r, opts)?.0,
        };
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..MAX_ROUNDS {
            let (h, v) = best_response(cg, &a, opts)?;
            if v >= bound - tol {
                if !need_naive {
                    return Ok(Some(v));
                }
                let mut naive = false;
                let mut err = None;
                for_each_best_response(cg, &a, &Restriction::none(), opts, |hh| match acts_naively(cg, hh, &a) {
                    Ok(true) => {
                        naive = true;
                        ControlFlow::Break(())
                    }
                    Ok(false) => ControlFlow::Continue(()),
                    Err(e) => {
                        err = Some(e);
                        ControlFlow::Break(())
                    }
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
                if naive {
                    return Ok(Some(v));
                }
            }
            if v <= prev + tol {
                break;
            }
            prev = v;
            a = best_response_restricted(cg, &h, r, opts)?.0;
        }
    }
    Ok(None)
}
