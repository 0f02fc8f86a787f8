//! Optimal policy pairs and best responses by exhaustive enumeration.

use std::ops::ControlFlow;
use std::sync::Arc;

use poag_blackwell::{flagged_mask, interfering_actions_with, policy_interferes_with_mask};
use poag_game::par::{self, Exec};
use poag_game::{History, Player, Poag, Policy};

use crate::classes::{step_classes, Reduction, StepClasses, Succ};
use crate::engine::{backward_max, forward, tie_tol, Backward, DetSide, Forward};
use crate::tree::{InfoTree, PolicyTree};
use crate::SolveError;

/// Default cap on the number of policies enumerated.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

/// A predicate on (own history, action).
pub type ActionFilter = Arc<dyn Fn(&History, usize) -> bool + Send + Sync>;

/// Limits the actions a player may use.
#[derive(Clone, Default)]
pub struct Restriction {
    /// A never plays an action flagged as observation-interfering.
    pub assistant_non_flagged: bool,
    pub assistant_allowed: Option<ActionFilter>,
    pub human_allowed: Option<ActionFilter>,
}

impl Restriction {
    pub fn none() -> Restriction {
        Restriction::default()
    }

    pub fn non_flagged() -> Restriction {
        Restriction { assistant_non_flagged: true, ..Restriction::default() }
    }

    fn filter(&self, p: Player) -> Option<&ActionFilter> {
        match p {
            Player::Human => self.human_allowed.as_ref(),
            Player::Assistant => self.assistant_allowed.as_ref(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Maximum number of policies of the enumerated player.
    pub budget: u128,
    /// Maximum number of optimal pairs listed.
    pub max_pairs: usize,
    pub exec: Exec,
    pub reduction: Reduction,
    /// Compute the policy-level interference flag of every listed pair.
    pub check_policy_level: bool,
    /// Compute the observes-naively flag of every listed pair.
    pub check_observes_naively: bool,
    /// Relative tolerance for optimality.
    pub tol: f64,
    /// Maximum number of nodes in any information-set tree.
    pub node_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> SolveOptions {
        SolveOptions {
            budget: DEFAULT_BUDGET,
            max_pairs: 1000,
            exec: Exec::default(),
            reduction: Reduction::Value,
            check_policy_level: false,
            check_observes_naively: false,
            tol: 1e-9,
            node_limit: 4_000_000,
        }
    }
}

impl SolveOptions {
    pub fn tol_at(&self, v: f64) -> f64 {
        self.tol * v.abs().max(1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairFlags {
    pub action_level: bool,
    pub policy_level: Option<bool>,
    pub observes_naively: Option<bool>,
    pub acts_naively: bool,
}

#[derive(Clone, Debug)]
pub struct SolvedPair {
    pub human: Policy,
    pub assistant: Policy,
    pub value: f64,
    pub flags: PairFlags,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub value: f64,
    pub pairs: Vec<SolvedPair>,
    /// True when more optimal pairs exist than were listed.
    pub truncated: bool,
    /// The player whose policies were enumerated; the other best-responds.
    pub enumerated: Player,
    pub n_policies: u128,
}

/// Summary of a pair search.
#[derive(Clone, Debug)]
pub struct PairSearch {
    pub value: f64,
    pub enumerated: Player,
    pub n_policies: u128,
    pub truncated: bool,
    pub pairs_seen: usize,
}

/// Game data shared by every enumeration.
pub(crate) struct Setup {
    pub succ: Succ,
    pub classes: StepClasses,
    pub flagged: Vec<bool>,
}

impl Setup {
    pub fn new(g: &Poag, reduction: Reduction, exec: Exec) -> Setup {
        let flagged = flagged_mask(g, &interfering_actions_with(g, exec));
        Setup { succ: Succ::new(g), classes: step_classes(g, reduction), flagged }
    }

    fn non_flagged(&self, p: Player, a: usize) -> bool {
        p == Player::Human || !self.flagged[a]
    }

    /// Members of a class that the static part of `r` allows.
    fn static_members<'a>(&'a self, p: Player, class: &'a [usize], r: &'a Restriction) -> impl Iterator<Item = usize> + 'a {
        class
            .iter()
            .copied()
            .filter(move |&a| !(p == Player::Assistant && r.assistant_non_flagged && self.flagged[a]))
    }

    fn pick(&self, p: Player, members: impl Iterator<Item = usize>) -> Option<usize> {
        let v: Vec<usize> = members.collect();
        v.iter().copied().find(|&a| self.non_flagged(p, a)).or(v.first().copied())
    }

    /// One representative per class at `history`, under `r`.
    pub fn allowed(&self, p: Player, h: &History, depth: usize, r: &Restriction) -> Vec<usize> {
        let f = r.filter(p);
        self.classes.of(p)[depth]
            .iter()
            .filter_map(|c| self.pick(p, self.static_members(p, c, r).filter(|&a| f.is_none_or(|f| f(h, a)))))
            .collect()
    }

    /// Actions `p` may play at step `t` at some history under `r`.
    pub fn possible(&self, p: Player, t: usize, r: &Restriction) -> Vec<usize> {
        let mut out: Vec<usize> = if r.filter(p).is_some() {
            self.classes.of(p)[t].iter().flat_map(|c| self.static_members(p, c, r)).collect()
        } else {
            self.classes.of(p)[t].iter().filter_map(|c| self.pick(p, self.static_members(p, c, r))).collect()
        };
        out.sort_unstable();
        out
    }

    pub fn possible_all(&self, p: Player, horizon: usize, r: &Restriction) -> Vec<Vec<usize>> {
        (0..horizon).map(|t| self.possible(p, t, r)).collect()
    }

    pub fn rep_tree(&self, g: &Poag, p: Player, r: &Restriction, opts: &SolveOptions) -> Result<InfoTree, SolveError> {
        let opp = self.possible_all(p.other(), g.horizon, r);
        InfoTree::build(g, &self.succ, p, g.horizon, &opp, opts.node_limit, |h, d| self.allowed(p, h, d, r))
    }

    pub fn default_action(&self, p: Player) -> usize {
        match p {
            Player::Human => 0,
            Player::Assistant => self.flagged.iter().position(|&f| !f).unwrap_or(0),
        }
    }
}

pub(crate) fn check_game(g: &Poag) -> Result<(), SolveError> {
    let v = g.validate();
    if v.is_empty() {
        Ok(())
    } else {
        Err(SolveError::InvalidGame(v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")))
    }
}

/// Both trees, and which one is enumerated.
pub(crate) struct Plan {
    pub x: InfoTree,
    pub y: InfoTree,
    pub counts: Vec<u128>,
    pub n: u128,
}

pub(crate) fn plan(g: &Poag, setup: &Setup, r: &Restriction, opts: &SolveOptions) -> Result<Plan, SolveError> {
    let h = setup.rep_tree(g, Player::Human, r, opts)?;
    let a = setup.rep_tree(g, Player::Assistant, r, opts)?;
    let (ch, ca) = (h.counts(), a.counts());
    let (nh, na) = (h.total(&ch), a.total(&ca));
    let (x, y, counts, n) = if na <= nh { (a, h, ca, na) } else { (h, a, ch, nh) };
    if n > opts.budget {
        return Err(SolveError::BudgetExceeded { what: "policy enumeration", needed: n, budget: opts.budget });
    }
    Ok(Plan { x, y, counts, n })
}

fn respond(g: &Poag, setup: &Setup, plan: &Plan, choice: &[u32]) -> (Forward, Backward, f64) {
    let side = DetSide { tree: &plan.x, choice };
    let fw = match forward(g, &setup.succ, &plan.y, &side, false) {
        Ok(f) => f,
        Err(_) => unreachable!("enumerated policies are total on their own tree"),
    };
    let bw = backward_max(g, &plan.y, &fw);
    let v = plan.y.roots.iter().map(|&r| bw.value[r as usize]).sum();
    (fw, bw, v)
}

fn pass_one(g: &Poag, setup: &Setup, plan: &Plan, exec: Exec) -> Vec<f64> {
    let n = plan.n as usize;
    par::map_range(exec, n, |i| {
        let mut choice = Vec::new();
        plan.x.decode(&plan.counts, i as u128, &mut choice);
        respond(g, setup, plan, &choice).2
    })
}

/// Value of the best pair under `r`.
pub fn optimal_value_restricted(g: &Poag, r: &Restriction, opts: &SolveOptions) -> Result<f64, SolveError> {
    check_game(g)?;
    let setup = Setup::new(g, opts.reduction, opts.exec);
    let plan = plan(g, &setup, r, opts)?;
    Ok(pass_one(g, &setup, &plan, opts.exec).into_iter().fold(f64::NEG_INFINITY, f64::max))
}

pub fn optimal_value(g: &Poag, opts: &SolveOptions) -> Result<f64, SolveError> {
    optimal_value_restricted(g, &Restriction::none(), opts)
}

/// Calls `f(human, assistant, value)` for optimal deterministic pairs under `r`, in a fixed
/// order, until it breaks or `opts.max_pairs` pairs have been produced.
pub fn for_each_optimal_pair(
    g: &Poag,
    r: &Restriction,
    opts: &SolveOptions,
    mut f: impl FnMut(&Policy, &Policy, f64) -> ControlFlow<()>,
) -> Result<PairSearch, SolveError> {
    check_game(g)?;
    let setup = Setup::new(g, opts.reduction, opts.exec);
    let plan = plan(g, &setup, r, opts)?;
    let values = pass_one(g, &setup, &plan, opts.exec);
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = opts.tol_at(best);
    let xp = plan.x.player;
    let mut search =
        PairSearch { value: best, enumerated: xp, n_policies: plan.n, truncated: false, pairs_seen: 0 };
    let mut choice = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v < best - tol {
            continue;
        }
        plan.x.decode(&plan.counts, i as u128, &mut choice);
        let xpol = plan.x.to_policy(g, &choice, setup.default_action(xp));
        let (fw, bw, _) = respond(g, &setup, &plan, &choice);
        let ties = tie_sets(&plan.y, &fw, &bw);
        let ydefault = setup.default_action(xp.other());
        let mut ych = bw.choice.clone();
        let mut stop = false;
        let flow = for_each_variant(&plan.y, &ties, &mut ych, &mut |c| {
            if search.pairs_seen >= opts.max_pairs {
                search.truncated = true;
                stop = true;
                return ControlFlow::Break(());
            }
            search.pairs_seen += 1;
            let ypol = plan.y.to_policy(g, c, ydefault);
            let (h, a) = match xp {
                Player::Human => (&xpol, &ypol),
                Player::Assistant => (&ypol, &xpol),
            };
            f(h, a, v)
        });
        if stop || flow.is_break() {
            break;
        }
    }
    Ok(search)
}

/// Tied local actions per node; zero-mass nodes keep only local action 0.
pub(crate) fn tie_sets(y: &InfoTree, fw: &Forward, bw: &Backward) -> Vec<Vec<u32>> {
    (0..y.nodes.len())
        .map(|n| {
            let q = &bw.q[n];
            if q.is_empty() {
                return Vec::new();
            }
            if fw.mass[n] <= 0.0 {
                return vec![0];
            }
            let best = bw.value[n];
            let tol = tie_tol(best);
            (0..q.len() as u32).filter(|&li| q[li as usize] >= best - tol).collect()
        })
        .collect()
}

/// Enumerates every combination of tied choices on the responder's own consistent nodes.
pub(crate) fn for_each_variant(
    y: &InfoTree,
    ties: &[Vec<u32>],
    choice: &mut [u32],
    f: &mut dyn FnMut(&[u32]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mut frontier: Vec<u32> = y.roots.iter().rev().copied().collect();
    rec(y, ties, choice, &mut frontier, f)
}

fn rec(
    y: &InfoTree,
    ties: &[Vec<u32>],
    choice: &mut [u32],
    frontier: &mut Vec<u32>,
    f: &mut dyn FnMut(&[u32]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let Some(node) = frontier.pop() else { return f(choice) };
    let opts = &ties[node as usize];
    if opts.is_empty() {
        rec(y, ties, choice, frontier, f)?;
    } else {
        for &li in opts {
            choice[node as usize] = li;
            let len = frontier.len();
            let mut ks: Vec<u32> = y.kids_of(node, li).collect();
            ks.reverse();
            frontier.extend(ks);
            let flow = rec(y, ties, choice, frontier, f);
            frontier.truncate(len);
            flow?;
        }
    }
    frontier.push(node);
    ControlFlow::Continue(())
}

/// All optimal deterministic pairs (up to `opts.max_pairs`) with their flags.
pub fn optimal_pairs(g: &Poag, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    optimal_pairs_restricted(g, &Restriction::none(), opts)
}

pub fn optimal_pairs_restricted(g: &Poag, r: &Restriction, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let mut raw = Vec::new();
    let search = for_each_optimal_pair(g, r, opts, |h, a, v| {
        raw.push((h.clone(), a.clone(), v));
        ControlFlow::Continue(())
    })?;
    let mask = flagged_mask(g, &interfering_actions_with(g, opts.exec));
    let mut pairs = Vec::with_capacity(raw.len());
    for (human, assistant, value) in raw {
        let policy_level = if opts.check_policy_level {
            Some(crate::policy_level::interferes_at_any_step(g, &assistant, opts)?)
        } else {
            None
        };
        let observes_naively = if opts.check_observes_naively {
            Some(crate::naive::observes_naively(g, &human, opts)?.is_some())
        } else {
            None
        };
        let flags = PairFlags {
            action_level: policy_interferes_with_mask(g, &assistant, &mask).is_some(),
            policy_level,
            observes_naively,
            acts_naively: crate::naive::acts_naively(g, &human, &assistant)?,
        };
        pairs.push(SolvedPair { human, assistant, value, flags });
    }
    Ok(SolveReport {
        value: search.value,
        pairs,
        truncated: search.truncated,
        enumerated: search.enumerated,
        n_policies: search.n_policies,
    })
}

/// Responder tree, forward pass and backward pass against a fixed policy.
pub(crate) struct Response {
    pub y: InfoTree,
    pub fw: Forward,
    pub bw: Backward,
    pub value: f64,
    pub default: usize,
}

pub(crate) fn respond_to_policy(
    g: &Poag,
    setup: &Setup,
    fixed: &Policy,
    r: &Restriction,
    opts: &SolveOptions,
) -> Result<Response, SolveError> {
    let yp = fixed.player.other();
    if fixed.n_actions != g.n_actions(fixed.player) {
        return Err(SolveError::WrongActionCount { expected: g.n_actions(fixed.player), got: fixed.n_actions });
    }
    let all: Vec<Vec<usize>> = vec![(0..g.n_actions(fixed.player)).collect(); g.horizon];
    let y = InfoTree::build(g, &setup.succ, yp, g.horizon, &all, opts.node_limit, |h, d| setup.allowed(yp, h, d, r))?;
    let opp = setup.possible_all(yp, g.horizon, r);
    let x = PolicyTree::build(g, &setup.succ, fixed, g.horizon, &opp, opts.node_limit)?;
    let fw = forward(g, &setup.succ, &y, &x, false).map_err(SolveError::UndefinedHistory)?;
    let bw = backward_max(g, &y, &fw);
    let value = y.roots.iter().map(|&r| bw.value[r as usize]).sum();
    Ok(Response { default: setup.default_action(yp), y, fw, bw, value })
}

/// A deterministic best response to `fixed` and its value.
pub fn best_response(g: &Poag, fixed: &Policy, opts: &SolveOptions) -> Result<(Policy, f64), SolveError> {
    best_response_restricted(g, fixed, &Restriction::none(), opts)
}

pub fn best_response_restricted(
    g: &Poag,
    fixed: &Policy,
    r: &Restriction,
    opts: &SolveOptions,
) -> Result<(Policy, f64), SolveError> {
    check_game(g)?;
    let setup = Setup::new(g, opts.reduction, opts.exec);
    let resp = respond_to_policy(g, &setup, fixed, r, opts)?;
    Ok((resp.y.to_policy(g, &resp.bw.choice, resp.default), resp.value))
}

/// Calls `f` on tied best responses to `fixed`, up to `opts.max_pairs` of them.
/// Returns the best-response value.
pub fn for_each_best_response(
    g: &Poag,
    fixed: &Policy,
    r: &Restriction,
    opts: &SolveOptions,
    mut f: impl FnMut(&Policy) -> ControlFlow<()>,
) -> Result<f64, SolveError> {
    check_game(g)?;
    let setup = Setup::new(g, opts.reduction, opts.exec);
    let resp = respond_to_policy(g, &setup, fixed, r, opts)?;
    let ties = tie_sets(&resp.y, &resp.fw, &resp.bw);
    let mut ch = resp.bw.choice.clone();
    let mut seen = 0;
    let _ = for_each_variant(&resp.y, &ties, &mut ch, &mut |c| {
        if seen >= opts.max_pairs {
            return ControlFlow::Break(());
        }
        seen += 1;
        f(&resp.y.to_policy(g, c, resp.default))
    });
    Ok(resp.value)
}

/// Number of self-consistent deterministic policies per player under `r`, human first.
pub fn policy_counts(g: &Poag, r: &Restriction, opts: &SolveOptions) -> Result<(u128, u128), SolveError> {
    let setup = Setup::new(g, opts.reduction, opts.exec);
    let h = setup.rep_tree(g, Player::Human, r, opts)?;
    let a = setup.rep_tree(g, Player::Assistant, r, opts)?;
    Ok((h.total(&h.counts()), a.total(&a.counts())))
}
