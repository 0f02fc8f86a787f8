//! Blackwell informativeness order and observation-interference detectors.
//!
//! A family `phat` is at most as informative as `p` when a single stochastic map `F` on
//! observations turns every `p(.|s)` into `phat(.|s)`. Feasibility of `F` is a linear
//! program, decided here with a phase-1 simplex in floating point, falling back to exact
//! rational arithmetic when the float answer is borderline.

pub mod simplex;

use std::collections::VecDeque;

use num_rational::BigRational;
use poag_game::{par, Exec, History, Player, Poag, Policy, PROB_TOL};
use thiserror::Error;

use simplex::{feasible, Scalar};

/// Maximum residual accepted for a garbling witness.
pub const WITNESS_TOL: f64 = 1e-7;
/// Tolerance for comparing authored transition and reward entries.
pub const EFFECT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlackwellError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("row {row} is not a distribution (sums to {sum})")]
    InvalidFamily { row: usize, sum: f64 },
}

/// Per-state distributions over one shared observation set.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationFamily {
    pub states: Vec<usize>,
    pub dists: Vec<Vec<f64>>,
}

impl ObservationFamily {
    pub fn new(states: Vec<usize>, dists: Vec<Vec<f64>>) -> Result<ObservationFamily, BlackwellError> {
        if states.len() != dists.len() {
            return Err(BlackwellError::DimensionMismatch(format!(
                "{} states but {} distributions",
                states.len(),
                dists.len()
            )));
        }
        let width = dists.first().map_or(0, Vec::len);
        for (row, d) in dists.iter().enumerate() {
            if d.len() != width {
                return Err(BlackwellError::DimensionMismatch(format!("row {row} has {} entries, expected {width}", d.len())));
            }
            let sum: f64 = d.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL || d.iter().any(|&x| x < 0.0) {
                return Err(BlackwellError::InvalidFamily { row, sum });
            }
        }
        Ok(ObservationFamily { states, dists })
    }

    /// Family indexed by `0..dists.len()`.
    pub fn from_rows(dists: Vec<Vec<f64>>) -> Result<ObservationFamily, BlackwellError> {
        ObservationFamily::new((0..dists.len()).collect(), dists)
    }

    pub fn n_obs(&self) -> usize {
        self.dists.first().map_or(0, Vec::len)
    }

    pub fn n_states(&self) -> usize {
        self.dists.len()
    }

    fn is_deterministic(&self) -> Option<Vec<usize>> {
        self.dists
            .iter()
            .map(|d| d.iter().position(|&x| (x - 1.0).abs() <= PROB_TOL))
            .collect()
    }
}

/// Stochastic map on observations; `entries[out][inp]`, each input column sums to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct GarblingMatrix {
    pub entries: Vec<Vec<f64>>,
}

impl GarblingMatrix {
    pub fn identity(n: usize) -> GarblingMatrix {
        GarblingMatrix {
            entries: (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        }
    }

    pub fn apply(&self, d: &[f64]) -> Vec<f64> {
        self.entries.iter().map(|row| row.iter().zip(d).map(|(f, p)| f * p).sum()).collect()
    }

    pub fn garble(&self, fam: &ObservationFamily) -> ObservationFamily {
        ObservationFamily { states: fam.states.clone(), dists: fam.dists.iter().map(|d| self.apply(d)).collect() }
    }

    pub fn is_stochastic(&self, tol: f64) -> bool {
        let n = self.entries.len();
        self.entries.iter().all(|r| r.iter().all(|&x| x >= -tol))
            && (0..self.entries.first().map_or(0, Vec::len))
                .all(|j| ((0..n).map(|i| self.entries[i][j]).sum::<f64>() - 1.0).abs() <= tol)
    }

    /// `max_s ||F p(.|s) - phat(.|s)||_inf`.
    pub fn residual(&self, phat: &ObservationFamily, p: &ObservationFamily) -> f64 {
        p.dists
            .iter()
            .zip(&phat.dists)
            .flat_map(|(d, dh)| self.apply(d).into_iter().zip(dh).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

/// How the feasibility program is solved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Arith {
    Float,
    Exact,
    /// Float first; exact when the float result is within tolerance of the boundary.
    #[default]
    Auto,
}

fn check_dims(phat: &ObservationFamily, p: &ObservationFamily) -> Result<(), BlackwellError> {
    if phat.states != p.states {
        return Err(BlackwellError::DimensionMismatch("families are indexed by different states".into()));
    }
    if phat.n_obs() != p.n_obs() {
        return Err(BlackwellError::DimensionMismatch(format!(
            "observation sets differ in size ({} vs {}); embed both with disjoint_union",
            phat.n_obs(),
            p.n_obs()
        )));
    }
    Ok(())
}

/// Whether `phat` is a garbling of `p`. Returns a witness when it is.
pub fn at_most_as_informative(
    phat: &ObservationFamily,
    p: &ObservationFamily,
) -> Result<Option<GarblingMatrix>, BlackwellError> {
    at_most_as_informative_with(phat, p, Arith::Auto)
}

pub fn at_most_as_informative_with(
    phat: &ObservationFamily,
    p: &ObservationFamily,
    arith: Arith,
) -> Result<Option<GarblingMatrix>, BlackwellError> {
    check_dims(phat, p)?;
    let n = p.n_obs();
    if let Some(points) = p.is_deterministic() {
        return Ok(deterministic(phat, &points, n));
    }
    let used: Vec<usize> = (0..n).filter(|&o| p.dists.iter().any(|d| d[o] > 0.0)).collect();
    match arith {
        Arith::Float => Ok(solve::<f64>(phat, p, &used).0),
        Arith::Exact => Ok(solve::<BigRational>(phat, p, &used).0),
        Arith::Auto => {
            let (w, infeas) = solve::<f64>(phat, p, &used);
            match w {
                Some(f) if f.residual(phat, p) <= WITNESS_TOL => Ok(Some(f)),
                None if infeas > 1e-6 => Ok(None),
                _ => Ok(solve::<BigRational>(phat, p, &used).0),
            }
        }
    }
}

fn deterministic(phat: &ObservationFamily, points: &[usize], n: usize) -> Option<GarblingMatrix> {
    let mut col: Vec<Option<&[f64]>> = vec![None; n];
    for (s, &o) in points.iter().enumerate() {
        let row = phat.dists[s].as_slice();
        match col[o] {
            None => col[o] = Some(row),
            Some(prev) => {
                if prev.iter().zip(row).any(|(a, b)| (a - b).abs() > PROB_TOL) {
                    return None;
                }
            }
        }
    }
    let mut f = GarblingMatrix::identity(n);
    for (o, c) in col.iter().enumerate() {
        if let Some(c) = c {
            for (i, &v) in c.iter().enumerate() {
                f.entries[i][o] = v;
            }
        }
    }
    Some(f)
}

fn solve<T: Scalar>(phat: &ObservationFamily, p: &ObservationFamily, used: &[usize]) -> (Option<GarblingMatrix>, f64) {
    let n = p.n_obs();
    let u = used.len();
    let nvars = n * u;
    let var = |out: usize, k: usize| out * u + k;
    let mut a: Vec<Vec<T>> = Vec::new();
    let mut b: Vec<T> = Vec::new();
    for k in 0..u {
        let mut row = vec![T::zero(); nvars];
        for out in 0..n {
            row[var(out, k)] = T::one();
        }
        a.push(row);
        b.push(T::one());
    }
    for (d, dh) in p.dists.iter().zip(&phat.dists) {
        for out in 0..n {
            let mut row = vec![T::zero(); nvars];
            for (k, &o) in used.iter().enumerate() {
                row[var(out, k)] = T::from_f64(d[o]);
            }
            a.push(row);
            b.push(T::from_f64(dh[out]));
        }
    }
    let res = feasible(&a, &b);
    let infeas = res.infeasibility.to_f64();
    let Some(x) = res.solution else { return (None, infeas) };
    let mut f = GarblingMatrix::identity(n);
    for (k, &o) in used.iter().enumerate() {
        for out in 0..n {
            f.entries[out][o] = x[var(out, k)].to_f64();
        }
    }
    (Some(f), infeas)
}

/// `p` is at least as informative as `phat` and not conversely.
pub fn strictly_more_informative(p: &ObservationFamily, phat: &ObservationFamily) -> Result<bool, BlackwellError> {
    Ok(at_most_as_informative(phat, p)?.is_some() && at_most_as_informative(p, phat)?.is_none())
}

/// Re-expresses two families over the disjoint union of their observation sets:
/// `a` keeps indices `0..|a|`, `b` is shifted to `|a|..|a|+|b|`.
pub fn disjoint_union(a: &ObservationFamily, b: &ObservationFamily) -> (ObservationFamily, ObservationFamily) {
    let (na, nb) = (a.n_obs(), b.n_obs());
    let pad = |f: &ObservationFamily, left: usize, right: usize| ObservationFamily {
        states: f.states.clone(),
        dists: f
            .dists
            .iter()
            .map(|d| std::iter::repeat_n(0.0, left).chain(d.iter().copied()).chain(std::iter::repeat_n(0.0, right)).collect())
            .collect(),
    };
    (pad(a, 0, nb), pad(b, na, 0))
}

/// H's observation family over every state, for a fixed joint action.
pub fn human_family(game: &Poag, ah: usize, aa: usize) -> ObservationFamily {
    ObservationFamily {
        states: (0..game.n_states()).collect(),
        dists: (0..game.n_states()).map(|s| game.marginal_obs(Player::Human, s, ah, aa)).collect(),
    }
}

/// Identical transition rows and rewards for every state, human action and theta.
pub fn same_effect(game: &Poag, a: usize, b: usize) -> bool {
    (0..game.n_states()).all(|s| {
        (0..game.human_actions.len()).all(|ah| same_effect_at(game, s, ah, a, b))
    })
}

/// [`same_effect`] restricted to one state and human action.
pub fn same_effect_at(game: &Poag, s: usize, ah: usize, a: usize, b: usize) -> bool {
    (0..game.n_thetas()).all(|th| (game.reward(s, ah, a, th) - game.reward(s, ah, b, th)).abs() <= EFFECT_TOL)
        && rows_equal(game.transition(s, ah, a), game.transition(s, ah, b))
}

fn rows_equal(x: &[(usize, f64)], y: &[(usize, f64)]) -> bool {
    let mass = |row: &[(usize, f64)], s: usize| row.iter().filter(|e| e.0 == s).map(|e| e.1).sum::<f64>();
    x.iter().chain(y).all(|&(s, _)| (mass(x, s) - mass(y, s)).abs() <= EFFECT_TOL)
}

/// An observation-interfering assistant action and an action that witnesses it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flagged {
    pub action: usize,
    pub witness: usize,
}

/// Every assistant action that has a same-effect alternative giving H a strictly more
/// informative observation family for every human action. The witness is the lowest such id.
pub fn interfering_actions(game: &Poag) -> Vec<Flagged> {
    interfering_actions_with(game, Exec::default())
}

pub fn interfering_actions_with(game: &Poag, exec: Exec) -> Vec<Flagged> {
    let (nh, na) = (game.human_actions.len(), game.assistant_actions.len());
    let fams: Vec<Vec<ObservationFamily>> =
        (0..na).map(|aa| (0..nh).map(|ah| human_family(game, ah, aa)).collect()).collect();
    par::map_range(exec, na, |hat| {
        (0..na)
            .filter(|&a| a != hat)
            .find(|&a| {
                same_effect(game, hat, a)
                    && (0..nh).all(|ah| strictly_more_informative(&fams[a][ah], &fams[hat][ah]).unwrap_or(false))
            })
            .map(|witness| Flagged { action: hat, witness })
    })
    .into_iter()
    .flatten()
    .collect()
}

/// `mask[a]` is true when `a` appears in `flags`.
pub fn flagged_mask(game: &Poag, flags: &[Flagged]) -> Vec<bool> {
    let mut m = vec![false; game.assistant_actions.len()];
    for f in flags {
        m[f.action] = true;
    }
    m
}

/// A history (of length below the horizon) where `pi_a` puts positive probability on a
/// flagged action, if any. Histories not listed in the policy use its default.
pub fn policy_interferes_action_level(game: &Poag, pi_a: &Policy) -> Option<History> {
    let mask = flagged_mask(game, &interfering_actions(game));
    policy_interferes_with_mask(game, pi_a, &mask)
}

pub fn policy_interferes_with_mask(game: &Poag, pi_a: &Policy, mask: &[bool]) -> Option<History> {
    let bad = |d: &[f64]| d.iter().zip(mask).any(|(&p, &m)| m && p > 0.0);
    if let Some((h, _)) = pi_a.entries().find(|(h, d)| h.len() < game.horizon && bad(d)) {
        return Some(h.clone());
    }
    if !pi_a.default_dist().is_some_and(bad) {
        return None;
    }
    // The default applies somewhere: find the first unlisted history breadth-first.
    let mut queue = VecDeque::from([History::root(None)]);
    while let Some(h) = queue.pop_front() {
        if h.len() >= game.horizon {
            continue;
        }
        if pi_a.entries().all(|(k, _)| *k != h) {
            return Some(h);
        }
        for a in 0..game.assistant_actions.len() {
            for o in 0..game.assistant_obs.len() {
                queue.push_back(h.child(a, o));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(rows: &[&[f64]]) -> ObservationFamily {
        ObservationFamily::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn identity_witness_for_equal_families() {
        let p = fam(&[&[0.3, 0.7], &[0.6, 0.4]]);
        let f = at_most_as_informative(&p, &p).unwrap().unwrap();
        assert!(f.residual(&p, &p) < 1e-9);
    }

    #[test]
    fn perfect_beats_constant() {
        let perfect = fam(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let constant = fam(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(strictly_more_informative(&perfect, &constant).unwrap());
        assert!(!strictly_more_informative(&perfect, &perfect).unwrap());
        let f = at_most_as_informative(&constant, &perfect).unwrap().unwrap();
        assert_eq!(f.entries[0], vec![1.0, 1.0]);
    }

    #[test]
    fn noisy_channel_is_a_garbling() {
        let p = fam(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let f = GarblingMatrix { entries: vec![vec![0.7, 0.4], vec![0.3, 0.6]] };
        let phat = f.garble(&p);
        for arith in [Arith::Float, Arith::Exact, Arith::Auto] {
            let w = at_most_as_informative_with(&phat, &p, arith).unwrap().unwrap();
            assert!(w.residual(&phat, &p) <= WITNESS_TOL);
        }
        assert!(at_most_as_informative(&p, &phat).unwrap().is_none());
    }

    #[test]
    fn mismatched_alphabets_are_rejected_then_embedded() {
        let a = fam(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = fam(&[&[1.0], &[1.0]]);
        assert!(at_most_as_informative(&b, &a).is_err());
        let (a2, b2) = disjoint_union(&a, &b);
        assert!(strictly_more_informative(&a2, &b2).unwrap());
    }
}
