//! Expected utility of a Boltzmann-rational decision maker, with and without a signal.
//!
//! A [`SignalDecisionProblem`] has `n` actions and `k` signal values. Row 0 of the payoff
//! matrix holds the expected utilities before the signal, rows `1..=k` the conditional
//! utilities after each signal value.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Slack allowed in the tower-rule and probability checks.
pub const TOWER_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProblemError {
    #[error("problem needs at least one action")]
    NoActions,
    #[error("payoff matrix needs {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("payoff row {row} has {found} entries, expected {expected}")]
    RowLength { row: usize, expected: usize, found: usize },
    #[error("signal probabilities must be non-negative and sum to 1 (sum {sum})")]
    BadProbabilities { sum: f64 },
    #[error("tower rule fails for action {action}: mixture {mixture} vs row 0 {row0}")]
    Tower { action: usize, mixture: f64, row0: f64 },
    #[error("non-finite payoff at row {row}, action {action}")]
    NonFinite { row: usize, action: usize },
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ThresholdError {
    #[error("the curves do not cross on (0, {beta_max}]; sign of the difference on the scan: {signs:?}")]
    NoCrossing { beta_max: f64, signs: Vec<i8> },
    #[error("the curves cross {} times, near {crossings:?}", crossings.len())]
    MultipleCrossings { crossings: Vec<f64> },
    #[error("beta_max must be positive and finite")]
    BadRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalDecisionProblem {
    pub n: usize,
    pub signal_probs: Vec<f64>,
    /// `payoffs[s][a]`, `s = 0` is the no-signal row.
    pub payoffs: Vec<Vec<f64>>,
}

impl SignalDecisionProblem {
    pub fn new(signal_probs: Vec<f64>, payoffs: Vec<Vec<f64>>) -> Result<SignalDecisionProblem, ProblemError> {
        let n = payoffs.first().map_or(0, Vec::len);
        let p = SignalDecisionProblem { n, signal_probs, payoffs };
        p.validate()?;
        Ok(p)
    }

    /// Builds row 0 as the signal mixture, so the tower rule holds by construction.
    pub fn from_conditionals(signal_probs: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<SignalDecisionProblem, ProblemError> {
        let n = rows.first().map_or(0, Vec::len);
        let row0 = (0..n).map(|a| signal_probs.iter().zip(&rows).map(|(p, r)| p * r[a]).sum()).collect();
        let mut payoffs = vec![row0];
        payoffs.extend(rows);
        SignalDecisionProblem::new(signal_probs, payoffs)
    }

    pub fn k(&self) -> usize {
        self.signal_probs.len()
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.n == 0 {
            return Err(ProblemError::NoActions);
        }
        let k = self.k();
        if self.payoffs.len() != k + 1 {
            return Err(ProblemError::RowCount { expected: k + 1, found: self.payoffs.len() });
        }
        for (row, r) in self.payoffs.iter().enumerate() {
            if r.len() != self.n {
                return Err(ProblemError::RowLength { row, expected: self.n, found: r.len() });
            }
            if let Some(action) = r.iter().position(|v| !v.is_finite()) {
                return Err(ProblemError::NonFinite { row, action });
            }
        }
        let sum: f64 = self.signal_probs.iter().sum();
        if self.signal_probs.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > TOWER_TOL {
            return Err(ProblemError::BadProbabilities { sum });
        }
        for a in 0..self.n {
            let mixture: f64 = (0..k).map(|s| self.signal_probs[s] * self.payoffs[s + 1][a]).sum();
            let row0 = self.payoffs[0][a];
            if (mixture - row0).abs() > TOWER_TOL * row0.abs().max(1.0) {
                return Err(ProblemError::Tower { action: a, mixture, row0 });
            }
        }
        Ok(())
    }

    /// The same decision with the signal removed: one signal value carrying row 0.
    pub fn garbled(&self) -> SignalDecisionProblem {
        SignalDecisionProblem {
            n: self.n,
            signal_probs: vec![1.0],
            payoffs: vec![self.payoffs[0].clone(), self.payoffs[0].clone()],
        }
    }

    fn rows(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.signal_probs.iter().copied().zip(self.payoffs[1..].iter().map(Vec::as_slice))
    }
}

/// Softmax weights of `beta * y`, with the maximum subtracted first.
pub fn softmax(y: &[f64], beta: f64) -> Vec<f64> {
    let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = y.iter().map(|v| (beta * (v - m)).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Expected utility of a Boltzmann chooser facing payoffs `y`.
pub fn softmax_average(y: &[f64], beta: f64) -> f64 {
    softmax(y, beta).iter().zip(y).map(|(p, v)| p * v).sum()
}

pub fn eu_without_signal(p: &SignalDecisionProblem, beta: f64) -> f64 {
    softmax_average(&p.payoffs[0], beta)
}

pub fn eu_with_signal(p: &SignalDecisionProblem, beta: f64) -> f64 {
    p.rows().map(|(ps, y)| ps * softmax_average(y, beta)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    With,
    Without,
}

fn uniform_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Derivative in beta of the expected utility at beta = 0: the variance of the payoff
/// under a uniformly random action (averaged over signals for [`Which::With`]).
pub fn derivative_at_zero(p: &SignalDecisionProblem, which: Which) -> f64 {
    match which {
        Which::Without => uniform_variance(&p.payoffs[0]),
        Which::With => p.rows().map(|(ps, y)| ps * uniform_variance(y)).sum(),
    }
}

/// For each signal value: the probability of picking that row's best action after seeing
/// the signal, and without it.
pub fn per_state_accuracy(p: &SignalDecisionProblem, beta: f64) -> Vec<(f64, f64)> {
    let blind = softmax(&p.payoffs[0], beta);
    p.rows()
        .map(|(_, y)| {
            let best = (0..y.len()).fold(0, |b, a| if y[a] > y[b] { a } else { b });
            (softmax(y, beta)[best], blind[best])
        })
        .collect()
}

/// Options for [`interference_threshold`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdOptions {
    pub beta_max: f64,
    /// Number of grid intervals in the sign scan.
    pub scan_points: usize,
    /// Stop when the difference is this small.
    pub tol: f64,
}

impl Default for ThresholdOptions {
    fn default() -> ThresholdOptions {
        ThresholdOptions { beta_max: 20.0, scan_points: 2000, tol: 1e-8 }
    }
}

/// The beta at which `informed` (with its signal) and `garbled` (with its signal) give
/// equal expected utility.
pub fn interference_threshold(
    informed: &SignalDecisionProblem,
    garbled: &SignalDecisionProblem,
    opts: &ThresholdOptions,
) -> Result<f64, ThresholdError> {
    if !(opts.beta_max > 0.0 && opts.beta_max.is_finite()) || opts.scan_points == 0 {
        return Err(ThresholdError::BadRange);
    }
    let diff = |b: f64| eu_with_signal(informed, b) - eu_with_signal(garbled, b);
    let grid: Vec<f64> = (1..=opts.scan_points).map(|i| opts.beta_max * i as f64 / opts.scan_points as f64).collect();
    let sign = |v: f64| -> i8 {
        if v.abs() <= opts.tol {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    };
    let signs: Vec<i8> = grid.iter().map(|&b| sign(diff(b))).collect();
    let mut brackets = Vec::new();
    let mut last: Option<(f64, i8)> = None;
    for (&b, &s) in grid.iter().zip(&signs) {
        if s == 0 {
            continue;
        }
        if let Some((b0, s0)) = last {
            if s0 != s {
                brackets.push((b0, b));
            }
        }
        last = Some((b, s));
    }
    match brackets.len() {
        0 => Err(ThresholdError::NoCrossing { beta_max: opts.beta_max, signs }),
        1 => {
            let (mut lo, mut hi) = brackets[0];
            let slo = diff(lo) > 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let d = diff(mid);
                if d.abs() <= opts.tol || hi - lo <= f64::EPSILON * hi {
                    return Ok(mid);
                }
                if (d > 0.0) == slo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
        _ => Err(ThresholdError::MultipleCrossings { crossings: brackets.iter().map(|b| 0.5 * (b.0 + b.1)).collect() }),
    }
}

/// Choosing between flags after the summary "flag 1 is better": the exact page says
/// whether it is better by 7 or by 1, each with probability 1/2.
pub fn man_tldr_problem() -> SignalDecisionProblem {
    SignalDecisionProblem::from_conditionals(vec![0.5, 0.5], vec![vec![7.0, 0.0], vec![1.0, 0.0]])
        .expect("valid by construction")
}

/// A random valid problem: conditional rows with integer payoffs in `-span..=span`,
/// random signal probabilities, and row 0 as their mixture.
pub fn random_problem<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, span: i32) -> SignalDecisionProblem {
    let probs = random_probs(rng, k);
    let rows = (0..k).map(|_| (0..n).map(|_| rng.random_range(-span..=span) as f64).collect()).collect();
    SignalDecisionProblem::from_conditionals(probs, rows).expect("valid by construction")
}

/// A random problem where action 0 is strictly best in every row, with gaps to the other
/// actions in `[gap_min, gap_max]`, and some action's gap varying across signals by at
/// least `spread`.
pub fn random_dominant_problem<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    gap_min: f64,
    gap_max: f64,
    spread: f64,
) -> SignalDecisionProblem {
    assert!(n >= 2 && k >= 2 && gap_max - gap_min >= spread);
    loop {
        let probs = random_probs(rng, k);
        let gaps: Vec<Vec<f64>> = (0..k).map(|_| (1..n).map(|_| rng.random_range(gap_min..=gap_max)).collect()).collect();
        let varied = (0..n - 1).any(|a| {
            let col = gaps.iter().map(|g| g[a]);
            col.clone().fold(f64::NEG_INFINITY, f64::max) - col.fold(f64::INFINITY, f64::min) >= spread
        });
        if !varied || probs.iter().any(|&p| p < 0.05) {
            continue;
        }
        let rows = gaps
            .iter()
            .map(|g| {
                let base: f64 = rng.random_range(-1.0..1.0);
                std::iter::once(base).chain(g.iter().map(|d| base - d)).collect()
            })
            .collect();
        return SignalDecisionProblem::from_conditionals(probs, rows).expect("valid by construction");
    }
}

fn random_probs<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(1..=10) as f64).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|v| v / z).collect()
}
