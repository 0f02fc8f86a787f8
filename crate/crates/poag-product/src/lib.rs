//! The product-selection game: `d` products with attributes `H_i` (seen by the human)
//! and `R_i` (partly seen by the assistant), a Boltzmann-rational human, and an assistant
//! that hides exactly `k` products.

use std::io;

use poag_game::par::{self, Exec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default rationality sweep, log-spaced.
pub const DEFAULT_BETAS: [f64; 9] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0];

/// Value of an unobserved `R_i` as the assistant sees it.
pub const PRIOR_MEAN: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("need at least one product")]
    NoProducts,
    #[error("k = {k} exceeds d = {d}")]
    TooManyInterferences { k: usize, d: usize },
    #[error("private_obs = {p} exceeds d = {d}")]
    TooManyObservations { p: usize, d: usize },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("beta must be non-negative or infinite, got {0}")]
    BadBeta(f64),
}

/// `beta = f64::INFINITY` means the human picks the best visible product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductGameConfig {
    pub d: usize,
    pub k: usize,
    pub private_obs: usize,
    pub beta: f64,
    pub trials: usize,
    pub base_seed: u64,
}

impl ProductGameConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.d == 0 {
            return Err(ConfigError::NoProducts);
        }
        if self.k > self.d {
            return Err(ConfigError::TooManyInterferences { k: self.k, d: self.d });
        }
        if self.private_obs > self.d {
            return Err(ConfigError::TooManyObservations { p: self.private_obs, d: self.d });
        }
        if self.trials == 0 {
            return Err(ConfigError::NoTrials);
        }
        check_beta(self.beta)
    }
}

fn check_beta(beta: f64) -> Result<(), ConfigError> {
    if beta.is_nan() || beta < 0.0 {
        Err(ConfigError::BadBeta(beta))
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub h: Vec<f64>,
    pub r: Vec<f64>,
    /// 0-indexed, ascending.
    pub interfered: Vec<usize>,
    pub chosen: usize,
    pub payoff: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl Summary {
    /// Mean and standard error, summed in the order given.
    pub fn from_payoffs(xs: &[f64]) -> Summary {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, stderr, trials: n }
    }
}

fn r_hat(r_observed: &[Option<f64>]) -> Vec<f64> {
    r_observed.iter().map(|r| r.unwrap_or(PRIOR_MEAN)).collect()
}

/// The `k` products with the smallest estimated `R_i`, ties to the smaller index.
/// Returned 0-indexed and ascending.
pub fn assistant_interference(r_observed: &[Option<f64>], k: usize) -> Vec<usize> {
    let rh = r_hat(r_observed);
    let mut idx: Vec<usize> = (0..rh.len()).collect();
    idx.sort_by(|&a, &b| rh[a].total_cmp(&rh[b]).then(a.cmp(&b)));
    let mut out: Vec<usize> = idx.into_iter().take(k).collect();
    out.sort_unstable();
    out
}

/// Boltzmann choice over the observed values; `-inf` marks a hidden product.
pub fn human_select(h_hat: &[f64], beta: f64) -> Vec<f64> {
    let n = h_hat.len();
    let visible: Vec<usize> = (0..n).filter(|&i| h_hat[i] > f64::NEG_INFINITY).collect();
    let mut p = vec![0.0; n];
    if visible.is_empty() {
        return vec![1.0 / n as f64; n];
    }
    if beta == f64::INFINITY {
        let best = visible.iter().copied().fold(visible[0], |b, i| if h_hat[i] > h_hat[b] { i } else { b });
        p[best] = 1.0;
        return p;
    }
    let m = visible.iter().map(|&i| h_hat[i]).fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for &i in &visible {
        p[i] = (beta * (h_hat[i] - m)).exp();
        z += p[i];
    }
    for x in &mut p {
        *x /= z;
    }
    p
}

fn sample_index<R: Rng + ?Sized>(rng: &mut R, p: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > 0.0 {
            acc += x;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed ^ trial as u64
}

/// Plays one trial. The result depends only on the config and the trial index.
pub fn play_trial(cfg: &ProductGameConfig, trial: usize) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.base_seed, trial));
    let h: Vec<f64> = (0..cfg.d).map(|_| rng.random::<f64>()).collect();
    let r: Vec<f64> = (0..cfg.d).map(|_| rng.random::<f64>()).collect();
    let seen: Vec<Option<f64>> = (0..cfg.d).map(|i| (i < cfg.private_obs).then_some(r[i])).collect();
    let interfered = assistant_interference(&seen, cfg.k);
    let mut h_hat = h.clone();
    for &i in &interfered {
        h_hat[i] = f64::NEG_INFINITY;
    }
    let chosen = sample_index(&mut rng, &human_select(&h_hat, cfg.beta));
    TrialRecord { trial, payoff: h[chosen] + r[chosen], h, r, interfered, chosen }
}

pub fn run_experiment(cfg: &ProductGameConfig, exec: Exec) -> Result<Summary, ConfigError> {
    cfg.validate()?;
    let xs = par::map_range(exec, cfg.trials, |t| play_trial(cfg, t).payoff);
    Ok(Summary::from_payoffs(&xs))
}

pub fn run_experiment_records(cfg: &ProductGameConfig, exec: Exec) -> Result<(Summary, Vec<TrialRecord>), ConfigError> {
    cfg.validate()?;
    let recs = par::map_range(exec, cfg.trials, |t| play_trial(cfg, t));
    let xs: Vec<f64> = recs.iter().map(|r| r.payoff).collect();
    Ok((Summary::from_payoffs(&xs), recs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForce {
    pub subset: Vec<usize>,
    pub payoff: f64,
    /// Every k-subset in lexicographic order with its expected payoff.
    pub all: Vec<(Vec<usize>, f64)>,
}

const QUAD_POINTS: usize = 8;

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out
}

/// For each visible product: probability it is chosen and expected `H_i` times that
/// indicator, integrating over uniform `H`.
fn choice_moments(m: usize, beta: f64) -> Vec<(f64, f64)> {
    let q = gauss_legendre(QUAD_POINTS);
    if beta == f64::INFINITY {
        // Product i wins when every other H_j is below H_i.
        let p: f64 = q.iter().map(|&(x, w)| w * x.powi(m as i32 - 1)).sum();
        let e: f64 = q.iter().map(|&(x, w)| w * x.powi(m as i32)).sum();
        return vec![(p, e); m];
    }
    let mut acc = vec![(0.0, 0.0); m];
    let mut idx = vec![0usize; m];
    let mut h = vec![0.0; m];
    loop {
        let mut w = 1.0;
        for j in 0..m {
            h[j] = q[idx[j]].0;
            w *= q[idx[j]].1;
        }
        let p = human_select(&h, beta);
        for j in 0..m {
            acc[j].0 += w * p[j];
            acc[j].1 += w * p[j] * h[j];
        }
        let mut j = 0;
        while j < m {
            idx[j] += 1;
            if idx[j] < QUAD_POINTS {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == m {
            break;
        }
    }
    acc
}

/// Expected payoff when `subset` is hidden, integrating over `H` and the unobserved `R_i`.
pub fn subset_payoff(r_observed: &[Option<f64>], subset: &[usize], beta: f64) -> f64 {
    let d = r_observed.len();
    let rh = r_hat(r_observed);
    let visible: Vec<usize> = (0..d).filter(|i| !subset.contains(i)).collect();
    if visible.is_empty() {
        return PRIOR_MEAN + rh.iter().sum::<f64>() / d as f64;
    }
    let mom = choice_moments(visible.len(), beta);
    visible.iter().zip(&mom).map(|(&i, &(p, e))| e + p * rh[i]).sum()
}

fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            go(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, d, k, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive search over every k-subset by numerical integration. The first maximizer
/// in lexicographic order is returned.
pub fn brute_force_interference(r_observed: &[Option<f64>], k: usize, beta: f64) -> BruteForce {
    let all: Vec<(Vec<usize>, f64)> =
        subsets(r_observed.len(), k).into_iter().map(|s| {
            let v = subset_payoff(r_observed, &s, beta);
            (s, v)
        }).collect();
    let (subset, payoff) = all.iter().fold(all[0].clone(), |b, x| if x.1 > b.1 { x.clone() } else { b });
    BruteForce { subset, payoff, all }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub private_obs: usize,
    pub k: usize,
    pub mean_payoff: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub d: usize,
    pub ks: Vec<usize>,
    pub private_obs: Vec<usize>,
    pub betas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// One row per (beta, private_obs, k), in that nesting order. Every cell uses the same
/// seed, so cells share their random draws.
pub fn sweep(spec: &SweepSpec, exec: Exec) -> Result<Vec<SweepRow>, ConfigError> {
    let mut rows = Vec::new();
    for &beta in &spec.betas {
        for &p in &spec.private_obs {
            for &k in &spec.ks {
                let cfg = ProductGameConfig { d: spec.d, k, private_obs: p, beta, trials: spec.trials, base_seed: spec.seed };
                let s = run_experiment(&cfg, exec)?;
                rows.push(SweepRow { beta, private_obs: p, k, mean_payoff: s.mean, stderr: s.stderr, trials: s.trials, seed: spec.seed });
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<W: io::Write>(rows: &[SweepRow], w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(r: R) -> csv::Result<Vec<SweepRow>> {
    csv::Reader::from_reader(r).deserialize().collect()
}
