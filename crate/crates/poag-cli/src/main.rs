use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use poag_game::par::{self, Exec};
use poag_game::spec::{game_from_json, game_to_json, policy_from_json, policy_to_json, HistorySpec, PolicySpec};
use poag_game::{evaluate_pair, History, Player, Poag, Policy};
use poag_solvers::{Direction, SolveOptions, DEFAULT_BUDGET};

mod report;

use report::{CurveRow, FlaggedDoc, PairDoc, SolveDoc};

#[derive(Parser)]
#[command(name = "poag", version, about = "Partially observable assistance games: solve, audit and experiment")]
struct Cli {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true, default_value_t = default_threads())]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate optimal deterministic policy pairs.
    Solve(SolveArgs),
    /// List observation-interfering assistant actions and check a policy against them.
    Audit(AuditArgs),
    /// Human belief over states after a history, given the assistant policy.
    Belief(BeliefArgs),
    /// Boltzmann-rational human response to a fixed assistant policy.
    Boltzmann(BoltzmannArgs),
    /// Closed-form analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Write one of the built-in games.
    Example(ExampleArgs),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    A2h,
    H2a,
    Both,
}

impl From<ChannelArg> for Direction {
    fn from(c: ChannelArg) -> Direction {
        match c {
            ChannelArg::A2h => Direction::AtoH,
            ChannelArg::H2a => Direction::HtoA,
            ChannelArg::Both => Direction::Both,
        }
    }
}

#[derive(Args)]
struct BudgetArg {
    /// Maximum number of enumerated policies.
    #[arg(long, env = "POAG_BUDGET", default_value_t = DEFAULT_BUDGET)]
    budget: u128,
}

#[derive(Args)]
struct SolveArgs {
    /// Game file (JSON).
    #[arg(long)]
    game: PathBuf,
    #[command(flatten)]
    budget: BudgetArg,
    /// Add a communication channel before solving.
    #[arg(long, value_enum)]
    channel: Option<ChannelArg>,
    /// Maximum number of optimal pairs listed.
    #[arg(long, default_value_t = 1000)]
    max_pairs: usize,
    /// Number of pairs printed in full.
    #[arg(long, default_value_t = 3)]
    show: usize,
    /// Also check policy-level interference of each pair.
    #[arg(long, default_value_t = false)]
    policy_level: bool,
    /// Also check whether each human policy observes naively.
    #[arg(long, default_value_t = false)]
    observes_naively: bool,
    /// Write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the solved game (after adding any channel).
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    game: PathBuf,
    /// Assistant policy to check.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Also check the policy at the policy level.
    #[arg(long, default_value_t = false)]
    policy_level: bool,
    /// Exit 1 if any assistant action interferes.
    #[arg(long, default_value_t = false)]
    expect_clean: bool,
    #[command(flatten)]
    budget: BudgetArg,
    /// Write the flagged actions as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BeliefArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    assistant_policy: PathBuf,
    /// Human history file (JSON).
    #[arg(long)]
    history: PathBuf,
    /// Write the marginals as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoltzmannArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    assistant_policy: PathBuf,
    /// Rationality coefficient.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Write the response policy as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Expected utility with and without a signal, and the crossing point.
    Boltzmann(AnalyzeBoltzmannArgs),
}

#[derive(Args)]
struct AnalyzeBoltzmannArgs {
    /// Problem file (JSON); the built-in man/tldr problem when omitted.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    beta_min: f64,
    #[arg(long, default_value_t = 5.0)]
    beta_max: f64,
    /// Number of curve points.
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Write the curves as CSV; printed to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExampleArgs {
    /// One of revealing-errors, cuda-versions, node-scheduling, man-tldr.
    name: String,
    /// Number of versions for cuda-versions.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Output file; printed to stdout otherwise.
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Product-selection sweep.
    ProductSelect(ProductArgs),
}

#[derive(Args)]
struct ProductArgs {
    #[arg(long, default_value_t = 5)]
    d: usize,
    /// Range `a..b` (inclusive) or comma list of interference counts.
    #[arg(long, default_value = "0..4")]
    k_sweep: String,
    /// Comma list of private observation counts.
    #[arg(long, default_value = "2")]
    private_obs: String,
    /// Comma list of rationality coefficients; `inf` is allowed.
    #[arg(long, default_value = "0.01,0.03,0.1,0.3,1,3,10,30,100")]
    beta_sweep: String,
    #[arg(long, default_value_t = 30_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; printed to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Status {
    Ok,
    Violated,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.threads <= 1 { Exec::Sequential } else { Exec::Parallel };
    if cli.threads > 1 {
        if let Err(e) = par::set_threads(cli.threads) {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    match run(cli.command, exec) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violated) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command, exec: Exec) -> Result<Status> {
    match cmd {
        Command::Solve(a) => solve(a, exec),
        Command::Audit(a) => audit(a, exec),
        Command::Belief(a) => belief(a),
        Command::Boltzmann(a) => boltzmann(a),
        Command::Analyze(AnalyzeCommand::Boltzmann(a)) => analyze_boltzmann(a),
        Command::Example(a) => example(a),
        Command::Experiment(ExperimentCommand::ProductSelect(a)) => product_select(a, exec),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_game(path: &Path) -> Result<Poag> {
    let g = game_from_json(&read(path)?).with_context(|| format!("invalid game file {}", path.display()))?;
    let v = g.validate();
    if !v.is_empty() {
        let list: Vec<String> = v.iter().take(10).map(|x| format!("  {x}")).collect();
        bail!("invalid game {}: {} problem(s)\n{}", path.display(), v.len(), list.join("\n"));
    }
    Ok(g)
}

fn load_policy(g: &Poag, path: &Path, player: Player) -> Result<Policy> {
    let pi = policy_from_json(g, &read(path)?).with_context(|| format!("invalid policy file {}", path.display()))?;
    if pi.player != player {
        bail!("{} holds a policy for {}, expected {}", path.display(), pi.player, player);
    }
    Ok(pi)
}

fn fmt_history(g: &Poag, p: Player, h: &History) -> String {
    let hs = HistorySpec::from_history(g, p, h);
    let mut parts = Vec::new();
    if let Some(t) = hs.theta {
        parts.push(format!("theta={t}"));
    }
    for (a, o) in hs.steps {
        parts.push(format!("{a}/{o}"));
    }
    if parts.is_empty() {
        "(root)".into()
    } else {
        parts.join(" ")
    }
}

fn fmt_dist(names: &[String], d: &[f64]) -> String {
    let parts: Vec<String> = d.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, p)| format!("{}:{p:.6}", names[i])).collect();
    parts.join(" ")
}

fn print_policy(g: &Poag, pi: &Policy) {
    for (h, d) in pi.entries() {
        println!("    {:<40} {}", fmt_history(g, pi.player, h), fmt_dist(g.action_names(pi.player), d));
    }
}

fn solve(a: SolveArgs, exec: Exec) -> Result<Status> {
    let mut g = load_game(&a.game)?;
    if let Some(c) = a.channel {
        g = poag_solvers::add_channel(&g, c.into());
    }
    if let Some(p) = &a.emit {
        write_out(Some(p), &game_to_json(&g))?;
    }
    let opts = SolveOptions {
        budget: a.budget.budget,
        max_pairs: a.max_pairs,
        exec,
        check_policy_level: a.policy_level,
        check_observes_naively: a.observes_naively,
        ..SolveOptions::default()
    };
    let rep = poag_solvers::optimal_pairs(&g, &opts)?;
    println!("value: {}", rep.value);
    println!("enumerated: {} ({} policies)", rep.enumerated, rep.n_policies);
    println!("optimal pairs: {}{}", rep.pairs.len(), if rep.truncated { " (truncated)" } else { "" });
    let interfering = rep.pairs.iter().filter(|p| p.flags.action_level).count();
    println!("action-level interfering: {interfering}");
    for (i, p) in rep.pairs.iter().take(a.show).enumerate() {
        let f = &p.flags;
        println!(
            "pair {i}: value {} action_level={} policy_level={} acts_naively={} observes_naively={}",
            p.value,
            f.action_level,
            f.policy_level.map_or("-".into(), |b| b.to_string()),
            f.acts_naively,
            f.observes_naively.map_or("-".into(), |b| b.to_string()),
        );
        println!("  human:");
        print_policy(&g, &p.human);
        println!("  assistant:");
        print_policy(&g, &p.assistant);
    }
    if let Some(out) = &a.out {
        let doc = SolveDoc {
            value: rep.value,
            enumerated: rep.enumerated,
            n_policies: rep.n_policies.to_string(),
            truncated: rep.truncated,
            pairs: rep
                .pairs
                .iter()
                .map(|p| PairDoc {
                    value: p.value,
                    action_level: p.flags.action_level,
                    policy_level: p.flags.policy_level,
                    acts_naively: p.flags.acts_naively,
                    observes_naively: p.flags.observes_naively,
                    human: PolicySpec::from_policy(&g, &p.human),
                    assistant: PolicySpec::from_policy(&g, &p.assistant),
                })
                .collect(),
        };
        write_out(Some(out), &serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(Status::Ok)
}

fn audit(a: AuditArgs, exec: Exec) -> Result<Status> {
    let g = load_game(&a.game)?;
    let flags = poag_blackwell::interfering_actions_with(&g, exec);
    println!("{:<24} {:<24}", "interfering action", "witness");
    for f in &flags {
        println!("{:<24} {:<24}", g.assistant_actions[f.action], g.assistant_actions[f.witness]);
    }
    println!("{} of {} assistant actions interfere", flags.len(), g.assistant_actions.len());
    let mut status = Status::Ok;
    if a.expect_clean && !flags.is_empty() {
        status = Status::Violated;
    }
    let mut doc = FlaggedDoc {
        flagged: flags
            .iter()
            .map(|f| (g.assistant_actions[f.action].clone(), g.assistant_actions[f.witness].clone()))
            .collect(),
        policy_action_level: None,
        policy_level: None,
    };
    if let Some(pp) = &a.policy {
        let pi = load_policy(&g, pp, Player::Assistant)?;
        let mask = poag_blackwell::flagged_mask(&g, &flags);
        match poag_blackwell::policy_interferes_with_mask(&g, &pi, &mask) {
            Some(h) => {
                println!("policy interferes at the action level at {}", fmt_history(&g, Player::Assistant, &h));
                doc.policy_action_level = Some(HistorySpec::from_history(&g, Player::Assistant, &h));
                status = Status::Violated;
            }
            None => println!("policy does not interfere at the action level"),
        }
        if a.policy_level {
            let opts = SolveOptions { budget: a.budget.budget, exec, ..SolveOptions::default() };
            let hit = poag_solvers::interferes_at_any_step(&g, &pi, &opts)?;
            println!("policy {} at the policy level", if hit { "interferes" } else { "does not interfere" });
            doc.policy_level = Some(hit);
        }
    }
    if let Some(out) = &a.out {
        write_out(Some(out), &serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(status)
}

fn belief(a: BeliefArgs) -> Result<Status> {
    let g = load_game(&a.game)?;
    let pi = load_policy(&g, &a.assistant_policy, Player::Assistant)?;
    let hs: HistorySpec =
        serde_json::from_str(&read(&a.history)?).with_context(|| format!("invalid history file {}", a.history.display()))?;
    let h = hs.to_history(&g, Player::Human)?;
    let b = poag_beliefs::filter(&g, &pi, &h)?;
    let states = b.state_marginal(g.n_states());
    let thetas = b.theta_marginal(g.n_thetas());
    let entropy = poag_beliefs::posterior_entropy(&states);
    println!("history: {}", fmt_history(&g, Player::Human, &h));
    println!("{:<24} {:>12}", "state", "probability");
    for (s, p) in states.iter().enumerate() {
        if *p > 0.0 {
            println!("{:<24} {:>12.6}", g.states[s], p);
        }
    }
    println!("entropy (nats): {entropy:.6}");
    if let Some(out) = &a.out {
        let doc = report::BeliefDoc {
            states: g.states.iter().cloned().zip(states).collect(),
            thetas: g.thetas.iter().cloned().zip(thetas).collect(),
            entropy,
        };
        write_out(Some(out), &serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(Status::Ok)
}

fn boltzmann(a: BoltzmannArgs) -> Result<Status> {
    let g = load_game(&a.game)?;
    let pi_a = load_policy(&g, &a.assistant_policy, Player::Assistant)?;
    let pi_h = poag_solvers::boltzmann_response(&g, &pi_a, a.beta)?;
    let v = evaluate_pair(&g, &pi_h, &pi_a)?;
    println!("beta: {}", a.beta);
    println!("value: {v}");
    println!("{:<40} distribution", "history");
    for (h, d) in pi_h.entries() {
        println!("{:<40} {}", fmt_history(&g, Player::Human, h), fmt_dist(&g.human_actions, d));
    }
    if let Some(out) = &a.out {
        write_out(Some(out), &policy_to_json(&g, &pi_h))?;
    }
    Ok(Status::Ok)
}

fn analyze_boltzmann(a: AnalyzeBoltzmannArgs) -> Result<Status> {
    use poag_boltzmann::*;
    let p = match &a.problem {
        Some(path) => {
            let p: SignalDecisionProblem =
                serde_json::from_str(&read(path)?).with_context(|| format!("invalid problem file {}", path.display()))?;
            p.validate()?;
            p
        }
        None => man_tldr_problem(),
    };
    if !(a.beta_min.is_finite() && a.beta_max.is_finite() && 0.0 <= a.beta_min && a.beta_min <= a.beta_max) {
        bail!("need 0 <= beta-min <= beta-max, got {} and {}", a.beta_min, a.beta_max);
    }
    if a.points < 2 {
        bail!("need at least 2 points");
    }
    let rows: Vec<CurveRow> = (0..a.points)
        .map(|i| {
            let beta = a.beta_min + (a.beta_max - a.beta_min) * i as f64 / (a.points - 1) as f64;
            CurveRow { beta, eu_with: eu_with_signal(&p, beta), eu_without: eu_without_signal(&p, beta) }
        })
        .collect();
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    write_out(a.out.as_deref(), std::str::from_utf8(&buf)?)?;
    let opts = ThresholdOptions { beta_max: a.beta_max, ..ThresholdOptions::default() };
    let msg = match interference_threshold(&p, &p.garbled(), &opts) {
        Ok(b) => format!("threshold: {b}"),
        Err(e) => format!("threshold: none ({e})"),
    };
    if a.out.is_some() {
        println!("{msg}");
    } else {
        eprintln!("{msg}");
    }
    Ok(Status::Ok)
}

fn example(a: ExampleArgs) -> Result<Status> {
    if a.name == "cuda-versions" && !(2..=10).contains(&a.n) {
        bail!("cuda-versions needs 2 <= n <= 10, got {}", a.n);
    }
    let g = poag_examples::by_name(&a.name, a.n)
        .ok_or_else(|| anyhow!("unknown example {:?}; choose one of {}", a.name, poag_examples::NAMES.join(", ")))?;
    write_out(a.emit.as_deref(), &(game_to_json(&g) + "\n"))?;
    Ok(Status::Ok)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| anyhow!("bad {what} value {x:?}")))
        .collect()
}

fn parse_k_sweep(s: &str) -> Result<Vec<usize>> {
    match s.split_once("..") {
        Some((lo, hi)) => {
            let lo: usize = lo.trim().parse().map_err(|_| anyhow!("bad k range {s:?}"))?;
            let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| anyhow!("bad k range {s:?}"))?;
            if lo > hi {
                bail!("empty k range {s:?}");
            }
            Ok((lo..=hi).collect())
        }
        None => parse_list(s, "k"),
    }
}

fn product_select(a: ProductArgs, exec: Exec) -> Result<Status> {
    let spec = poag_product::SweepSpec {
        d: a.d,
        ks: parse_k_sweep(&a.k_sweep)?,
        private_obs: parse_list(&a.private_obs, "private-obs")?,
        betas: parse_list(&a.beta_sweep, "beta")?,
        trials: a.trials,
        seed: a.seed,
    };
    let rows = poag_product::sweep(&spec, exec)?;
    let mut buf = Vec::new();
    poag_product::write_csv(&rows, &mut buf)?;
    write_out(a.out.as_deref(), std::str::from_utf8(&buf)?)?;
    if a.out.is_some() {
        println!("{} rows", rows.len());
    }
    Ok(Status::Ok)
}
