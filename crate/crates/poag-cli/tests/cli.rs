use std::path::Path;
use std::process::{Command, Output};

use poag_examples::{flags, man_tldr, revealing_errors};
use poag_game::spec::{game_to_json, policy_to_json, HistorySpec, PolicySpec};
use poag_game::{evaluate_pair, sample_trajectory, Player, Policy};
use tempfile::TempDir;

fn poag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poag")).args(args).env_remove("POAG_BUDGET").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn write(path: &str, text: &str) {
    std::fs::write(Path::new(path), text).unwrap();
}

#[test]
fn example_then_solve() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.json");
    let r = p(&dir, "r.json");
    assert_eq!(code(&poag(&["example", "revealing-errors", "--emit", &g])), 0);
    let o = poag(&["solve", "--game", &g, "--out", &r, "--policy-level", "--observes-naively"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("value: 0.5"));
    // The report's policies load back and reproduce the value.
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&r).unwrap()).unwrap();
    assert_eq!(doc["value"].as_f64(), Some(0.5));
    let game = revealing_errors();
    for pair in doc["pairs"].as_array().unwrap() {
        let h: PolicySpec = serde_json::from_value(pair["human"].clone()).unwrap();
        let a: PolicySpec = serde_json::from_value(pair["assistant"].clone()).unwrap();
        let v = evaluate_pair(&game, &h.to_policy(&game).unwrap(), &a.to_policy(&game).unwrap()).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(pair["policy_level"].as_bool(), Some(false));
    }
}

#[test]
fn solve_with_channel_emits_the_larger_game() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.json");
    let c = p(&dir, "c.json");
    poag(&["example", "revealing-errors", "--emit", &g]);
    let o = poag(&["solve", "--game", &g, "--channel", "a2h", "--emit", &c]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("value: 0.5"));
    let o = poag(&["solve", "--game", &c]);
    assert!(stdout(&o).contains("value: 0.5"));
    let text = std::fs::read_to_string(&c).unwrap();
    assert!(text.contains('|'));
}

#[test]
fn usage_and_input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let o = poag(&["solve", "--game", "missing.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cannot read"));
    assert_eq!(code(&poag(&["solve", "--game", "x.json", "--bogus"])), 2);
    assert_eq!(code(&poag(&["frobnicate"])), 2);
    let bad = p(&dir, "bad.json");
    write(&bad, "{ not json");
    let o = poag(&["solve", "--game", &bad]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("invalid game file"));
    // Well-formed but not a distribution.
    let mut g = revealing_errors();
    g.set_transition(0, 0, 0, vec![(1, 0.3)]);
    let invalid = p(&dir, "invalid.json");
    write(&invalid, &game_to_json(&g));
    let o = poag(&["solve", "--game", &invalid]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("invalid game"));
    assert_eq!(code(&poag(&["example", "nope"])), 2);
    assert_eq!(code(&poag(&["example", "cuda-versions", "--n", "11"])), 2);
}

#[test]
fn budget_overrun_and_environment_override() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.json");
    poag(&["example", "cuda-versions", "--emit", &g]);
    let o = poag(&["solve", "--game", &g, "--budget", "10"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("above the budget of 10"));
    let o = Command::new(env!("CARGO_BIN_EXE_poag")).args(["solve", "--game", &g]).env("POAG_BUDGET", "12").output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("above the budget of 12"));
}

#[test]
fn audit_exit_codes() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.json");
    poag(&["example", "man-tldr", "--emit", &g]);
    let game = man_tldr();
    let o = poag(&["audit", "--game", &g]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("tldr"));
    assert_eq!(code(&poag(&["audit", "--game", &g, "--expect-clean"])), 1);
    let tldr = p(&dir, "tldr.json");
    write(&tldr, &policy_to_json(&game, &Policy::constant(Player::Assistant, 2, flags::TLDR)));
    let out = p(&dir, "audit.json");
    let o = poag(&["audit", "--game", &g, "--policy", &tldr, "--policy-level", "--out", &out]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("interferes at the policy level"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["policy_level"].as_bool(), Some(true));
    let man = p(&dir, "man.json");
    write(&man, &policy_to_json(&game, &Policy::constant(Player::Assistant, 2, flags::MAN)));
    assert_eq!(code(&poag(&["audit", "--game", &g, "--policy", &man])), 0);
    // A human policy is rejected.
    write(&man, &policy_to_json(&game, &Policy::constant(Player::Human, 2, 0)));
    assert_eq!(code(&poag(&["audit", "--game", &g, "--policy", &man])), 2);
}

#[test]
fn belief_after_a_sampled_history() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.json");
    poag(&["example", "man-tldr", "--emit", &g]);
    let game = man_tldr();
    let pa = Policy::constant(Player::Assistant, 2, flags::MAN);
    let ph = Policy::constant(Player::Human, 2, flags::FLAG1);
    let tr = sample_trajectory(&game, &ph, &pa, 3).unwrap();
    let h = tr.human_history(2);
    let hist = p(&dir, "h.json");
    write(&hist, &serde_json::to_string(&HistorySpec::from_history(&game, Player::Human, &h)).unwrap());
    let pol = p(&dir, "a.json");
    write(&pol, &policy_to_json(&game, &pa));
    let out = p(&dir, "b.json");
    let o = poag(&["belief", "--game", &g, "--assistant-policy", &pol, "--history", &hist, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // man shows the exact state, so the belief is a point mass.
    assert!(stdout(&o).contains("entropy (nats): 0.000000"), "{}", stdout(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let total: f64 = doc["states"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn boltzmann_response_table() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.json");
    poag(&["example", "man-tldr", "--emit", &g]);
    let game = man_tldr();
    let pa = Policy::constant(Player::Assistant, 2, flags::TLDR);
    let pol = p(&dir, "a.json");
    write(&pol, &policy_to_json(&game, &pa));
    let out = p(&dir, "h.json");
    let o = poag(&["boltzmann", "--game", &g, "--assistant-policy", &pol, "--beta", "1", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: f64 = stdout(&o).lines().find_map(|l| l.strip_prefix("value: ")).unwrap().parse().unwrap();
    assert!((v - 3.92806).abs() < 1e-5);
    let spec: PolicySpec = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let ph = spec.to_policy(&game).unwrap();
    assert!((evaluate_pair(&game, &ph, &pa).unwrap() - v).abs() < 1e-9);
    assert_eq!(code(&poag(&["boltzmann", "--game", &g, "--assistant-policy", &pol, "--beta", "-1"])), 2);
}

#[test]
fn analyze_boltzmann_curves() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "eu.csv");
    let o = poag(&["analyze", "boltzmann", "--beta-min", "0", "--beta-max", "2", "--points", "5", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let b: f64 = stdout(&o).trim().strip_prefix("threshold: ").unwrap().parse().unwrap();
    assert!((b - 0.77361).abs() < 1e-4);
    let mut rd = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["beta", "eu_with", "eu_without"]);
    let rows: Vec<(f64, f64, f64)> = rd.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[2].0, 1.0);
    assert!((rows[2].1 - 3.86234).abs() < 1e-5 && (rows[2].2 - 3.92806).abs() < 1e-5);

    let prob = p(&dir, "p.json");
    write(&prob, r#"{"n": 2, "signal_probs": [1.0], "payoffs": [[0.0, 1.0], [0.0, 1.0]]}"#);
    let o = poag(&["analyze", "boltzmann", "--problem", &prob, "--points", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("threshold: none"));
    write(&prob, r#"{"n": 2, "signal_probs": [1.0], "payoffs": [[0.0, 1.0], [0.5, 1.0]]}"#);
    assert_eq!(code(&poag(&["analyze", "boltzmann", "--problem", &prob])), 2);
}

#[test]
fn product_sweep_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.csv");
    let b = p(&dir, "b.csv");
    let args = |out: &str, threads: &str| {
        poag(&["--threads", threads, "experiment", "product-select", "--d", "5", "--k-sweep", "0..4", "--private-obs", "0,2",
            "--beta-sweep", "0.1,inf", "--trials", "2000", "--seed", "7", "--out", out])
    };
    assert_eq!(code(&args(&a, "4")), 0);
    assert_eq!(code(&args(&b, "4")), 0);
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    assert_eq!(code(&args(&b, "1")), 0);
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let rows = poag_product::read_csv(&ta[..]).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 5);
    assert!(rows.iter().all(|r| r.seed == 7 && r.trials == 2000));
    assert_eq!(code(&poag(&["experiment", "product-select", "--k-sweep", "0..9", "--trials", "10"])), 2);
    assert_eq!(code(&poag(&["experiment", "product-select", "--beta-sweep", "x"])), 2);
}

#[test]
fn help_lists_flags_and_defaults() {
    let cases: &[(&[&str], &[&str])] = &[
        (&["solve"], &["--game", "--budget", "--channel", "--out", "--emit", "--threads", "[default: 1000000]"]),
        (&["audit"], &["--game", "--policy", "--expect-clean", "--out"]),
        (&["belief"], &["--game", "--assistant-policy", "--history"]),
        (&["boltzmann"], &["--game", "--assistant-policy", "--beta", "[default: 1]"]),
        (&["analyze", "boltzmann"], &["--problem", "--beta-min", "--beta-max", "[default: 5]"]),
        (&["example"], &["--n", "--emit", "[default: 3]"]),
        (&["experiment", "product-select"], &["--d", "--k-sweep", "--private-obs", "--beta-sweep", "--trials", "--seed", "--out", "[default: 30000]", "[default: 0..4]"]),
    ];
    for (cmd, want) in cases {
        let mut args = cmd.to_vec();
        args.push("--help");
        let o = poag(&args);
        assert_eq!(code(&o), 0);
        let text = stdout(&o);
        for w in *want {
            assert!(text.contains(w), "{cmd:?} help lacks {w}:\n{text}");
        }
    }
}
