use std::ops::ControlFlow;

use poag_blackwell::{flagged_mask, interfering_actions, policy_interferes_action_level};
use poag_examples::{cuda_versions, flags, man_tldr, node, node_scheduling, revealing_errors, CudaLayout};
use poag_game::{evaluate_pair, sample_trajectory, History, Player, Poag, Policy};
use poag_solvers::*;

fn opts() -> SolveOptions {
    SolveOptions::default()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// Revealing errors.

fn run_iff_success() -> Policy {
    let mut pi = Policy::constant(Player::Human, 2, 1);
    let root = History::root(Some(0));
    pi.set_action(root.clone(), 1);
    for ah in 0..2 {
        pi.set_action(root.child(ah, 1), 0);
    }
    pi
}

#[test]
fn revealing_errors_optimum_enables_logging() {
    let g = revealing_errors();
    let rep = optimal_pairs(&g, &opts()).unwrap();
    assert!(close(rep.value, 0.5, 1e-12));
    assert!(!rep.truncated);
    for p in &rep.pairs {
        assert_eq!(p.assistant.action(&History::root(None)), Some(1));
        assert!(close(evaluate_pair(&g, &p.human, &p.assistant).unwrap(), rep.value, 1e-9));
    }
}

#[test]
fn best_response_to_logging_runs_on_success() {
    let g = revealing_errors();
    let log = Policy::constant(Player::Assistant, 2, 1);
    let (h, v) = best_response(&g, &log, &opts()).unwrap();
    assert!(close(v, 0.5, 1e-12));
    let root = History::root(Some(0));
    assert_eq!(h.action(&root.child(h.action(&root).unwrap(), 1)), Some(0));
    assert_eq!(h.action(&root.child(h.action(&root).unwrap(), 2)), Some(1));
    assert!(close(evaluate_pair(&g, &run_iff_success(), &log).unwrap(), 0.5, 1e-12));
}

#[test]
fn best_response_value_matches_evaluation() {
    let g = revealing_errors();
    for a in 0..2 {
        let pa = Policy::constant(Player::Assistant, 2, a);
        let (h, v) = best_response(&g, &pa, &opts()).unwrap();
        assert!(close(evaluate_pair(&g, &h, &pa).unwrap(), v, 1e-12));
    }
    let (a, v) = best_response(&g, &run_iff_success(), &opts()).unwrap();
    assert!(close(v, 0.5, 1e-12));
    assert!(close(evaluate_pair(&g, &run_iff_success(), &a).unwrap(), 0.5, 1e-12));
}

#[test]
fn zero_reward_game_has_value_zero() {
    let mut g = revealing_errors();
    for s in 0..g.n_states() {
        for ah in 0..2 {
            for aa in 0..2 {
                g.set_reward(s, ah, aa, 0, 0.0);
            }
        }
    }
    let pa = Policy::constant(Player::Assistant, 2, 0);
    assert_eq!(best_response(&g, &pa, &opts()).unwrap().1, 0.0);
    assert_eq!(optimal_value(&g, &opts()).unwrap(), 0.0);
}

#[test]
fn single_action_game_sums_discounted_rewards() {
    let mut g = Poag::new(["s"], ["h"], ["a"], ["t"], ["o"], ["o"], 0.5, 3);
    g.set_transition(0, 0, 0, vec![(0, 1.0)]);
    g.set_obs(0, 0, 0, vec![(0, 0, 1.0)]);
    g.set_reward(0, 0, 0, 0, 4.0);
    g.initial = vec![(0, 0, 1.0)];
    let rep = optimal_pairs(&g, &opts()).unwrap();
    assert_eq!(rep.pairs.len(), 1);
    assert!(close(rep.value, 4.0 + 2.0 + 1.0, 1e-12));
}

#[test]
fn budget_is_enforced() {
    let g = node_scheduling();
    let o = SolveOptions { budget: 10, ..opts() };
    assert!(matches!(optimal_value(&g, &o), Err(SolveError::BudgetExceeded { .. })));
}

// CUDA versions.

#[test]
fn cuda_optimum_is_one_and_every_optimal_pair_suppresses() {
    let g = cuda_versions(3);
    let v = optimal_value(&g, &opts()).unwrap();
    assert!(close(v, 1.0, 1e-9));
    // A clean assistant cannot reach the optimum, so every optimal assistant interferes.
    let clean = optimal_value_restricted(&g, &Restriction::non_flagged(), &opts()).unwrap();
    assert!(clean < v - 0.01, "clean optimum {clean}");
    let rep = optimal_pairs(&g, &SolveOptions { max_pairs: 50, ..opts() }).unwrap();
    assert!(rep.pairs.iter().all(|p| p.flags.action_level));
}

fn suppress_incompatible(lay: &CudaLayout, g: &Poag) -> Policy {
    let na = g.assistant_actions.len();
    let mut pi = Policy::constant(Player::Assistant, na, 0);
    let root = History::root(None);
    for a0 in 0..na {
        for compat in 1..na {
            pi.set_action(root.child(a0, CudaLayout::obs_of_mask(compat)), lay.action_showing(compat));
        }
    }
    pi
}

fn install_first_listed(g: &Poag, n: usize) -> Policy {
    let mut pi = Policy::constant(Player::Human, n, 0);
    let root = History::root(Some(0));
    for a0 in 0..n {
        for a1 in 0..n {
            for seen in 1..(1 << n) {
                let h = root.child(a0, 0).child(a1, CudaLayout::obs_of_mask(seen));
                pi.set_action(h, seen.trailing_zeros() as usize);
            }
        }
    }
    let _ = g;
    pi
}

#[test]
fn cuda_suppressing_incompatible_is_optimal() {
    let g = cuda_versions(3);
    let lay = CudaLayout::new(3);
    let pa = suppress_incompatible(&lay, &g);
    let ph = install_first_listed(&g, 3);
    assert!(close(evaluate_pair(&g, &ph, &pa).unwrap(), 1.0, 1e-9));
    assert!(policy_interferes_action_level(&g, &pa).is_some());
    // Showing an empty list when only version 3 is compatible would single out that
    // compatibility mask, which the shown-compatible list cannot do.
    let alt = policy_interferes_policy_level(&g, &pa, 1, &opts()).unwrap().expect("witness");
    let root = History::root(None);
    assert_eq!(alt.action(&root.child(0, CudaLayout::obs_of_mask(0b100))), Some(lay.action_showing(0)));
}

#[test]
fn cuda_has_a_policy_level_clean_optimum() {
    let g = cuda_versions(3);
    let lay = CudaLayout::new(3);
    // Show compatible versions, plus extra ones where that keeps the lists distinct.
    let shows = [0b111, 0b110, 0b111, 0b100, 0b101, 0b110, 0b110];
    let na = g.assistant_actions.len();
    let mut pa = Policy::constant(Player::Assistant, na, 0);
    for (c, &m) in shows.iter().enumerate() {
        pa.set_action(History::root(None).child(0, CudaLayout::obs_of_mask(c + 1)), lay.action_showing(m));
    }
    let (_, v) = best_response(&g, &pa, &opts()).unwrap();
    assert!(close(v, 1.0, 1e-9));
    assert!(policy_interferes_action_level(&g, &pa).is_some());
    assert!(!interferes_at_any_step(&g, &pa, &opts()).unwrap());
}

#[test]
fn cuda_fixed_suppression_interferes_at_policy_level() {
    let g = cuda_versions(3);
    let lay = CudaLayout::new(3);
    let na = g.assistant_actions.len();
    // Always hide version 1, whatever the compatibility.
    let hide_first = lay.action_showing(0b110);
    let pa = Policy::constant(Player::Assistant, na, hide_first);
    let alt = policy_interferes_policy_level(&g, &pa, 1, &opts()).unwrap().expect("witness");
    let root = History::root(None);
    let h = root.child(hide_first, CudaLayout::obs_of_mask(0b011));
    assert_eq!(alt.action(&h), Some(lay.action_showing(0b111)));
}

#[test]
fn cuda_human_observes_naively() {
    let g = cuda_versions(3);
    let ph = install_first_listed(&g, 3);
    let witness = observes_naively(&g, &ph, &opts()).unwrap().expect("naive");
    let mask = flagged_mask(&g, &interfering_actions(&g));
    assert!(poag_blackwell::policy_interferes_with_mask(&g, &witness, &mask).is_none());
    let (_, best) = best_response(&g, &witness, &opts()).unwrap();
    assert!(close(evaluate_pair(&g, &ph, &witness).unwrap(), best, 1e-9));
}

#[test]
fn dominated_human_does_not_observe_naively() {
    let g = revealing_errors();
    // Run after a failure message: strictly worse than skipping whatever A does.
    let mut ph = run_iff_success();
    let root = History::root(Some(0));
    for ah in 0..2 {
        ph.set_action(root.child(ah, 2), 0);
        ph.set_action(root.child(ah, 0), 0);
    }
    assert_eq!(observes_naively(&g, &ph, &opts()).unwrap(), None);
}

#[test]
fn channel_lets_cuda_assistant_stop_suppressing() {
    let g = cuda_versions(3);
    let (cg, lay) = add_channel_with_layout(&g, Direction::AtoH, MessageSet::Effective);
    let base = CudaLayout::new(3);
    let show_all = base.action_showing(0b111);
    let na = cg.assistant_actions.len();
    let mut pa = Policy::constant(Player::Assistant, na, lay.action_id(Player::Assistant, show_all, Some(0)));
    let root = History::root(None);
    for a0 in 0..na {
        for (m, &o) in lay.assistant_messages.iter().enumerate() {
            let h = root.child(a0, o);
            pa.set_action(h, lay.action_id(Player::Assistant, show_all, Some(m)));
        }
    }
    assert!(policy_interferes_action_level(&cg, &pa).is_none());
    let (_, v) = best_response(&cg, &pa, &opts()).unwrap();
    assert!(close(v, 1.0, 1e-9));
    assert!(close(full_information_value(&cg), 1.0, 1e-9));
}

// Node scheduling.

fn favourite(theta: usize, display: usize) -> usize {
    let (gpu, intel) = (theta < 2, theta % 2 == 0);
    let first_is_good = match display {
        1 => gpu,
        2 => !gpu,
        3 => intel,
        _ => !intel,
    };
    if first_is_good {
        node::NODE1
    } else {
        node::NODE2
    }
}

fn naive_human(signal: bool) -> Policy {
    let mut pi = Policy::constant(Player::Human, 2, node::NODE1);
    for th in 0..4 {
        let root = History::root(Some(th));
        pi.set_action(root.clone(), node::NODE1);
        for d in 1..=4 {
            let mut a = favourite(th, d);
            if signal && d >= 3 {
                a = if th < 2 { node::NODE1 } else { node::NODE2 };
            }
            pi.set_action(root.child(node::NODE1, d), a);
        }
    }
    pi
}

#[test]
fn node_scheduling_optimum() {
    let g = node_scheduling();
    let rep = optimal_pairs(&g, &opts()).unwrap();
    assert!(close(rep.value, 10.75, 1e-9));
    assert!(!rep.truncated);
    for p in &rep.pairs {
        assert!(!p.flags.acts_naively || p.flags.action_level);
        assert!(close(evaluate_pair(&g, &p.human, &p.assistant).unwrap(), 10.75, 1e-9));
    }
    assert!(rep.pairs.iter().any(|p| p.flags.acts_naively && p.flags.action_level));
}

#[test]
fn node_scheduling_best_response_to_naive_human_disguises() {
    let g = node_scheduling();
    let ph = naive_human(false);
    assert!(acts_naively(&g, &ph, &Policy::constant(Player::Assistant, 4, node::SHOW)).unwrap());
    let (pa, v) = best_response(&g, &ph, &opts()).unwrap();
    assert!(close(v, 10.75, 1e-9));
    assert_eq!(pa.action(&History::root(None)), Some(node::DISGUISE));
    assert!(policy_interferes_action_level(&g, &pa).is_some());
    let r = Restriction {
        assistant_allowed: Some(std::sync::Arc::new(|_: &History, a: usize| a != node::DISGUISE)),
        ..Restriction::none()
    };
    let (_, shown) = best_response_restricted(&g, &ph, &r, &opts()).unwrap();
    assert!(close(shown, 8.5, 1e-9));
}

#[test]
fn node_scheduling_second_step_reward_on_cpu_pairs() {
    // Keep only the later reward of the Intel/AMD configurations.
    let mut g = node_scheduling();
    for th in 0..4 {
        for ah in 0..2 {
            for aa in 0..4 {
                for k in 0..4 {
                    g.set_reward(node::config(k), ah, aa, th, 0.0);
                    if k < 2 {
                        g.set_reward(node::later(k), ah, aa, th, 0.0);
                    }
                }
            }
        }
    }
    let ph = naive_human(false);
    let shown = Restriction {
        assistant_allowed: Some(std::sync::Arc::new(|_: &History, a: usize| a != node::DISGUISE)),
        ..Restriction::none()
    };
    let (_, v) = best_response_restricted(&g, &ph, &shown, &opts()).unwrap();
    assert!(close(v / 0.5, 5.0, 1e-9));
    let (_, v) = best_response(&g, &ph, &opts()).unwrap();
    assert!(close(v / 0.5, 10.0, 1e-9));
}

#[test]
fn signalling_human_does_not_act_naively() {
    let g = node_scheduling();
    let pa = Policy::constant(Player::Assistant, 4, node::SHOW);
    let ph = naive_human(true);
    assert!(!acts_naively(&g, &ph, &pa).unwrap());
    assert!(naive_violation(&g, &ph, &pa).unwrap().is_some());
}

#[test]
fn inert_free_game_is_vacuously_naive() {
    // H's action always moves the state, so naivety constrains nothing.
    let mut g = Poag::new(["a", "b"], ["stay", "move"], ["x"], ["t"], ["o"], ["o"], 1.0, 2);
    for s in 0..2 {
        g.set_transition(s, 0, 0, vec![(s, 1.0)]);
        g.set_transition(s, 1, 0, vec![(1 - s, 1.0)]);
        for ah in 0..2 {
            g.set_obs(s, ah, 0, vec![(0, 0, 1.0)]);
        }
        g.set_reward(s, 0, 0, 0, 5.0);
    }
    g.initial = vec![(0, 0, 1.0)];
    let ph = Policy::constant(Player::Human, 2, 1);
    assert!(acts_naively(&g, &ph, &Policy::constant(Player::Assistant, 1, 0)).unwrap());
}

// Man or tldr.

fn man_or_tldr(a: usize) -> Policy {
    Policy::constant(Player::Assistant, 2, a)
}

#[test]
fn boltzmann_values_for_man_and_tldr() {
    let g = man_tldr();
    let v = |a: usize, beta: f64| {
        let pa = man_or_tldr(a);
        evaluate_pair(&g, &boltzmann_response(&g, &pa, beta).unwrap(), &pa).unwrap()
    };
    assert!(close(v(flags::TLDR, 1.0), 3.92806, 1e-5));
    assert!(close(v(flags::MAN, 1.0), 3.86234, 1e-5));
    assert!(close(v(flags::TLDR, 1000.0), 4.0, 1e-9));
    assert!(close(v(flags::MAN, 1000.0), 4.0, 1e-9));
}

#[test]
fn boltzmann_probability_after_exact_observation() {
    let g = man_tldr();
    let ph = boltzmann_response(&g, &man_or_tldr(flags::MAN), 1.0).unwrap();
    let root = History::root(Some(0));
    let seen_a = root.child(0, flags::exact(0));
    let after = seen_a.child(0, 0);
    let d = ph.dist(&after).unwrap();
    let e7 = 7f64.exp();
    assert!(close(d[flags::FLAG1], e7 / (e7 + 1.0), 1e-12));
    let h0 = ph.dist(&root).unwrap();
    assert!(close(h0[0], 0.5, 1e-12));
}

#[test]
fn boltzmann_rejects_bad_beta() {
    let g = man_tldr();
    assert!(boltzmann_response(&g, &man_or_tldr(0), 0.0).is_err());
    assert!(boltzmann_response(&g, &man_or_tldr(0), f64::INFINITY).is_err());
}

#[test]
fn tldr_interferes_at_both_levels() {
    let g = man_tldr();
    let tldr = man_or_tldr(flags::TLDR);
    assert!(policy_interferes_action_level(&g, &tldr).is_some());
    let alt = policy_interferes_policy_level(&g, &tldr, 0, &opts()).unwrap().expect("witness");
    assert_eq!(alt.action(&History::root(None)), Some(flags::MAN));
    assert_eq!(policy_interferes_policy_level(&g, &man_or_tldr(flags::MAN), 0, &opts()).unwrap(), None);
}

// Channels.

#[test]
fn channel_sizes() {
    let g = cuda_versions(2);
    let (cg, lay) = add_channel_with_layout(&g, Direction::AtoH, MessageSet::Full);
    let noa = g.assistant_obs.len();
    assert_eq!(cg.assistant_actions.len(), noa * g.assistant_actions.len());
    assert_eq!(cg.human_obs.len(), noa * g.human_obs.len());
    assert_eq!(cg.human_actions.len(), g.human_actions.len());
    assert_eq!(lay.human_messages.len(), 0);
    assert_eq!(cg.validate(), vec![]);
    let both = add_channel(&g, Direction::Both);
    assert_eq!(both.validate(), vec![]);
    assert!(both.human_actions.len() > g.human_actions.len());
}

#[test]
fn channel_messages_reach_the_receiver() {
    let g = man_tldr();
    let (cg, lay) = add_channel_with_layout(&g, Direction::AtoH, MessageSet::Effective);
    for m in 0..lay.assistant_messages.len() {
        let aa = lay.action_id(Player::Assistant, flags::TLDR, Some(m));
        for &(oh, _, p) in cg.obs(flags::read(0), 0, aa) {
            assert!(p > 0.0);
            assert_eq!(lay.obs(Player::Human, oh), (5, Some(m)));
        }
        assert_eq!(cg.transition(flags::INIT, 0, aa), g.transition(flags::INIT, 0, flags::TLDR));
    }
}

#[test]
fn stripping_messages_recovers_a_base_trajectory() {
    let g = node_scheduling();
    let (cg, lay) = add_channel_with_layout(&g, Direction::Both, MessageSet::Effective);
    let ph = Policy::uniform(Player::Human, cg.human_actions.len());
    let pa = Policy::uniform(Player::Assistant, cg.assistant_actions.len());
    for seed in 0..20 {
        let tr = sample_trajectory(&cg, &ph, &pa, seed).unwrap();
        let base = lay.strip(&tr);
        for st in &base.steps {
            assert!(st.human_action < 2 && st.assistant_action < 4);
            assert_eq!(st.reward, g.reward(st.state, st.human_action, st.assistant_action, base.theta));
            let p: f64 = g
                .obs(st.next_state, st.human_action, st.assistant_action)
                .iter()
                .filter(|e| e.0 == st.human_obs && e.1 == st.assistant_obs)
                .map(|e| e.2)
                .sum();
            assert!(p > 0.0);
        }
        assert!(close(base.discounted_return(g.gamma), tr.discounted_return(cg.gamma), 1e-12));
    }
}

#[test]
fn honesty_predicate() {
    let g = revealing_errors();
    let (_, lay) = add_channel_with_layout(&g, Direction::AtoH, MessageSet::Effective);
    let root = History::root(None);
    assert!(lay.honest_assistant(&root, lay.action_id(Player::Assistant, 0, Some(0))));
    assert!(!lay.honest_assistant(&root, lay.action_id(Player::Assistant, 0, Some(1))));
    let after = root.child(0, 1);
    let m = lay.assistant_messages.iter().position(|&o| o == 1).unwrap();
    assert!(lay.honest_assistant(&after, lay.action_id(Player::Assistant, 1, Some(m))));
    assert!(!lay.honest_assistant(&after, lay.action_id(Player::Assistant, 1, Some((m + 1) % 3))));
}

// Existence checks on the built-in games.

#[test]
fn existence_checks_hold_on_builtins() {
    let games = [revealing_errors(), cuda_versions(3), node_scheduling(), man_tldr()];
    for g in &games {
        for v in [
            check_clean_optimum(g, &opts()),
            check_policy_level_clean(g, &opts()),
            check_channel_clean(g, &opts()),
            check_honest_naive(g, &opts()),
        ] {
            assert!(!v.is_violated(), "{v}");
        }
        assert!(check_policy_level_clean(g, &opts()).holds());
    }
    assert!(check_clean_optimum(&man_tldr(), &opts()).holds());
    assert!(check_honest_naive(&node_scheduling(), &opts()).holds());
}

#[test]
fn for_each_optimal_pair_stops_early() {
    let g = cuda_versions(3);
    let mut n = 0;
    let s = for_each_optimal_pair(&g, &Restriction::none(), &opts(), |_, _, _| {
        n += 1;
        if n == 3 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .unwrap();
    assert_eq!(n, 3);
    assert_eq!(s.pairs_seen, 3);
}
