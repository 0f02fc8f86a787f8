use poag_blackwell::{interfering_actions, same_effect};
use poag_examples::*;
use poag_game::{evaluate_pair, Player, Policy};
use poag_solvers::{best_response, boltzmann_response, optimal_value, SolveOptions};

fn opts() -> SolveOptions {
    SolveOptions::default()
}

#[test]
fn every_example_validates() {
    for name in NAMES {
        let g = by_name(name, 3).unwrap();
        assert!(g.validate().is_empty(), "{name}: {:?}", g.validate());
    }
    for n in 2..=5 {
        assert!(cuda_versions(n).validate().is_empty());
    }
    assert!(by_name("other", 3).is_none());
}

#[test]
fn revealing_errors_values() {
    let g = revealing_errors();
    assert_eq!(g.horizon, 2);
    assert!((optimal_value(&g, &opts()).unwrap() - 0.5).abs() < 1e-12);
    // Without logging H cannot tell success from failure: max(0, 0.5 * 1 - 0.5 * 2) = 0.
    let (_, v) = best_response(&g, &Policy::constant(Player::Assistant, 2, 0), &opts()).unwrap();
    assert!(v.abs() < 1e-12);
}

#[test]
fn cuda_sizes_and_initial_states() {
    for n in 2..=4 {
        let g = cuda_versions(n);
        assert_eq!(g.assistant_actions.len(), 1 << n);
        assert_eq!(g.human_actions.len(), n);
        let lay = CudaLayout::new(n);
        // Every (available, compatible) pair with a usable version, and nothing else.
        let full = 1usize << n;
        let want = (0..full * full).filter(|x| (x / full) & (x % full) != 0).count();
        assert_eq!(lay.pairs.len(), want);
        assert_eq!(lay.action_showing(full - 1), 0);
        assert_eq!(lay.shown_by(lay.action_showing(5 % full)), 5 % full);
    }
}

#[test]
fn cuda_show_all_is_never_flagged() {
    let g = cuda_versions(2);
    let lay = CudaLayout::new(2);
    let show_all = lay.action_showing(0b11);
    let flags = interfering_actions(&g);
    assert!(flags.iter().all(|f| f.action != show_all));
    assert_eq!(flags.len(), 3);
    assert!(flags.iter().all(|f| f.witness == show_all));
    for a in 0..4 {
        assert!(same_effect(&g, a, show_all));
    }
}

#[test]
fn cuda_optimum_is_one() {
    assert!((optimal_value(&cuda_versions(3), &opts()).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn node_scheduling_structure() {
    let g = node_scheduling();
    assert_eq!(g.n_thetas(), 4);
    assert!(g.initial.iter().all(|&(s, _, p)| s == node::INIT && p == 0.25));
    assert_eq!(node::theta(true, true), 0);
    assert_eq!(node::theta(false, false), 3);
    // GPU-favouring theta prefers node 1 of the GPU/CPU configuration.
    assert_eq!(g.reward(node::config(0), node::NODE1, node::SHOW, node::theta(true, false)), 1.0);
    assert_eq!(g.reward(node::later(2), 0, node::GPU, node::theta(true, true)), 10.0);
    assert_eq!(g.reward(node::later(2), 0, node::CPU, node::theta(true, true)), 0.0);
    let flags = interfering_actions(&g);
    assert_eq!(flags.iter().map(|f| (f.action, f.witness)).collect::<Vec<_>>(), vec![(node::DISGUISE, node::SHOW)]);
}

#[test]
fn man_tldr_values() {
    let g = man_tldr();
    for (aa, want) in [(flags::TLDR, 3.92806), (flags::MAN, 3.86234)] {
        let pa = Policy::constant(Player::Assistant, 2, aa);
        let ph = boltzmann_response(&g, &pa, 1.0).unwrap();
        assert!((evaluate_pair(&g, &ph, &pa).unwrap() - want).abs() < 1e-5);
        let ph = boltzmann_response(&g, &pa, 1e3).unwrap();
        assert!((evaluate_pair(&g, &ph, &pa).unwrap() - 4.0).abs() < 1e-9);
    }
    assert!((optimal_value(&g, &opts()).unwrap() - 4.0).abs() < 1e-12);
}
