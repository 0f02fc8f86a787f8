//! Reference assistance games.
//!
//! Each constructor returns a game that passes [`Poag::validate`]. Episodes that start in a
//! dedicated initial state use one extra step, because observations arrive after each
//! transition.

use poag_game::Poag;

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 4] = ["revealing-errors", "cuda-versions", "node-scheduling", "man-tldr"];

/// Looks up a constructor by its command-line name. `n` is used by `cuda-versions` only.
pub fn by_name(name: &str, n: usize) -> Option<Poag> {
    match name {
        "revealing-errors" => Some(revealing_errors()),
        "cuda-versions" => Some(cuda_versions(n)),
        "node-scheduling" => Some(node_scheduling()),
        "man-tldr" => Some(man_tldr()),
        _ => None,
    }
}

fn absorbing(g: &mut Poag, from: usize, to: usize) {
    for ah in 0..g.human_actions.len() {
        for aa in 0..g.assistant_actions.len() {
            g.set_transition(from, ah, aa, vec![(to, 1.0)]);
        }
    }
}

fn null_obs_everywhere(g: &mut Poag) {
    for s in 0..g.n_states() {
        for ah in 0..g.human_actions.len() {
            for aa in 0..g.assistant_actions.len() {
                g.set_obs(s, ah, aa, vec![(0, 0, 1.0)]);
            }
        }
    }
}

/// A may install with logging disabled, or re-enable logging first. Installation succeeds
/// with probability 0.5. H then runs an experiment (+1 on success, -2 on failure) or not (0).
pub fn revealing_errors() -> Poag {
    const I: usize = 0;
    const OK: usize = 1;
    const FAIL: usize = 2;
    const E: usize = 3;
    const RUN: usize = 0;
    const LOG: usize = 1;
    let mut g = Poag::new(
        ["I", "ok", "fail", "E"],
        ["run", "skip"],
        ["install", "log-install"],
        ["theta"],
        ["null", "success", "failure"],
        ["null", "success", "failure"],
        1.0,
        2,
    );
    null_obs_everywhere(&mut g);
    for ah in 0..2 {
        for aa in 0..2 {
            g.set_transition(I, ah, aa, vec![(OK, 0.5), (FAIL, 0.5)]);
        }
        g.set_obs(OK, ah, LOG, vec![(1, 1, 1.0)]);
        g.set_obs(FAIL, ah, LOG, vec![(2, 2, 1.0)]);
        g.set_reward(OK, RUN, ah, 0, 1.0);
        g.set_reward(FAIL, RUN, ah, 0, -2.0);
    }
    absorbing(&mut g, OK, E);
    absorbing(&mut g, FAIL, E);
    absorbing(&mut g, E, E);
    g.initial = vec![(I, 0, 1.0)];
    g
}

fn bits(mask: usize, n: usize) -> String {
    (0..n).map(|j| if mask >> j & 1 == 1 { '1' } else { '0' }).collect()
}

/// Layout of [`cuda_versions`] ids.
#[derive(Clone, Debug)]
pub struct CudaLayout {
    pub n: usize,
    /// `(avail, compat)` masks of the step-0 and step-1 states, in state order.
    pub pairs: Vec<(usize, usize)>,
}

impl CudaLayout {
    pub fn new(n: usize) -> CudaLayout {
        let full = 1usize << n;
        let pairs = (0..full)
            .flat_map(|a| (0..full).map(move |c| (a, c)))
            .filter(|&(a, c)| a & c != 0)
            .collect();
        CudaLayout { n, pairs }
    }
    pub const INIT: usize = 0;
    pub const END: usize = 1;
    pub fn state(&self, step: usize, pair: usize) -> usize {
        2 + step * self.pairs.len() + pair
    }
    /// Assistant action id that shows exactly `shown`.
    pub fn action_showing(&self, shown: usize) -> usize {
        ((1 << self.n) - 1) ^ shown
    }
    pub fn shown_by(&self, action: usize) -> usize {
        ((1 << self.n) - 1) ^ action
    }
    /// Observation ids carry the mask shifted by one; 0 is null.
    pub fn obs_of_mask(mask: usize) -> usize {
        mask + 1
    }
}

/// `n` versions, each available and compatible or not. A sees compatibility and may hide
/// versions from the list H sees; H installs one version and scores 1 iff it is available
/// and compatible.
pub fn cuda_versions(n: usize) -> Poag {
    assert!((2..=10).contains(&n), "cuda_versions supports 2 <= n <= 10");
    let lay = CudaLayout::new(n);
    let full = 1usize << n;
    let mut states = vec!["I".to_string(), "E".to_string()];
    for step in 0..2 {
        for &(a, c) in &lay.pairs {
            states.push(format!("t{step}:a{}:c{}", bits(a, n), bits(c, n)));
        }
    }
    let human_actions: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let assistant_actions: Vec<String> = (0..full).map(|i| bits(lay.shown_by(i), n)).collect();
    let masks = |pfx: &str| -> Vec<String> {
        std::iter::once("null".to_string()).chain((0..full).map(|m| format!("{pfx}{}", bits(m, n)))).collect()
    };
    let mut g = Poag::new(
        states,
        human_actions,
        assistant_actions,
        vec!["theta".to_string()],
        masks("shown:"),
        masks("compat:"),
        1.0,
        3,
    );
    null_obs_everywhere(&mut g);
    let p0 = 1.0 / lay.pairs.len() as f64;
    let first: Vec<(usize, f64)> = (0..lay.pairs.len()).map(|k| (lay.state(0, k), p0)).collect();
    for ah in 0..n {
        for aa in 0..full {
            g.set_transition(CudaLayout::INIT, ah, aa, first.clone());
            g.set_transition(CudaLayout::END, ah, aa, vec![(CudaLayout::END, 1.0)]);
            for (k, &(avail, compat)) in lay.pairs.iter().enumerate() {
                let (s0, s1) = (lay.state(0, k), lay.state(1, k));
                g.set_transition(s0, ah, aa, vec![(s1, 1.0)]);
                g.set_transition(s1, ah, aa, vec![(CudaLayout::END, 1.0)]);
                g.set_obs(s0, ah, aa, vec![(0, CudaLayout::obs_of_mask(compat), 1.0)]);
                let seen = avail & lay.shown_by(aa);
                g.set_obs(s1, ah, aa, vec![(CudaLayout::obs_of_mask(seen), 0, 1.0)]);
                let r = (avail >> ah & 1) * (compat >> ah & 1);
                g.set_reward(s1, ah, aa, 0, r as f64);
            }
        }
    }
    g.initial = vec![(CudaLayout::INIT, 0, 1.0)];
    g
}

/// Ids used by [`node_scheduling`].
pub mod node {
    pub const INIT: usize = 0;
    pub const END: usize = 9;
    /// Step-1 configuration `k` in `0..4`.
    pub fn config(k: usize) -> usize {
        1 + k
    }
    /// Step-2 copy of configuration `k`.
    pub fn later(k: usize) -> usize {
        5 + k
    }
    pub const SHOW: usize = 0;
    pub const DISGUISE: usize = 1;
    pub const CPU: usize = 2;
    pub const GPU: usize = 3;
    pub const NODE1: usize = 0;
    pub const NODE2: usize = 1;
    /// Theta ids: GPU-favouring first, then CPU-favouring; Intel before AMD.
    pub fn theta(favors_gpu: bool, favors_intel: bool) -> usize {
        (if favors_gpu { 0 } else { 2 }) + (if favors_intel { 0 } else { 1 })
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Node {
    Gpu,
    Cpu,
    Intel,
    Amd,
}

/// H picks one of two nodes, then A schedules a later job on a CPU or GPU node for her.
///
/// The four configurations are GPU/CPU, CPU/GPU, Intel/AMD and AMD/Intel. A may disguise
/// either CPU pair as GPU/CPU. After H chooses, A sees the configuration and her choice.
pub fn node_scheduling() -> Poag {
    use node::*;
    let configs = [[Node::Gpu, Node::Cpu], [Node::Cpu, Node::Gpu], [Node::Intel, Node::Amd], [Node::Amd, Node::Intel]];
    let mut states = vec!["I".to_string()];
    states.extend(["gpu/cpu", "cpu/gpu", "intel/amd", "amd/intel"].map(|c| format!("choose:{c}")));
    states.extend(["gpu/cpu", "cpu/gpu", "intel/amd", "amd/intel"].map(|c| format!("schedule:{c}")));
    states.push("E".to_string());
    let mut assistant_obs = vec!["null".to_string()];
    for c in ["gpu/cpu", "cpu/gpu", "intel/amd", "amd/intel"] {
        for n in ["node1", "node2"] {
            assistant_obs.push(format!("{c}:{n}"));
        }
    }
    let mut g = Poag::new(
        states,
        vec!["node1".to_string(), "node2".to_string()],
        ["show", "disguise", "cpu", "gpu"].map(String::from).to_vec(),
        ["gpu-intel", "gpu-amd", "cpu-intel", "cpu-amd"].map(String::from).to_vec(),
        ["null", "gpu/cpu", "cpu/gpu", "intel/amd", "amd/intel"].map(String::from).to_vec(),
        assistant_obs,
        1.0,
        3,
    );
    null_obs_everywhere(&mut g);
    let quarter: Vec<(usize, f64)> = (0..4).map(|k| (config(k), 0.25)).collect();
    for ah in 0..2 {
        for aa in 0..4 {
            g.set_transition(INIT, ah, aa, quarter.clone());
            for k in 0..4 {
                g.set_transition(config(k), ah, aa, vec![(later(k), 1.0)]);
                g.set_transition(later(k), ah, aa, vec![(END, 1.0)]);
                let display = if aa == DISGUISE && k >= 2 { 1 } else { 1 + k };
                g.set_obs(config(k), ah, aa, vec![(display, 0, 1.0)]);
                g.set_obs(later(k), ah, aa, vec![(0, 1 + 2 * k + ah, 1.0)]);
            }
            g.set_transition(END, ah, aa, vec![(END, 1.0)]);
        }
    }
    for th in 0..4 {
        let favors_gpu = th < 2;
        let favors_intel = th % 2 == 0;
        for (k, cfg) in configs.iter().enumerate() {
            for ah in 0..2 {
                let r = match cfg[ah] {
                    Node::Gpu => favors_gpu,
                    Node::Cpu => !favors_gpu,
                    Node::Intel => favors_intel,
                    Node::Amd => !favors_intel,
                };
                for aa in 0..4 {
                    g.set_reward(config(k), ah, aa, th, if r { 1.0 } else { 0.0 });
                    let later_r = match aa {
                        GPU if favors_gpu => 10.0,
                        CPU if !favors_gpu => 10.0,
                        _ => 0.0,
                    };
                    g.set_reward(later(k), ah, aa, th, later_r);
                }
            }
        }
        g.initial.push((INIT, th, 0.25));
    }
    g
}

/// Ids used by [`man_tldr`].
pub mod flags {
    pub const INIT: usize = 0;
    pub const END: usize = 9;
    /// Reading step, `x` in `0..4` for a, b, c, d.
    pub fn read(x: usize) -> usize {
        1 + x
    }
    /// Choosing step.
    pub fn choose(x: usize) -> usize {
        5 + x
    }
    pub const TLDR: usize = 0;
    pub const MAN: usize = 1;
    pub const FLAG1: usize = 0;
    pub const FLAG2: usize = 1;
    /// Observation id of the exact state `x`; `5` and `6` are the summaries "1" and "2".
    pub fn exact(x: usize) -> usize {
        1 + x
    }
}

/// H must pick flag 1 or 2. One flag is better, by 7 or by 1. `man` reveals the exact state;
/// `tldr` reveals only which flag is better.
pub fn man_tldr() -> Poag {
    use flags::*;
    let xs = ["a", "b", "c", "d"];
    let mut states = vec!["I".to_string()];
    states.extend(xs.map(|x| format!("0:s_{x}")));
    states.extend(xs.map(|x| format!("1:s_{x}")));
    states.push("E".to_string());
    let obs: Vec<String> = ["null", "s_a", "s_b", "s_c", "s_d", "1", "2"].map(String::from).to_vec();
    let mut g = Poag::new(
        states,
        vec!["flag1".to_string(), "flag2".to_string()],
        vec!["tldr".to_string(), "man".to_string()],
        vec!["theta".to_string()],
        obs.clone(),
        obs,
        1.0,
        3,
    );
    null_obs_everywhere(&mut g);
    let quarter: Vec<(usize, f64)> = (0..4).map(|x| (read(x), 0.25)).collect();
    for ah in 0..2 {
        for aa in 0..2 {
            g.set_transition(INIT, ah, aa, quarter.clone());
            for x in 0..4 {
                g.set_transition(read(x), ah, aa, vec![(choose(x), 1.0)]);
                g.set_transition(choose(x), ah, aa, vec![(END, 1.0)]);
                let o = if aa == MAN { exact(x) } else if x < 2 { 5 } else { 6 };
                g.set_obs(read(x), ah, aa, vec![(o, o, 1.0)]);
            }
            g.set_transition(END, ah, aa, vec![(END, 1.0)]);
        }
    }
    for aa in 0..2 {
        g.set_reward(choose(0), FLAG1, aa, 0, 7.0);
        g.set_reward(choose(1), FLAG1, aa, 0, 1.0);
        g.set_reward(choose(2), FLAG2, aa, 0, 7.0);
        g.set_reward(choose(3), FLAG2, aa, 0, 1.0);
    }
    g.initial = vec![(INIT, 0, 1.0)];
    g
}
