use std::collections::BTreeMap;

use poag_game::{all_histories, History, Player, Poag, Policy};

use crate::SolveError;

/// A policy with a finite internal memory: at virtual state `v` and history `h` it plays
/// `a` and moves to `v'` with probability `rule[(v, h)]` entry `(a, v', p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualStatePolicy {
    pub player: Player,
    pub n_virtual: usize,
    pub initial: usize,
    pub rule: BTreeMap<(usize, History), Vec<(usize, usize, f64)>>,
}

/// The history policy with the same behaviour: the virtual state is filtered out using
/// the player's own past actions.
pub fn flatten_virtual_policy(g: &Poag, vp: &VirtualStatePolicy) -> Result<Policy, SolveError> {
    let n = g.n_actions(vp.player);
    let nv = vp.n_virtual;
    if vp.initial >= nv {
        return Err(SolveError::InvalidArgument(format!("initial virtual state {} out of range", vp.initial)));
    }
    let mut belief: BTreeMap<History, Vec<f64>> = BTreeMap::new();
    let mut pi = Policy::new(vp.player, n);
    for h in all_histories(g, vp.player) {
        let b = match h.steps.len() {
            0 => {
                let mut b = vec![0.0; nv];
                b[vp.initial] = 1.0;
                b
            }
            _ => belief.remove(&h).unwrap_or_else(|| {
                let mut b = vec![0.0; nv];
                b[vp.initial] = 1.0;
                b
            }),
        };
        let mut dist = vec![0.0; n];
        // next[a][v'] is the joint weight of playing a and moving to v'.
        let mut next = vec![vec![0.0; nv]; n];
        for (v, &bv) in b.iter().enumerate() {
            if bv <= 0.0 {
                continue;
            }
            let row = vp
                .rule
                .get(&(v, h.clone()))
                .ok_or_else(|| SolveError::InvalidArgument(format!("no rule for virtual state {v} at {h:?}")))?;
            for &(a, v2, p) in row {
                if a >= n || v2 >= nv {
                    return Err(SolveError::InvalidArgument(format!("rule entry ({a}, {v2}) out of range at {h:?}")));
                }
                dist[a] += bv * p;
                next[a][v2] += bv * p;
            }
        }
        if h.steps.len() + 1 < g.horizon {
            let total: Vec<f64> = (0..nv).map(|v2| next.iter().map(|r| r[v2]).sum()).collect();
            for (a, row) in next.iter().enumerate() {
                let z: f64 = row.iter().sum();
                let child = if z > 0.0 {
                    row.iter().map(|x| x / z).collect()
                } else {
                    let zt: f64 = total.iter().sum();
                    if zt > 0.0 {
                        total.iter().map(|x| x / zt).collect()
                    } else {
                        b.clone()
                    }
                };
                for o in 0..g.n_obs(vp.player) {
                    belief.insert(h.child(a, o), child.clone());
                }
            }
        }
        pi.set(h, dist);
    }
    Ok(pi)
}
