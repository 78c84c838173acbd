//! Control dependence from post-dominance: a block depends on a branch
//! edge when taking that edge commits the program to executing it.

use std::collections::BTreeSet;

use super::cfg::{Cfg, EdgeKind};
use super::postdom::PostDoms;

/// A controlling edge: the branching block and which way it went.
pub type ControlEdge = (usize, EdgeKind);

#[derive(Debug, Clone)]
pub struct ControlDeps {
    /// `direct[b]` = edges `b` is control dependent on: every edge `u → v`
    /// such that `b` post-dominates `v` but not `u`.
    pub direct: Vec<BTreeSet<ControlEdge>>,
    /// Closure through controlling blocks: if `b` depends on an edge out
    /// of `u`, it inherits everything `u` depends on.
    pub transitive: Vec<BTreeSet<ControlEdge>>,
}

impl ControlDeps {
    pub fn depends_on(&self, block: usize, edge: &ControlEdge) -> bool {
        self.transitive[block].contains(edge)
    }
}

pub fn control_dependence(cfg: &Cfg, pd: &PostDoms) -> ControlDeps {
    let n = cfg.len();
    let mut direct: Vec<BTreeSet<ControlEdge>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for &(v, kind) in &cfg.succs[u] {
            for &w in pd.sets[v].iter().filter(|&&w| w < n) {
                if !pd.sets[u].contains(&w) {
                    direct[w].insert((u, kind));
                }
            }
        }
    }

    let mut transitive = direct.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for w in 0..n {
            let inherited: BTreeSet<ControlEdge> = transitive[w]
                .iter()
                .flat_map(|&(u, _)| direct[u].iter().copied())
                .collect();
            for edge in inherited {
                if transitive[w].insert(edge) {
                    changed = true;
                }
            }
        }
    }
    ControlDeps { direct, transitive }
}
