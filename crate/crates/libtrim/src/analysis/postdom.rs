//! Post-dominators over the CFG augmented with a virtual exit node that
//! every `ret` block feeds.

use std::collections::BTreeSet;

use super::cfg::Cfg;
use crate::ir::{Function, Inst};

#[derive(Debug, Clone)]
pub struct PostDoms {
    /// `sets[b]` = blocks that post-dominate `b`, including `b` itself.
    /// The virtual exit has index [`PostDoms::exit`] and post-dominates
    /// everything that reaches it.
    pub sets: Vec<BTreeSet<usize>>,
    pub exit: usize,
}

impl PostDoms {
    pub fn postdominates(&self, a: usize, b: usize) -> bool {
        self.sets[b].contains(&a)
    }

    /// The nearest strict post-dominator, when one exists. Blocks that
    /// cannot reach the exit have no meaningful tree parent.
    pub fn ipdom(&self, b: usize) -> Option<usize> {
        let candidates: BTreeSet<usize> =
            self.sets[b].iter().copied().filter(|&c| c != b).collect();
        candidates
            .iter()
            .copied()
            .find(|&c| candidates.iter().all(|&d| self.sets[c].contains(&d)))
    }
}

/// Augmented successors: real edges plus ret → virtual exit.
fn succs_with_exit(func: &Function, cfg: &Cfg, b: usize) -> Vec<usize> {
    let mut out: Vec<usize> = cfg.succs[b].iter().map(|&(s, _)| s).collect();
    if matches!(func.blocks[b].terminator().map(|t| &t.inst), Some(Inst::Ret { .. })) {
        out.push(cfg.len());
    }
    out
}

pub fn postdominators(func: &Function, cfg: &Cfg) -> PostDoms {
    let n = cfg.len();
    let exit = n;
    let universe: BTreeSet<usize> = (0..=n).collect();
    let mut sets: Vec<BTreeSet<usize>> = vec![universe; n + 1];
    sets[exit] = BTreeSet::from([exit]);
    let mut changed = true;
    while changed {
        changed = false;
        // Backward problem: iterate blocks in reverse order for faster
        // convergence, though any order reaches the same fixpoint.
        for b in (0..n).rev() {
            let succs = succs_with_exit(func, cfg, b);
            let mut next: Option<BTreeSet<usize>> = None;
            for s in succs {
                next = Some(match next {
                    None => sets[s].clone(),
                    Some(acc) => acc.intersection(&sets[s]).copied().collect(),
                });
            }
            let mut next = next.unwrap_or_default();
            next.insert(b);
            if next != sets[b] {
                sets[b] = next;
                changed = true;
            }
        }
    }
    PostDoms { sets, exit }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_module;

    fn pd_of(src: &str) -> (PostDoms, Cfg) {
        let m = parse_module(src).unwrap();
        let f = m.function("main").unwrap();
        let cfg = Cfg::build(f);
        let pd = postdominators(f, &cfg);
        (pd, cfg)
    }

    #[test]
    fn straight_line_chain() {
        let (pd, _) = pd_of("app fn main() {\na:\n  jmp b\nb:\n  jmp c\nc:\n  ret\n}\n");
        assert!(pd.postdominates(2, 0));
        assert!(pd.postdominates(1, 0));
        assert!(!pd.postdominates(0, 1));
        assert_eq!(pd.ipdom(0), Some(1));
        assert_eq!(pd.ipdom(2), Some(pd.exit));
    }

    #[test]
    fn diamond_join_postdominates_the_branch_but_arms_do_not() {
        let src = "app fn main() {\nentry:\n  const c, 1\n  br c, l, r\nl:\n  jmp join\nr:\n  jmp join\njoin:\n  ret\n}\n";
        let (pd, _) = pd_of(src);
        assert!(pd.postdominates(3, 0));
        assert!(!pd.postdominates(1, 0));
        assert!(!pd.postdominates(2, 0));
        assert_eq!(pd.ipdom(0), Some(3));
    }

    #[test]
    fn every_block_reaching_exit_is_postdominated_by_it() {
        let src = "app fn main() {\nentry:\n  const c, 1\n  br c, l, r\nl:\n  ret\nr:\n  ret\n}\n";
        let (pd, cfg) = pd_of(src);
        for b in 0..cfg.len() {
            assert!(pd.postdominates(pd.exit, b));
        }
    }

    #[test]
    fn loop_header_postdominates_the_body() {
        let src = "app fn main() {\nentry:\n  jmp head\nhead:\n  const c, 1\n  br c, body, done\nbody:\n  jmp head\ndone:\n  ret\n}\n";
        let (pd, _) = pd_of(src);
        // All paths from the body lead back through the header.
        assert!(pd.postdominates(1, 2));
        assert!(!pd.postdominates(2, 1));
    }
}
