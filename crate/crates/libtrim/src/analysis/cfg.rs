//! Per-function control-flow graphs.

use std::collections::BTreeMap;
use std::fmt;

use crate::ir::{Function, Inst};

/// How an edge leaves its source block. `switch` contributes one `Case`
/// edge per listed constant plus one `Default` edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Goto,
    True,
    False,
    Case(i64),
    Default,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeKind::Goto => write!(f, "goto"),
            EdgeKind::True => write!(f, "true"),
            EdgeKind::False => write!(f, "false"),
            EdgeKind::Case(k) => write!(f, "case {k}"),
            EdgeKind::Default => write!(f, "default"),
        }
    }
}

/// Block-level graph; indices follow the function's block order, so index 0
/// is the entry.
#[derive(Debug, Clone)]
pub struct Cfg {
    pub labels: Vec<String>,
    pub succs: Vec<Vec<(usize, EdgeKind)>>,
    pub preds: Vec<Vec<usize>>,
    index: BTreeMap<String, usize>,
}

impl Cfg {
    pub fn build(func: &Function) -> Cfg {
        let labels: Vec<String> = func.blocks.iter().map(|b| b.label.clone()).collect();
        let index: BTreeMap<String, usize> =
            labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let mut succs = vec![Vec::new(); labels.len()];
        let mut preds = vec![Vec::new(); labels.len()];
        for (i, block) in func.blocks.iter().enumerate() {
            let Some(term) = block.terminator() else { continue };
            let mut add = |label: &str, kind: EdgeKind| {
                if let Some(&j) = index.get(label) {
                    succs[i].push((j, kind));
                    preds[j].push(i);
                }
            };
            match &term.inst {
                Inst::Jump { target } => add(target, EdgeKind::Goto),
                Inst::Branch { then_to, else_to, .. } => {
                    add(then_to, EdgeKind::True);
                    add(else_to, EdgeKind::False);
                }
                Inst::Switch { cases, default, .. } => {
                    for (k, label) in cases {
                        add(label, EdgeKind::Case(*k));
                    }
                    add(default, EdgeKind::Default);
                }
                _ => {}
            }
        }
        Cfg { labels, succs, preds, index }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Blocks reachable from the entry.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        if self.len() == 0 {
            return seen;
        }
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(b) = stack.pop() {
            for &(s, _) in &self.succs[b] {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen
    }
}
