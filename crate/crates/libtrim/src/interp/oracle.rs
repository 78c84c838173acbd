//! Observational equivalence and the brute-force removability oracle.

use std::collections::BTreeSet;

use super::{run, Outcome, Termination};
use crate::ir::{InstId, Module};

/// The first observable difference between two runs of one trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    /// Outputs differ at `position`; `None` means that side already
    /// stopped emitting.
    Output { position: usize, left: Option<i64>, right: Option<i64> },
    /// Identical outputs but different ends.
    Termination { left: Termination, right: Termination },
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Divergence::Output { position, left, right } => {
                let show = |v: &Option<i64>| match v {
                    Some(v) => v.to_string(),
                    None => "<none>".to_string(),
                };
                write!(f, "output {} differs: {} vs {}", position, show(left), show(right))
            }
            Divergence::Termination { left, right } => {
                write!(f, "termination differs: {left} vs {right}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    Diverged { trace: usize, divergence: Divergence },
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent)
    }
}

fn compare(trace: usize, a: &Outcome, b: &Outcome) -> Option<Verdict> {
    let shared = a.outputs.len().min(b.outputs.len());
    for position in 0..shared {
        if a.outputs[position] != b.outputs[position] {
            return Some(Verdict::Diverged {
                trace,
                divergence: Divergence::Output {
                    position,
                    left: Some(a.outputs[position]),
                    right: Some(b.outputs[position]),
                },
            });
        }
    }
    if a.outputs.len() != b.outputs.len() {
        return Some(Verdict::Diverged {
            trace,
            divergence: Divergence::Output {
                position: shared,
                left: a.outputs.get(shared).copied(),
                right: b.outputs.get(shared).copied(),
            },
        });
    }
    if a.termination != b.termination {
        return Some(Verdict::Diverged {
            trace,
            divergence: Divergence::Termination { left: a.termination, right: b.termination },
        });
    }
    None
}

/// Equivalent iff every trace yields identical outputs and identical
/// termination on both modules.
pub fn equivalence(a: &Module, b: &Module, traces: &[Vec<i64>], fuel: u64) -> Verdict {
    for (i, trace) in traces.iter().enumerate() {
        let oa = run(a, trace, fuel);
        let ob = run(b, trace, fuel);
        if let Some(verdict) = compare(i, &oa, &ob) {
            return verdict;
        }
    }
    Verdict::Equivalent
}

/// Instructions after whose lone deletion the module still behaves
/// identically on every trace. Ground truth for the removal passes, so it
/// re-executes per instruction and is guarded to small modules.
pub fn removability_oracle(
    m: &Module,
    traces: &[Vec<i64>],
    fuel: u64,
) -> Result<BTreeSet<InstId>, String> {
    let total = m.instructions().count();
    if total > 500 {
        return Err(format!(
            "removability oracle is limited to 500 instructions, module has {total}"
        ));
    }
    let mut removable = BTreeSet::new();
    for (_, instr) in m.instructions() {
        let cut = m.without_instructions(&BTreeSet::from([instr.id]));
        if equivalence(m, &cut, traces, fuel).is_equivalent() {
            removable.insert(instr.id);
        }
    }
    Ok(removable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::DEFAULT_FUEL;
    use crate::text::parse_module;

    const PROG: &str = "
type Pair = record {
  shown: int4,
  silent: int4,
}
global pair: Pair
app fn main() {
entry:
  input a
  addr ps, pair.shown
  store ps, a
  const junk, 9
  addr pq, pair.silent
  store pq, junk
  load v, ps
  output v
  ret
}
";

    #[test]
    fn a_module_is_equivalent_to_itself() {
        let m = parse_module(PROG).unwrap();
        let traces = vec![vec![1], vec![7], vec![-3]];
        assert_eq!(equivalence(&m, &m, &traces, DEFAULT_FUEL), Verdict::Equivalent);
    }

    #[test]
    fn removing_a_live_store_is_detected_with_position() {
        let m = parse_module(PROG).unwrap();
        let store = m
            .instructions()
            .find(|(_, i)| matches!(&i.inst, crate::ir::Inst::Store { addr, .. } if addr == "ps"))
            .map(|(_, i)| i.id)
            .unwrap();
        let cut = m.without_instructions(&BTreeSet::from([store]));
        let verdict = equivalence(&m, &cut, &[vec![5]], DEFAULT_FUEL);
        assert_eq!(
            verdict,
            Verdict::Diverged {
                trace: 0,
                divergence: Divergence::Output { position: 0, left: Some(5), right: Some(0) },
            }
        );
    }

    #[test]
    fn termination_differences_count_as_divergence() {
        let a = parse_module("app fn main() {\nentry:\n  ret\n}\n").unwrap();
        let b = parse_module("app fn main() {\nentry:\n  input x\n  ret\n}\n").unwrap();
        let verdict = equivalence(&a, &b, &[vec![]], DEFAULT_FUEL);
        assert!(matches!(
            verdict,
            Verdict::Diverged { trace: 0, divergence: Divergence::Termination { .. } }
        ));
    }

    #[test]
    fn missing_outputs_report_the_first_absent_position() {
        let a = parse_module(
            "app fn main() {\nentry:\n  const x, 1\n  output x\n  output x\n  ret\n}\n",
        )
        .unwrap();
        let b =
            parse_module("app fn main() {\nentry:\n  const x, 1\n  output x\n  ret\n}\n").unwrap();
        let verdict = equivalence(&a, &b, &[vec![]], DEFAULT_FUEL);
        assert_eq!(
            verdict,
            Verdict::Diverged {
                trace: 0,
                divergence: Divergence::Output { position: 1, left: Some(1), right: None },
            }
        );
    }

    #[test]
    fn oracle_accepts_dead_stores_and_rejects_outputs() {
        let m = parse_module(PROG).unwrap();
        let traces = vec![vec![4], vec![11]];
        let removable = removability_oracle(&m, &traces, DEFAULT_FUEL).unwrap();
        let id_of = |pred: &dyn Fn(&crate::ir::Inst) -> bool| {
            m.instructions().find(|(_, i)| pred(&i.inst)).map(|(_, i)| i.id).unwrap()
        };
        let dead_store =
            id_of(&|i| matches!(i, crate::ir::Inst::Store { addr, .. } if addr == "pq"));
        let dead_const =
            id_of(&|i| matches!(i, crate::ir::Inst::Const { value: 9, .. }));
        let live_output = id_of(&|i| matches!(i, crate::ir::Inst::Output { .. }));
        let live_input = id_of(&|i| matches!(i, crate::ir::Inst::Input { .. }));
        assert!(removable.contains(&dead_store));
        assert!(removable.contains(&dead_const));
        assert!(!removable.contains(&live_output));
        assert!(!removable.contains(&live_input));
    }

    #[test]
    fn oracle_guard_rejects_large_modules() {
        let mut body = String::from("app fn main() {\nentry:\n");
        for i in 0..501 {
            body.push_str(&format!("  const r{i}, {i}\n"));
        }
        body.push_str("  ret\n}\n");
        let m = parse_module(&body).unwrap();
        let err = removability_oracle(&m, &[vec![]], DEFAULT_FUEL).unwrap_err();
        assert!(err.contains("500"));
    }
}
