//! Seeded generation of well-formed input traces, plus `.trace` file I/O.
//!
//! The generator reads the module's own dispatch structure instead of
//! taking a schema: it finds the library dispatch, works out which input
//! feeds the tag field, how many inputs every message consumes before and
//! after dispatch, and which constant ends the stream. Each generated
//! trace is then a stream of 16 to 64 messages, every tag drawn uniformly
//! from the produced constants, followed by the terminator.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    case_region, control_dependence, field_census, find_dispatches, postdominators,
    reaching_defs, variant_analysis, Cfg, Def, Target,
};
use crate::ir::{Inst, Module, Region};
use crate::layout::IdentityMode;

const PAYLOAD_RANGE: std::ops::RangeInclusive<i64> = 0..=15;
const MESSAGES: std::ops::RangeInclusive<usize> = 16..=64;

/// What one message looks like on the wire, recovered from the module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceShape {
    /// Tag constants to draw from: the produced variants, or every
    /// dispatch case when production analysis finds none.
    pub tags: Vec<i64>,
    /// Inputs each message consumes after the tag, before dispatch.
    pub prefix: usize,
    /// Payload inputs consumed inside each variant's arm.
    pub arity: BTreeMap<i64, usize>,
    /// Stream terminator, when the reader checks the raw tag against a
    /// constant before dispatching.
    pub sentinel: Option<i64>,
}

impl TraceShape {
    /// Recovers the shape from the largest library dispatch. `None` when
    /// the module has no library dispatch to imitate.
    pub fn infer(m: &Module) -> Option<TraceShape> {
        let summary = field_census(m, IdentityMode::Path);
        let dispatch = find_dispatches(m, &summary)
            .into_iter()
            .filter(|d| d.region == Region::Library)
            .max_by_key(|d| d.cases.len())?;
        let func = m.function(&dispatch.function)?;
        let cfg = Cfg::build(func);
        let rd = reaching_defs(func, &cfg);
        let pd = postdominators(func, &cfg);
        let cd = control_dependence(&cfg, &pd);

        // The input feeding the store into the tag field.
        let tag_input = func.instructions().find_map(|i| {
            let Inst::Store { value, .. } = &i.inst else { return None };
            let hits_tag = summary.targets.get(&i.id).is_some_and(|ts| {
                ts.iter().any(|t| matches!(t, Target::Field(k) if *k == dispatch.field))
            });
            if !hits_tag {
                return None;
            }
            let defs = rd.use_defs.get(&i.id)?.get(value.as_str())?;
            let [Def::Inst(def_id)] = defs.iter().collect::<Vec<_>>()[..] else {
                return None;
            };
            func.instructions()
                .find(|d| d.id == *def_id && matches!(d.inst, Inst::Input { .. }))
                .map(|d| d.id)
        });

        // A sentinel check compares the raw tag register against a
        // constant and branches on the answer.
        let sentinel = tag_input.and_then(|tag_id| {
            func.instructions().find_map(|i| {
                let Inst::Bin { op: crate::ir::BinOp::Eq, dst, lhs, rhs, .. } = &i.inst else {
                    return None;
                };
                let feeds_branch = rd.uses_of(&Def::Inst(i.id)).any(|user| {
                    func.instructions()
                        .any(|u| u.id == user && matches!(u.inst, Inst::Branch { .. }))
                });
                if !feeds_branch {
                    return None;
                }
                let from_tag = |reg: &str| {
                    rd.use_defs
                        .get(&i.id)
                        .and_then(|m| m.get(reg))
                        .is_some_and(|defs| defs.contains(&Def::Inst(tag_id)))
                };
                let constant = |reg: &str| const_of(func, &rd, i.id, reg);
                let _ = dst;
                if from_tag(lhs) {
                    constant(rhs)
                } else if from_tag(rhs) {
                    constant(lhs)
                } else {
                    None
                }
            })
        });

        let in_case: std::collections::BTreeSet<_> = dispatch
            .cases
            .iter()
            .flat_map(|c| case_region(func, &cd, c))
            .collect();
        let prefix = func
            .instructions()
            .filter(|i| {
                matches!(i.inst, Inst::Input { .. })
                    && Some(i.id) != tag_input
                    && !in_case.contains(&i.id)
            })
            .count();

        let mut arity = BTreeMap::new();
        for case in &dispatch.cases {
            let inputs = case_region(func, &cd, case)
                .iter()
                .filter(|id| {
                    func.instructions()
                        .any(|i| i.id == **id && matches!(i.inst, Inst::Input { .. }))
                })
                .count();
            arity.insert(case.value, inputs);
        }

        let report = variant_analysis(m, &dispatch.field, &summary);
        let tags: Vec<i64> = if report.produced.is_empty() {
            dispatch.cases.iter().map(|c| c.value).collect()
        } else {
            report.produced.into_iter().collect()
        };
        Some(TraceShape { tags, prefix, arity, sentinel })
    }
}

fn const_of(
    func: &crate::ir::Function,
    rd: &crate::analysis::ReachingDefs,
    at: crate::ir::InstId,
    reg: &str,
) -> Option<i64> {
    let defs = rd.use_defs.get(&at)?.get(reg)?;
    let [Def::Inst(def_id)] = defs.iter().collect::<Vec<_>>()[..] else {
        return None;
    };
    func.instructions().find_map(|i| {
        if i.id != *def_id {
            return None;
        }
        match i.inst {
            Inst::Const { value, .. } => Some(value),
            _ => None,
        }
    })
}

fn run_rng(seed: u64, run: u32) -> ChaCha8Rng {
    let run_seed = seed.wrapping_add((run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    ChaCha8Rng::seed_from_u64(run_seed)
}

/// One trace following the shape, deterministic in `(seed, run)`.
pub fn generate(shape: &TraceShape, seed: u64, run: u32) -> Vec<i64> {
    let mut rng = run_rng(seed, run);
    let mut values = Vec::new();
    let messages = rng.gen_range(MESSAGES);
    for _ in 0..messages {
        if shape.tags.is_empty() {
            break;
        }
        let tag = shape.tags[rng.gen_range(0..shape.tags.len())];
        values.push(tag);
        let payload = shape.prefix + shape.arity.get(&tag).copied().unwrap_or(0);
        for _ in 0..payload {
            values.push(rng.gen_range(PAYLOAD_RANGE));
        }
    }
    if let Some(s) = shape.sentinel {
        values.push(s);
    }
    values
}

/// Traces for `runs` runs. Modules without a recognizable dispatch get
/// flat streams of small values ending in a zero, which at least feeds
/// plain `input` loops.
pub fn generate_traces(m: &Module, runs: u32, seed: u64) -> Vec<Vec<i64>> {
    let shape = TraceShape::infer(m);
    (0..runs)
        .map(|run| match &shape {
            Some(shape) => generate(shape, seed, run),
            None => {
                let mut rng = run_rng(seed, run);
                let n = rng.gen_range(MESSAGES);
                let mut values: Vec<i64> =
                    (0..n).map(|_| rng.gen_range(PAYLOAD_RANGE)).collect();
                values.push(0);
                values
            }
        })
        .collect()
}

/// Writes one trace: one decimal value per line.
pub fn write_trace(path: &Path, trace: &[i64]) -> io::Result<()> {
    let mut text = String::new();
    for v in trace {
        text.push_str(&v.to_string());
        text.push('\n');
    }
    fs::write(path, text)
}

/// Reads a trace written by `write_trace` or by hand: one decimal signed
/// integer per line, blank lines ignored.
pub fn read_trace(path: &Path) -> io::Result<Vec<i64>> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v = line.parse::<i64>().map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("{}:{}: bad trace value `{line}`: {e}", path.display(), n + 1),
            )
        })?;
        values.push(v);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    const READER: &str = "
type Msg = record {
  tag: int4,
  dt: int4,
  a: int4,
  b: int4,
}

global msg: Msg

library fn readnext() {
entry:
  input t
  const zero, 0
  eq stop, t, zero
  br stop, halt, go
go:
  addr pt, msg.tag
  store pt, t
  input d
  addr pd, msg.dt
  store pd, d
  load t2, pt
  switch t2, [1: one, 2: two], done
one:
  input x
  addr pa, msg.a
  store pa, x
  jmp done
two:
  input x
  addr pa, msg.a
  store pa, x
  input y
  addr pb, msg.b
  store pb, y
  jmp done
halt:
  ret
done:
  ret
}

app fn main() {
entry:
  call readnext()
  addr pt, msg.tag
  load t, pt
  switch t, [1: use], out
use:
  addr pa, msg.a
  load v, pa
  output v
  jmp out
out:
  ret
}
";

    fn reader() -> Module {
        crate::text::parse_module(READER).unwrap()
    }

    #[test]
    fn shape_recovers_tags_prefix_arity_and_sentinel() {
        let shape = TraceShape::infer(&reader()).expect("shape");
        assert_eq!(shape.tags, vec![1, 2]);
        assert_eq!(shape.prefix, 1);
        assert_eq!(shape.arity, BTreeMap::from([(1, 1), (2, 2)]));
        assert_eq!(shape.sentinel, Some(0));
    }

    #[test]
    fn traces_are_deterministic_per_seed_and_run() {
        let m = reader();
        let a = generate_traces(&m, 3, 42);
        let b = generate_traces(&m, 3, 42);
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        let c = generate_traces(&m, 1, 43);
        assert_ne!(a[0], c[0]);
    }

    #[test]
    fn generated_traces_replay_without_trapping() {
        let m = reader();
        for trace in generate_traces(&m, 5, 42) {
            let out = crate::interp::run(&m, &trace, crate::interp::DEFAULT_FUEL);
            assert_eq!(out.termination, crate::interp::Termination::Returned);
        }
    }

    #[test]
    fn trace_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.trace");
        let trace = vec![144, 3, -7, 0];
        write_trace(&path, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "144\n3\n-7\n0\n");
        assert_eq!(read_trace(&path).unwrap(), trace);
    }

    #[test]
    fn bad_trace_lines_are_reported_with_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.trace");
        std::fs::write(&path, "1\ntwo\n3\n").unwrap();
        let err = read_trace(&path).unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::InvalidData);
        assert!(err.to_string().contains(":2:"));
    }

    #[test]
    fn modules_without_dispatch_still_get_streams() {
        let m = crate::text::parse_module(
            "app fn main() {\nentry:\n  input a\n  output a\n  ret\n}\n",
        )
        .unwrap();
        let traces = generate_traces(&m, 2, 42);
        assert_eq!(traces.len(), 2);
        assert!(traces.iter().all(|t| t.len() >= 17));
    }
}
