//! Shared helpers for the integration suites: fixture loading, brute-force
//! dataflow oracles that recompute each analysis by complete path
//! enumeration, and a second evaluator written from the instruction
//! descriptions alone so the main interpreter has an independent witness.

// Each integration target compiles this module separately and uses a
// different slice of it.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use libtrim::analysis::{Cfg, ControlEdge, Def};
use libtrim::ir::{BinOp, Function, Inst, InstId, Module, TypeDef, TypeTable};
use libtrim::text::parse_module;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.mir"))
}

pub fn fixture(name: &str) -> Module {
    let path = fixture_path(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_module(&text).unwrap_or_else(|errs| {
        panic!("{name}: {}", errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))
    })
}

/// Every `.mir` under `tests/fixtures`, by name, plus the bundled corpus
/// module under the name `midilib`.
pub fn all_fixtures() -> Vec<(String, Module)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .expect("fixture directory")
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_suffix(".mir").map(str::to_string)
        })
        .collect();
    names.sort();
    let mut out: Vec<(String, Module)> =
        names.into_iter().map(|n| (n.clone(), fixture(&n))).collect();
    out.push(("midilib".to_string(), libtrim::corpus()));
    out
}

/// Successor blocks with duplicate edges collapsed.
fn succ_blocks(cfg: &Cfg, b: usize) -> BTreeSet<usize> {
    cfg.succs[b].iter().map(|&(s, _)| s).collect()
}

/// Number of complete entry-to-exit paths. Only meaningful on acyclic
/// graphs; used to keep enumeration off explosive seeds.
pub fn count_paths(cfg: &Cfg) -> u128 {
    fn go(cfg: &Cfg, b: usize, memo: &mut [Option<u128>]) -> u128 {
        if let Some(v) = memo[b] {
            return v;
        }
        let succs = succ_blocks(cfg, b);
        let v = if succs.is_empty() {
            1
        } else {
            succs.iter().map(|&s| go(cfg, s, memo)).sum()
        };
        memo[b] = Some(v);
        v
    }
    if cfg.len() == 0 {
        return 0;
    }
    go(cfg, 0, &mut vec![None; cfg.len()])
}

/// All complete paths from the entry to a block with no successors.
/// Acyclic graphs only.
pub fn complete_paths(cfg: &Cfg) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = vec![0usize];
    fn go(cfg: &Cfg, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let b = *path.last().unwrap();
        let succs = succ_blocks(cfg, b);
        if succs.is_empty() {
            out.push(path.clone());
            return;
        }
        for s in succs {
            path.push(s);
            go(cfg, path, out);
            path.pop();
        }
    }
    if cfg.len() > 0 {
        go(cfg, &mut path, &mut out);
    }
    out
}

/// Post-dominator sets straight from the definition: a block `w`
/// post-dominates `b` when every complete path through `b` passes `w` at
/// or after `b`. Index `cfg.len()` is the virtual exit, as in the
/// iterative analysis.
pub fn pd_oracle(cfg: &Cfg, paths: &[Vec<usize>]) -> Vec<BTreeSet<usize>> {
    let n = cfg.len();
    let exit = n;
    let mut sets: Vec<BTreeSet<usize>> = Vec::with_capacity(n + 1);
    for b in 0..n {
        let mut acc: Option<BTreeSet<usize>> = None;
        for path in paths {
            let Some(pos) = path.iter().position(|&x| x == b) else { continue };
            let suffix: BTreeSet<usize> = path[pos..].iter().copied().collect();
            acc = Some(match acc {
                None => suffix,
                Some(prev) => prev.intersection(&suffix).copied().collect(),
            });
        }
        let mut set = acc.unwrap_or_else(|| panic!("block {b} is on no complete path"));
        set.insert(exit);
        sets.push(set);
    }
    sets.push(BTreeSet::from([exit]));
    sets
}

/// Direct control dependence from the definitional post-dominator sets:
/// `w` depends on edge `u -> v` when `w` post-dominates `v` but not `u`.
pub fn cd_oracle_direct(cfg: &Cfg, pd_sets: &[BTreeSet<usize>]) -> Vec<BTreeSet<ControlEdge>> {
    let n = cfg.len();
    let mut direct: Vec<BTreeSet<ControlEdge>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for &(v, kind) in &cfg.succs[u] {
            for w in 0..n {
                if pd_sets[v].contains(&w) && !pd_sets[u].contains(&w) {
                    direct[w].insert((u, kind));
                }
            }
        }
    }
    direct
}

/// Transitive control dependence: keep folding in the direct dependences
/// of every controlling block until nothing changes.
pub fn cd_closure(direct: &[BTreeSet<ControlEdge>]) -> Vec<BTreeSet<ControlEdge>> {
    let mut trans: Vec<BTreeSet<ControlEdge>> = direct.to_vec();
    loop {
        let mut grew = false;
        for w in 0..trans.len() {
            let inherited: Vec<ControlEdge> = trans[w]
                .iter()
                .flat_map(|&(u, _)| direct[u].iter().copied())
                .collect();
            for edge in inherited {
                grew |= trans[w].insert(edge);
            }
        }
        if !grew {
            return trans;
        }
    }
}

/// Reaching definitions by replaying every complete path with a running
/// register environment, collecting the definition each use sees.
pub fn rd_oracle(
    func: &Function,
    paths: &[Vec<usize>],
) -> BTreeMap<InstId, BTreeMap<String, BTreeSet<Def>>> {
    let mut acc: BTreeMap<InstId, BTreeMap<String, BTreeSet<Def>>> = BTreeMap::new();
    for path in paths {
        let mut live: BTreeMap<&str, Def> = func
            .params
            .iter()
            .map(|p| (p.name.as_str(), Def::Param(p.name.clone())))
            .collect();
        for &b in path {
            for instr in &func.blocks[b].instrs {
                for reg in instr.inst.uses() {
                    let slot =
                        acc.entry(instr.id).or_default().entry(reg.to_string()).or_default();
                    if let Some(def) = live.get(reg) {
                        slot.insert(def.clone());
                    }
                }
                if let Some(reg) = instr.inst.def() {
                    live.insert(reg, Def::Inst(instr.id));
                }
            }
        }
    }
    acc
}

// --- Independent evaluator -------------------------------------------------
//
// A recursive evaluator sharing no code with `libtrim::interp`: its own
// layout arithmetic, its own byte packing, its own call handling. Output
// sequences must agree with the main interpreter on every prefix, traps
// included.

#[derive(Clone, PartialEq)]
enum NVal {
    Int(i64),
    Loc { local: bool, object: String, offset: u64, width: u64 },
}

fn size_of_ty(types: &TypeTable, ty: &str) -> Option<u64> {
    match types.get(ty)? {
        TypeDef::Primitive { width } => Some(*width as u64),
        TypeDef::Record { fields } => {
            let mut total = 0u64;
            for f in fields {
                total += size_of_ty(types, &f.ty)?;
            }
            Some(total)
        }
        TypeDef::Overlay { members } => {
            let mut largest = 0u64;
            for m in members {
                largest = largest.max(size_of_ty(types, &m.ty)?);
            }
            Some(largest)
        }
    }
}

/// Offset and width of the leaf named by `steps`, walking the declarations
/// directly: record members at increasing offsets, overlay members all at
/// zero.
fn leaf_place(types: &TypeTable, root_ty: &str, steps: &[String]) -> Option<(u64, u64)> {
    let mut ty = root_ty.to_string();
    let mut offset = 0u64;
    for step in steps {
        match types.get(&ty)? {
            TypeDef::Primitive { .. } => return None,
            TypeDef::Record { fields } => {
                let mut cursor = 0u64;
                let mut hit = None;
                for f in fields {
                    if f.name == *step {
                        hit = Some(f.ty.clone());
                        break;
                    }
                    cursor += size_of_ty(types, &f.ty)?;
                }
                offset += cursor;
                ty = hit?;
            }
            TypeDef::Overlay { members } => {
                ty = members.iter().find(|f| f.name == *step)?.ty.clone();
            }
        }
    }
    match types.get(&ty)? {
        TypeDef::Primitive { width } => Some((offset, *width as u64)),
        _ => None,
    }
}

fn read_mem(buf: &[u8], off: u64, w: u64) -> i64 {
    let mut v: u64 = 0;
    for i in (0..w).rev() {
        v = (v << 8) | buf[(off + i) as usize] as u64;
    }
    let bits = 8 * w as u32;
    if bits == 64 {
        v as i64
    } else {
        let shift = 64 - bits;
        ((v << shift) as i64) >> shift
    }
}

fn write_mem(buf: &mut [u8], off: u64, w: u64, v: i64) {
    let mut u = v as u64;
    for i in 0..w {
        buf[(off + i) as usize] = (u & 0xff) as u8;
        u >>= 8;
    }
}

struct NaiveMachine<'m> {
    m: &'m Module,
    inputs: &'m [i64],
    cursor: usize,
    outputs: Vec<i64>,
    budget: u64,
}

struct Halted;

impl<'m> NaiveMachine<'m> {
    fn scalar(regs: &BTreeMap<String, NVal>, name: &str) -> i64 {
        match regs.get(name) {
            Some(NVal::Int(v)) => *v,
            _ => 0,
        }
    }

    fn call(
        &mut self,
        globals: &mut BTreeMap<String, Vec<u8>>,
        func: &Function,
        args: &[i64],
    ) -> Result<i64, Halted> {
        let mut regs: BTreeMap<String, NVal> = func
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), NVal::Int(args.get(i).copied().unwrap_or(0))))
            .collect();
        let mut locals: BTreeMap<String, Vec<u8>> = func
            .locals
            .iter()
            .map(|l| {
                let size = size_of_ty(&self.m.types, &l.ty).unwrap_or(0) as usize;
                (l.name.clone(), vec![0u8; size])
            })
            .collect();

        let mut at = Some(0usize);
        while let Some(b) = at {
            let Some(block) = func.blocks.get(b) else { return Ok(0) };
            let mut next: Option<Option<usize>> = None;
            for instr in &block.instrs {
                if self.budget == 0 {
                    return Err(Halted);
                }
                self.budget -= 1;
                match &instr.inst {
                    Inst::Const { dst, value } => {
                        regs.insert(dst.clone(), NVal::Int(*value));
                    }
                    Inst::Move { dst, src } => {
                        let v = regs.get(src).cloned().unwrap_or(NVal::Int(0));
                        regs.insert(dst.clone(), v);
                    }
                    Inst::Bin { op, dst, lhs, rhs } => {
                        let a = Self::scalar(&regs, lhs);
                        let c = Self::scalar(&regs, rhs);
                        let v = match op {
                            BinOp::Add => a.wrapping_add(c),
                            BinOp::Sub => a.wrapping_sub(c),
                            BinOp::Mul => a.wrapping_mul(c),
                            BinOp::Div => {
                                if c == 0 {
                                    return Err(Halted);
                                }
                                a.wrapping_div(c)
                            }
                            BinOp::Eq => (a == c) as i64,
                            BinOp::Ne => (a != c) as i64,
                            BinOp::Lt => (a < c) as i64,
                            BinOp::Le => (a <= c) as i64,
                        };
                        regs.insert(dst.clone(), NVal::Int(v));
                    }
                    Inst::Addr { dst, path } => {
                        let local = func.locals.iter().any(|l| l.name == path.root);
                        let root_ty = if local {
                            func.locals.iter().find(|l| l.name == path.root).map(|l| l.ty.clone())
                        } else {
                            self.m.globals.iter().find(|g| g.name == path.root).map(|g| g.ty.clone())
                        };
                        let place = root_ty
                            .and_then(|ty| leaf_place(&self.m.types, &ty, &path.steps));
                        let v = match place {
                            Some((offset, width)) => NVal::Loc {
                                local,
                                object: path.root.clone(),
                                offset,
                                width,
                            },
                            None => NVal::Int(0),
                        };
                        regs.insert(dst.clone(), v);
                    }
                    Inst::Load { dst, addr } => {
                        let v = match regs.get(addr).cloned() {
                            Some(NVal::Loc { local, object, offset, width }) => {
                                let buf = if local {
                                    locals.get(&object)
                                } else {
                                    globals.get(&object)
                                };
                                buf.map_or(0, |b| read_mem(b, offset, width))
                            }
                            _ => 0,
                        };
                        regs.insert(dst.clone(), NVal::Int(v));
                    }
                    Inst::Store { addr, value } => {
                        if let Some(NVal::Loc { local, object, offset, width }) =
                            regs.get(addr).cloned()
                        {
                            let v = Self::scalar(&regs, value);
                            let buf = if local {
                                locals.get_mut(&object)
                            } else {
                                globals.get_mut(&object)
                            };
                            if let Some(b) = buf {
                                write_mem(b, offset, width, v);
                            }
                        }
                    }
                    Inst::Call { dst, callee, args: regs_in } => {
                        let values: Vec<i64> =
                            regs_in.iter().map(|r| Self::scalar(&regs, r)).collect();
                        let result = match self.m.function(callee) {
                            Some(target) => self.call(globals, target, &values)?,
                            None => 0,
                        };
                        if let Some(d) = dst {
                            regs.insert(d.clone(), NVal::Int(result));
                        }
                    }
                    Inst::Input { dst } => {
                        let Some(&v) = self.inputs.get(self.cursor) else {
                            return Err(Halted);
                        };
                        self.cursor += 1;
                        regs.insert(dst.clone(), NVal::Int(v));
                    }
                    Inst::Output { value } => {
                        self.outputs.push(Self::scalar(&regs, value));
                    }
                    Inst::Jump { target } => {
                        next = Some(func.blocks.iter().position(|bl| bl.label == *target));
                    }
                    Inst::Branch { cond, then_to, else_to } => {
                        let label = if Self::scalar(&regs, cond) != 0 { then_to } else { else_to };
                        next = Some(func.blocks.iter().position(|bl| bl.label == *label));
                    }
                    Inst::Switch { value, cases, default } => {
                        let v = Self::scalar(&regs, value);
                        let label = cases
                            .iter()
                            .find(|(k, _)| *k == v)
                            .map(|(_, l)| l)
                            .unwrap_or(default);
                        next = Some(func.blocks.iter().position(|bl| bl.label == *label));
                    }
                    Inst::Ret { value } => {
                        return Ok(value.as_ref().map_or(0, |r| Self::scalar(&regs, r)));
                    }
                }
                if next.is_some() {
                    break;
                }
            }
            match next {
                Some(Some(target)) => at = Some(target),
                // A jump to a label that no longer exists acts as a bare
                // return, as does falling off the end of a block.
                Some(None) | None => return Ok(0),
            }
        }
        Ok(0)
    }
}

/// Runs the module the slow way and returns whatever it managed to print.
/// Traps and fuel exhaustion simply cut the sequence short, matching how
/// the main interpreter's outcome looks up to that point.
pub fn naive_eval(m: &Module, inputs: &[i64], fuel: u64) -> Vec<i64> {
    let mut globals: BTreeMap<String, Vec<u8>> = m
        .globals
        .iter()
        .map(|g| {
            let size = size_of_ty(&m.types, &g.ty).unwrap_or(0) as usize;
            (g.name.clone(), vec![0u8; size])
        })
        .collect();
    let mut mach = NaiveMachine { m, inputs, cursor: 0, outputs: Vec::new(), budget: fuel };
    if let Some(main) = m.function("main") {
        let _ = mach.call(&mut globals, main, &[]);
    }
    mach.outputs
}
