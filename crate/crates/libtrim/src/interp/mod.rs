//! A small-step reference interpreter over byte-addressed object memory.
//!
//! Execution starts at `main` with zero-initialized memory and a finite
//! input stream. The machine is total: malformed situations that the
//! verifier would reject (an unset register, a load through a non-location,
//! a block whose terminator was deleted) get fixed harmless meanings
//! instead of unspecified behavior, so mutated modules still run
//! deterministically. The only abnormal ends are the three traps.

pub mod oracle;
pub mod profile;
pub mod trace;

pub use oracle::{equivalence, removability_oracle, Divergence, Verdict};
pub use profile::{categorize_writes, profile, DynProfile, KeyCounts, PerRegion, WriteCategorization};
pub use trace::{generate_traces, read_trace, write_trace, TraceShape};

use std::collections::BTreeMap;

use crate::ir::{BinOp, Function, Inst, InstId, Module, ObjectId, Region};
use crate::layout::{compute_layout, LayoutTable};

/// Default step budget: far beyond any corpus run, small enough that an
/// accidental infinite loop still ends promptly.
pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Trap {
    DivByZero,
    InputExhausted,
    FuelExhausted,
}

impl std::fmt::Display for Trap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trap::DivByZero => "division by zero",
            Trap::InputExhausted => "input exhausted",
            Trap::FuelExhausted => "fuel exhausted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Termination {
    Returned,
    Trap(Trap),
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Returned => f.write_str("returned"),
            Termination::Trap(t) => write!(f, "trap: {t}"),
        }
    }
}

/// Everything observable about one execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub outputs: Vec<i64>,
    pub termination: Termination,
    pub steps: u64,
}

/// One dynamic memory access, reported as it happens. `steps` is empty
/// exactly when the accessed object is a bare primitive rather than a
/// field of an aggregate.
pub struct AccessEvent<'a> {
    pub function: &'a str,
    pub region: Region,
    pub inst: InstId,
    pub object: &'a ObjectId,
    pub root_ty: &'a str,
    pub steps: &'a [String],
    pub offset: u64,
    pub width: u64,
    pub value: i64,
}

#[allow(unused_variables)]
pub trait Observer {
    fn read(&mut self, event: &AccessEvent<'_>) {}
    fn write(&mut self, event: &AccessEvent<'_>) {}
}

pub struct NoObserver;

impl Observer for NoObserver {}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(i64),
    Loc(Place),
}

#[derive(Debug, Clone, PartialEq)]
struct Place {
    object: ObjectId,
    root_ty: String,
    steps: Vec<String>,
    offset: u64,
    width: u64,
}

struct Frame<'m> {
    func: &'m Function,
    block: usize,
    pc: usize,
    regs: BTreeMap<String, Value>,
    locals: BTreeMap<String, Vec<u8>>,
    /// Caller register that receives this frame's return value.
    ret_dst: Option<String>,
}

fn read_bytes(buf: &[u8], offset: u64, width: u64) -> i64 {
    let mut raw = [0u8; 8];
    let (o, w) = (offset as usize, width as usize);
    raw[..w].copy_from_slice(&buf[o..o + w]);
    let v = u64::from_le_bytes(raw);
    match w {
        1 => v as u8 as i8 as i64,
        2 => v as u16 as i16 as i64,
        4 => v as u32 as i32 as i64,
        _ => v as i64,
    }
}

fn write_bytes(buf: &mut [u8], offset: u64, width: u64, value: i64) {
    let (o, w) = (offset as usize, width as usize);
    buf[o..o + w].copy_from_slice(&value.to_le_bytes()[..w]);
}

pub fn run(m: &Module, inputs: &[i64], fuel: u64) -> Outcome {
    run_with(m, inputs, fuel, &mut NoObserver)
}

pub fn run_with(m: &Module, inputs: &[i64], fuel: u64, obs: &mut dyn Observer) -> Outcome {
    let layout = compute_layout(&m.types);
    let mut globals: BTreeMap<String, Vec<u8>> = m
        .globals
        .iter()
        .map(|g| {
            let size = layout.size_of(&g.ty).unwrap_or(0) as usize;
            (g.name.clone(), vec![0u8; size])
        })
        .collect();

    let mut outputs = Vec::new();
    let mut steps: u64 = 0;
    let mut stack: Vec<Frame> = Vec::new();
    let mut input_pos = 0usize;

    if let Some(main) = m.function("main") {
        stack.push(new_frame(&layout, main, Vec::new(), None));
    }

    loop {
        let Some(top) = stack.last() else {
            return Outcome { outputs, termination: Termination::Returned, steps };
        };
        let func = top.func;
        let instr = match func.blocks.get(top.block).and_then(|b| b.instrs.get(top.pc)) {
            Some(instr) => instr,
            None => {
                // Past the last block, or a deleted terminator: behave as a
                // bare `ret`.
                pop_frame(&mut stack, 0);
                continue;
            }
        };
        if steps == fuel {
            return Outcome { outputs, termination: Termination::Trap(Trap::FuelExhausted), steps };
        }
        steps += 1;
        let frame = stack.last_mut().expect("frame present");
        frame.pc += 1;

        match &instr.inst {
            Inst::Const { dst, value } => {
                frame.regs.insert(dst.clone(), Value::Int(*value));
            }
            Inst::Move { dst, src } => {
                let v = frame.regs.get(src).cloned().unwrap_or(Value::Int(0));
                frame.regs.insert(dst.clone(), v);
            }
            Inst::Bin { op, dst, lhs, rhs } => {
                let a = scalar(&frame.regs, lhs);
                let b = scalar(&frame.regs, rhs);
                let v = match op {
                    BinOp::Add => a.wrapping_add(b),
                    BinOp::Sub => a.wrapping_sub(b),
                    BinOp::Mul => a.wrapping_mul(b),
                    BinOp::Div => {
                        if b == 0 {
                            return Outcome {
                                outputs,
                                termination: Termination::Trap(Trap::DivByZero),
                                steps,
                            };
                        }
                        a.wrapping_div(b)
                    }
                    BinOp::Eq => (a == b) as i64,
                    BinOp::Ne => (a != b) as i64,
                    BinOp::Lt => (a < b) as i64,
                    BinOp::Le => (a <= b) as i64,
                };
                frame.regs.insert(dst.clone(), Value::Int(v));
            }
            Inst::Addr { dst, path } => {
                let place = resolve_place(m, &layout, func, path);
                let v = place.map(Value::Loc).unwrap_or(Value::Int(0));
                frame.regs.insert(dst.clone(), v);
            }
            Inst::Load { dst, addr } => {
                let place = match frame.regs.get(addr) {
                    Some(Value::Loc(p)) => Some(p.clone()),
                    _ => None,
                };
                let v = match place {
                    Some(place) => {
                        let v = buffer(&mut globals, &mut frame.locals, &place.object)
                            .map_or(0, |b| read_bytes(b, place.offset, place.width));
                        obs.read(&AccessEvent {
                            function: &func.name,
                            region: func.region,
                            inst: instr.id,
                            object: &place.object,
                            root_ty: &place.root_ty,
                            steps: &place.steps,
                            offset: place.offset,
                            width: place.width,
                            value: v,
                        });
                        v
                    }
                    None => 0,
                };
                frame.regs.insert(dst.clone(), Value::Int(v));
            }
            Inst::Store { addr, value } => {
                let place = match frame.regs.get(addr) {
                    Some(Value::Loc(p)) => Some(p.clone()),
                    _ => None,
                };
                if let Some(place) = place {
                    let v = scalar(&frame.regs, value);
                    if let Some(buf) = buffer(&mut globals, &mut frame.locals, &place.object) {
                        write_bytes(buf, place.offset, place.width, v);
                    }
                    obs.write(&AccessEvent {
                        function: &func.name,
                        region: func.region,
                        inst: instr.id,
                        object: &place.object,
                        root_ty: &place.root_ty,
                        steps: &place.steps,
                        offset: place.offset,
                        width: place.width,
                        value: v,
                    });
                }
            }
            Inst::Call { dst, callee, args } => match m.function(callee) {
                Some(target) => {
                    let values: Vec<i64> = args.iter().map(|a| scalar(&frame.regs, a)).collect();
                    let ret_dst = dst.clone();
                    stack.push(new_frame(&layout, target, values, ret_dst));
                }
                None => {
                    // Externs and unresolved callees: no effect, result 0.
                    if let Some(d) = dst {
                        frame.regs.insert(d.clone(), Value::Int(0));
                    }
                }
            },
            Inst::Input { dst } => {
                let Some(&v) = inputs.get(input_pos) else {
                    return Outcome {
                        outputs,
                        termination: Termination::Trap(Trap::InputExhausted),
                        steps,
                    };
                };
                input_pos += 1;
                frame.regs.insert(dst.clone(), Value::Int(v));
            }
            Inst::Output { value } => {
                outputs.push(scalar(&frame.regs, value));
            }
            Inst::Jump { target } => {
                jump(frame, target);
            }
            Inst::Branch { cond, then_to, else_to } => {
                let t = if scalar(&frame.regs, cond) != 0 { then_to } else { else_to };
                jump(frame, t);
            }
            Inst::Switch { value, cases, default } => {
                let v = scalar(&frame.regs, value);
                let target =
                    cases.iter().find(|(k, _)| *k == v).map(|(_, l)| l).unwrap_or(default);
                jump(frame, target);
            }
            Inst::Ret { value } => {
                let v = value.as_ref().map_or(0, |r| scalar(&frame.regs, r));
                pop_frame(&mut stack, v);
            }
        }
    }
}

fn scalar(regs: &BTreeMap<String, Value>, name: &str) -> i64 {
    match regs.get(name) {
        Some(Value::Int(v)) => *v,
        _ => 0,
    }
}

fn new_frame<'m>(
    layout: &LayoutTable,
    func: &'m Function,
    args: Vec<i64>,
    ret_dst: Option<String>,
) -> Frame<'m> {
    let mut regs = BTreeMap::new();
    for (i, param) in func.params.iter().enumerate() {
        regs.insert(param.name.clone(), Value::Int(args.get(i).copied().unwrap_or(0)));
    }
    let locals = func
        .locals
        .iter()
        .map(|l| {
            let size = layout.size_of(&l.ty).unwrap_or(0) as usize;
            (l.name.clone(), vec![0u8; size])
        })
        .collect();
    Frame { func, block: 0, pc: 0, regs, locals, ret_dst }
}

fn jump(frame: &mut Frame, label: &str) {
    match frame.func.blocks.iter().position(|b| b.label == label) {
        Some(idx) => {
            frame.block = idx;
            frame.pc = 0;
        }
        None => {
            // Unknown label: leave the frame as a bare return.
            frame.block = frame.func.blocks.len();
            frame.pc = 0;
        }
    }
}

fn pop_frame(stack: &mut Vec<Frame>, value: i64) {
    let finished = stack.pop().expect("pop from empty stack");
    if let (Some(dst), Some(caller)) = (finished.ret_dst, stack.last_mut()) {
        caller.regs.insert(dst, Value::Int(value));
    }
}

fn resolve_place(
    m: &Module,
    layout: &LayoutTable,
    func: &Function,
    path: &crate::ir::FieldPath,
) -> Option<Place> {
    let object = m.object_id(func, &path.root)?;
    let root_ty = m.object_type(func, &path.root)?.to_string();
    let offset = layout.path_offset(&m.types, &root_ty, &path.steps)?;
    let leaf = m.types.resolve_steps(&root_ty, &path.steps)?;
    let width = m.types.primitive_width(leaf)? as u64;
    Some(Place { object, root_ty, steps: path.steps.clone(), offset, width })
}

fn buffer<'a>(
    globals: &'a mut BTreeMap<String, Vec<u8>>,
    locals: &'a mut BTreeMap<String, Vec<u8>>,
    object: &ObjectId,
) -> Option<&'a mut Vec<u8>> {
    match object {
        ObjectId::Global(name) => globals.get_mut(name),
        ObjectId::Local { name, .. } => locals.get_mut(name),
    }
}
