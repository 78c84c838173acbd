//! Structural and dataflow well-formedness checks.
//!
//! Verification is a precondition for every analysis and for the
//! interpreter: the checks here guarantee that each memory access resolves
//! to a leaf field, that registers are written before they are read, and
//! that location values never leak into scalar positions (or out of the
//! function that created them).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use super::{Function, Inst, InstId, Module, Region, TypeDef, TypeTable};

/// One verification finding, with as much location as is known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub function: Option<String>,
    pub block: Option<String>,
    pub inst: Option<InstId>,
    pub message: String,
}

impl Diagnostic {
    fn module(message: String) -> Self {
        Diagnostic { function: None, block: None, inst: None, message }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(func) = &self.function {
            write!(f, "fn {func}")?;
            if let Some(block) = &self.block {
                write!(f, ", block {block}")?;
            }
            if let Some(id) = self.inst {
                write!(f, ", {id}")?;
            }
            write!(f, ": ")?;
        }
        write!(f, "{}", self.message)
    }
}

/// Checks the whole module and returns every finding; an empty result means
/// the module is well-formed.
pub fn verify_module(m: &Module) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    check_types(&m.types, &mut diags);
    check_toplevel(m, &mut diags);
    for func in &m.functions {
        check_function(m, func, &mut diags);
    }
    check_ids_unique(m, &mut diags);
    diags
}

fn check_types(types: &TypeTable, diags: &mut Vec<Diagnostic>) {
    for (name, def) in types.user_entries() {
        match def {
            TypeDef::Primitive { width } => {
                if ![1, 2, 4, 8].contains(width) {
                    diags.push(Diagnostic::module(format!(
                        "type `{name}`: invalid primitive width {width}"
                    )));
                }
            }
            _ => {
                let fields = def.fields();
                if fields.is_empty() {
                    diags.push(Diagnostic::module(format!(
                        "type `{name}` has no members and therefore no primitive leaves"
                    )));
                }
                let mut seen = HashSet::new();
                for field in fields {
                    if !seen.insert(field.name.as_str()) {
                        diags.push(Diagnostic::module(format!(
                            "type `{name}`: duplicate member `{}`",
                            field.name
                        )));
                    }
                    if types.get(&field.ty).is_none() {
                        diags.push(Diagnostic::module(format!(
                            "type `{name}`: member `{}` has unknown type `{}`",
                            field.name, field.ty
                        )));
                    }
                }
            }
        }
    }
    check_type_cycles(types, diags);
}

fn check_type_cycles(types: &TypeTable, diags: &mut Vec<Diagnostic>) {
    // Colors: 0 unvisited, 1 on stack, 2 done.
    let mut color: HashMap<&str, u8> = HashMap::new();
    fn visit<'a>(
        types: &'a TypeTable,
        name: &'a str,
        color: &mut HashMap<&'a str, u8>,
        diags: &mut Vec<Diagnostic>,
    ) {
        match color.get(name) {
            Some(1) => {
                diags.push(Diagnostic::module(format!(
                    "type `{name}` is part of a reference cycle"
                )));
                return;
            }
            Some(_) => return,
            None => {}
        }
        color.insert(name, 1);
        if let Some(def) = types.get(name) {
            for field in def.fields() {
                if let Some((key, _)) = types.iter().find(|(n, _)| *n == field.ty) {
                    visit(types, key, color, diags);
                }
            }
        }
        color.insert(name, 2);
    }
    for (name, _) in types.user_entries() {
        visit(types, name, &mut color, diags);
    }
}

fn check_toplevel(m: &Module, diags: &mut Vec<Diagnostic>) {
    let mut names = HashSet::new();
    for g in &m.globals {
        if !names.insert(g.name.as_str()) {
            diags.push(Diagnostic::module(format!("duplicate global `{}`", g.name)));
        }
        if m.types.get(&g.ty).is_none() {
            diags.push(Diagnostic::module(format!(
                "global `{}` has unknown type `{}`",
                g.name, g.ty
            )));
        }
    }

    let mut fn_names = HashSet::new();
    for f in &m.functions {
        if !fn_names.insert(f.name.as_str()) {
            diags.push(Diagnostic::module(format!("duplicate function `{}`", f.name)));
        }
        if m.externs.iter().any(|e| *e == f.name) {
            diags.push(Diagnostic::module(format!(
                "`{}` is declared both as extern and as a function",
                f.name
            )));
        }
    }
    let mut extern_names = HashSet::new();
    for e in &m.externs {
        if !extern_names.insert(e.as_str()) {
            diags.push(Diagnostic::module(format!("duplicate extern `{e}`")));
        }
    }

    match m.function("main") {
        None => diags.push(Diagnostic::module("no `main` function".into())),
        Some(main) => {
            if main.region != Region::Application {
                diags.push(Diagnostic::module(
                    "`main` must be in the application region".into(),
                ));
            }
            if !main.params.is_empty() {
                diags.push(Diagnostic::module("`main` must not take parameters".into()));
            }
        }
    }
}

fn check_ids_unique(m: &Module, diags: &mut Vec<Diagnostic>) {
    let mut seen: BTreeMap<InstId, &str> = BTreeMap::new();
    for (func, instr) in m.instructions() {
        if let Some(first) = seen.insert(instr.id, &func.name) {
            diags.push(Diagnostic::module(format!(
                "instruction id {} is used in both `{first}` and `{}`",
                instr.id, func.name
            )));
        }
    }
}

fn check_function(m: &Module, func: &Function, diags: &mut Vec<Diagnostic>) {
    let diag = |block: Option<&str>, inst: Option<InstId>, message: String| Diagnostic {
        function: Some(func.name.clone()),
        block: block.map(|b| b.to_string()),
        inst,
        message,
    };

    let mut slot_names = HashSet::new();
    for p in &func.params {
        if !slot_names.insert(p.name.as_str()) {
            diags.push(diag(None, None, format!("duplicate parameter `{}`", p.name)));
        }
        match m.types.get(&p.ty) {
            None => diags.push(diag(
                None,
                None,
                format!("parameter `{}` has unknown type `{}`", p.name, p.ty),
            )),
            Some(def) if def.is_aggregate() => diags.push(diag(
                None,
                None,
                format!("parameter `{}` must be a scalar, got `{}`", p.name, p.ty),
            )),
            _ => {}
        }
    }
    for l in &func.locals {
        if !slot_names.insert(l.name.as_str()) {
            diags.push(diag(None, None, format!("duplicate local `{}`", l.name)));
        }
        if m.types.get(&l.ty).is_none() {
            diags.push(diag(None, None, format!("local `{}` has unknown type `{}`", l.name, l.ty)));
        }
    }

    if func.blocks.is_empty() {
        diags.push(diag(None, None, "function has no blocks".into()));
        return;
    }

    let mut labels = HashSet::new();
    for block in &func.blocks {
        if !labels.insert(block.label.as_str()) {
            diags.push(diag(Some(&block.label), None, "duplicate block label".into()));
        }
    }

    let mut ret_arities: BTreeSet<bool> = BTreeSet::new();
    for block in &func.blocks {
        if block.instrs.is_empty() {
            diags.push(diag(Some(&block.label), None, "block is empty".into()));
            continue;
        }
        let last = block.instrs.len() - 1;
        for (idx, instr) in block.instrs.iter().enumerate() {
            if idx < last && instr.inst.is_terminator() {
                diags.push(diag(
                    Some(&block.label),
                    Some(instr.id),
                    "terminator before the end of the block".into(),
                ));
            }
            check_instruction(m, func, &block.label, instr, diags);
            if let Inst::Ret { value } = &instr.inst {
                ret_arities.insert(value.is_some());
            }
        }
        let tail = &block.instrs[last];
        if !tail.inst.is_terminator() {
            diags.push(diag(Some(&block.label), None, "block lacks a terminator".into()));
        }
        for target in tail.inst.targets() {
            if !labels.contains(target) {
                diags.push(diag(
                    Some(&block.label),
                    Some(tail.id),
                    format!("jump to missing label `{target}`"),
                ));
            }
        }
    }
    if ret_arities.len() > 1 {
        diags.push(diag(None, None, "mixed `ret` and `ret v` in one function".into()));
    }

    check_register_discipline(m, func, diags);
}

fn check_instruction(
    m: &Module,
    func: &Function,
    block: &str,
    instr: &super::Instruction,
    diags: &mut Vec<Diagnostic>,
) {
    let diag = |message: String| Diagnostic {
        function: Some(func.name.clone()),
        block: Some(block.to_string()),
        inst: Some(instr.id),
        message,
    };

    match &instr.inst {
        Inst::Addr { path, .. } => {
            let is_local = func.locals.iter().any(|l| l.name == path.root);
            if !is_local && func.params.iter().any(|p| p.name == path.root) {
                diags.push(diag(format!(
                    "cannot take the address of parameter `{}`",
                    path.root
                )));
                return;
            }
            let Some(root_ty) = m.object_type(func, &path.root) else {
                diags.push(diag(format!("unknown object `{}`", path.root)));
                return;
            };
            match m.types.resolve_steps(root_ty, &path.steps) {
                None => diags.push(diag(format!("path `{path}` does not resolve"))),
                Some(leaf) => {
                    if m.types.primitive_width(leaf).is_none() {
                        diags.push(diag(format!(
                            "path `{path}` stops at aggregate `{leaf}`, expected a primitive leaf"
                        )));
                    }
                }
            }
        }
        Inst::Call { dst, callee, args } => {
            if let Some(target) = m.function(callee) {
                if target.params.len() != args.len() {
                    diags.push(diag(format!(
                        "`{callee}` takes {} arguments, got {}",
                        target.params.len(),
                        args.len()
                    )));
                }
                if dst.is_some() && !target.returns_value() {
                    diags.push(diag(format!("`{callee}` does not return a value")));
                }
            } else if !m.is_extern(callee) {
                diags.push(diag(format!("call to undefined function `{callee}`")));
            }
        }
        Inst::Switch { cases, .. } => {
            let mut seen = BTreeSet::new();
            for (value, _) in cases {
                if !seen.insert(*value) {
                    diags.push(diag(format!("duplicate switch case {value}")));
                }
            }
        }
        _ => {}
    }
}

/// What a register holds at a program point, as far as the checker knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Not written on some path reaching this point.
    Unset,
    Scalar,
    /// A location produced by `addr`.
    Loc,
    /// Scalar on one path, location on another.
    Mixed,
}

impl Kind {
    fn meet(a: Kind, b: Kind) -> Kind {
        use Kind::*;
        match (a, b) {
            (Unset, _) | (_, Unset) => Unset,
            (Mixed, _) | (_, Mixed) => Mixed,
            (Scalar, Scalar) => Scalar,
            (Loc, Loc) => Loc,
            (Scalar, Loc) | (Loc, Scalar) => Mixed,
        }
    }
}

type KindState = BTreeMap<String, Kind>;

fn meet_states(a: &KindState, b: &KindState) -> KindState {
    let mut out = KindState::new();
    for (reg, &ka) in a {
        let kb = b.get(reg).copied().unwrap_or(Kind::Unset);
        out.insert(reg.clone(), Kind::meet(ka, kb));
    }
    for reg in b.keys() {
        if !a.contains_key(reg) {
            out.insert(reg.clone(), Kind::Unset);
        }
    }
    out
}

/// Forward must-analysis: every register is written before it is read, and
/// scalar/location values never mix. Locations may only flow into `load`,
/// `store` addresses, and extern call arguments.
fn check_register_discipline(m: &Module, func: &Function, diags: &mut Vec<Diagnostic>) {
    let nblocks = func.blocks.len();
    if nblocks == 0 {
        return;
    }
    let label_index: HashMap<&str, usize> = func
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.label.as_str(), i))
        .collect();

    let mut entry_state = KindState::new();
    for p in &func.params {
        entry_state.insert(p.name.clone(), Kind::Scalar);
    }

    let mut in_states: Vec<Option<KindState>> = vec![None; nblocks];
    in_states[0] = Some(entry_state);
    let mut worklist = vec![0usize];
    while let Some(bi) = worklist.pop() {
        let Some(state) = in_states[bi].clone() else { continue };
        let out = transfer_block(&func.blocks[bi], state);
        if let Some(term) = func.blocks[bi].instrs.last() {
            for target in term.inst.targets() {
                let Some(&ti) = label_index.get(target) else { continue };
                let merged = match &in_states[ti] {
                    None => out.clone(),
                    Some(existing) => meet_states(existing, &out),
                };
                if in_states[ti].as_ref() != Some(&merged) {
                    in_states[ti] = Some(merged);
                    worklist.push(ti);
                }
            }
        }
    }

    // Report on each reachable block with its final entry state.
    for (bi, block) in func.blocks.iter().enumerate() {
        let Some(state) = &in_states[bi] else { continue };
        let mut state = state.clone();
        for instr in &block.instrs {
            check_uses(m, func, &block.label, instr, &state, diags);
            apply_def(&instr.inst, &mut state);
        }
    }
}

fn transfer_block(block: &super::Block, mut state: KindState) -> KindState {
    for instr in &block.instrs {
        apply_def(&instr.inst, &mut state);
    }
    state
}

fn apply_def(inst: &Inst, state: &mut KindState) {
    let kind = match inst {
        Inst::Addr { .. } => Kind::Loc,
        Inst::Move { src, .. } => state.get(src).copied().unwrap_or(Kind::Unset),
        _ => Kind::Scalar,
    };
    if let Some(dst) = inst.def() {
        state.insert(dst.to_string(), kind);
    }
}

fn check_uses(
    m: &Module,
    func: &Function,
    block: &str,
    instr: &super::Instruction,
    state: &KindState,
    diags: &mut Vec<Diagnostic>,
) {
    let diag = |message: String| Diagnostic {
        function: Some(func.name.clone()),
        block: Some(block.to_string()),
        inst: Some(instr.id),
        message,
    };
    let kind_of = |reg: &str| state.get(reg).copied().unwrap_or(Kind::Unset);

    let check = |reg: &str, want_loc: bool, what: &str| -> Option<String> {
        match kind_of(reg) {
            Kind::Unset => Some(format!("register `{reg}` may be read before it is written")),
            Kind::Mixed => Some(format!(
                "register `{reg}` holds a location on some paths and a scalar on others"
            )),
            Kind::Loc if !want_loc => Some(format!("location `{reg}` used as {what}")),
            Kind::Scalar if want_loc => Some(format!("scalar `{reg}` used as an address")),
            _ => None,
        }
    };

    let mut problems: Vec<String> = Vec::new();
    match &instr.inst {
        Inst::Move { src, .. } => problems.extend(check(src, false, "a move source")),
        Inst::Bin { lhs, rhs, .. } => {
            problems.extend(check(lhs, false, "an arithmetic operand"));
            problems.extend(check(rhs, false, "an arithmetic operand"));
        }
        Inst::Load { addr, .. } => problems.extend(check(addr, true, "")),
        Inst::Store { addr, value } => {
            problems.extend(check(addr, true, ""));
            problems.extend(check(value, false, "a stored value"));
        }
        Inst::Call { callee, args, .. } => {
            let to_extern = m.is_extern(callee);
            for arg in args {
                if to_extern {
                    // Externs accept locations: that is how objects escape.
                    if kind_of(arg) == Kind::Unset {
                        problems
                            .push(format!("register `{arg}` may be read before it is written"));
                    }
                } else {
                    problems.extend(check(arg, false, "a call argument"));
                }
            }
        }
        Inst::Output { value } => problems.extend(check(value, false, "an output value")),
        Inst::Branch { cond, .. } => problems.extend(check(cond, false, "a branch condition")),
        Inst::Switch { value, .. } => problems.extend(check(value, false, "a switch value")),
        Inst::Ret { value: Some(v) } => problems.extend(check(v, false, "a return value")),
        _ => {}
    }
    diags.extend(problems.into_iter().map(diag));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Block, Field, Instruction};

    fn inst(id: u32, inst: Inst) -> Instruction {
        Instruction { id: InstId(id), inst }
    }

    fn single_main(blocks: Vec<Block>) -> Module {
        let mut m = Module::new();
        m.functions.push(Function {
            name: "main".into(),
            region: Region::Application,
            params: vec![],
            locals: vec![],
            blocks,
        });
        m
    }

    #[test]
    fn minimal_module_verifies() {
        let m = single_main(vec![Block {
            label: "entry".into(),
            instrs: vec![inst(1, Inst::Ret { value: None })],
        }]);
        assert_eq!(verify_module(&m), vec![]);
    }

    #[test]
    fn missing_terminator_names_the_block() {
        let m = single_main(vec![Block {
            label: "entry".into(),
            instrs: vec![inst(1, Inst::Const { dst: "r".into(), value: 1 })],
        }]);
        let diags = verify_module(&m);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].block.as_deref(), Some("entry"));
        assert!(diags[0].message.contains("terminator"));
    }

    #[test]
    fn branch_to_missing_label_is_reported() {
        let m = single_main(vec![Block {
            label: "entry".into(),
            instrs: vec![
                inst(1, Inst::Const { dst: "c".into(), value: 0 }),
                inst(2, Inst::Branch {
                    cond: "c".into(),
                    then_to: "gone".into(),
                    else_to: "entry".into(),
                }),
            ],
        }]);
        let diags = verify_module(&m);
        assert!(diags.iter().any(|d| d.message.contains("`gone`")));
    }

    #[test]
    fn read_before_write_is_reported() {
        let m = single_main(vec![Block {
            label: "entry".into(),
            instrs: vec![
                inst(1, Inst::Output { value: "x".into() }),
                inst(2, Inst::Ret { value: None }),
            ],
        }]);
        let diags = verify_module(&m);
        assert!(diags.iter().any(|d| d.message.contains("before it is written")));
    }

    #[test]
    fn location_in_scalar_position_is_reported() {
        let mut m = single_main(vec![Block {
            label: "entry".into(),
            instrs: vec![
                inst(1, Inst::Addr { dst: "p".into(), path: crate::ir::FieldPath::new("g", &[]) }),
                inst(2, Inst::Output { value: "p".into() }),
                inst(3, Inst::Ret { value: None }),
            ],
        }]);
        m.globals.push(Field { name: "g".into(), ty: "int4".into() });
        let diags = verify_module(&m);
        assert!(diags.iter().any(|d| d.message.contains("location `p`")));
    }

    #[test]
    fn empty_record_is_rejected() {
        let mut m = single_main(vec![Block {
            label: "entry".into(),
            instrs: vec![inst(1, Inst::Ret { value: None })],
        }]);
        m.types.declare("Empty", TypeDef::Record { fields: vec![] }).unwrap();
        let diags = verify_module(&m);
        assert!(diags.iter().any(|d| d.message.contains("no primitive leaves")));
    }

    #[test]
    fn type_cycle_is_rejected() {
        let mut m = single_main(vec![Block {
            label: "entry".into(),
            instrs: vec![inst(1, Inst::Ret { value: None })],
        }]);
        m.types
            .declare("A", TypeDef::Record {
                fields: vec![Field { name: "b".into(), ty: "B".into() }],
            })
            .unwrap();
        m.types
            .declare("B", TypeDef::Record {
                fields: vec![Field { name: "a".into(), ty: "A".into() }],
            })
            .unwrap();
        let diags = verify_module(&m);
        assert!(diags.iter().any(|d| d.message.contains("cycle")));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let m = single_main(vec![Block {
            label: "entry".into(),
            instrs: vec![
                inst(7, Inst::Const { dst: "a".into(), value: 1 }),
                inst(7, Inst::Ret { value: None }),
            ],
        }]);
        let diags = verify_module(&m);
        assert!(diags.iter().any(|d| d.message.contains("id #7")));
    }

    #[test]
    fn missing_main_is_rejected() {
        let m = Module::new();
        let diags = verify_module(&m);
        assert!(diags.iter().any(|d| d.message.contains("main")));
    }
}
