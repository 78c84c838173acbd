//! Core IR: aggregate types, region-tagged functions, and a fixed
//! three-address instruction set with structured field addressing.
//!
//! Design constraints that the rest of the toolkit leans on:
//!
//! * Values are 64-bit signed integers; declared primitive widths drive
//!   memory layout and truncation at the memory boundary, nothing else.
//! * There is no address arithmetic. Addresses come only from `addr`, which
//!   names a root object and a field path, so every memory access can be
//!   attributed to a specific leaf field statically.
//! * Instruction ids are unique across the module and survive every
//!   transformation: passes delete instructions, they never renumber them.

use indexmap::IndexMap;
use std::fmt;

pub mod verify;

/// Width in bytes of a primitive type: 1, 2, 4 or 8.
pub type Width = u8;

/// The built-in primitive type names and their widths.
pub const BUILTIN_TYPES: [(&str, Width); 4] =
    [("int1", 1), ("int2", 2), ("int4", 4), ("int8", 8)];

/// A named member of a record or overlay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub ty: String,
}

/// One entry in the type table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeDef {
    /// A scalar of the given byte width.
    Primitive { width: Width },
    /// Fields laid out at increasing offsets.
    Record { fields: Vec<Field> },
    /// Members that all share storage at offset zero.
    Overlay { members: Vec<Field> },
}

impl TypeDef {
    pub fn is_aggregate(&self) -> bool {
        !matches!(self, TypeDef::Primitive { .. })
    }

    /// Members of an aggregate, empty for primitives.
    pub fn fields(&self) -> &[Field] {
        match self {
            TypeDef::Primitive { .. } => &[],
            TypeDef::Record { fields } => fields,
            TypeDef::Overlay { members } => members,
        }
    }
}

/// Ordered table of named types. The built-in `intN` primitives are always
/// present; user declarations keep their source order, which the printer
/// reproduces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeTable {
    entries: IndexMap<String, TypeDef>,
}

impl Default for TypeTable {
    fn default() -> Self {
        Self::new()
    }
}

impl TypeTable {
    pub fn new() -> Self {
        let mut entries = IndexMap::new();
        for (name, width) in BUILTIN_TYPES {
            entries.insert(name.to_string(), TypeDef::Primitive { width });
        }
        TypeTable { entries }
    }

    pub fn is_builtin(name: &str) -> bool {
        BUILTIN_TYPES.iter().any(|(n, _)| *n == name)
    }

    /// Adds a type; fails if the name is already taken.
    pub fn declare(&mut self, name: &str, def: TypeDef) -> Result<(), String> {
        if self.entries.contains_key(name) {
            return Err(format!("type `{name}` is already defined"));
        }
        self.entries.insert(name.to_string(), def);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&TypeDef> {
        self.entries.get(name)
    }

    /// All entries in declaration order, built-ins first.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &TypeDef)> {
        self.entries.iter().map(|(n, d)| (n.as_str(), d))
    }

    /// User-declared entries in declaration order.
    pub fn user_entries(&self) -> impl Iterator<Item = (&str, &TypeDef)> {
        self.iter().filter(|(n, _)| !Self::is_builtin(n))
    }

    /// Width of a type if it is primitive.
    pub fn primitive_width(&self, name: &str) -> Option<Width> {
        match self.get(name)? {
            TypeDef::Primitive { width } => Some(*width),
            _ => None,
        }
    }

    /// The type reached from `root_ty` by following `steps`, if every step
    /// names a member of the aggregate reached so far.
    pub fn resolve_steps<'a>(&'a self, root_ty: &str, steps: &[String]) -> Option<&'a str> {
        let mut ty = self.entries.get_key_value(root_ty)?.0.as_str();
        for step in steps {
            let def = self.get(ty)?;
            let field = def.fields().iter().find(|f| f.name == *step)?;
            ty = &field.ty;
        }
        // Make sure the final name actually resolves.
        self.get(ty)?;
        Some(ty)
    }
}

/// Every leaf field of `root_ty` as a step sequence, in depth-first
/// declaration order. Primitives have a single empty path.
pub fn leaf_fields(types: &TypeTable, root_ty: &str) -> Result<Vec<Vec<String>>, String> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    walk_leaves(types, root_ty, &mut prefix, &mut out)?;
    Ok(out)
}

fn walk_leaves(
    types: &TypeTable,
    ty: &str,
    prefix: &mut Vec<String>,
    out: &mut Vec<Vec<String>>,
) -> Result<(), String> {
    match types.get(ty) {
        None => Err(format!("unknown type `{ty}`")),
        Some(TypeDef::Primitive { .. }) => {
            out.push(prefix.clone());
            Ok(())
        }
        Some(def) => {
            for field in def.fields() {
                prefix.push(field.name.clone());
                walk_leaves(types, &field.ty, prefix, out)?;
                prefix.pop();
            }
            Ok(())
        }
    }
}

/// A structured address: a root object plus the field steps down to a
/// primitive leaf. Scalar objects are addressed with an empty step list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldPath {
    pub root: String,
    pub steps: Vec<String>,
}

impl FieldPath {
    pub fn new(root: impl Into<String>, steps: &[&str]) -> Self {
        FieldPath {
            root: root.into(),
            steps: steps.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)?;
        for step in &self.steps {
            write!(f, ".{step}")?;
        }
        Ok(())
    }
}

/// Module-unique instruction id. Ids are assigned once (by the parser or a
/// builder) and never reused or renumbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstId(pub u32);

impl fmt::Display for InstId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Arithmetic and comparison operators. Comparisons yield 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
}

impl BinOp {
    pub const ALL: [BinOp; 8] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
            BinOp::Eq => "eq",
            BinOp::Ne => "ne",
            BinOp::Lt => "lt",
            BinOp::Le => "le",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<BinOp> {
        BinOp::ALL.iter().copied().find(|op| op.mnemonic() == s)
    }
}

/// Instruction payload. Registers are function-local, mutable, and referred
/// to by name; the verifier checks that every register is written before it
/// is read on every path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inst {
    /// `const r, k`
    Const { dst: String, value: i64 },
    /// `move r, s`
    Move { dst: String, src: String },
    /// `add r, a, b` and friends
    Bin { op: BinOp, dst: String, lhs: String, rhs: String },
    /// `addr r, root.f1.f2` — the only producer of location values
    Addr { dst: String, path: FieldPath },
    /// `load r, p`
    Load { dst: String, addr: String },
    /// `store p, v`
    Store { addr: String, value: String },
    /// `call f(a, b)` or `call r, f(a, b)`
    Call { dst: Option<String>, callee: String, args: Vec<String> },
    /// `input r` — next value from the replayed trace
    Input { dst: String },
    /// `output v` — appends to the observable output sequence
    Output { value: String },
    /// `jmp L`
    Jump { target: String },
    /// `br c, Lt, Lf`
    Branch { cond: String, then_to: String, else_to: String },
    /// `switch v, [k1: L1, ...], Ldefault`
    Switch { value: String, cases: Vec<(i64, String)>, default: String },
    /// `ret` or `ret v`
    Ret { value: Option<String> },
}

impl Inst {
    pub fn is_terminator(&self) -> bool {
        matches!(
            self,
            Inst::Jump { .. } | Inst::Branch { .. } | Inst::Switch { .. } | Inst::Ret { .. }
        )
    }

    /// Register defined by this instruction, if any.
    pub fn def(&self) -> Option<&str> {
        match self {
            Inst::Const { dst, .. }
            | Inst::Move { dst, .. }
            | Inst::Bin { dst, .. }
            | Inst::Addr { dst, .. }
            | Inst::Load { dst, .. }
            | Inst::Input { dst } => Some(dst),
            Inst::Call { dst, .. } => dst.as_deref(),
            _ => None,
        }
    }

    /// Registers read by this instruction, in operand order.
    pub fn uses(&self) -> Vec<&str> {
        match self {
            Inst::Const { .. } | Inst::Addr { .. } | Inst::Input { .. } | Inst::Jump { .. } => {
                Vec::new()
            }
            Inst::Move { src, .. } => vec![src],
            Inst::Bin { lhs, rhs, .. } => vec![lhs, rhs],
            Inst::Load { addr, .. } => vec![addr],
            Inst::Store { addr, value } => vec![addr, value],
            Inst::Call { args, .. } => args.iter().map(|a| a.as_str()).collect(),
            Inst::Output { value } => vec![value],
            Inst::Branch { cond, .. } => vec![cond],
            Inst::Switch { value, .. } => vec![value],
            Inst::Ret { value } => value.as_deref().into_iter().collect(),
        }
    }

    /// Block labels this terminator can jump to.
    pub fn targets(&self) -> Vec<&str> {
        match self {
            Inst::Jump { target } => vec![target],
            Inst::Branch { then_to, else_to, .. } => vec![then_to, else_to],
            Inst::Switch { cases, default, .. } => {
                let mut t: Vec<&str> = cases.iter().map(|(_, l)| l.as_str()).collect();
                t.push(default);
                t
            }
            _ => Vec::new(),
        }
    }
}

/// An instruction together with its stable id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub id: InstId,
    pub inst: Inst,
}

/// A basic block: a label and a non-empty instruction list whose last entry
/// is the block's only terminator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub label: String,
    pub instrs: Vec<Instruction>,
}

impl Block {
    pub fn terminator(&self) -> Option<&Instruction> {
        self.instrs.last().filter(|i| i.inst.is_terminator())
    }
}

/// Which half of the program an instruction belongs to. The passes only ever
/// touch Library code; the Application region is the fixed consumer whose
/// behaviour must be preserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Library,
    Application,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Library => write!(f, "library"),
            Region::Application => write!(f, "app"),
        }
    }
}

/// A named memory object: a global, or a local slot of one function.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectId {
    Global(String),
    Local { function: String, name: String },
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectId::Global(name) => write!(f, "{name}"),
            ObjectId::Local { function, name } => write!(f, "{function}/{name}"),
        }
    }
}

/// A function: parameters are scalars passed by value, locals are memory
/// objects addressable through `addr`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub region: Region,
    pub params: Vec<Field>,
    pub locals: Vec<Field>,
    pub blocks: Vec<Block>,
}

impl Function {
    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    pub fn instructions(&self) -> impl Iterator<Item = &Instruction> {
        self.blocks.iter().flat_map(|b| b.instrs.iter())
    }

    /// Declared type of a local or parameter.
    pub fn slot_type(&self, name: &str) -> Option<&str> {
        self.locals
            .iter()
            .chain(self.params.iter())
            .find(|f| f.name == name)
            .map(|f| f.ty.as_str())
    }

    /// Declared type of a local memory object. Parameters are registers,
    /// not objects, so they are excluded.
    pub fn local_type(&self, name: &str) -> Option<&str> {
        self.locals.iter().find(|f| f.name == name).map(|f| f.ty.as_str())
    }

    /// Whether the function returns a value, judged from its `ret`s. Mixed
    /// usage is a verifier error; here the first valued `ret` wins.
    pub fn returns_value(&self) -> bool {
        self.instructions()
            .any(|i| matches!(&i.inst, Inst::Ret { value: Some(_) }))
    }
}

/// A whole translation unit: types, globals, extern declarations and
/// functions. Externs are opaque; passing an address to one makes the whole
/// root object escape the analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Module {
    pub types: TypeTable,
    pub globals: Vec<Field>,
    pub externs: Vec<String>,
    pub functions: Vec<Function>,
}

impl Module {
    pub fn new() -> Self {
        Module {
            types: TypeTable::new(),
            globals: Vec::new(),
            externs: Vec::new(),
            functions: Vec::new(),
        }
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn is_extern(&self, name: &str) -> bool {
        self.externs.iter().any(|e| e == name)
    }

    pub fn global_type(&self, name: &str) -> Option<&str> {
        self.globals
            .iter()
            .find(|g| g.name == name)
            .map(|g| g.ty.as_str())
    }

    /// Type of the object an `addr` path in `func` roots at: locals shadow
    /// globals.
    pub fn object_type<'a>(&'a self, func: &'a Function, root: &str) -> Option<&'a str> {
        func.local_type(root).or_else(|| self.global_type(root))
    }

    /// The object identity behind a path root seen from `func`.
    pub fn object_id(&self, func: &Function, root: &str) -> Option<ObjectId> {
        if func.local_type(root).is_some() {
            Some(ObjectId::Local {
                function: func.name.clone(),
                name: root.to_string(),
            })
        } else if self.global_type(root).is_some() {
            Some(ObjectId::Global(root.to_string()))
        } else {
            None
        }
    }

    /// All instructions with their containing function.
    pub fn instructions(&self) -> impl Iterator<Item = (&Function, &Instruction)> {
        self.functions
            .iter()
            .flat_map(|f| f.instructions().map(move |i| (f, i)))
    }

    /// Number of instructions in one region.
    pub fn instruction_count(&self, region: Region) -> usize {
        self.functions
            .iter()
            .filter(|f| f.region == region)
            .map(|f| f.instructions().count())
            .sum()
    }

    /// Largest assigned instruction id, handy when appending instructions.
    pub fn max_inst_id(&self) -> u32 {
        self.instructions().map(|(_, i)| i.id.0).max().unwrap_or(0)
    }

    /// Removes the given instructions, keeping every id untouched. Callers
    /// are responsible for only deleting non-terminators.
    pub fn without_instructions(&self, remove: &std::collections::BTreeSet<InstId>) -> Module {
        let mut out = self.clone();
        for func in &mut out.functions {
            for block in &mut func.blocks {
                block.instrs.retain(|i| !remove.contains(&i.id));
            }
        }
        out
    }
}

impl Default for Module {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn midi_like_types() -> TypeTable {
        let mut t = TypeTable::new();
        t.declare(
            "NoteOn",
            TypeDef::Record {
                fields: vec![
                    Field { name: "iNote".into(), ty: "int4".into() },
                    Field { name: "iChannel".into(), ty: "int4".into() },
                    Field { name: "iVolume".into(), ty: "int4".into() },
                ],
            },
        )
        .unwrap();
        t.declare(
            "NoteOff",
            TypeDef::Record {
                fields: vec![
                    Field { name: "iNote".into(), ty: "int4".into() },
                    Field { name: "iChannel".into(), ty: "int4".into() },
                ],
            },
        )
        .unwrap();
        t.declare(
            "MsgData",
            TypeDef::Overlay {
                members: vec![
                    Field { name: "NoteOn".into(), ty: "NoteOn".into() },
                    Field { name: "NoteOff".into(), ty: "NoteOff".into() },
                ],
            },
        )
        .unwrap();
        t
    }

    #[test]
    fn builtins_are_preseeded() {
        let t = TypeTable::new();
        for (name, width) in BUILTIN_TYPES {
            assert_eq!(t.primitive_width(name), Some(width));
        }
        assert_eq!(t.user_entries().count(), 0);
    }

    #[test]
    fn duplicate_declaration_is_rejected() {
        let mut t = TypeTable::new();
        t.declare("A", TypeDef::Primitive { width: 4 }).unwrap();
        assert!(t.declare("A", TypeDef::Primitive { width: 8 }).is_err());
        assert!(t.declare("int4", TypeDef::Primitive { width: 4 }).is_err());
    }

    #[test]
    fn leaf_fields_walks_overlays_depth_first() {
        let t = midi_like_types();
        let leaves = leaf_fields(&t, "MsgData").unwrap();
        let rendered: Vec<String> = leaves.iter().map(|p| p.join(".")).collect();
        assert_eq!(
            rendered,
            vec![
                "NoteOn.iNote",
                "NoteOn.iChannel",
                "NoteOn.iVolume",
                "NoteOff.iNote",
                "NoteOff.iChannel",
            ]
        );
    }

    #[test]
    fn leaf_fields_counts_overlay_of_records() {
        // Overlay of {n} and {n, v}: three leaves, one per member field.
        let mut t = TypeTable::new();
        t.declare(
            "X",
            TypeDef::Record { fields: vec![Field { name: "n".into(), ty: "int4".into() }] },
        )
        .unwrap();
        t.declare(
            "Y",
            TypeDef::Record {
                fields: vec![
                    Field { name: "n".into(), ty: "int4".into() },
                    Field { name: "v".into(), ty: "int4".into() },
                ],
            },
        )
        .unwrap();
        t.declare(
            "O",
            TypeDef::Overlay {
                members: vec![
                    Field { name: "x".into(), ty: "X".into() },
                    Field { name: "y".into(), ty: "Y".into() },
                ],
            },
        )
        .unwrap();
        assert_eq!(leaf_fields(&t, "O").unwrap().len(), 3);
    }

    #[test]
    fn leaf_count_matches_naive_recursion() {
        // Independent count: sum of leaves per member, computed differently.
        fn naive(t: &TypeTable, ty: &str) -> usize {
            match t.get(ty).unwrap() {
                TypeDef::Primitive { .. } => 1,
                def => def.fields().iter().map(|f| naive(t, &f.ty)).sum(),
            }
        }
        let t = midi_like_types();
        for ty in ["NoteOn", "NoteOff", "MsgData", "int4"] {
            assert_eq!(leaf_fields(&t, ty).unwrap().len(), naive(&t, ty));
        }
    }

    #[test]
    fn resolve_steps_follows_members() {
        let t = midi_like_types();
        assert_eq!(t.resolve_steps("MsgData", &["NoteOn".into(), "iVolume".into()]), Some("int4"));
        assert_eq!(t.resolve_steps("MsgData", &["NoteOn".into(), "missing".into()]), None);
        assert_eq!(t.resolve_steps("int4", &[]), Some("int4"));
    }

    #[test]
    fn instruction_defs_and_uses() {
        let store = Inst::Store { addr: "p".into(), value: "v".into() };
        assert_eq!(store.def(), None);
        assert_eq!(store.uses(), vec!["p", "v"]);

        let call = Inst::Call { dst: Some("r".into()), callee: "f".into(), args: vec!["a".into()] };
        assert_eq!(call.def(), Some("r"));
        assert_eq!(call.uses(), vec!["a"]);

        let sw = Inst::Switch {
            value: "t".into(),
            cases: vec![(1, "A".into()), (2, "B".into())],
            default: "D".into(),
        };
        assert!(sw.is_terminator());
        assert_eq!(sw.targets(), vec!["A", "B", "D"]);
    }
}
