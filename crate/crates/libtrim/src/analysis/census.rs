//! Field-access census: every load and store attributed to the primitive
//! leaf it touches, keyed by the chosen identity mode and split by region.
//! Passing an object's address to an extern makes the whole object escape,
//! which marks all of its leaves read and written in the escaping region.

use std::collections::{BTreeMap, BTreeSet};

use super::cfg::Cfg;
use super::reach::{reaching_defs, Def, ReachingDefs};
use crate::ir::{leaf_fields, Function, Inst, InstId, Module, ObjectId, Region};
use crate::layout::{compute_layout, field_key, FieldKey, IdentityMode, LayoutTable};

/// Instruction ids of one kind of access, split by the region of the
/// function containing the instruction.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Sites {
    pub library: BTreeSet<InstId>,
    pub app: BTreeSet<InstId>,
}

impl Sites {
    pub fn insert(&mut self, region: Region, id: InstId) {
        match region {
            Region::Library => self.library.insert(id),
            Region::Application => self.app.insert(id),
        };
    }

    pub fn is_empty(&self) -> bool {
        self.library.is_empty() && self.app.is_empty()
    }

    pub fn total(&self) -> usize {
        self.library.len() + self.app.len()
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Access {
    pub reads: Sites,
    pub writes: Sites,
}

impl Access {
    /// Written somewhere, read nowhere: the removal candidates.
    pub fn is_resultless(&self) -> bool {
        !self.writes.is_empty() && self.reads.is_empty()
    }
}

/// What a load or store address can name: a leaf field of an aggregate, or
/// a whole scalar object addressed with an empty path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Target {
    Field(FieldKey),
    Scalar(ObjectId),
}

/// An object whose address reached an extern call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Escape {
    pub call: InstId,
    pub object: ObjectId,
    pub region: Region,
}

#[derive(Debug, Clone)]
pub struct AccessSummary {
    pub mode: IdentityMode,
    /// Aggregate-rooted leaves. Every leaf of every aggregate object's type
    /// has an entry, even when untouched.
    pub fields: BTreeMap<FieldKey, Access>,
    /// Scalar globals and locals, addressed by zero-step paths.
    pub scalars: BTreeMap<ObjectId, Access>,
    pub escapes: Vec<Escape>,
    /// For every load and store, the targets its address may name. Almost
    /// always a single element; several only when distinct `addr`s reach
    /// the same use.
    pub targets: BTreeMap<InstId, Vec<Target>>,
}

impl AccessSummary {
    pub fn app_read_fields(&self) -> impl Iterator<Item = &FieldKey> {
        self.fields
            .iter()
            .filter(|(_, a)| !a.reads.app.is_empty())
            .map(|(k, _)| k)
    }

    pub fn field_access(&self, key: &FieldKey) -> Option<&Access> {
        self.fields.get(key)
    }
}

/// Keys written somewhere but read nowhere, in either region.
pub fn resultless_fields(summary: &AccessSummary) -> BTreeSet<FieldKey> {
    summary
        .fields
        .iter()
        .filter(|(_, access)| access.is_resultless())
        .map(|(key, _)| key.clone())
        .collect()
}

/// The `addr` paths whose locations may reach `reg` at instruction `at`.
/// Chains are intra-procedural, so the defining instructions live in the
/// same function.
fn addr_paths<'f>(
    func: &'f Function,
    rd: &ReachingDefs,
    at: InstId,
    reg: &str,
) -> Vec<&'f crate::ir::FieldPath> {
    let Some(defs) = rd.use_defs.get(&at).and_then(|m| m.get(reg)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for def in defs {
        let Def::Inst(def_id) = def else { continue };
        if let Some(instr) = func.instructions().find(|i| i.id == *def_id) {
            if let Inst::Addr { path, .. } = &instr.inst {
                out.push(path);
            }
        }
    }
    out
}

/// Resolves the `addr` definitions reaching `reg` at instruction `at` into
/// census targets.
fn targets_of(
    m: &Module,
    func: &Function,
    layout: &LayoutTable,
    mode: IdentityMode,
    rd: &ReachingDefs,
    at: InstId,
    reg: &str,
) -> Vec<Target> {
    let mut out = BTreeSet::new();
    for path in addr_paths(func, rd, at, reg) {
        let Some(root_ty) = m.object_type(func, &path.root) else { continue };
        if path.steps.is_empty() && m.types.primitive_width(root_ty).is_some() {
            if let Some(object) = m.object_id(func, &path.root) {
                out.insert(Target::Scalar(object));
            }
        } else if let Some(key) = field_key(&m.types, layout, mode, root_ty, &path.steps) {
            out.insert(Target::Field(key));
        }
    }
    out.into_iter().collect()
}

/// Every aggregate object rooted in the module: globals plus every
/// function's locals.
fn aggregate_objects(m: &Module) -> Vec<(ObjectId, String)> {
    let mut out = Vec::new();
    for g in &m.globals {
        if m.types.get(&g.ty).is_some_and(|d| d.is_aggregate()) {
            out.push((ObjectId::Global(g.name.clone()), g.ty.clone()));
        }
    }
    for f in &m.functions {
        for l in &f.locals {
            if m.types.get(&l.ty).is_some_and(|d| d.is_aggregate()) {
                out.push((
                    ObjectId::Local { function: f.name.clone(), name: l.name.clone() },
                    l.ty.clone(),
                ));
            }
        }
    }
    out
}

pub fn field_census(m: &Module, mode: IdentityMode) -> AccessSummary {
    let layout = compute_layout(&m.types);
    let mut summary = AccessSummary {
        mode,
        fields: BTreeMap::new(),
        scalars: BTreeMap::new(),
        escapes: Vec::new(),
        targets: BTreeMap::new(),
    };

    // Seed every leaf of every aggregate object and every scalar object,
    // so untouched fields report zero sites rather than vanishing.
    for (_, root_ty) in aggregate_objects(m) {
        if let Ok(leaves) = leaf_fields(&m.types, &root_ty) {
            for steps in leaves {
                if let Some(key) = field_key(&m.types, &layout, mode, &root_ty, &steps) {
                    summary.fields.entry(key).or_default();
                }
            }
        }
    }
    for g in &m.globals {
        if m.types.primitive_width(&g.ty).is_some() {
            summary.scalars.entry(ObjectId::Global(g.name.clone())).or_default();
        }
    }
    for f in &m.functions {
        for l in &f.locals {
            if m.types.primitive_width(&l.ty).is_some() {
                summary
                    .scalars
                    .entry(ObjectId::Local { function: f.name.clone(), name: l.name.clone() })
                    .or_default();
            }
        }
    }

    for func in &m.functions {
        let cfg = Cfg::build(func);
        let rd = reaching_defs(func, &cfg);
        let region = func.region;
        for instr in func.instructions() {
            match &instr.inst {
                Inst::Load { addr, .. } => {
                    let targets = targets_of(m, func, &layout, mode, &rd, instr.id, addr);
                    for t in &targets {
                        match t {
                            Target::Field(key) => summary
                                .fields
                                .entry(key.clone())
                                .or_default()
                                .reads
                                .insert(region, instr.id),
                            Target::Scalar(obj) => summary
                                .scalars
                                .entry(obj.clone())
                                .or_default()
                                .reads
                                .insert(region, instr.id),
                        }
                    }
                    summary.targets.insert(instr.id, targets);
                }
                Inst::Store { addr, .. } => {
                    let targets = targets_of(m, func, &layout, mode, &rd, instr.id, addr);
                    for t in &targets {
                        match t {
                            Target::Field(key) => summary
                                .fields
                                .entry(key.clone())
                                .or_default()
                                .writes
                                .insert(region, instr.id),
                            Target::Scalar(obj) => summary
                                .scalars
                                .entry(obj.clone())
                                .or_default()
                                .writes
                                .insert(region, instr.id),
                        }
                    }
                    summary.targets.insert(instr.id, targets);
                }
                Inst::Call { callee, args, .. } if m.is_extern(callee) => {
                    for arg in args {
                        for path in addr_paths(func, &rd, instr.id, arg) {
                            let Some(object) = m.object_id(func, &path.root) else {
                                continue;
                            };
                            let Some(root_ty) = m.object_type(func, &path.root) else {
                                continue;
                            };
                            mark_object_escape(
                                m,
                                &mut summary,
                                &layout,
                                mode,
                                object,
                                root_ty,
                                region,
                                instr.id,
                            );
                        }
                    }
                }
                _ => {}
            }
        }
    }
    summary
}

#[allow(clippy::too_many_arguments)]
fn mark_object_escape(
    m: &Module,
    summary: &mut AccessSummary,
    layout: &LayoutTable,
    mode: IdentityMode,
    object: ObjectId,
    root_ty: &str,
    region: Region,
    call: InstId,
) {
    if m.types.primitive_width(root_ty).is_some() {
        let access = summary.scalars.entry(object.clone()).or_default();
        access.reads.insert(region, call);
        access.writes.insert(region, call);
    } else if let Ok(leaves) = leaf_fields(&m.types, root_ty) {
        // The whole root object escapes, not just the leaf whose address
        // was taken.
        for steps in leaves {
            if let Some(key) = field_key(&m.types, layout, mode, root_ty, &steps) {
                let access = summary.fields.entry(key).or_default();
                access.reads.insert(region, call);
                access.writes.insert(region, call);
            }
        }
    }
    summary.escapes.push(Escape { call, object, region });
}
