//! Tag-dispatch recognition and the produced/consumed variant split.
//!
//! A dispatch is a `switch` whose scrutinee is loaded from one field, or a
//! chain of two or more `eq`-against-constant branches on such a load. The
//! library side of a dispatch produces variants; the application side
//! consumes the ones whose handler arms do real work.

use std::collections::{BTreeMap, BTreeSet};

use super::census::{AccessSummary, Target};
use super::cfg::{Cfg, EdgeKind};
use super::control::{control_dependence, ControlDeps};
use super::postdom::postdominators;
use super::reach::{reaching_defs, Def, ReachingDefs};
use crate::ir::{Function, Inst, InstId, Module, Region};
use crate::layout::FieldKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispatchStyle {
    Switch,
    EqChain,
}

/// One tag constant's outgoing edge within a dispatch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispatchCase {
    pub value: i64,
    pub target_label: String,
    /// Block holding the `switch` (all cases) or this link's `br`.
    pub branch_block: usize,
    pub edge: EdgeKind,
}

#[derive(Debug, Clone)]
pub struct Dispatch {
    pub function: String,
    pub region: Region,
    pub style: DispatchStyle,
    pub field: FieldKey,
    pub cases: Vec<DispatchCase>,
    /// Block of the `switch`, or the first link of an `eq` chain.
    pub head_block: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantReport {
    pub tag: FieldKey,
    pub produced: BTreeSet<i64>,
    pub consumed: BTreeSet<i64>,
    pub unused: BTreeSet<i64>,
}

/// The field a register is always loaded from, when that is the register's
/// only kind of definition.
fn loaded_field(
    func: &Function,
    rd: &ReachingDefs,
    summary: &AccessSummary,
    at: InstId,
    reg: &str,
) -> Option<FieldKey> {
    let defs = rd.use_defs.get(&at)?.get(reg)?;
    if defs.is_empty() {
        return None;
    }
    let mut field: Option<FieldKey> = None;
    for def in defs {
        let Def::Inst(def_id) = def else { return None };
        let instr = func.instructions().find(|i| i.id == *def_id)?;
        if !matches!(instr.inst, Inst::Load { .. }) {
            return None;
        }
        match summary.targets.get(def_id).map(Vec::as_slice) {
            Some([Target::Field(key)]) => match &field {
                None => field = Some(key.clone()),
                Some(prev) if prev == key => {}
                Some(_) => return None,
            },
            _ => return None,
        }
    }
    field
}

/// The constant a register always holds, when defined only by `const`.
fn const_value(func: &Function, rd: &ReachingDefs, at: InstId, reg: &str) -> Option<i64> {
    let defs = rd.use_defs.get(&at)?.get(reg)?;
    let mut value: Option<i64> = None;
    if defs.is_empty() {
        return None;
    }
    for def in defs {
        let Def::Inst(def_id) = def else { return None };
        let instr = func.instructions().find(|i| i.id == *def_id)?;
        let Inst::Const { value: v, .. } = instr.inst else { return None };
        match value {
            None => value = Some(v),
            Some(prev) if prev == v => {}
            Some(_) => return None,
        }
    }
    value
}

/// An `eq`-chain link: a block branching on `tag == K`.
struct ChainLink {
    block: usize,
    field: FieldKey,
    value: i64,
    then_label: String,
    else_block: usize,
}

fn chain_link(
    func: &Function,
    cfg: &Cfg,
    rd: &ReachingDefs,
    summary: &AccessSummary,
    block: usize,
) -> Option<ChainLink> {
    let term = func.blocks[block].terminator()?;
    let Inst::Branch { cond, then_to, else_to } = &term.inst else { return None };
    let defs = rd.use_defs.get(&term.id)?.get(cond.as_str())?;
    let [Def::Inst(def_id)] = defs.iter().collect::<Vec<_>>()[..] else {
        return None;
    };
    let eq = func.instructions().find(|i| i.id == *def_id)?;
    let Inst::Bin { op: crate::ir::BinOp::Eq, lhs, rhs, .. } = &eq.inst else {
        return None;
    };
    let (field, value) = match (
        loaded_field(func, rd, summary, eq.id, lhs),
        const_value(func, rd, eq.id, rhs),
    ) {
        (Some(f), Some(v)) => (f, v),
        _ => match (
            const_value(func, rd, eq.id, lhs),
            loaded_field(func, rd, summary, eq.id, rhs),
        ) {
            (Some(v), Some(f)) => (f, v),
            _ => return None,
        },
    };
    Some(ChainLink {
        block,
        field,
        value,
        then_label: then_to.clone(),
        else_block: cfg.block_index(else_to)?,
    })
}

/// Finds every dispatch in the module: all `switch`es on loaded fields plus
/// all `eq` chains of length two or more.
pub fn find_dispatches(m: &Module, summary: &AccessSummary) -> Vec<Dispatch> {
    let mut out = Vec::new();
    for func in &m.functions {
        let cfg = Cfg::build(func);
        let rd = reaching_defs(func, &cfg);

        for (b, block) in func.blocks.iter().enumerate() {
            let Some(term) = block.terminator() else { continue };
            if let Inst::Switch { value, cases, .. } = &term.inst {
                let Some(field) = loaded_field(func, &rd, summary, term.id, value) else {
                    continue;
                };
                out.push(Dispatch {
                    function: func.name.clone(),
                    region: func.region,
                    style: DispatchStyle::Switch,
                    field,
                    cases: cases
                        .iter()
                        .map(|(k, label)| DispatchCase {
                            value: *k,
                            target_label: label.clone(),
                            branch_block: b,
                            edge: EdgeKind::Case(*k),
                        })
                        .collect(),
                    head_block: b,
                });
            }
        }

        // Chains: collect candidate links, then walk from heads (links no
        // other link falls through to).
        let mut links: BTreeMap<usize, ChainLink> = BTreeMap::new();
        for b in 0..cfg.len() {
            if let Some(link) = chain_link(func, &cfg, &rd, summary, b) {
                links.insert(b, link);
            }
        }
        let continued: BTreeSet<usize> = links
            .values()
            .filter_map(|l| {
                let next = links.get(&l.else_block)?;
                (next.field == l.field).then_some(next.block)
            })
            .collect();
        let heads: Vec<usize> =
            links.keys().copied().filter(|b| !continued.contains(b)).collect();
        for head in heads {
            let mut cases = Vec::new();
            let mut cursor = head;
            let field = links[&head].field.clone();
            loop {
                let link = &links[&cursor];
                cases.push(DispatchCase {
                    value: link.value,
                    target_label: link.then_label.clone(),
                    branch_block: link.block,
                    edge: EdgeKind::True,
                });
                match links.get(&link.else_block) {
                    Some(next) if next.field == field && next.block != head => {
                        cursor = next.block;
                    }
                    _ => break,
                }
            }
            if cases.len() >= 2 {
                out.push(Dispatch {
                    function: func.name.clone(),
                    region: func.region,
                    style: DispatchStyle::EqChain,
                    field,
                    cases,
                    head_block: head,
                });
            }
        }
    }
    out
}

/// Instruction ids in blocks committed to a dispatch case: everything
/// transitively control dependent on the case's edge.
pub fn case_region(func: &Function, cd: &ControlDeps, case: &DispatchCase) -> BTreeSet<InstId> {
    let edge = (case.branch_block, case.edge);
    let mut out = BTreeSet::new();
    for (b, block) in func.blocks.iter().enumerate() {
        if cd.transitive[b].contains(&edge) {
            out.extend(block.instrs.iter().map(|i| i.id));
        }
    }
    out
}

pub fn variant_analysis(m: &Module, tag: &FieldKey, summary: &AccessSummary) -> VariantReport {
    let mut produced = BTreeSet::new();
    let mut consumed = BTreeSet::new();
    let message_ty = tag.root_ty().to_string();

    for dispatch in find_dispatches(m, summary) {
        if dispatch.field != *tag {
            continue;
        }
        let func = m.function(&dispatch.function).unwrap();
        let cfg = Cfg::build(func);
        let pd = postdominators(func, &cfg);
        let cd = control_dependence(&cfg, &pd);
        for case in &dispatch.cases {
            let region = case_region(func, &cd, case);
            match dispatch.region {
                Region::Library => {
                    // Producing a variant means assembling the message:
                    // at least one store into the message type's fields.
                    let assembles = region.iter().any(|id| {
                        func.instructions().any(|i| {
                            i.id == *id
                                && matches!(i.inst, Inst::Store { .. })
                                && summary.targets.get(id).is_some_and(|ts| {
                                    ts.iter().any(|t| match t {
                                        Target::Field(k) => k.root_ty() == message_ty,
                                        Target::Scalar(_) => false,
                                    })
                                })
                        })
                    });
                    if assembles {
                        produced.insert(case.value);
                    }
                }
                Region::Application => {
                    // A handler counts as consuming only when its arm does
                    // real work, not when it falls straight through.
                    let nontrivial = region.iter().any(|id| {
                        func.instructions()
                            .any(|i| i.id == *id && !i.inst.is_terminator())
                    });
                    if nontrivial {
                        consumed.insert(case.value);
                    }
                }
            }
        }
    }

    let unused = produced.difference(&consumed).copied().collect();
    VariantReport { tag: tag.clone(), produced, consumed, unused }
}
