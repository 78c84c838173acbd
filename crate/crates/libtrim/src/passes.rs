//! The two removal passes and their combination.
//!
//! Tool A deletes library stores to resultless fields together with the
//! value chains that exist only to feed them. Tool B deletes the bodies of
//! library dispatch arms for variants the application never consumes.
//! Both share one protection set, the live roots: instructions that carry
//! observable effects or supply values something live still reads. A
//! removal set is always closed under "no kept instruction reads a removed
//! definition", so the output of every pass verifies.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::{
    backward_data_slice, case_region, control_dependence, field_census, find_dispatches,
    postdominators, reaching_defs, resultless_fields, variant_analysis, AccessSummary, Cfg, Def,
    ReachingDefs, Target,
};
use crate::ir::{BinOp, Inst, InstId, Module, Region};
use crate::layout::{FieldKey, IdentityMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tool {
    A,
    B,
    Combined,
}

impl std::fmt::Display for Tool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Tool::A => "a",
            Tool::B => "b",
            Tool::Combined => "combined",
        })
    }
}

/// Instruction ids that no pass may remove.
pub type LiveRoots = BTreeSet<InstId>;

/// What a pass did and against which denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovalReport {
    pub tool: Tool,
    pub mode: IdentityMode,
    /// Removed store instructions: the field assignments themselves.
    pub seed_assignments: BTreeSet<InstId>,
    pub removed: BTreeSet<InstId>,
    /// Library-region instruction count of the input module.
    pub library_total: usize,
    /// Per library function: (removed, total).
    pub function_totals: BTreeMap<String, (usize, usize)>,
    /// Removed assignments per field key.
    pub per_field: BTreeMap<FieldKey, usize>,
    /// Removed instructions per unused variant constant.
    pub per_variant: BTreeMap<i64, usize>,
}

impl RemovalReport {
    pub fn removal_ratio(&self) -> f64 {
        if self.library_total == 0 {
            0.0
        } else {
            self.removed.len() as f64 / self.library_total as f64
        }
    }
}

struct Prepared<'m> {
    m: &'m Module,
    summary: AccessSummary,
    rds: BTreeMap<String, ReachingDefs>,
    roots: LiveRoots,
}

fn prepare(m: &Module, mode: IdentityMode) -> Prepared<'_> {
    let summary = field_census(m, mode);
    let rds: BTreeMap<String, ReachingDefs> = m
        .functions
        .iter()
        .map(|f| (f.name.clone(), reaching_defs(f, &Cfg::build(f))))
        .collect();
    let roots = roots_of(m, &summary, &rds);
    Prepared { m, summary, rds, roots }
}

/// Instructions that must survive every pass: observable effects
/// (`input`, `output`, `call`, every terminator), loads of anything the
/// application reads, stores to anything read at all, and divisions that
/// could trap.
pub fn live_roots(m: &Module, mode: IdentityMode) -> LiveRoots {
    let p = prepare(m, mode);
    p.roots
}

fn roots_of(
    m: &Module,
    summary: &AccessSummary,
    rds: &BTreeMap<String, ReachingDefs>,
) -> LiveRoots {
    let mut roots = BTreeSet::new();
    for (func, instr) in m.instructions() {
        let rooted = match &instr.inst {
            Inst::Input { .. } | Inst::Output { .. } | Inst::Call { .. } => true,
            inst if inst.is_terminator() => true,
            Inst::Load { .. } => targets_hit(summary, instr.id, |reads, _| !reads.app.is_empty()),
            Inst::Store { .. } => {
                targets_hit(summary, instr.id, |reads, _| !reads.library.is_empty() || !reads.app.is_empty())
            }
            Inst::Bin { op: BinOp::Div, rhs, .. } => {
                !provably_nonzero(func, &rds[&func.name], instr.id, rhs)
            }
            _ => false,
        };
        if rooted {
            roots.insert(instr.id);
        }
    }
    roots
}

/// Whether any of the instruction's may-targets satisfies the read-site
/// predicate. Field targets check the field's accesses, scalar targets the
/// object's.
fn targets_hit(
    summary: &AccessSummary,
    id: InstId,
    pred: impl Fn(&crate::analysis::Sites, &crate::analysis::Sites) -> bool,
) -> bool {
    let Some(targets) = summary.targets.get(&id) else { return false };
    targets.iter().any(|t| {
        let access = match t {
            Target::Field(key) => summary.fields.get(key),
            Target::Scalar(obj) => summary.scalars.get(obj),
        };
        access.is_some_and(|a| pred(&a.reads, &a.writes))
    })
}

fn provably_nonzero(
    func: &crate::ir::Function,
    rd: &ReachingDefs,
    at: InstId,
    reg: &str,
) -> bool {
    let Some(defs) = rd.use_defs.get(&at).and_then(|u| u.get(reg)) else {
        return false;
    };
    !defs.is_empty()
        && defs.iter().all(|def| match def {
            Def::Param(_) => false,
            Def::Inst(id) => func
                .instructions()
                .any(|i| i.id == *id && matches!(i.inst, Inst::Const { value, .. } if value != 0)),
        })
}

/// Users of every instruction's defined register, across the module.
fn def_users(m: &Module, rds: &BTreeMap<String, ReachingDefs>) -> BTreeMap<InstId, BTreeSet<InstId>> {
    let mut users: BTreeMap<InstId, BTreeSet<InstId>> = BTreeMap::new();
    for (func, instr) in m.instructions() {
        if instr.inst.def().is_none() {
            continue;
        }
        let set = rds[&func.name]
            .uses_of(&Def::Inst(instr.id))
            .collect::<BTreeSet<InstId>>();
        users.insert(instr.id, set);
    }
    users
}

/// Shrinks `removed` until every removed definition is read only by other
/// removed instructions, keeping `keep` out of the set entirely.
fn close_under_outside_uses(
    removed: &mut BTreeSet<InstId>,
    pinned: &BTreeSet<InstId>,
    users: &BTreeMap<InstId, BTreeSet<InstId>>,
) {
    loop {
        let evict: Vec<InstId> = removed
            .iter()
            .filter(|id| !pinned.contains(id))
            .filter(|id| {
                users
                    .get(id)
                    .is_some_and(|us| us.iter().any(|u| !removed.contains(u)))
            })
            .copied()
            .collect();
        if evict.is_empty() {
            return;
        }
        for id in evict {
            removed.remove(&id);
        }
    }
}

fn library_ids(m: &Module) -> BTreeSet<InstId> {
    m.instructions()
        .filter(|(f, _)| f.region == Region::Library)
        .map(|(_, i)| i.id)
        .collect()
}

fn finish_report(
    m: &Module,
    tool: Tool,
    mode: IdentityMode,
    summary: &AccessSummary,
    removed: BTreeSet<InstId>,
    per_variant: BTreeMap<i64, usize>,
) -> RemovalReport {
    let mut seed_assignments = BTreeSet::new();
    let mut per_field: BTreeMap<FieldKey, usize> = BTreeMap::new();
    for (_, instr) in m.instructions() {
        if !removed.contains(&instr.id) || !matches!(instr.inst, Inst::Store { .. }) {
            continue;
        }
        seed_assignments.insert(instr.id);
        for target in summary.targets.get(&instr.id).into_iter().flatten() {
            if let Target::Field(key) = target {
                *per_field.entry(key.clone()).or_default() += 1;
            }
        }
    }
    let function_totals = m
        .functions
        .iter()
        .filter(|f| f.region == Region::Library)
        .map(|f| {
            let total = f.instructions().count();
            let gone = f.instructions().filter(|i| removed.contains(&i.id)).count();
            (f.name.clone(), (gone, total))
        })
        .collect();
    RemovalReport {
        tool,
        mode,
        seed_assignments,
        removed,
        library_total: m.instruction_count(Region::Library),
        function_totals,
        per_field,
        per_variant,
    }
}

fn tool_a_removed(p: &Prepared<'_>) -> BTreeSet<InstId> {
    let resultless = resultless_fields(&p.summary);
    let library = library_ids(p.m);

    let seeds: BTreeSet<InstId> = p
        .m
        .instructions()
        .filter(|(f, i)| {
            f.region == Region::Library && matches!(i.inst, Inst::Store { .. }) && {
                let targets = p.summary.targets.get(&i.id).map(Vec::as_slice).unwrap_or(&[]);
                !targets.is_empty()
                    && targets.iter().all(
                        |t| matches!(t, Target::Field(key) if resultless.contains(key)),
                    )
            }
        })
        .map(|(_, i)| i.id)
        .collect();

    let slice = backward_data_slice(p.m, &seeds);
    let mut removed: BTreeSet<InstId> = slice
        .iter()
        .filter(|id| library.contains(id))
        .filter(|id| seeds.contains(id) || !p.roots.contains(id))
        .copied()
        .collect();
    let users = def_users(p.m, &p.rds);
    close_under_outside_uses(&mut removed, &seeds, &users);
    removed
}

/// Deletes library stores whose every target field is written somewhere
/// but read nowhere, plus the computations that fed only those stores.
pub fn tool_a(m: &Module, mode: IdentityMode) -> (Module, RemovalReport) {
    let p = prepare(m, mode);
    let removed = tool_a_removed(&p);
    let report = finish_report(m, Tool::A, mode, &p.summary, removed, BTreeMap::new());
    (m.without_instructions(&report.removed), report)
}

fn tool_b_removed(p: &Prepared<'_>, tag: &FieldKey) -> (BTreeSet<InstId>, BTreeMap<i64, usize>) {
    let report = variant_analysis(p.m, tag, &p.summary);
    if report.unused.is_empty() {
        return (BTreeSet::new(), BTreeMap::new());
    }

    let mut candidates: BTreeSet<InstId> = BTreeSet::new();
    let mut regions: BTreeMap<i64, BTreeSet<InstId>> = BTreeMap::new();
    for dispatch in find_dispatches(p.m, &p.summary) {
        if dispatch.field != *tag || dispatch.region != Region::Library {
            continue;
        }
        let func = p.m.function(&dispatch.function).expect("dispatch function");
        let cfg = Cfg::build(func);
        let pd = postdominators(func, &cfg);
        let cd = control_dependence(&cfg, &pd);
        for case in &dispatch.cases {
            if !report.unused.contains(&case.value) {
                continue;
            }
            let region = case_region(func, &cd, case);
            candidates.extend(region.iter().copied());
            regions.entry(case.value).or_default().extend(region);
        }
    }

    let protected = backward_data_slice(p.m, &p.roots);
    let mut removed: BTreeSet<InstId> =
        candidates.difference(&protected).copied().collect();
    let users = def_users(p.m, &p.rds);
    close_under_outside_uses(&mut removed, &BTreeSet::new(), &users);

    let per_variant = regions
        .into_iter()
        .map(|(value, region)| (value, region.intersection(&removed).count()))
        .collect();
    (removed, per_variant)
}

/// Deletes the bodies of library dispatch arms whose variant constant the
/// application never consumes, keeping the dispatch skeleton, every input,
/// and every store something still reads.
pub fn tool_b(m: &Module, tag: &FieldKey, mode: IdentityMode) -> (Module, RemovalReport) {
    let p = prepare(m, mode);
    let (removed, per_variant) = tool_b_removed(&p, tag);
    let report = finish_report(m, Tool::B, mode, &p.summary, removed, per_variant);
    (m.without_instructions(&report.removed), report)
}

/// Runs both tools against the original module, unions their removal
/// sets, then sweeps away library definitions left without readers.
pub fn combine(m: &Module, mode: IdentityMode, tag: &FieldKey) -> (Module, RemovalReport) {
    let p = prepare(m, mode);
    let mut removed = tool_a_removed(&p);
    let (from_b, per_variant) = tool_b_removed(&p, tag);
    removed.extend(from_b.iter().copied());

    let users = def_users(p.m, &p.rds);
    let library = library_ids(m);
    loop {
        let mut grew = false;
        for (_, instr) in m.instructions() {
            let id = instr.id;
            if removed.contains(&id)
                || !library.contains(&id)
                || p.roots.contains(&id)
                || instr.inst.def().is_none()
            {
                continue;
            }
            if matches!(
                instr.inst,
                Inst::Store { .. } | Inst::Output { .. } | Inst::Call { .. } | Inst::Input { .. }
            ) || instr.inst.is_terminator()
            {
                continue;
            }
            let dangling = users
                .get(&id)
                .map_or(true, |us| us.iter().all(|u| removed.contains(u)));
            if dangling {
                removed.insert(id);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    let report = finish_report(m, Tool::Combined, mode, &p.summary, removed, per_variant);
    (m.without_instructions(&report.removed), report)
}
