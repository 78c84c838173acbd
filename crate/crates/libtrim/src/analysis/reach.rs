//! Reaching definitions over mutable registers: the classic forward
//! may-analysis, fixed-pointed with a worklist, then replayed per block to
//! attach use-def and def-use chains to individual instructions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::cfg::Cfg;
use crate::ir::{Function, InstId};

/// A definition site: a parameter (live on entry) or an instruction that
/// writes a register.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Def {
    Param(String),
    Inst(InstId),
}

#[derive(Debug, Default, Clone)]
pub struct ReachingDefs {
    /// For each instruction, for each register it uses, the definitions
    /// that may supply the value.
    pub use_defs: BTreeMap<InstId, BTreeMap<String, BTreeSet<Def>>>,
    /// The inverse: which instructions may read each definition's value.
    pub def_uses: BTreeMap<Def, BTreeSet<InstId>>,
}

impl ReachingDefs {
    /// All definitions feeding any operand of an instruction.
    pub fn defs_used_by(&self, id: InstId) -> impl Iterator<Item = &Def> {
        self.use_defs.get(&id).into_iter().flat_map(|m| m.values().flatten())
    }

    pub fn uses_of(&self, def: &Def) -> impl Iterator<Item = InstId> + '_ {
        self.def_uses.get(def).into_iter().flatten().copied()
    }
}

pub fn reaching_defs(func: &Function, cfg: &Cfg) -> ReachingDefs {
    // Number every definition site: params first, then defining
    // instructions in block order.
    let mut sites: Vec<(Def, String)> = func
        .params
        .iter()
        .map(|p| (Def::Param(p.name.clone()), p.name.clone()))
        .collect();
    let mut site_at: BTreeMap<InstId, usize> = BTreeMap::new();
    for block in &func.blocks {
        for instr in &block.instrs {
            if let Some(reg) = instr.inst.def() {
                site_at.insert(instr.id, sites.len());
                sites.push((Def::Inst(instr.id), reg.to_string()));
            }
        }
    }
    let mut sites_of_reg: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (_, reg)) in sites.iter().enumerate() {
        sites_of_reg.entry(reg).or_default().push(i);
    }

    let nblocks = cfg.len();
    let mut gen: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nblocks];
    let mut kill: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nblocks];
    for (b, block) in func.blocks.iter().enumerate() {
        // Later definitions of a register shadow earlier ones in the same
        // block, so walk forward keeping only the last.
        let mut last: BTreeMap<&str, usize> = BTreeMap::new();
        for instr in &block.instrs {
            if let Some(reg) = instr.inst.def() {
                last.insert(reg, site_at[&instr.id]);
            }
        }
        for (reg, site) in last {
            gen[b].insert(site);
            kill[b].extend(sites_of_reg[reg].iter().filter(|&&s| s != site));
        }
    }

    let entry_in: BTreeSet<usize> = (0..func.params.len()).collect();
    let mut ins: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nblocks];
    let mut outs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nblocks];
    if nblocks > 0 {
        ins[0] = entry_in.clone();
    }
    let mut work: VecDeque<usize> = (0..nblocks).collect();
    while let Some(b) = work.pop_front() {
        let mut input: BTreeSet<usize> = if b == 0 { entry_in.clone() } else { BTreeSet::new() };
        for &p in &cfg.preds[b] {
            input.extend(outs[p].iter().copied());
        }
        let mut out: BTreeSet<usize> =
            input.difference(&kill[b]).copied().collect();
        out.extend(gen[b].iter().copied());
        ins[b] = input;
        if out != outs[b] {
            outs[b] = out;
            for &(s, _) in &cfg.succs[b] {
                if !work.contains(&s) {
                    work.push_back(s);
                }
            }
        }
    }

    // Replay each block to attribute chains per instruction.
    let mut result = ReachingDefs::default();
    for (b, block) in func.blocks.iter().enumerate() {
        let mut live: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        for &s in &ins[b] {
            live.entry(sites[s].1.as_str()).or_default().insert(s);
        }
        for instr in &block.instrs {
            for reg in instr.inst.uses() {
                let defs: BTreeSet<Def> = live
                    .get(reg)
                    .into_iter()
                    .flatten()
                    .map(|&s| sites[s].0.clone())
                    .collect();
                for def in &defs {
                    result.def_uses.entry(def.clone()).or_default().insert(instr.id);
                }
                result
                    .use_defs
                    .entry(instr.id)
                    .or_default()
                    .insert(reg.to_string(), defs);
            }
            if instr.inst.def().is_some() {
                let site = site_at[&instr.id];
                live.insert(sites[site].1.as_str(), BTreeSet::from([site]));
            }
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Inst;
    use crate::text::parse_module;

    fn analyze(src: &str) -> (crate::ir::Module, ReachingDefs) {
        let m = parse_module(src).unwrap();
        let f = m.function("main").unwrap();
        let cfg = Cfg::build(f);
        let rd = reaching_defs(f, &cfg);
        (m, rd)
    }

    #[test]
    fn single_const_reaches_its_output() {
        let (m, rd) = analyze("app fn main() {\nentry:\n  const r, 1\n  output r\n  ret\n}\n");
        let f = m.function("main").unwrap();
        let const_id = f.blocks[0].instrs[0].id;
        let out_id = f.blocks[0].instrs[1].id;
        assert_eq!(
            rd.use_defs[&out_id]["r"],
            BTreeSet::from([Def::Inst(const_id)])
        );
        assert_eq!(rd.def_uses[&Def::Inst(const_id)], BTreeSet::from([out_id]));
    }

    #[test]
    fn both_branch_definitions_reach_the_join() {
        let src = "app fn main() {\nentry:\n  const c, 1\n  br c, l, r\nl:\n  const x, 10\n  jmp join\nr:\n  const x, 20\n  jmp join\njoin:\n  output x\n  ret\n}\n";
        let (m, rd) = analyze(src);
        let f = m.function("main").unwrap();
        let out_id = f.blocks[3].instrs[0].id;
        assert_eq!(rd.use_defs[&out_id]["x"].len(), 2);
    }

    #[test]
    fn redefinition_shadows_within_a_block() {
        let src = "app fn main() {\nentry:\n  const x, 1\n  const x, 2\n  output x\n  ret\n}\n";
        let (m, rd) = analyze(src);
        let f = m.function("main").unwrap();
        let second = f.blocks[0].instrs[1].id;
        let out_id = f.blocks[0].instrs[2].id;
        assert_eq!(
            rd.use_defs[&out_id]["x"],
            BTreeSet::from([Def::Inst(second)])
        );
    }

    #[test]
    fn params_reach_uses_until_redefined() {
        let src = "library fn f(a: int4) {\nentry:\n  output a\n  const a, 5\n  output a\n  ret\n}\napp fn main() {\nentry:\n  const v, 1\n  call f(v)\n  ret\n}\n";
        let m = parse_module(src).unwrap();
        let f = m.function("f").unwrap();
        let cfg = Cfg::build(f);
        let rd = reaching_defs(f, &cfg);
        let first_out = f.blocks[0].instrs[0].id;
        let redef = f.blocks[0].instrs[1].id;
        let second_out = f.blocks[0].instrs[2].id;
        assert_eq!(
            rd.use_defs[&first_out]["a"],
            BTreeSet::from([Def::Param("a".to_string())])
        );
        assert_eq!(
            rd.use_defs[&second_out]["a"],
            BTreeSet::from([Def::Inst(redef)])
        );
    }

    #[test]
    fn loop_carried_definitions_reach_the_header() {
        let src = "app fn main() {\nentry:\n  const i, 0\n  jmp head\nhead:\n  const one, 1\n  add i, i, one\n  lt c, i, one\n  br c, head, done\ndone:\n  output i\n  ret\n}\n";
        let (m, rd) = analyze(src);
        let f = m.function("main").unwrap();
        let add = f
            .instructions()
            .find(|i| matches!(i.inst, Inst::Bin { op: crate::ir::BinOp::Add, .. }))
            .unwrap();
        // The add reads both the entry const and its own previous value.
        assert_eq!(rd.use_defs[&add.id]["i"].len(), 2);
    }
}
