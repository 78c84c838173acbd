//! Backward data slicing over the use-def graph.

use std::collections::BTreeSet;

use super::cfg::Cfg;
use super::reach::{reaching_defs, Def};
use crate::ir::{InstId, Module};

/// The full backward closure of the seeds under flows-into: every
/// instruction whose value can reach a seed through registers, seeds
/// included. Calls are not followed across function boundaries; a chain
/// that reaches a parameter stops there.
pub fn backward_data_slice(m: &Module, seeds: &BTreeSet<InstId>) -> BTreeSet<InstId> {
    let mut slice: BTreeSet<InstId> = seeds.clone();
    for func in &m.functions {
        let ids: BTreeSet<InstId> = func.instructions().map(|i| i.id).collect();
        if !ids.iter().any(|id| seeds.contains(id)) {
            continue;
        }
        let cfg = Cfg::build(func);
        let rd = reaching_defs(func, &cfg);
        let mut work: Vec<InstId> =
            ids.iter().copied().filter(|id| seeds.contains(id)).collect();
        while let Some(id) = work.pop() {
            for def in rd.defs_used_by(id) {
                if let Def::Inst(def_id) = def {
                    if slice.insert(*def_id) {
                        work.push(*def_id);
                    }
                }
            }
        }
    }
    slice
}
