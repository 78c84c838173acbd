//! Dynamic field-access profiling and the write categorization.
//!
//! The profiler replays generated traces under an observer that resolves
//! every executed load and store to its field key, counting by the region
//! of the instruction that ran. Categorization then splits the dynamic
//! writes by where the written field is statically read: by the
//! application (unremovable), nowhere (category 1), or only inside the
//! library (category 2).

use std::collections::BTreeMap;

use super::trace::generate_traces;
use super::{run_with, AccessEvent, Observer, Termination, Trap, DEFAULT_FUEL};
use crate::analysis::{field_census, AccessSummary};
use crate::ir::{Module, Region};
use crate::layout::{compute_layout, field_key, FieldKey, IdentityMode, LayoutTable};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PerRegion {
    pub library: u64,
    pub app: u64,
}

impl PerRegion {
    fn bump(&mut self, region: Region) {
        match region {
            Region::Library => self.library += 1,
            Region::Application => self.app += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.library + self.app
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KeyCounts {
    pub reads: PerRegion,
    pub writes: PerRegion,
}

/// Aggregated dynamic access counts over all runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynProfile {
    pub mode: IdentityMode,
    pub runs: u32,
    pub seed: u64,
    /// Every aggregate-rooted census key, seeded at zero, plus the counts
    /// actually observed.
    pub keys: BTreeMap<FieldKey, KeyCounts>,
    /// Runs that ended in a trap, with partial counts retained.
    pub traps: Vec<(u32, Trap)>,
}

struct ProfileObserver<'a> {
    m: &'a Module,
    layout: &'a LayoutTable,
    mode: IdentityMode,
    keys: &'a mut BTreeMap<FieldKey, KeyCounts>,
}

impl ProfileObserver<'_> {
    fn key_of(&self, event: &AccessEvent<'_>) -> Option<FieldKey> {
        if event.steps.is_empty() {
            return None;
        }
        field_key(&self.m.types, self.layout, self.mode, event.root_ty, event.steps)
    }
}

impl Observer for ProfileObserver<'_> {
    fn read(&mut self, event: &AccessEvent<'_>) {
        if let Some(key) = self.key_of(event) {
            self.keys.entry(key).or_default().reads.bump(event.region);
        }
    }

    fn write(&mut self, event: &AccessEvent<'_>) {
        if let Some(key) = self.key_of(event) {
            self.keys.entry(key).or_default().writes.bump(event.region);
        }
    }
}

pub fn profile(m: &Module, mode: IdentityMode, runs: u32, seed: u64) -> DynProfile {
    let layout = compute_layout(&m.types);
    let census = field_census(m, mode);
    let mut keys: BTreeMap<FieldKey, KeyCounts> =
        census.fields.keys().map(|k| (k.clone(), KeyCounts::default())).collect();
    let mut traps = Vec::new();

    let traces = generate_traces(m, runs, seed);
    for (run, trace) in traces.iter().enumerate() {
        let mut obs = ProfileObserver { m, layout: &layout, mode, keys: &mut keys };
        let outcome = run_with(m, trace, DEFAULT_FUEL, &mut obs);
        if let Termination::Trap(trap) = outcome.termination {
            traps.push((run as u32, trap));
        }
    }
    DynProfile { mode, runs, seed, keys, traps }
}

/// Dynamic write counts split by where the field is statically read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteCategorization {
    /// Writes to fields the application reads.
    pub unremovable: u64,
    /// Writes to fields read nowhere.
    pub category1: u64,
    /// Writes to fields read only inside the library.
    pub category2: u64,
}

impl WriteCategorization {
    pub fn total(&self) -> u64 {
        self.unremovable + self.category1 + self.category2
    }
}

pub fn categorize_writes(p: &DynProfile, s: &AccessSummary) -> WriteCategorization {
    let mut out = WriteCategorization::default();
    for (key, counts) in &p.keys {
        let writes = counts.writes.total();
        let (app_reads, lib_reads) = match s.fields.get(key) {
            Some(access) => (!access.reads.app.is_empty(), !access.reads.library.is_empty()),
            None => (false, false),
        };
        if app_reads {
            out.unremovable += writes;
        } else if lib_reads {
            out.category2 += writes;
        } else {
            out.category1 += writes;
        }
    }
    out
}
