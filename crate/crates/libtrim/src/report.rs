//! Machine-readable report documents for the command-line front end.
//!
//! Every command can emit one [`ReportDocument`]. The JSON rendering is
//! stable: keys are sorted, the schema is versioned, and equal inputs
//! produce byte-identical text, so reports are safe to diff and to pin in
//! regression suites.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{resultless_fields, AccessSummary, VariantReport};
use crate::interp::{DynProfile, Verdict, WriteCategorization};
use crate::ir::Module;
use crate::layout::IdentityMode;
use crate::passes::RemovalReport;
use crate::text::print_module;

pub const SCHEMA_VERSION: u32 = 1;

/// Hex SHA-256 of the module's canonical printed form, so the digest is
/// insensitive to comment and whitespace differences in the source file.
pub fn module_digest(m: &Module) -> String {
    let mut h = Sha256::new();
    h.update(print_module(m).as_bytes());
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn mode_name(mode: IdentityMode) -> &'static str {
    match mode {
        IdentityMode::Path => "path",
        IdentityMode::Offset => "offset",
    }
}

#[derive(Debug, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub command: String,
    pub module_digest: String,
    pub identity: String,
    pub payload: Payload,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Census(CensusReport),
    Variants(VariantsDoc),
    Removal(RemovalDoc),
    Profile(ProfileDoc),
    Equivalence(EquivalenceDoc),
}

#[derive(Debug, Serialize)]
pub struct SiteCounts {
    pub library: usize,
    pub app: usize,
}

#[derive(Debug, Serialize)]
pub struct AccessCounts {
    pub reads: SiteCounts,
    pub writes: SiteCounts,
}

#[derive(Debug, Serialize)]
pub struct CensusReport {
    pub fields: BTreeMap<String, AccessCounts>,
    pub scalars: BTreeMap<String, AccessCounts>,
    pub total_fields: usize,
    pub app_read: usize,
    pub resultless: usize,
}

#[derive(Debug, Serialize)]
pub struct VariantsDoc {
    pub tag: String,
    pub produced: Vec<i64>,
    pub consumed: Vec<i64>,
    pub unused: Vec<i64>,
}

#[derive(Debug, Serialize)]
pub struct FunctionRemoval {
    pub removed: usize,
    pub total: usize,
}

#[derive(Debug, Serialize)]
pub struct RemovalDoc {
    pub tool: String,
    pub seed_stores: usize,
    pub removed: usize,
    pub library_total: usize,
    pub ratio: f64,
    pub functions: BTreeMap<String, FunctionRemoval>,
    pub per_field: BTreeMap<String, usize>,
    pub per_variant: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize)]
pub struct RegionCounts {
    pub library: u64,
    pub app: u64,
}

#[derive(Debug, Serialize)]
pub struct KeyProfile {
    pub reads: RegionCounts,
    pub writes: RegionCounts,
}

#[derive(Debug, Serialize)]
pub struct ProfileDoc {
    pub runs: u32,
    pub seed: u64,
    pub keys: BTreeMap<String, KeyProfile>,
    pub traps: Vec<String>,
    pub write_categories: CategoryDoc,
}

#[derive(Debug, Serialize)]
pub struct CategoryDoc {
    pub unremovable: u64,
    pub category1: u64,
    pub category2: u64,
    pub total: u64,
}

#[derive(Debug, Serialize)]
pub struct EquivalenceDoc {
    pub runs: u32,
    pub seed: u64,
    pub equivalent: bool,
    pub divergence: Option<String>,
}

impl ReportDocument {
    pub fn new(command: &str, m: &Module, mode: IdentityMode, payload: Payload) -> ReportDocument {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            module_digest: module_digest(m),
            identity: mode_name(mode).to_string(),
            payload,
        }
    }

    /// Key-sorted, pretty-printed JSON with a trailing newline. Rendering
    /// goes through a generic value tree so map ordering is independent of
    /// struct field declaration order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut out = serde_json::to_string_pretty(&value).expect("value renders");
        out.push('\n');
        out
    }
}

pub fn census_payload(summary: &AccessSummary) -> Payload {
    let fields = summary
        .fields
        .iter()
        .map(|(k, a)| {
            (
                k.to_string(),
                AccessCounts {
                    reads: SiteCounts {
                        library: a.reads.library.len(),
                        app: a.reads.app.len(),
                    },
                    writes: SiteCounts {
                        library: a.writes.library.len(),
                        app: a.writes.app.len(),
                    },
                },
            )
        })
        .collect();
    let scalars = summary
        .scalars
        .iter()
        .map(|(o, a)| {
            (
                o.to_string(),
                AccessCounts {
                    reads: SiteCounts {
                        library: a.reads.library.len(),
                        app: a.reads.app.len(),
                    },
                    writes: SiteCounts {
                        library: a.writes.library.len(),
                        app: a.writes.app.len(),
                    },
                },
            )
        })
        .collect();
    Payload::Census(CensusReport {
        fields,
        scalars,
        total_fields: summary.fields.len(),
        app_read: summary.app_read_fields().count(),
        resultless: resultless_fields(summary).len(),
    })
}

pub fn variants_payload(v: &VariantReport) -> Payload {
    Payload::Variants(VariantsDoc {
        tag: v.tag.to_string(),
        produced: v.produced.iter().copied().collect(),
        consumed: v.consumed.iter().copied().collect(),
        unused: v.unused.iter().copied().collect(),
    })
}

pub fn removal_payload(r: &RemovalReport) -> Payload {
    Payload::Removal(RemovalDoc {
        tool: r.tool.to_string(),
        seed_stores: r.seed_assignments.len(),
        removed: r.removed.len(),
        library_total: r.library_total,
        ratio: r.removal_ratio(),
        functions: r
            .function_totals
            .iter()
            .map(|(f, &(removed, total))| (f.clone(), FunctionRemoval { removed, total }))
            .collect(),
        per_field: r
            .per_field
            .iter()
            .map(|(k, &n)| (k.to_string(), n))
            .collect(),
        per_variant: r
            .per_variant
            .iter()
            .map(|(v, &n)| (v.to_string(), n))
            .collect(),
    })
}

pub fn profile_payload(p: &DynProfile, cats: &WriteCategorization) -> Payload {
    Payload::Profile(ProfileDoc {
        runs: p.runs,
        seed: p.seed,
        keys: p
            .keys
            .iter()
            .map(|(k, c)| {
                (
                    k.to_string(),
                    KeyProfile {
                        reads: RegionCounts {
                            library: c.reads.library,
                            app: c.reads.app,
                        },
                        writes: RegionCounts {
                            library: c.writes.library,
                            app: c.writes.app,
                        },
                    },
                )
            })
            .collect(),
        traps: p
            .traps
            .iter()
            .map(|(run, t)| format!("run {run}: {t}"))
            .collect(),
        write_categories: CategoryDoc {
            unremovable: cats.unremovable,
            category1: cats.category1,
            category2: cats.category2,
            total: cats.total(),
        },
    })
}

pub fn equivalence_payload(runs: u32, seed: u64, verdict: &Verdict) -> Payload {
    let divergence = match verdict {
        Verdict::Equivalent => None,
        Verdict::Diverged { trace, divergence } => {
            Some(format!("trace {trace}: {divergence}"))
        }
    };
    Payload::Equivalence(EquivalenceDoc {
        runs,
        seed,
        equivalent: matches!(verdict, Verdict::Equivalent),
        divergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::field_census;

    #[test]
    fn json_is_stable_and_key_sorted() {
        let m = crate::corpus();
        let s = field_census(&m, IdentityMode::Path);
        let doc = ReportDocument::new("census", &m, IdentityMode::Path, census_payload(&s));
        let a = doc.to_json();
        let doc2 = ReportDocument::new("census", &m, IdentityMode::Path, census_payload(&s));
        let b = doc2.to_json();
        assert_eq!(a, b);
        let cmd = a.find("\"command\"").unwrap();
        let ident = a.find("\"identity\"").unwrap();
        let digest = a.find("\"module_digest\"").unwrap();
        assert!(cmd < ident && ident < digest, "top-level keys sorted");
        assert!(a.ends_with('\n'));
    }

    #[test]
    fn digest_tracks_canonical_text_not_source_bytes() {
        let m = crate::corpus();
        let trailing_comment = format!("{}\n; padding comment\n", crate::CORPUS_SOURCE);
        let m2 = crate::load_module(&trailing_comment).unwrap();
        assert_eq!(module_digest(&m), module_digest(&m2));

        let other = crate::load_module(
            "app fn main() {\nentry:\n  const r, 1\n  output r\n  ret\n}\n",
        )
        .unwrap();
        assert_ne!(module_digest(&m), module_digest(&other));
    }

    #[test]
    fn digests_are_hex_sha256_length() {
        let m = crate::corpus();
        let d = module_digest(&m);
        assert_eq!(d.len(), 64);
        assert!(d.chars().all(|c| c.is_ascii_hexdigit()));
    }
}
