//! Checks a trimmed module against the original on generated input traces
//! and writes a machine-readable equivalence report. Also demonstrates what
//! a real divergence looks like by deleting a store the application reads.
//!
//! Run with `cargo run --example verify`.

use std::collections::BTreeSet;

use libtrim::cli::resolve_tag;
use libtrim::interp::{equivalence, generate_traces, DEFAULT_FUEL};
use libtrim::ir::Inst;
use libtrim::layout::IdentityMode;
use libtrim::passes::combine;
use libtrim::report::{equivalence_payload, ReportDocument};

fn main() {
    let m = libtrim::corpus();
    let mode = IdentityMode::Path;
    let tag = resolve_tag(&m, "msg.iType", mode).expect("tag resolves");
    let (trimmed, report) = combine(&m, mode, &tag);

    let runs = 10u32;
    let seed = 42u64;
    let traces = generate_traces(&m, runs, seed);
    println!(
        "comparing original against trimmed ({} instructions removed) on {} traces",
        report.removed.len(),
        traces.len()
    );

    let verdict = equivalence(&m, &trimmed, &traces, DEFAULT_FUEL);
    let doc = ReportDocument::new("verify", &m, mode, equivalence_payload(runs, seed, &verdict));
    print!("{}", doc.to_json());

    // Now break the module on purpose: drop the first store the passes kept,
    // which by construction feeds something a reader depends on.
    let kept_store = m
        .instructions()
        .find(|(f, i)| {
            f.region == libtrim::ir::Region::Library
                && matches!(i.inst, Inst::Store { .. })
                && !report.removed.contains(&i.id)
        })
        .map(|(_, i)| i.id)
        .expect("some store survives");
    let broken = m.without_instructions(&BTreeSet::from([kept_store]));
    match equivalence(&m, &broken, &traces, DEFAULT_FUEL) {
        libtrim::interp::Verdict::Equivalent => {
            println!("unexpectedly equivalent after deleting {kept_store}")
        }
        libtrim::interp::Verdict::Diverged { trace, divergence } => {
            println!("deleting kept store {kept_store} diverges on trace {trace}: {divergence}")
        }
    }
}
