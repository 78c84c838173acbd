//! Replays generated traces through the module while counting every field
//! access, then sorts the observed writes into three buckets: ones feeding
//! a field the application reads, ones to fields read nowhere, and ones to
//! fields only the library itself reads back.
//!
//! Run with `cargo run --example profile`.

use libtrim::analysis::field_census;
use libtrim::interp::{categorize_writes, profile};
use libtrim::layout::IdentityMode;

fn main() {
    let m = libtrim::corpus();
    let mode = IdentityMode::Path;
    let p = profile(&m, mode, 10, 42);
    let summary = field_census(&m, mode);

    println!("runs={} seed={}", p.runs, p.seed);
    let mut silent = 0usize;
    for (key, counts) in &p.keys {
        let total = counts.reads.library + counts.reads.app + counts.writes.library + counts.writes.app;
        if total == 0 {
            silent += 1;
            continue;
        }
        println!(
            "  {key}: reads lib={} app={}, writes lib={} app={}",
            counts.reads.library, counts.reads.app, counts.writes.library, counts.writes.app
        );
    }
    println!("  ({silent} fields never touched at run time)");
    for (run, trap) in &p.traps {
        println!("trap in run {run}: {trap}");
    }

    let cats = categorize_writes(&p, &summary);
    println!(
        "writes unremovable={} category1={} category2={} total={}",
        cats.unremovable,
        cats.category1,
        cats.category2,
        cats.total()
    );
}
