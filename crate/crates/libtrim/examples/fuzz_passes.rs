//! Hammers the passes with generated reader-style modules and checks the
//! algebra that makes them composable: each tool is idempotent, the
//! combination removes at least the union, the application region is never
//! touched, and every output still verifies and behaves like its input.
//!
//! Run with `cargo run --example fuzz_passes -- [count]`.

use libtrim::cli::resolve_tag;
use libtrim::interp::{equivalence, generate_traces, DEFAULT_FUEL};
use libtrim::ir::verify::verify_module;
use libtrim::ir::{Module, Region};
use libtrim::layout::IdentityMode;
use libtrim::modgen::reader_module;
use libtrim::passes::{combine, tool_a, tool_b};
use libtrim::text::print_module;

fn app_text(m: &Module) -> String {
    let mut only = m.clone();
    only.functions.retain(|f| f.region == Region::Application);
    print_module(&only)
}

fn main() {
    let count: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(25);
    let mode = IdentityMode::Path;
    let mut removed_total = 0usize;
    let mut library_total = 0usize;

    for seed in 0..count {
        let m = reader_module(seed);
        let tag = resolve_tag(&m, "msg.tag", mode).expect("generated modules carry msg.tag");

        let (ma, ra) = tool_a(&m, mode);
        let (mb, rb) = tool_b(&m, &tag, mode);
        let (mc, rc) = combine(&m, mode, &tag);

        let (maa, raa) = tool_a(&ma, mode);
        assert!(raa.removed.is_empty(), "seed {seed}: tool a not idempotent");
        let (_, rbb) = tool_b(&mb, &tag, mode);
        assert!(rbb.removed.is_empty(), "seed {seed}: tool b not idempotent");
        assert!(
            rc.removed.is_superset(&ra.removed) && rc.removed.is_superset(&rb.removed),
            "seed {seed}: combined misses a tool's removals"
        );
        for out in [&ma, &mb, &mc, &maa] {
            assert!(verify_module(out).is_empty(), "seed {seed}: output fails verification");
            assert_eq!(app_text(out), app_text(&m), "seed {seed}: application region changed");
        }
        let traces = generate_traces(&m, 3, seed);
        let verdict = equivalence(&m, &mc, &traces, DEFAULT_FUEL);
        assert!(verdict.is_equivalent(), "seed {seed}: behavior changed: {verdict:?}");

        removed_total += rc.removed.len();
        library_total += rc.library_total;
        println!(
            "seed {seed:>3}: library={:<3} a={:<3} b={:<3} combined={:<3} ratio={:.2}",
            rc.library_total,
            ra.removed.len(),
            rb.removed.len(),
            rc.removed.len(),
            rc.removal_ratio()
        );
    }

    println!(
        "{count} modules, {removed_total}/{library_total} library instructions removed overall"
    );
}
