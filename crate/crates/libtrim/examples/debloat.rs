//! Runs the two removal strategies separately and combined, printing what
//! each one deletes and the share of the library that disappears.
//!
//! Run with `cargo run --example debloat`.

use libtrim::cli::resolve_tag;
use libtrim::layout::IdentityMode;
use libtrim::passes::{combine, tool_a, tool_b};
use libtrim::text::print_module;

fn main() {
    let m = libtrim::corpus();
    let mode = IdentityMode::Path;
    let tag = resolve_tag(&m, "msg.iType", mode).expect("tag resolves");

    let (_, a) = tool_a(&m, mode);
    let (_, b) = tool_b(&m, &tag, mode);
    let (trimmed, both) = combine(&m, mode, &tag);

    for r in [&a, &b, &both] {
        println!(
            "{:<10} seeds={:<3} removed={:<3} library_total={} ratio={:.4}",
            r.tool,
            r.seed_assignments.len(),
            r.removed.len(),
            r.library_total,
            r.removal_ratio()
        );
    }

    println!();
    for (field, n) in &both.per_field {
        println!("  field {field}: {n} instructions");
    }
    for (value, n) in &both.per_variant {
        println!("  variant {value}: {n} instructions");
    }

    println!();
    println!("--- trimmed module ---");
    print!("{}", print_module(&trimmed));
}
