//! Counts static field accesses in a module, split by region, under both
//! identity modes. Shows why offset identity undercounts removal
//! candidates: union members that share storage with an application-read
//! sibling disappear from the resultless set.
//!
//! Run with `cargo run --example census [-- path/to/module.mir]`; without
//! an argument it uses the bundled MIDI reader.

use libtrim::analysis::{field_census, resultless_fields};
use libtrim::layout::IdentityMode;

fn main() {
    let m = match std::env::args().nth(1) {
        Some(path) => {
            let source = std::fs::read_to_string(&path).expect("readable module");
            libtrim::load_module(&source).expect("valid module")
        }
        None => libtrim::corpus(),
    };

    for mode in [IdentityMode::Path, IdentityMode::Offset] {
        let summary = field_census(&m, mode);
        let resultless = resultless_fields(&summary);
        println!("== identity {mode:?} ==");
        for (key, access) in &summary.fields {
            let marker = if resultless.contains(key) { "  resultless" } else { "" };
            println!(
                "{key} reads lib={} app={} writes lib={} app={}{marker}",
                access.reads.library.len(),
                access.reads.app.len(),
                access.writes.library.len(),
                access.writes.app.len()
            );
        }
        println!(
            "fields={} app_read={} resultless={}",
            summary.fields.len(),
            summary.app_read_fields().count(),
            resultless.len()
        );
        println!();
    }
}
