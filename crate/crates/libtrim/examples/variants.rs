//! Finds tag dispatches and compares the variants the library assembles
//! with those the application actually handles. The difference is the set
//! of message types built for nobody.
//!
//! Run with `cargo run --example variants`.

use libtrim::analysis::{field_census, find_dispatches, variant_analysis};
use libtrim::cli::resolve_tag;
use libtrim::layout::IdentityMode;

fn main() {
    let m = libtrim::corpus();
    let summary = field_census(&m, IdentityMode::Path);

    for d in find_dispatches(&m, &summary) {
        println!(
            "dispatch in {} ({:?}, {:?} style) on {} with {} cases",
            d.function,
            d.region,
            d.style,
            d.field,
            d.cases.len()
        );
    }

    let tag = resolve_tag(&m, "msg.iType", IdentityMode::Path).expect("tag resolves");
    let v = variant_analysis(&m, &tag, &summary);
    let list = |s: &std::collections::BTreeSet<i64>| {
        s.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
    };
    println!("produced: {}", list(&v.produced));
    println!("consumed: {}", list(&v.consumed));
    println!("unused:   {}", list(&v.unused));
    println!(
        "produced={} consumed={} unused={}",
        v.produced.len(),
        v.consumed.len(),
        v.unused.len()
    );
}
