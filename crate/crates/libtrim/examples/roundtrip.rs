//! Shows that the text form is a faithful serialization: printing a parsed
//! module and parsing it again reaches a byte-stable fixpoint, and trace
//! files survive a write/read cycle.
//!
//! Run with `cargo run --example roundtrip`.

use libtrim::interp::{generate_traces, read_trace, write_trace};
use libtrim::text::{parse_module, print_module};

fn main() {
    let m = libtrim::corpus();

    let once = print_module(&m);
    let again = print_module(&parse_module(&once).expect("printed text reparses"));
    println!(
        "module: {} bytes printed, fixpoint after one round: {}",
        once.len(),
        once == again
    );

    let traces = generate_traces(&m, 3, 7);
    let dir = std::env::temp_dir().join("libtrim-roundtrip");
    std::fs::create_dir_all(&dir).expect("temp dir");
    for (i, trace) in traces.iter().enumerate() {
        let path = dir.join(format!("run{i}.trace"));
        write_trace(&path, trace).expect("write trace");
        let back = read_trace(&path).expect("read trace");
        println!(
            "trace {i}: {} values, survives file round trip: {}",
            trace.len(),
            *trace == back
        );
    }
}
