//! Executes the bundled module on a generated input trace, watching field
//! traffic through an observer, and shows how the interpreter reports a
//! trap when the stream is cut short.
//!
//! Run with `cargo run --example interpret`.

use libtrim::interp::{generate_traces, run, run_with, AccessEvent, Observer, DEFAULT_FUEL};
use libtrim::ir::Region;

#[derive(Default)]
struct Tally {
    lib_writes: u64,
    app_reads: u64,
}

impl Observer for Tally {
    fn read(&mut self, event: &AccessEvent<'_>) {
        if event.region == Region::Application {
            self.app_reads += 1;
        }
    }
    fn write(&mut self, event: &AccessEvent<'_>) {
        if event.region == Region::Library {
            self.lib_writes += 1;
        }
    }
}

fn main() {
    let m = libtrim::corpus();
    let trace = generate_traces(&m, 1, 42).remove(0);
    println!("trace has {} input values", trace.len());

    let mut tally = Tally::default();
    let out = run_with(&m, &trace, DEFAULT_FUEL, &mut tally);
    println!(
        "{} after {} steps, {} outputs, first few: {:?}",
        out.termination,
        out.steps,
        out.outputs.len(),
        &out.outputs[..out.outputs.len().min(6)]
    );
    println!(
        "library wrote fields {} times, application read them {} times",
        tally.lib_writes, tally.app_reads
    );

    let cut = &trace[..trace.len() / 2];
    let short = run(&m, cut, DEFAULT_FUEL);
    println!("half a trace ends with: {}", short.termination);
}
