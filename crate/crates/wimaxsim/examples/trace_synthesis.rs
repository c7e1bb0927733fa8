//! Synthesizes frame-size traces for both codec presets with the gamma
//! GOP model, prints their statistics, and round-trips one through the
//! TSV format.
//!
//! ```text
//! cargo run --example trace_synthesis
//! ```
//!
//! The same (seed, stream id) always reproduces the same trace; the CLI
//! `gen-trace` subcommand is a thin wrapper over this path.

use wimaxsim::report::render_trace_stats;
use wimaxsim::sim::RandomStream;
use wimaxsim::traffic::{gen_gamma_trace, CodecPreset, SynthParams, VideoTrace};

fn main() {
    for preset in [CodecPreset::svc(), CodecPreset::avc()] {
        let params = SynthParams::from_preset(&preset, 9_000);
        let mut stream = RandomStream::new(42, "gen-trace");
        let trace = gen_gamma_trace(&params, &mut stream).expect("feasible targets");
        print!(
            "{}",
            render_trace_stats(trace.codec.label(), &trace.stats())
        );
        println!();
    }

    // The TSV form is canonical: parse(to_tsv) reproduces the trace exactly.
    let params = SynthParams::from_preset(&CodecPreset::svc(), 160);
    let mut stream = RandomStream::new(42, "gen-trace");
    let trace = gen_gamma_trace(&params, &mut stream).expect("feasible targets");
    let text = trace.to_tsv_string();
    let parsed = VideoTrace::parse(&text).expect("canonical form parses");
    assert_eq!(parsed, trace);
    println!(
        "TSV round-trip of a {}-frame trace is exact ({} bytes serialized)",
        trace.len(),
        text.len()
    );
}
