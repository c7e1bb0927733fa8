//! End-to-end run of the baseline cell: five subscribers at 1 km, each
//! pulling the scalable-codec stream over its rtPS downlink flow.
//!
//! ```text
//! cargo run --example baseline_run
//! ```
//!
//! Prints the same per-flow QoS/QoE summary and link budget the CLI `run`
//! subcommand shows. The shipped scenario simulates the full movie
//! (75 minutes); this example trims it to three simulated minutes so it
//! finishes in a few wall seconds.

use std::path::Path;

use wimaxsim::report::render_run;
use wimaxsim::runner::{run, RunOptions};
use wimaxsim::scenario::svc_baseline;

fn main() {
    let mut scenario = svc_baseline();
    scenario.duration_s = 190.0;
    scenario.validate().expect("builder scenario validates");

    let result = run(&scenario, Path::new("."), &RunOptions::default()).expect("run");
    print!("{}", render_run(&result));

    let video_pass = result
        .flows
        .iter()
        .filter(|f| f.codec.is_some())
        .all(|f| f.verdict.label() == "pass");
    println!(
        "\nall video flows within QoS bounds: {}",
        if video_pass { "yes" } else { "no" }
    );
}
