//! Regenerates the shipped scenario files from their in-code builders.
//!
//! ```text
//! cargo run --example scenario_files -- [DIR]
//! ```
//!
//! DIR defaults to `scenarios/` under the crate root. The shipped files are
//! byte-for-byte the canonical dumps of `scenario::svc_baseline()` and
//! friends; a unit test keeps them in sync.

use std::path::PathBuf;

use wimaxsim::scenario::{low_snr, overload, avc_baseline, svc_baseline, Scenario};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios")));
    std::fs::create_dir_all(&dir).expect("create scenario dir");
    let builders: [(&str, fn() -> Scenario); 4] = [
        ("svc_baseline.json", svc_baseline),
        ("avc_baseline.json", avc_baseline),
        ("low_snr.json", low_snr),
        ("overload.json", overload),
    ];
    for (file, build) in builders {
        let scenario = build();
        scenario.validate().expect("shipped scenarios validate");
        let path = dir.join(file);
        std::fs::write(&path, scenario.to_json_pretty()).expect("write scenario");
        println!("wrote {}", path.display());
    }
}
