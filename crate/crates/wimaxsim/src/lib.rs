//! Deterministic discrete-event simulator for unicast video streaming over
//! a fixed WiMAX cell, with a QoS/QoE evaluation pipeline.
//!
//! One base station serves a handful of fixed subscriber stations over an
//! OFDM air interface with TDD framing. A video server behind the base
//! station streams movies to the subscribers; each stream rides an rtPS
//! service flow whose scheduler polls for bandwidth, grants within token
//! budgets, fragments SDUs into PDUs, and loses PDUs to channel noise
//! according to the link budget. The pipeline measures per-flow delay,
//! jitter, throughput, and loss, then maps source PSNR to a MOS grade.
//!
//! Everything is reproducible: simulation time is integer microseconds,
//! events dispatch in `(time, schedule-order)` order, and every random
//! draw comes from a named [`sim::RandomStream`] pinned to the scenario
//! seed — the same scenario and seed produce bit-identical logs, reports,
//! and traces on every platform.
//!
//! # Quick start
//!
//! ```
//! use wimaxsim::runner::{run, RunOptions};
//! use wimaxsim::scenario::low_snr;
//!
//! let mut scenario = low_snr();   // subscribers at 6 km: a lossy link
//! scenario.duration_s = 80.0;     // trim the run; streaming starts at 70 s
//! let result = run(&scenario, std::path::Path::new("."), &RunOptions::default()).unwrap();
//! assert_eq!(result.seed, scenario.seed);
//! assert!(!result.links.is_empty());
//! ```
//!
//! Scenarios normally come from JSON files (see `scenarios/` in the crate
//! root) via [`scenario::Scenario::load`]; the builders under [`scenario`]
//! produce the shipped ones.
//!
//! # Modules
//!
//! - [`sim`] — event engine, integer-microsecond clock, named random streams
//! - [`phy`] — pathloss, link budget, modulation ladder, PDU loss model
//! - [`mac`] — TDD framing, service-flow scheduler, token buckets,
//!   fragmentation
//! - [`traffic`] — frame-size traces, gamma GOP synthesis, packetization
//! - [`metrics`] — per-flow QoS statistics, PSNR→MOS mapping, verdicts
//! - [`scenario`] — declarative cell description, validation, builders
//! - [`runner`] — wires a scenario into an executable simulation; sweeps
//! - [`report`] — CSV/TSV emission and console tables
//!
//! # Examples (run with `cargo run --example <name>`)
//!
//! - `baseline_run` — the five-subscriber reference cell, end to end
//! - `codec_comparison` — scalable vs single-layer preset on the same cell
//! - `distance_sweep` — SNR margin, loss, and MOS vs cell radius
//! - `link_budget` — the radio model alone, no simulation
//! - `trace_synthesis` — gamma GOP trace generation and TSV round-trip
//! - `overload_queueing` — queue caps, tail drops, and delay under overload
//! - `deterministic_replay` — bit-for-bit reproducibility across runs
//! - `scenario_files` — regenerates the shipped scenario JSON files
//!
//! The `wimaxsim` binary wraps the same entry points as subcommands:
//! `run`, `sweep`, `gen-trace`, `validate-trace`, and `report`.

pub mod mac;
pub mod metrics;
pub mod phy;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod sim;
pub mod traffic;
