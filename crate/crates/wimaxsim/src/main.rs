//! Command-line front end. Exit codes: 0 success, 1 usage or configuration
//! error, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wimaxsim::report::{
    prepare_out_dir, render_run, render_sweep_table, render_trace_stats, rerender_from_dir,
    write_run_files, OutputFormat, ReportError,
};
use wimaxsim::runner::{run, sweep, RunOptions};
use wimaxsim::scenario::Scenario;
use wimaxsim::sim::RandomStream;
use wimaxsim::traffic::{gen_gamma_trace, Codec, CodecPreset, SynthParams, VideoTrace};

#[derive(Parser)]
#[command(
    name = "wimaxsim",
    version,
    about = "Deterministic WiMAX cell simulator for unicast video streaming"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics and series CSVs.
    Run {
        /// Scenario file (JSON). Trace paths inside it resolve relative to
        /// this file.
        scenario: PathBuf,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the CSV report.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overwrite an existing report in the output directory.
        #[arg(long)]
        force: bool,
        /// Also write events.tsv (every dispatched event; sized for short
        /// runs).
        #[arg(long)]
        dump_events: bool,
        /// Also write grants.tsv (every scheduler grant).
        #[arg(long)]
        dump_grants: bool,
        /// Console verbosity: `full` or `csv-only`.
        #[arg(long, default_value = "full")]
        format: String,
    },
    /// Run the scenario once per value of one swept parameter.
    Sweep {
        scenario: PathBuf,
        /// Swept parameter: `codec`, `distance_m`, `distance_km`, or a
        /// dotted path into the scenario document (e.g.
        /// `frame.dl_fraction`, `flows.0.max_sustained_bps`).
        #[arg(long)]
        axis: String,
        /// Comma-separated values for the axis.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Override the scenario's seed (same seed for every run).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Synthesize a frame-size trace file.
    GenTrace {
        /// Codec preset supplying default statistics (`svc` or `avc`).
        #[arg(long, default_value = "svc")]
        codec: String,
        /// Target mean frame size in bytes (preset default if omitted).
        #[arg(long)]
        mean_bytes: Option<f64>,
        /// Frame size cap in bytes (preset default if omitted).
        #[arg(long)]
        peak_bytes: Option<u32>,
        /// Number of frames to synthesize.
        #[arg(long)]
        frames: u32,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        #[arg(long, default_value_t = 16)]
        gop: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Trace file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse a trace file and print its frame statistics.
    ValidateTrace { file: PathBuf },
    /// Re-render the summary table from a run directory's metrics.csv.
    Report { dir: PathBuf },
}

/// Failures split by exit code: usage/config errors exit 1, runtime
/// failures exit 2.
enum AppError {
    Usage(String),
    Runtime(String),
}

fn usage(e: impl std::fmt::Display) -> AppError {
    AppError::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn scenario_base_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            force,
            dump_events,
            dump_grants,
            format,
        } => {
            let format = OutputFormat::parse(&format)
                .ok_or_else(|| AppError::Usage(format!("unknown --format {format:?}")))?;
            let loaded = Scenario::load(&scenario).map_err(usage)?;
            // Refuse doomed output directories before simulating.
            prepare_out_dir(&out, force).map_err(usage)?;
            let opts = RunOptions {
                seed_override: seed,
                record_events: dump_events,
                record_grants: dump_grants,
            };
            let result = run(&loaded, &scenario_base_dir(&scenario), &opts).map_err(usage)?;
            let written = write_run_files(&result, &out).map_err(|e| match e {
                ReportError::Io { .. } => AppError::Runtime(e.to_string()),
                other => AppError::Usage(other.to_string()),
            })?;
            if format == OutputFormat::Full {
                print!("{}", render_run(&result));
                println!();
            }
            println!("wrote {} files to {}", written.len(), out.display());
            Ok(())
        }
        Command::Sweep {
            scenario,
            axis,
            values,
            seed,
        } => {
            let loaded = Scenario::load(&scenario).map_err(usage)?;
            // Bare words become strings; anything that parses as JSON (56,
            // 0.5, true) is used as that value.
            let parsed: Vec<serde_json::Value> = values
                .iter()
                .map(|v| {
                    serde_json::from_str(v)
                        .unwrap_or_else(|_| serde_json::Value::String(v.clone()))
                })
                .collect();
            let opts = RunOptions {
                seed_override: seed,
                ..Default::default()
            };
            let rows = sweep(&loaded, &scenario_base_dir(&scenario), &axis, &parsed, &opts)
                .map_err(usage)?;
            print!("{}", render_sweep_table(&rows));
            Ok(())
        }
        Command::GenTrace {
            codec,
            mean_bytes,
            peak_bytes,
            frames,
            fps,
            gop,
            seed,
            out,
        } => {
            let preset = CodecPreset::by_name(&codec);
            let (codec, preset_mean, preset_peak) = match preset {
                Some(p) => (p.codec, Some(p.mean_frame_bytes), Some(p.peak_frame_bytes)),
                None => (Codec::from(codec), None, None),
            };
            let mean_frame_bytes = mean_bytes.or(preset_mean).ok_or_else(|| {
                AppError::Usage("--mean-bytes is required for codecs without a preset".into())
            })?;
            let peak_frame_bytes = peak_bytes.or(preset_peak).ok_or_else(|| {
                AppError::Usage("--peak-bytes is required for codecs without a preset".into())
            })?;
            let params = SynthParams {
                codec,
                mean_frame_bytes,
                peak_frame_bytes,
                frames,
                fps,
                gop_size: gop,
            };
            let mut stream = RandomStream::new(seed, "gen-trace");
            let trace = gen_gamma_trace(&params, &mut stream).map_err(usage)?;
            trace
                .write_to(&out)
                .map_err(|e| AppError::Runtime(e.to_string()))?;
            let stats = trace.stats();
            println!(
                "wrote {} frames ({:.4} Mbps mean) to {}",
                stats.frames,
                stats.mean_rate_bps / 1e6,
                out.display()
            );
            Ok(())
        }
        Command::ValidateTrace { file } => {
            let trace = VideoTrace::read_from(&file).map_err(usage)?;
            print!("{}", render_trace_stats(trace.codec.label(), &trace.stats()));
            println!("trace ok: {}", file.display());
            Ok(())
        }
        Command::Report { dir } => {
            let table = rerender_from_dir(&dir).map_err(usage)?;
            print!("{table}");
            Ok(())
        }
    }
}
