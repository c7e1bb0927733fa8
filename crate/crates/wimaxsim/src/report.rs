//! Result emission: the CSV files a run leaves behind, and the console
//! tables rendered from them.
//!
//! Number formats in the CSVs are pinned so that identical runs produce
//! byte-identical files: delays, jitter and loss ratios print with nine
//! decimals, throughput with three, PSNR with two, and undefined values
//! print as empty cells.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metrics::mos_label;
use crate::runner::{EventRow, GrantRow, LinkReport, RunResult, SweepRow};
use crate::traffic::TraceStats;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("output directory {dir} already holds run results; pass --force to overwrite")]
    WouldOverwrite { dir: PathBuf },
}

/// How much of the report goes to the console.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    /// CSV files plus the console tables.
    #[default]
    Full,
    /// CSV files only.
    CsvOnly,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<OutputFormat> {
        match s {
            "full" => Some(OutputFormat::Full),
            "csv-only" => Some(OutputFormat::CsvOnly),
            _ => None,
        }
    }
}

const METRICS_HEADER: &str = "flow_id,codec,sent,received,lost_phy,lost_mac,delay_avg_s,\
                              delay_max_s,jitter_avg_s,throughput_bps,loss_ratio,psnr_db,mos,verdict";

/// One row of `metrics.csv`, as written and as parsed back.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub flow_id: String,
    pub codec: Option<String>,
    pub sent: u64,
    pub received: u64,
    pub lost_phy: u64,
    pub lost_mac: u64,
    pub delay_avg_s: Option<f64>,
    pub delay_max_s: Option<f64>,
    pub jitter_avg_s: Option<f64>,
    pub throughput_bps: f64,
    pub loss_ratio: Option<f64>,
    pub psnr_db: Option<f64>,
    pub mos: Option<u8>,
    pub verdict: String,
}

fn opt9(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9}")).unwrap_or_default()
}

fn opt2(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

pub fn metrics_rows(result: &RunResult) -> Vec<MetricsRow> {
    result
        .flows
        .iter()
        .map(|f| MetricsRow {
            flow_id: f.flow_id.clone(),
            codec: f.codec.clone(),
            sent: f.metrics.sent,
            received: f.metrics.received,
            lost_phy: f.metrics.lost_phy,
            lost_mac: f.metrics.lost_mac,
            delay_avg_s: f.metrics.delay_avg_s,
            delay_max_s: f.metrics.delay_max_s,
            jitter_avg_s: f.metrics.jitter_avg_s,
            throughput_bps: f.metrics.throughput_bps,
            loss_ratio: f.metrics.loss_ratio,
            psnr_db: f.psnr_db,
            mos: f.mos,
            verdict: f.verdict.label().to_string(),
        })
        .collect()
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.3},{},{},{},{}",
            r.flow_id,
            r.codec.as_deref().unwrap_or(""),
            r.sent,
            r.received,
            r.lost_phy,
            r.lost_mac,
            opt9(r.delay_avg_s),
            opt9(r.delay_max_s),
            opt9(r.jitter_avg_s),
            r.throughput_bps,
            opt9(r.loss_ratio),
            opt2(r.psnr_db),
            r.mos.map(|m| m.to_string()).unwrap_or_default(),
            r.verdict,
        )
        .expect("write to string");
    }
    out
}

pub fn parse_metrics_csv(text: &str, path: &Path) -> Result<Vec<MetricsRow>, ReportError> {
    let err = |line: usize, message: String| ReportError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == METRICS_HEADER => {}
        Some((_, header)) => {
            return Err(err(1, format!("unexpected header {header:?}")));
        }
        None => return Err(err(1, "empty file".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 14 {
            return Err(err(lineno, format!("expected 14 fields, got {}", fields.len())));
        }
        let int = |idx: usize| -> Result<u64, ReportError> {
            fields[idx]
                .parse()
                .map_err(|_| err(lineno, format!("field {idx}: {:?} is not an integer", fields[idx])))
        };
        let opt_float = |idx: usize| -> Result<Option<f64>, ReportError> {
            if fields[idx].is_empty() {
                Ok(None)
            } else {
                fields[idx]
                    .parse()
                    .map(Some)
                    .map_err(|_| err(lineno, format!("field {idx}: {:?} is not a number", fields[idx])))
            }
        };
        rows.push(MetricsRow {
            flow_id: fields[0].to_string(),
            codec: (!fields[1].is_empty()).then(|| fields[1].to_string()),
            sent: int(2)?,
            received: int(3)?,
            lost_phy: int(4)?,
            lost_mac: int(5)?,
            delay_avg_s: opt_float(6)?,
            delay_max_s: opt_float(7)?,
            jitter_avg_s: opt_float(8)?,
            throughput_bps: opt_float(9)?
                .ok_or_else(|| err(lineno, "throughput_bps must be present".into()))?,
            loss_ratio: opt_float(10)?,
            psnr_db: opt_float(11)?,
            mos: if fields[12].is_empty() {
                None
            } else {
                Some(fields[12].parse().map_err(|_| {
                    err(lineno, format!("field 12: {:?} is not a MOS score", fields[12]))
                })?)
            },
            verdict: fields[13].to_string(),
        });
    }
    Ok(rows)
}

fn series_csv(flow: &crate::runner::FlowResult) -> String {
    let mut out = String::from("t_s,delay_s,jitter_s,throughput_bps\n");
    for p in &flow.series {
        writeln!(
            out,
            "{:.3},{},{},{:.3}",
            p.t_s,
            opt9(p.delay_s),
            opt9(p.jitter_s),
            p.throughput_bps
        )
        .expect("write to string");
    }
    out
}

fn events_tsv(events: &[EventRow]) -> String {
    let mut out = String::from("fire_at_us\tseq\tkind\ttarget\n");
    for e in events {
        writeln!(out, "{}\t{}\t{}\t{}", e.fire_at_us, e.seq, e.kind, e.target)
            .expect("write to string");
    }
    out
}

fn grants_tsv(grants: &[GrantRow]) -> String {
    let mut out = String::from("frame_index\tflow_id\tsubframe\tbytes_granted\n");
    for g in grants {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            g.frame_index, g.flow_id, g.subframe, g.bytes_granted
        )
        .expect("write to string");
    }
    out
}

/// Creates the output directory and proves it writable, refusing to clobber
/// a previous run unless `force` is set. Called before the simulation runs
/// so a doomed run fails in milliseconds, not minutes.
pub fn prepare_out_dir(dir: &Path, force: bool) -> Result<(), ReportError> {
    let io = |source: std::io::Error| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    if !force && dir.join("metrics.csv").exists() {
        return Err(ReportError::WouldOverwrite {
            dir: dir.to_path_buf(),
        });
    }
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(io)?;
    fs::remove_file(&probe).map_err(io)?;
    Ok(())
}

fn write_file(path: &Path, content: &str) -> Result<(), ReportError> {
    fs::write(path, content).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `metrics.csv`, one `series_<flow>.csv` per flow, and — when the
/// run recorded them — `events.tsv` and `grants.tsv`. Returns the paths
/// written.
pub fn write_run_files(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    let metrics_path = dir.join("metrics.csv");
    write_file(&metrics_path, &metrics_csv(&metrics_rows(result)))?;
    written.push(metrics_path);
    for flow in &result.flows {
        let path = dir.join(format!("series_{}.csv", flow.flow_id));
        write_file(&path, &series_csv(flow))?;
        written.push(path);
    }
    if let Some(events) = &result.events {
        let path = dir.join("events.tsv");
        write_file(&path, &events_tsv(events))?;
        written.push(path);
    }
    if let Some(grants) = &result.grants {
        let path = dir.join("grants.tsv");
        write_file(&path, &grants_tsv(grants))?;
        written.push(path);
    }
    Ok(written)
}

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let render = |out: &mut String, cells: &[String]| {
        let line: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| pad(c, widths[i]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    };
    render(
        &mut out,
        &header.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
    );
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        render(&mut out, row);
    }
    out
}

fn ms(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.3} ms", x * 1e3),
        None => "-".into(),
    }
}

/// Delay cell with the 200 ms bound flag; jitter cell marks sub-10 ms
/// jitter as ideal.
fn delay_cell(v: Option<f64>, bound_s: f64) -> String {
    match v {
        Some(x) if x >= bound_s => format!("{:.3} ms (>bound)", x * 1e3),
        other => ms(other),
    }
}

fn jitter_cell(v: Option<f64>, ideal_below_s: f64) -> String {
    match v {
        Some(x) if x < ideal_below_s => format!("{:.3} ms (ideal)", x * 1e3),
        other => ms(other),
    }
}

/// Per-flow summary table: throughput, end-to-end delay, jitter, loss,
/// PSNR/MOS and the QoS verdict.
pub fn render_summary_table(rows: &[MetricsRow], delay_bound_s: f64, jitter_ideal_s: f64) -> String {
    let header = [
        "flow", "codec", "sent", "received", "tput (Mbps)", "delay avg", "delay max",
        "jitter avg", "loss", "PSNR (dB)", "MOS", "verdict",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.flow_id.clone(),
                r.codec.clone().unwrap_or_else(|| "-".into()),
                r.sent.to_string(),
                r.received.to_string(),
                format!("{:.3}", r.throughput_bps / 1e6),
                delay_cell(r.delay_avg_s, delay_bound_s),
                delay_cell(r.delay_max_s, delay_bound_s),
                jitter_cell(r.jitter_avg_s, jitter_ideal_s),
                r.loss_ratio
                    .map(|l| format!("{:.4}%", l * 1e2))
                    .unwrap_or_else(|| "-".into()),
                r.psnr_db.map(|p| format!("{p:.2}")).unwrap_or_else(|| "-".into()),
                r.mos
                    .map(|m| format!("{m} ({})", mos_label(m)))
                    .unwrap_or_else(|| "-".into()),
                r.verdict.clone(),
            ]
        })
        .collect();
    table(&header, &body)
}

pub fn render_links_table(links: &[LinkReport]) -> String {
    let header = [
        "station", "dist (m)", "pathloss (dB)", "DL SNR (dB)", "UL SNR (dB)",
        "DL profile", "margin (dB)", "sustainable", "P(PDU lost)",
    ];
    let body: Vec<Vec<String>> = links
        .iter()
        .map(|l| {
            vec![
                l.station.clone(),
                format!("{:.1}", l.distance_m),
                format!("{:.2}", l.pathloss_db),
                format!("{:.2}", l.dl_snr_db),
                format!("{:.2}", l.ul_snr_db),
                l.dl_profile.clone(),
                format!("{:+.2}", l.dl_margin_db),
                l.dl_sustainable.clone().unwrap_or_else(|| "outage".into()),
                format!("{:.3e}", l.dl_pdu_loss_prob),
            ]
        })
        .collect();
    table(&header, &body)
}

/// Full console report for one run.
pub fn render_run(result: &RunResult) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "scenario {} (seed {}, {} s simulated)\n",
        result.scenario_name, result.seed, result.duration_s
    )
    .expect("write to string");
    out.push_str(&render_summary_table(
        &metrics_rows(result),
        result.thresholds.delay_max_s,
        result.thresholds.jitter_max_s.min(0.01),
    ));
    out.push('\n');
    out.push_str(&render_links_table(&result.links));
    out.push('\n');
    let counts: Vec<String> = result
        .event_counts
        .iter()
        .map(|(kind, n)| format!("{kind} {n}"))
        .collect();
    writeln!(out, "events dispatched: {}", counts.join(", ")).expect("write to string");
    out
}

pub fn render_sweep_table(rows: &[SweepRow]) -> String {
    let header = [
        "value", "min DL SNR (dB)", "tput (Mbps)", "delay avg", "jitter avg",
        "loss", "PSNR (dB)", "MOS", "flows passing",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.value.clone(),
                format!("{:.2}", r.min_dl_snr_db),
                format!("{:.3}", r.throughput_avg_bps / 1e6),
                ms(r.delay_avg_s),
                ms(r.jitter_avg_s),
                r.loss_ratio
                    .map(|l| format!("{:.4}%", l * 1e2))
                    .unwrap_or_else(|| "-".into()),
                r.psnr_db.map(|p| format!("{p:.2}")).unwrap_or_else(|| "-".into()),
                r.mos.map(|m| m.to_string()).unwrap_or_else(|| "-".into()),
                format!("{}/{}", r.passed, r.flow_count),
            ]
        })
        .collect();
    let mut out = String::new();
    if let Some(first) = rows.first() {
        writeln!(out, "sweep over {}\n", first.axis).expect("write to string");
    }
    out.push_str(&table(&header, &body));
    out
}

/// Frame-statistics report for one trace, in the shape of the codec
/// reference table.
pub fn render_trace_stats(codec: &str, stats: &TraceStats) -> String {
    let mut out = String::new();
    let mut row = |k: &str, v: String| {
        writeln!(out, "{k:<28}{v}").expect("write to string");
    };
    row("codec", codec.to_string());
    row("frames", stats.frames.to_string());
    row("min frame (bytes)", stats.min_frame_bytes.to_string());
    row("max frame (bytes)", stats.max_frame_bytes.to_string());
    row("mean frame (bytes)", format!("{:.2}", stats.mean_frame_bytes));
    row("mean rate (Mbps)", format!("{:.4}", stats.mean_rate_bps / 1e6));
    row("peak rate (Mbps)", format!("{:.4}", stats.peak_rate_bps / 1e6));
    row(
        "mean PSNR (dB)",
        stats
            .mean_psnr_db
            .map(|p| format!("{p:.2}"))
            .unwrap_or_else(|| "-".into()),
    );
    out
}

/// Re-renders the summary table from a run directory's `metrics.csv`.
pub fn rerender_from_dir(dir: &Path) -> Result<String, ReportError> {
    let path = dir.join("metrics.csv");
    let text = fs::read_to_string(&path).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    let rows = parse_metrics_csv(&text, &path)?;
    Ok(render_summary_table(&rows, 0.2, 0.01))
}
