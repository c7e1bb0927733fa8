//! Per-packet accounting and the QoS/QoE metrics derived from it.
//!
//! The simulator keeps one [`PacketRecord`] per transport packet per flow.
//! Everything here is a pure function over those records, so every metric
//! can be recomputed by brute force from a packet log.
//!
//! Delay, jitter and loss are measured over packets sent at or after the
//! window's `stats_start` (skipping stream warm-up); throughput counts
//! bytes *received* inside the window. The sent/received/lost counters are
//! whole-run tallies and satisfy exact conservation:
//! `sent = received + lost_phy + lost_mac + residual`.

use serde::{Deserialize, Serialize};

use crate::sim::SimTime;

/// Where a packet died, if it did.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossPoint {
    /// Not lost: delivered, or still queued when the run ended.
    #[default]
    None,
    /// Tail-dropped at the MAC queue byte cap.
    MacQueue,
    /// At least one of the packet's PDUs was corrupted on the air.
    Phy,
}

/// Lifecycle of one transport packet.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PacketRecord {
    /// Per-flow sequence number in emission order.
    pub seq: u64,
    pub payload_bytes: u32,
    pub t_sent: SimTime,
    pub t_received: Option<SimTime>,
    pub loss: LossPoint,
}

impl PacketRecord {
    pub fn delay(&self) -> Option<SimTime> {
        self.t_received.map(|r| r.saturating_sub(self.t_sent))
    }
}

/// Half-open measurement context for one run.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct MeasurementWindow {
    /// Packets sent before this instant are warm-up and excluded from
    /// delay, jitter and loss statistics.
    pub stats_start: SimTime,
    pub run_end: SimTime,
}

impl MeasurementWindow {
    pub fn duration_s(&self) -> f64 {
        self.run_end.saturating_sub(self.stats_start).as_secs_f64()
    }
}

/// Transport-level metrics for one flow.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FlowMetrics {
    /// Whole-run packet counts; `sent` always equals the sum of the other
    /// four.
    pub sent: u64,
    pub received: u64,
    pub lost_phy: u64,
    pub lost_mac: u64,
    /// Sent but neither delivered nor dropped when the run ended.
    pub residual: u64,
    /// Mean end-to-end delay (s) over measured received packets.
    pub delay_avg_s: Option<f64>,
    pub delay_max_s: Option<f64>,
    /// Mean absolute delay difference between consecutively received
    /// packets (s).
    pub jitter_avg_s: Option<f64>,
    /// Secondary jitter view: per-second delay spread (max minus min),
    /// averaged over non-empty seconds.
    pub jitter_spread_s: Option<f64>,
    /// Received payload bits per second over the measurement window.
    pub throughput_bps: f64,
    /// Lost / sent over measured packets; residuals count as neither.
    pub loss_ratio: Option<f64>,
}

/// Computes every transport metric for one flow's packet log. Records must
/// be in sequence order.
pub fn flow_metrics(records: &[PacketRecord], window: MeasurementWindow) -> FlowMetrics {
    let mut m = FlowMetrics::default();
    let mut measured_sent = 0u64;
    let mut measured_lost = 0u64;
    let mut delays: Vec<f64> = Vec::new();
    let mut received_bytes_in_window = 0u64;

    for r in records {
        m.sent += 1;
        match (r.t_received, r.loss) {
            (Some(_), LossPoint::None) => m.received += 1,
            (None, LossPoint::Phy) => m.lost_phy += 1,
            (None, LossPoint::MacQueue) => m.lost_mac += 1,
            (None, LossPoint::None) => m.residual += 1,
            (Some(_), lost) => unreachable!("packet both received and lost at {lost:?}"),
        }
        let measured = r.t_sent >= window.stats_start;
        if measured {
            measured_sent += 1;
            if r.loss != LossPoint::None {
                measured_lost += 1;
            }
            if let Some(d) = r.delay() {
                delays.push(d.as_secs_f64());
            }
        }
        if let Some(t) = r.t_received {
            if t >= window.stats_start && t <= window.run_end {
                received_bytes_in_window += u64::from(r.payload_bytes);
            }
        }
    }

    if !delays.is_empty() {
        m.delay_avg_s = Some(delays.iter().sum::<f64>() / delays.len() as f64);
        m.delay_max_s = delays.iter().copied().reduce(f64::max);
    }
    m.jitter_avg_s = jitter_mean_abs_consecutive(&delays);
    m.jitter_spread_s = jitter_interval_spread(records, window, SimTime::from_secs(1));
    let duration = window.duration_s();
    if duration > 0.0 {
        m.throughput_bps = received_bytes_in_window as f64 * 8.0 / duration;
    }
    if measured_sent > 0 {
        m.loss_ratio = Some(measured_lost as f64 / measured_sent as f64);
    }
    m
}

/// Primary jitter definition: mean absolute difference between the delays
/// of consecutively received packets. Needs at least two samples.
pub fn jitter_mean_abs_consecutive(delays_s: &[f64]) -> Option<f64> {
    if delays_s.len() < 2 {
        return None;
    }
    let sum: f64 = delays_s.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Some(sum / (delays_s.len() - 1) as f64)
}

/// Secondary jitter definition: bucket received packets into fixed
/// intervals by arrival time, take each interval's delay spread (max minus
/// min) and average over non-empty intervals.
pub fn jitter_interval_spread(
    records: &[PacketRecord],
    window: MeasurementWindow,
    interval: SimTime,
) -> Option<f64> {
    if interval == SimTime::ZERO {
        return None;
    }
    let mut spreads: Vec<(u64, f64, f64)> = Vec::new(); // (bucket, min, max)
    for r in records {
        let (Some(t), Some(d)) = (r.t_received, r.delay()) else {
            continue;
        };
        if r.t_sent < window.stats_start || t > window.run_end {
            continue;
        }
        let bucket = t.as_micros() / interval.as_micros();
        let d = d.as_secs_f64();
        match spreads.last_mut() {
            Some((b, lo, hi)) if *b == bucket => {
                *lo = lo.min(d);
                *hi = hi.max(d);
            }
            _ => spreads.push((bucket, d, d)),
        }
    }
    if spreads.is_empty() {
        return None;
    }
    Some(spreads.iter().map(|(_, lo, hi)| hi - lo).sum::<f64>() / spreads.len() as f64)
}

/// One row of a flow's time series: fixed ticks from the start of the run,
/// warm-up included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    /// End of the tick interval, seconds from run start.
    pub t_s: f64,
    pub delay_s: Option<f64>,
    pub jitter_s: Option<f64>,
    pub throughput_bps: f64,
}

/// Bins received packets into `[k*tick, (k+1)*tick)` intervals by arrival
/// time and reports per-bin mean delay, jitter and throughput for the whole
/// run.
pub fn time_series(records: &[PacketRecord], run_end: SimTime, tick: SimTime) -> Vec<SeriesPoint> {
    assert!(tick > SimTime::ZERO, "tick must be positive");
    let bins = (run_end.as_micros().div_ceil(tick.as_micros())).max(1) as usize;
    let mut delay_bins: Vec<Vec<f64>> = vec![Vec::new(); bins];
    let mut byte_bins = vec![0u64; bins];
    for r in records {
        let (Some(t), Some(d)) = (r.t_received, r.delay()) else {
            continue;
        };
        let bucket = (t.as_micros() / tick.as_micros()) as usize;
        if bucket >= bins {
            continue;
        }
        delay_bins[bucket].push(d.as_secs_f64());
        byte_bins[bucket] += u64::from(r.payload_bytes);
    }
    let tick_s = tick.as_secs_f64();
    (0..bins)
        .map(|k| {
            let delays = &delay_bins[k];
            SeriesPoint {
                t_s: (k + 1) as f64 * tick_s,
                delay_s: if delays.is_empty() {
                    None
                } else {
                    Some(delays.iter().sum::<f64>() / delays.len() as f64)
                },
                jitter_s: jitter_mean_abs_consecutive(delays),
                throughput_bps: byte_bins[k] as f64 * 8.0 / tick_s,
            }
        })
        .collect()
}

/// Maps source video PSNR to a 5-point mean opinion score.
pub fn psnr_to_mos(psnr_db: f64) -> u8 {
    if psnr_db > 37.0 {
        5
    } else if psnr_db >= 31.0 {
        4
    } else if psnr_db >= 25.0 {
        3
    } else if psnr_db >= 20.0 {
        2
    } else {
        1
    }
}

pub fn mos_label(mos: u8) -> &'static str {
    match mos {
        5 => "excellent",
        4 => "good",
        3 => "fair",
        2 => "poor",
        _ => "bad",
    }
}

/// Streaming-video QoS acceptance thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QosThresholds {
    pub delay_max_s: f64,
    pub jitter_max_s: f64,
    pub loss_max: f64,
    pub throughput_min_bps: f64,
    pub throughput_max_bps: f64,
}

impl Default for QosThresholds {
    fn default() -> Self {
        QosThresholds {
            delay_max_s: 0.2,
            jitter_max_s: 0.06,
            loss_max: 0.01,
            throughput_min_bps: 10e3,
            throughput_max_bps: 5e6,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Some required metric was undefined (e.g. nothing was received).
    Indeterminate,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Checks a flow's measured metrics against the thresholds. A metric that
/// could not be measured makes the verdict indeterminate rather than pass.
pub fn qos_verdict(m: &FlowMetrics, t: &QosThresholds) -> Verdict {
    let (Some(delay), Some(jitter), Some(loss)) = (m.delay_avg_s, m.jitter_avg_s, m.loss_ratio)
    else {
        return Verdict::Indeterminate;
    };
    let ok = delay < t.delay_max_s
        && jitter < t.jitter_max_s
        && loss <= t.loss_max
        && m.throughput_bps >= t.throughput_min_bps
        && m.throughput_bps <= t.throughput_max_bps;
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn received(seq: u64, bytes: u32, sent_us: u64, recv_us: u64) -> PacketRecord {
        PacketRecord {
            seq,
            payload_bytes: bytes,
            t_sent: SimTime::from_micros(sent_us),
            t_received: Some(SimTime::from_micros(recv_us)),
            loss: LossPoint::None,
        }
    }

    fn lost(seq: u64, bytes: u32, sent_us: u64, loss: LossPoint) -> PacketRecord {
        PacketRecord {
            seq,
            payload_bytes: bytes,
            t_sent: SimTime::from_micros(sent_us),
            t_received: None,
            loss,
        }
    }

    fn window(start_s: u64, end_s: u64) -> MeasurementWindow {
        MeasurementWindow {
            stats_start: SimTime::from_secs(start_s),
            run_end: SimTime::from_secs(end_s),
        }
    }

    #[test]
    fn delay_and_jitter_match_hand_computation() {
        // Delays of 10, 12, 11 ms: average 11 ms, jitter (2 + 1) / 2 ms.
        let records = vec![
            received(0, 1000, 1_000_000, 1_010_000),
            received(1, 1000, 2_000_000, 2_012_000),
            received(2, 1000, 3_000_000, 3_011_000),
        ];
        let m = flow_metrics(&records, window(0, 10));
        assert!((m.delay_avg_s.unwrap() - 0.011).abs() < 1e-12);
        assert!((m.delay_max_s.unwrap() - 0.012).abs() < 1e-12);
        assert!((m.jitter_avg_s.unwrap() - 0.0015).abs() < 1e-12);
        assert_eq!(m.sent, 3);
        assert_eq!(m.received, 3);
        assert_eq!(m.loss_ratio, Some(0.0));
    }

    #[test]
    fn warm_up_packets_shape_counts_but_not_statistics() {
        let records = vec![
            // Warm-up: sent before 5 s, hugely delayed and one lost.
            received(0, 1000, 1_000_000, 3_000_000),
            lost(1, 1000, 2_000_000, LossPoint::Phy),
            // Measured: sent after 5 s.
            received(2, 1000, 6_000_000, 6_020_000),
            received(3, 1000, 7_000_000, 7_020_000),
        ];
        let m = flow_metrics(&records, window(5, 10));
        assert_eq!(m.sent, 4);
        assert_eq!(m.received, 3);
        assert_eq!(m.lost_phy, 1);
        // The 2 s warm-up delay does not pollute the measured average.
        assert!((m.delay_avg_s.unwrap() - 0.020).abs() < 1e-12);
        assert_eq!(m.loss_ratio, Some(0.0));
        // Throughput counts only bytes received inside the window.
        assert!((m.throughput_bps - 2.0 * 1000.0 * 8.0 / 5.0).abs() < 1e-9);
    }

    #[test]
    fn conservation_holds_with_every_outcome_present() {
        let records = vec![
            received(0, 100, 0, 10),
            lost(1, 100, 0, LossPoint::Phy),
            lost(2, 100, 0, LossPoint::MacQueue),
            lost(3, 100, 0, LossPoint::Phy),
            PacketRecord {
                seq: 4,
                payload_bytes: 100,
                t_sent: SimTime::from_micros(5),
                t_received: None,
                loss: LossPoint::None,
            },
        ];
        let m = flow_metrics(&records, window(0, 1));
        assert_eq!(m.sent, 5);
        assert_eq!(m.received, 1);
        assert_eq!(m.lost_phy, 2);
        assert_eq!(m.lost_mac, 1);
        assert_eq!(m.residual, 1);
        assert_eq!(m.sent, m.received + m.lost_phy + m.lost_mac + m.residual);
        // The residual is not counted as lost.
        assert!((m.loss_ratio.unwrap() - 3.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_single_packet_logs_leave_metrics_undefined() {
        let m = flow_metrics(&[], window(0, 10));
        assert_eq!(m.delay_avg_s, None);
        assert_eq!(m.jitter_avg_s, None);
        assert_eq!(m.loss_ratio, None);
        assert_eq!(m.throughput_bps, 0.0);

        let m = flow_metrics(&[received(0, 1000, 6_000_000, 6_005_000)], window(5, 10));
        assert!(m.delay_avg_s.is_some());
        assert_eq!(m.jitter_avg_s, None, "jitter needs two packets");
    }

    #[test]
    fn interval_spread_averages_per_second_extremes() {
        // Second 0: delays 10 and 30 ms (spread 20); second 1: 15 ms (0).
        let records = vec![
            received(0, 1000, 100_000, 110_000),
            received(1, 1000, 500_000, 530_000),
            received(2, 1000, 1_200_000, 1_215_000),
        ];
        let spread =
            jitter_interval_spread(&records, window(0, 10), SimTime::from_secs(1)).unwrap();
        assert!((spread - 0.010).abs() < 1e-12);
    }

    #[test]
    fn time_series_bins_by_arrival_and_keeps_empty_bins() {
        let records = vec![
            received(0, 1_250, 100_000, 200_000),
            received(1, 1_250, 300_000, 400_000),
            // Nothing arrives in second 1.
            received(2, 2_500, 2_100_000, 2_400_000),
        ];
        let series = time_series(&records, SimTime::from_secs(3), SimTime::from_secs(1));
        assert_eq!(series.len(), 3);
        assert_eq!(series[0].t_s, 1.0);
        assert!((series[0].delay_s.unwrap() - 0.1).abs() < 1e-12);
        assert!((series[0].jitter_s.unwrap() - 0.0).abs() < 1e-12);
        assert!((series[0].throughput_bps - 2.0 * 1_250.0 * 8.0).abs() < 1e-9);
        assert_eq!(series[1].delay_s, None);
        assert_eq!(series[1].throughput_bps, 0.0);
        assert!((series[2].delay_s.unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(series[2].jitter_s, None);
    }

    #[test]
    fn mos_mapping_pins_its_boundaries() {
        for (psnr, mos) in [
            (44.0, 5),
            (37.01, 5),
            (37.0, 4),
            (31.0, 4),
            (30.99, 3),
            (25.0, 3),
            (24.99, 2),
            (20.0, 2),
            (19.99, 1),
            (5.0, 1),
        ] {
            assert_eq!(psnr_to_mos(psnr), mos, "psnr {psnr}");
        }
        assert_eq!(mos_label(5), "excellent");
        assert_eq!(mos_label(4), "good");
        assert_eq!(mos_label(3), "fair");
        assert_eq!(mos_label(2), "poor");
        assert_eq!(mos_label(1), "bad");
    }

    #[test]
    fn verdict_checks_every_threshold() {
        let thresholds = QosThresholds::default();
        let good = FlowMetrics {
            delay_avg_s: Some(0.02),
            jitter_avg_s: Some(0.002),
            loss_ratio: Some(0.001),
            throughput_bps: 2e6,
            ..Default::default()
        };
        assert_eq!(qos_verdict(&good, &thresholds), Verdict::Pass);

        for (field, bad) in [
            ("delay", FlowMetrics { delay_avg_s: Some(0.25), ..good.clone() }),
            ("jitter", FlowMetrics { jitter_avg_s: Some(0.07), ..good.clone() }),
            ("loss", FlowMetrics { loss_ratio: Some(0.02), ..good.clone() }),
            ("tput low", FlowMetrics { throughput_bps: 5e3, ..good.clone() }),
            ("tput high", FlowMetrics { throughput_bps: 6e6, ..good.clone() }),
        ] {
            assert_eq!(qos_verdict(&bad, &thresholds), Verdict::Fail, "{field}");
        }
        // Boundary semantics: loss of exactly 1% passes, delay of exactly
        // 200 ms fails.
        let edge = FlowMetrics { loss_ratio: Some(0.01), ..good.clone() };
        assert_eq!(qos_verdict(&edge, &thresholds), Verdict::Pass);
        let edge = FlowMetrics { delay_avg_s: Some(0.2), ..good.clone() };
        assert_eq!(qos_verdict(&edge, &thresholds), Verdict::Fail);

        let unmeasured = FlowMetrics { jitter_avg_s: None, ..good };
        assert_eq!(qos_verdict(&unmeasured, &thresholds), Verdict::Indeterminate);
    }
}
