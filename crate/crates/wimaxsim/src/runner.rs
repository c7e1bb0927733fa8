//! Run orchestration: builds a cell from a scenario, drives the event
//! engine to the horizon, and distills per-flow metrics, link budgets and
//! optional event/grant traces.
//!
//! Everything stochastic draws from named streams derived from the scenario
//! seed ("traffic/<stream>", "phy/<flow>", "shadow/<flow>"), so adding a
//! consumer never perturbs the draws of existing ones and every run is a
//! pure function of (scenario, seed).

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use thiserror::Error;

use crate::mac::{
    subframe_capacity_bytes, CellScheduler, Direction, FlowConfig, Grant, MacConfig, MacError,
    Sdu, SubframeCapacity, EnqueueOutcome,
};
use crate::metrics::{
    flow_metrics, psnr_to_mos, qos_verdict, time_series, FlowMetrics, LossPoint,
    MeasurementWindow, PacketRecord, QosThresholds, SeriesPoint, Verdict,
};
use crate::phy::{
    link_snr_db, pathloss_db, pdu_delivery, pdu_loss_probability, phy_rate_bps,
    select_modulation, ModulationCoding, ModulationLadder, PhyError,
};
use crate::scenario::{Scenario, ScenarioError, StreamSource};
use crate::sim::{Engine, Event, EventKind, EventTarget, RandomStream, SimError, SimTime};
use crate::traffic::{
    emission_offset, gen_gamma_trace, packetize, Codec, CodecPreset, SynthParams, TraceError,
    VideoTrace, PACKET_HEADER_BYTES,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("stream {stream}: {source}")]
    Trace {
        stream: String,
        source: TraceError,
    },
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Mac(#[from] MacError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("sweep axis `{axis}`: {message}")]
    Axis { axis: String, message: String },
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub seed_override: Option<u64>,
    /// Record every dispatched event (sized for short runs).
    pub record_events: bool,
    /// Record every nonzero grant.
    pub record_grants: bool,
}

/// One dispatched event, as dumped to the event trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventRow {
    pub fire_at_us: u64,
    pub seq: u64,
    pub kind: &'static str,
    pub target: String,
}

/// One scheduler grant, as dumped to the grant log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrantRow {
    pub frame_index: u64,
    pub flow_id: String,
    pub subframe: &'static str,
    pub bytes_granted: u64,
}

/// Static link budget for one subscriber station.
#[derive(Clone, Debug)]
pub struct LinkReport {
    pub station: String,
    pub distance_m: f64,
    pub pathloss_db: f64,
    pub dl_snr_db: f64,
    pub ul_snr_db: f64,
    pub dl_profile: String,
    pub dl_margin_db: f64,
    pub ul_profile: Option<String>,
    pub ul_margin_db: Option<f64>,
    /// Highest ladder entry the downlink SNR could sustain (None: outage).
    pub dl_sustainable: Option<String>,
    /// Loss probability of a maximum-size PDU on the downlink as
    /// configured.
    pub dl_pdu_loss_prob: f64,
}

/// Queue state sampled at one measurement tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueueSample {
    pub t_s: f64,
    pub queued_bytes: u64,
    pub mac_drops: u64,
}

/// Everything measured about one service flow.
#[derive(Clone, Debug)]
pub struct FlowResult {
    pub flow_id: String,
    pub direction: Direction,
    pub class_label: &'static str,
    /// Codec of the first video stream carried by this flow.
    pub codec: Option<String>,
    pub psnr_db: Option<f64>,
    pub mos: Option<u8>,
    pub metrics: FlowMetrics,
    pub verdict: Verdict,
    pub series: Vec<SeriesPoint>,
    pub queue_series: Vec<QueueSample>,
    /// Raw per-packet log, in sequence order.
    pub records: Vec<PacketRecord>,
}

pub struct RunResult {
    pub scenario_name: String,
    pub seed: u64,
    pub duration_s: f64,
    pub thresholds: QosThresholds,
    pub flows: Vec<FlowResult>,
    pub links: Vec<LinkReport>,
    /// Dispatched events per kind, in [`EventKind::ALL`] order.
    pub event_counts: [(&'static str, u64); 5],
    pub grants: Option<Vec<GrantRow>>,
    pub events: Option<Vec<EventRow>>,
}

struct InFlightPdu {
    tag: u64,
    air_bits: u64,
    sdu_complete: bool,
}

struct FlowRuntime {
    records: Vec<PacketRecord>,
    phy_stream: RandomStream,
    shadow_stream: Option<RandomStream>,
    in_flight: VecDeque<InFlightPdu>,
    snr_db: f64,
    profile: ModulationCoding,
    propagation: SimTime,
    /// Earliest stream start feeding this flow, if any.
    first_stream_start: Option<SimTime>,
    codec: Option<String>,
    psnr_db: Option<f64>,
    queue_series: Vec<QueueSample>,
}

struct StreamRuntime {
    flow_idx: usize,
    start: SimTime,
    fps: f64,
    frame_sizes: Vec<u32>,
    next: usize,
    backhaul: SimTime,
}

struct World {
    cell: CellScheduler,
    flows: Vec<FlowRuntime>,
    streams: Vec<StreamRuntime>,
    stream_index: HashMap<String, usize>,
    flow_index: HashMap<String, usize>,
    capacity: SubframeCapacity,
    frame_duration: SimTime,
    ul_offset: SimTime,
    air_us_per_byte: [f64; 2],
    poll_interval: SimTime,
    tick: SimTime,
    mtu: u32,
    shadowing_sigma_db: f64,
    grant_log: Option<Vec<Grant>>,
}

impl World {
    fn handle(&mut self, engine: &mut Engine, event: &Event) {
        match event.kind {
            EventKind::FrameArrival => self.on_frame_arrival(engine, event),
            EventKind::FrameBoundary => self.on_frame_boundary(engine, event),
            EventKind::TransmissionComplete => self.on_transmission_complete(event),
            EventKind::Poll => self.on_poll(engine, event),
            EventKind::MeasurementTick => self.on_measurement_tick(engine, event),
        }
    }

    fn on_frame_arrival(&mut self, engine: &mut Engine, event: &Event) {
        let EventTarget::Stream(id) = &event.target else {
            unreachable!("frame arrivals target streams");
        };
        let s_idx = self.stream_index[id];
        let stream = &mut self.streams[s_idx];
        let k = stream.next;
        let frame_bytes = stream.frame_sizes[k];
        let emitted_at = stream.start + emission_offset(k as u64, stream.fps);
        let flow_idx = stream.flow_idx;
        stream.next += 1;
        if stream.next < stream.frame_sizes.len() {
            let next_arrival =
                stream.start + emission_offset(stream.next as u64, stream.fps) + stream.backhaul;
            engine
                .schedule(next_arrival, EventKind::FrameArrival, event.target.clone())
                .expect("arrival chain schedules forward");
        }

        let flow = &mut self.flows[flow_idx];
        for payload in packetize(frame_bytes, self.mtu) {
            let tag = flow.records.len() as u64;
            flow.records.push(PacketRecord {
                seq: tag,
                payload_bytes: payload,
                t_sent: emitted_at,
                t_received: None,
                loss: LossPoint::None,
            });
            let outcome = self.cell.enqueue(
                flow_idx,
                Sdu {
                    payload_bytes: payload + PACKET_HEADER_BYTES,
                    tag,
                },
            );
            if outcome == EnqueueOutcome::Dropped {
                flow.records[tag as usize].loss = LossPoint::MacQueue;
            }
        }
    }

    fn on_frame_boundary(&mut self, engine: &mut Engine, _event: &Event) {
        let now = engine.now();
        engine
            .schedule(
                now + self.frame_duration,
                EventKind::FrameBoundary,
                EventTarget::Cell,
            )
            .expect("boundary chain schedules forward");

        let grants = self.cell.schedule_frame(self.capacity);
        if let Some(log) = &mut self.grant_log {
            log.extend_from_slice(&grants);
        }
        let mut cum_air_us = [0.0f64; 2];
        for grant in grants {
            let dir_slot = usize::from(grant.subframe == Direction::Uplink);
            let start = match grant.subframe {
                Direction::Downlink => now,
                Direction::Uplink => now + self.ul_offset,
            };
            let pdus = self.cell.take_granted(grant.flow_idx, grant.bytes_granted);
            let flow = &mut self.flows[grant.flow_idx];
            for pdu in pdus {
                cum_air_us[dir_slot] += f64::from(pdu.air_bytes) * self.air_us_per_byte[dir_slot];
                let arrival = start
                    + SimTime::from_micros(cum_air_us[dir_slot].round() as u64)
                    + flow.propagation;
                flow.in_flight.push_back(InFlightPdu {
                    tag: pdu.tag,
                    air_bits: u64::from(pdu.air_bytes) * 8,
                    sdu_complete: pdu.sdu_complete,
                });
                engine
                    .schedule(
                        arrival,
                        EventKind::TransmissionComplete,
                        EventTarget::Flow(self.cell.flow_id(grant.flow_idx).to_string()),
                    )
                    .expect("transmissions complete within the frame");
            }
        }
    }

    fn on_transmission_complete(&mut self, event: &Event) {
        let EventTarget::Flow(id) = &event.target else {
            unreachable!("transmission completions target flows");
        };
        let flow_idx = self.flow_index[id];
        let flow = &mut self.flows[flow_idx];
        let pdu = flow
            .in_flight
            .pop_front()
            .expect("completion for an in-flight PDU");
        let shadow_db = match &mut flow.shadow_stream {
            Some(stream) => stream.normal() * self.shadowing_sigma_db,
            None => 0.0,
        };
        let delivered = pdu_delivery(
            flow.snr_db + shadow_db,
            Some(&flow.profile),
            pdu.air_bits,
            &mut flow.phy_stream,
        );
        let record = &mut flow.records[pdu.tag as usize];
        if !delivered {
            if record.loss == LossPoint::None {
                record.loss = LossPoint::Phy;
            }
        } else if pdu.sdu_complete && record.loss == LossPoint::None {
            record.t_received = Some(event.fire_at);
        }
    }

    fn on_poll(&mut self, engine: &mut Engine, event: &Event) {
        let EventTarget::Flow(id) = &event.target else {
            unreachable!("polls target flows");
        };
        let flow_idx = self.flow_index[id];
        self.cell.poll(flow_idx);
        engine
            .schedule(
                event.fire_at + self.poll_interval,
                EventKind::Poll,
                event.target.clone(),
            )
            .expect("poll chain schedules forward");
    }

    fn on_measurement_tick(&mut self, engine: &mut Engine, event: &Event) {
        let t_s = event.fire_at.as_secs_f64();
        for (idx, flow) in self.flows.iter_mut().enumerate() {
            flow.queue_series.push(QueueSample {
                t_s,
                queued_bytes: self.cell.queued_payload_bytes(idx),
                mac_drops: self.cell.mac_drops(idx),
            });
        }
        engine
            .schedule(
                event.fire_at + self.tick,
                EventKind::MeasurementTick,
                EventTarget::Cell,
            )
            .expect("tick chain schedules forward");
    }
}

fn resolve_trace(
    spec: &crate::scenario::StreamSpec,
    base_dir: &Path,
    seed: u64,
) -> Result<VideoTrace, RunError> {
    let wrap = |source: TraceError| RunError::Trace {
        stream: spec.id.clone(),
        source,
    };
    match &spec.source {
        StreamSource::Preset { name, frames } => {
            let preset = CodecPreset::by_name(name).expect("validated preset name");
            let params = SynthParams::from_preset(&preset, *frames);
            let mut stream = RandomStream::new(seed, &format!("traffic/{}", spec.id));
            gen_gamma_trace(&params, &mut stream).map_err(wrap)
        }
        StreamSource::Synthetic {
            codec,
            mean_frame_bytes,
            peak_frame_bytes,
            frames,
            fps,
            gop_size,
        } => {
            let params = SynthParams {
                codec: Codec::from(codec.clone()),
                mean_frame_bytes: *mean_frame_bytes,
                peak_frame_bytes: *peak_frame_bytes,
                frames: *frames,
                fps: *fps,
                gop_size: *gop_size,
            };
            let mut stream = RandomStream::new(seed, &format!("traffic/{}", spec.id));
            gen_gamma_trace(&params, &mut stream).map_err(wrap)
        }
        StreamSource::Trace { path } => {
            VideoTrace::read_from(&base_dir.join(path)).map_err(wrap)
        }
    }
}

/// Runs one scenario to completion. Trace-file stream sources are resolved
/// relative to `base_dir`.
pub fn run(scenario: &Scenario, base_dir: &Path, opts: &RunOptions) -> Result<RunResult, RunError> {
    scenario.validate()?;
    let seed = opts.seed_override.unwrap_or(scenario.seed);
    let ladder = ModulationLadder::default();
    let duration = scenario.duration();
    let bs = scenario.base_station();
    let bs_radio = bs.radio.as_ref().expect("validated");
    let backhaul_ms = scenario.server().backhaul_delay_ms.expect("canonicalized");
    let backhaul = SimTime::from_secs_f64(backhaul_ms / 1e3);

    // Fixed stations: pathloss, SNR and margins computed once.
    let dl_profile_label = scenario
        .flows
        .iter()
        .find(|f| f.direction == Direction::Downlink)
        .and_then(|f| f.burst_profile.clone());
    let ul_profile_label = scenario
        .flows
        .iter()
        .find(|f| f.direction == Direction::Uplink)
        .and_then(|f| f.burst_profile.clone());
    let profile_of = |label: &Option<String>| -> Option<ModulationCoding> {
        label
            .as_ref()
            .and_then(|l| ladder.by_label(l))
            .cloned()
    };
    let dl_profile = profile_of(&dl_profile_label);
    let ul_profile = profile_of(&ul_profile_label);

    struct LinkBudget {
        dl_snr_db: f64,
        ul_snr_db: f64,
        distance_m: f64,
    }
    let mut budgets: HashMap<String, LinkBudget> = HashMap::new();
    let mut links = Vec::new();
    for ss in scenario.subscribers() {
        let ss_radio = ss.radio.as_ref().expect("validated");
        let distance_m = ss.distance_m_from(bs);
        let loss = pathloss_db(
            scenario.pathloss,
            distance_m,
            bs_radio.carrier_hz,
            bs_radio.height_m,
            ss_radio.height_m,
        )?;
        let dl_snr_db = link_snr_db(bs_radio, ss_radio, loss);
        let ul_snr_db = link_snr_db(ss_radio, bs_radio, loss);
        let dl_margin = dl_profile
            .as_ref()
            .map(|mc| dl_snr_db - mc.required_snr_db)
            .unwrap_or(f64::NEG_INFINITY);
        let max_pdu_bits =
            u64::from(scenario.mac.max_pdu_payload_bytes + crate::mac::PDU_HEADER_BYTES) * 8;
        links.push(LinkReport {
            station: ss.id.clone(),
            distance_m,
            pathloss_db: loss,
            dl_snr_db,
            ul_snr_db,
            dl_profile: dl_profile_label.clone().unwrap_or_else(|| "-".into()),
            dl_margin_db: dl_margin,
            ul_profile: ul_profile_label.clone(),
            ul_margin_db: ul_profile.as_ref().map(|mc| ul_snr_db - mc.required_snr_db),
            dl_sustainable: select_modulation(dl_snr_db, &ladder).map(|mc| mc.label()),
            dl_pdu_loss_prob: pdu_loss_probability(dl_snr_db, dl_profile.as_ref(), max_pdu_bits),
        });
        budgets.insert(
            ss.id.clone(),
            LinkBudget {
                dl_snr_db,
                ul_snr_db,
                distance_m,
            },
        );
    }

    // MAC cell.
    let mac_cfg = MacConfig {
        frame: scenario.frame,
        max_pdu_payload_bytes: scenario.mac.max_pdu_payload_bytes,
        queue_capacity_bytes: scenario.mac.queue_capacity_bytes,
    };
    let flow_configs: Vec<FlowConfig> = scenario
        .flows
        .iter()
        .map(|f| FlowConfig {
            id: f.id.clone(),
            direction: f.direction,
            class: f.class,
            max_sustained_bps: f.max_sustained_bps,
            min_reserved_bps: f.min_reserved_bps,
            tos: f.tos,
        })
        .collect();
    let cell = CellScheduler::new(mac_cfg, flow_configs)?;

    // Per-subframe capacity and air pacing from the per-direction profiles.
    let capacity = SubframeCapacity {
        dl_bytes: subframe_capacity_bytes(
            &scenario.frame,
            Direction::Downlink,
            dl_profile.as_ref(),
            bs_radio,
            &scenario.subcarriers,
        ),
        ul_bytes: subframe_capacity_bytes(
            &scenario.frame,
            Direction::Uplink,
            ul_profile.as_ref(),
            bs_radio,
            &scenario.subcarriers,
        ),
    };
    let air_us_per_byte = [&dl_profile, &ul_profile].map(|p| match p {
        Some(mc) => 8e6 / phy_rate_bps(mc, bs_radio, &scenario.subcarriers),
        None => 0.0,
    });

    // Flow runtimes.
    let mut flow_runtimes: Vec<FlowRuntime> = scenario
        .flows
        .iter()
        .map(|f| {
            let budget = &budgets[&f.station];
            let (snr_db, profile) = match f.direction {
                Direction::Downlink => (budget.dl_snr_db, dl_profile.clone().expect("validated")),
                Direction::Uplink => (budget.ul_snr_db, ul_profile.clone().expect("validated")),
            };
            FlowRuntime {
                records: Vec::new(),
                phy_stream: RandomStream::new(seed, &format!("phy/{}", f.id)),
                shadow_stream: (scenario.shadowing_sigma_db > 0.0)
                    .then(|| RandomStream::new(seed, &format!("shadow/{}", f.id))),
                in_flight: VecDeque::new(),
                snr_db,
                profile,
                propagation: SimTime::from_micros(
                    (budget.distance_m / 299.792_458).round() as u64
                ),
                first_stream_start: None,
                codec: None,
                psnr_db: None,
                queue_series: Vec::new(),
            }
        })
        .collect();

    // Stream runtimes (traces resolved up front so config errors precede
    // the run).
    let mut stream_runtimes = Vec::new();
    let mut stream_index = HashMap::new();
    for spec in &scenario.streams {
        let trace = resolve_trace(spec, base_dir, seed)?;
        let flow_idx = cell
            .classify(Direction::Downlink, spec.tos)
            .expect("validated: downlink BE fallback exists");
        let start = SimTime::from_secs_f64(spec.start_s);
        let flow = &mut flow_runtimes[flow_idx];
        flow.first_stream_start = Some(match flow.first_stream_start {
            Some(t) => t.min(start),
            None => start,
        });
        if flow.codec.is_none() {
            flow.codec = Some(trace.codec.label().to_string());
            flow.psnr_db = trace.mean_psnr_db;
        }
        stream_index.insert(spec.id.clone(), stream_runtimes.len());
        stream_runtimes.push(StreamRuntime {
            flow_idx,
            start,
            fps: trace.fps,
            frame_sizes: trace.records.iter().map(|r| r.size_bytes).collect(),
            next: 0,
            backhaul,
        });
    }

    let flow_index: HashMap<String, usize> = scenario
        .flows
        .iter()
        .enumerate()
        .map(|(i, f)| (f.id.clone(), i))
        .collect();

    let mut world = World {
        cell,
        flows: flow_runtimes,
        streams: stream_runtimes,
        stream_index,
        flow_index,
        capacity,
        frame_duration: scenario.frame.duration(),
        ul_offset: SimTime::from_micros(
            (scenario.frame.duration_us as f64 * scenario.frame.dl_fraction).round() as u64,
        ),
        air_us_per_byte,
        poll_interval: SimTime::from_micros(scenario.mac.poll_interval_us),
        tick: SimTime::from_secs_f64(scenario.measurement_tick_s),
        mtu: scenario.mtu_bytes,
        shadowing_sigma_db: scenario.shadowing_sigma_db,
        grant_log: opts.record_grants.then(Vec::new),
    };

    // Bootstrap the event chains. Polls are scheduled before the first
    // boundary they precede, so a boundary always sees fresh reports.
    let mut engine = Engine::new();
    for (i, f) in scenario.flows.iter().enumerate() {
        if f.direction == Direction::Uplink && f.class.is_polled() {
            engine.schedule(
                world.poll_interval,
                EventKind::Poll,
                EventTarget::Flow(scenario.flows[i].id.clone()),
            )?;
        }
    }
    engine.schedule(SimTime::ZERO, EventKind::FrameBoundary, EventTarget::Cell)?;
    engine.schedule(world.tick, EventKind::MeasurementTick, EventTarget::Cell)?;
    for (spec, rt) in scenario.streams.iter().zip(&world.streams) {
        engine.schedule(
            rt.start + rt.backhaul,
            EventKind::FrameArrival,
            EventTarget::Stream(spec.id.clone()),
        )?;
    }

    let mut event_counts = EventKind::ALL.map(|k| (k.label(), 0u64));
    let mut event_log = opts.record_events.then(Vec::new);
    engine.run_until(duration, |eng, ev| {
        let slot = EventKind::ALL
            .iter()
            .position(|k| *k == ev.kind)
            .expect("known kind");
        event_counts[slot].1 += 1;
        if let Some(log) = &mut event_log {
            log.push(EventRow {
                fire_at_us: ev.fire_at.as_micros(),
                seq: ev.seq,
                kind: ev.kind.label(),
                target: ev.target.to_string(),
            });
        }
        world.handle(eng, ev);
    });

    // Distill results.
    let warmup = SimTime::from_secs_f64(scenario.stats_warmup_s);
    let mut flow_results = Vec::with_capacity(world.flows.len());
    for (idx, spec) in scenario.flows.iter().enumerate() {
        let rt = &world.flows[idx];
        let stats_start = rt.first_stream_start.unwrap_or(SimTime::ZERO) + warmup;
        let window = MeasurementWindow {
            stats_start,
            run_end: duration,
        };
        let metrics = flow_metrics(&rt.records, window);
        debug_assert_eq!(
            metrics.sent,
            metrics.received + metrics.lost_phy + metrics.lost_mac + metrics.residual,
        );
        let verdict = qos_verdict(&metrics, &scenario.thresholds);
        let series = time_series(&rt.records, duration, world.tick);
        flow_results.push(FlowResult {
            flow_id: spec.id.clone(),
            direction: spec.direction,
            class_label: spec.class.label(),
            codec: rt.codec.clone(),
            psnr_db: rt.psnr_db,
            mos: rt.psnr_db.map(psnr_to_mos),
            metrics,
            verdict,
            series,
            queue_series: world.flows[idx].queue_series.clone(),
            records: std::mem::take(&mut world.flows[idx].records),
        });
    }

    let grants = world.grant_log.take().map(|log| {
        log.into_iter()
            .map(|g| GrantRow {
                frame_index: g.frame_index,
                flow_id: world.cell.flow_id(g.flow_idx).to_string(),
                subframe: g.subframe.label(),
                bytes_granted: g.bytes_granted,
            })
            .collect()
    });

    Ok(RunResult {
        scenario_name: scenario.name.clone(),
        seed,
        duration_s: scenario.duration_s,
        thresholds: scenario.thresholds,
        flows: flow_results,
        links,
        event_counts,
        grants,
        events: event_log,
    })
}

/// Summary of one sweep run, aggregated over the flows that carry video.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    /// Worst downlink SNR across subscriber links.
    pub min_dl_snr_db: f64,
    pub delay_avg_s: Option<f64>,
    pub jitter_avg_s: Option<f64>,
    pub throughput_avg_bps: f64,
    pub loss_ratio: Option<f64>,
    pub psnr_db: Option<f64>,
    pub mos: Option<u8>,
    pub passed: usize,
    pub flow_count: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn summarize(axis: &str, value: &serde_json::Value, result: &RunResult) -> SweepRow {
    let video: Vec<&FlowResult> = result.flows.iter().filter(|f| f.codec.is_some()).collect();
    let psnr = mean(video.iter().filter_map(|f| f.psnr_db));
    SweepRow {
        axis: axis.to_string(),
        value: match value {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        },
        min_dl_snr_db: result
            .links
            .iter()
            .map(|l| l.dl_snr_db)
            .fold(f64::INFINITY, f64::min),
        delay_avg_s: mean(video.iter().filter_map(|f| f.metrics.delay_avg_s)),
        jitter_avg_s: mean(video.iter().filter_map(|f| f.metrics.jitter_avg_s)),
        throughput_avg_bps: mean(video.iter().map(|f| f.metrics.throughput_bps)).unwrap_or(0.0),
        loss_ratio: mean(video.iter().filter_map(|f| f.metrics.loss_ratio)),
        psnr_db: psnr,
        mos: psnr.map(psnr_to_mos),
        passed: video.iter().filter(|f| f.verdict == Verdict::Pass).count(),
        flow_count: video.len(),
    }
}

fn apply_axis(
    base: &Scenario,
    axis: &str,
    value: &serde_json::Value,
) -> Result<Scenario, RunError> {
    let err = |message: String| RunError::Axis {
        axis: axis.to_string(),
        message,
    };
    match axis {
        // Swap every stream source to the named codec preset, keeping each
        // stream's frame count.
        "codec" => {
            let name = value
                .as_str()
                .ok_or_else(|| err(format!("expected a codec name, got {value}")))?;
            if CodecPreset::by_name(name).is_none() {
                return Err(err(format!("unknown codec preset {name:?} (known: svc, avc)")));
            }
            let mut s = base.clone();
            for stream in &mut s.streams {
                let frames = match &stream.source {
                    StreamSource::Preset { frames, .. } => *frames,
                    StreamSource::Synthetic { frames, .. } => *frames,
                    StreamSource::Trace { .. } => {
                        return Err(err(format!(
                            "stream {:?} replays a trace file; the codec axis needs \
                             synthesized sources",
                            stream.id
                        )));
                    }
                };
                stream.source = StreamSource::Preset {
                    name: name.to_string(),
                    frames,
                };
            }
            s.validate()?;
            Ok(s)
        }
        // Move every subscriber radially to the given distance.
        "distance_m" | "distance_km" => {
            let d = value
                .as_f64()
                .ok_or_else(|| err(format!("expected a number, got {value}")))?;
            let d = if axis == "distance_km" { d * 1e3 } else { d };
            if !(d > 0.0 && d.is_finite()) {
                return Err(err("distance must be positive".into()));
            }
            let mut s = base.clone();
            let bs_pos = base.base_station().position_m;
            for node in &mut s.nodes {
                if node.kind != crate::scenario::NodeKind::SubscriberStation {
                    continue;
                }
                let dx = node.position_m[0] - bs_pos[0];
                let dy = node.position_m[1] - bs_pos[1];
                let norm = (dx * dx + dy * dy).sqrt();
                if norm == 0.0 {
                    return Err(err(format!(
                        "station {:?} sits on the base station; no direction to scale",
                        node.id
                    )));
                }
                node.position_m = [bs_pos[0] + dx / norm * d, bs_pos[1] + dy / norm * d];
            }
            s.validate()?;
            Ok(s)
        }
        // Anything else is a dotted path into the scenario document.
        path => {
            let mut doc = serde_json::to_value(base).expect("scenario serializes");
            set_json_path(&mut doc, path, value.clone()).map_err(err)?;
            let text = serde_json::to_string(&doc).expect("value serializes");
            Ok(Scenario::from_json(&text)?)
        }
    }
}

fn set_json_path(
    root: &mut serde_json::Value,
    path: &str,
    value: serde_json::Value,
) -> Result<(), String> {
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cursor = match cursor {
            serde_json::Value::Object(map) => {
                let Some(slot) = map.get_mut(*segment) else {
                    return Err(format!(
                        "no field {:?} at {}",
                        segment,
                        if i == 0 { "the document root" } else { &path[..path.len() - segment.len() - 1] }
                    ));
                };
                slot
            }
            serde_json::Value::Array(items) => {
                let idx: usize = segment
                    .parse()
                    .map_err(|_| format!("segment {segment:?} must index an array"))?;
                items
                    .get_mut(idx)
                    .ok_or_else(|| format!("index {idx} out of bounds"))?
            }
            other => {
                return Err(format!(
                    "segment {:?} descends into a scalar ({other})",
                    segment
                ));
            }
        };
        if last {
            *cursor = value;
            return Ok(());
        }
    }
    Err("empty axis path".into())
}

/// Runs the base scenario once per value of the swept axis. Rows come back
/// in `values` order; every run uses the same seed, so permuting values
/// permutes rows without changing any number.
pub fn sweep(
    base: &Scenario,
    base_dir: &Path,
    axis: &str,
    values: &[serde_json::Value],
    opts: &RunOptions,
) -> Result<Vec<SweepRow>, RunError> {
    // Validate the whole axis up front: a bad value must fail before any
    // simulation runs.
    let scenarios: Vec<Scenario> = values
        .iter()
        .map(|v| apply_axis(base, axis, v))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(scenarios.len());
    for (value, scenario) in values.iter().zip(&scenarios) {
        let result = run(scenario, base_dir, opts)?;
        rows.push(summarize(axis, value, &result));
    }
    Ok(rows)
}
