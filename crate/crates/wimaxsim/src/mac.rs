//! MAC layer: service flows, token-bucket rate policing, the per-frame
//! grant scheduler, fragmentation and the uplink polling cycle.
//!
//! The cell runs TDD frames. At every frame boundary the scheduler refills
//! per-flow token buckets and allocates each subframe's byte capacity in two
//! passes over the non-best-effort classes (minimum reservations first, then
//! up to the sustained cap), strictly in class priority order with a
//! rotating start inside each class. Best effort shares whatever is left in
//! round-robin quanta. Downlink flows are scheduled against their live
//! queues; polled uplink flows are scheduled against the backlog they last
//! reported, so a grant can lag reality by up to one poll interval.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phy::{phy_rate_bps, ModulationCoding, RadioConfig, SubcarrierPlan};
use crate::sim::SimTime;

/// MAC header bytes carried by every PDU (fragment) on the air.
pub const PDU_HEADER_BYTES: u32 = 6;

/// Token-bucket depth expressed as time at the configured rate: a flow can
/// burst at most this much credit.
pub const BUCKET_WINDOW: SimTime = SimTime::from_millis(100);

/// Round-robin quantum for best-effort grants.
pub const BE_QUANTUM_BYTES: u64 = 1_536;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MacError {
    #[error("duplicate flow id {0:?}")]
    DuplicateFlowId(String),
    #[error("flows {first:?} and {second:?} share ToS {tos} on the same direction")]
    DuplicateTos { first: String, second: String, tos: u8 },
    #[error("flow {0:?}: min_reserved_bps exceeds max_sustained_bps")]
    ReservationExceedsCap(String),
    #[error("flow {0:?}: best-effort flows cannot reserve bandwidth")]
    BeWithReservation(String),
    #[error("{0:?} direction has flows but no best-effort fallback")]
    MissingBeFallback(Direction),
    #[error("invalid TDD frame: {0}")]
    InvalidFrame(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Downlink,
    Uplink,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Downlink => "downlink",
            Direction::Uplink => "uplink",
        }
    }
}

/// 802.16 scheduling services in priority order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchedulingClass {
    #[serde(rename = "UGS")]
    Ugs,
    #[serde(rename = "ertPS")]
    Ertps,
    #[serde(rename = "rtPS")]
    Rtps,
    #[serde(rename = "nrtPS")]
    Nrtps,
    #[serde(rename = "BE")]
    Be,
}

impl SchedulingClass {
    pub fn label(self) -> &'static str {
        match self {
            SchedulingClass::Ugs => "UGS",
            SchedulingClass::Ertps => "ertPS",
            SchedulingClass::Rtps => "rtPS",
            SchedulingClass::Nrtps => "nrtPS",
            SchedulingClass::Be => "BE",
        }
    }

    /// True for classes whose uplink backlog is learned through polling
    /// rather than unsolicited grants.
    pub fn is_polled(self) -> bool {
        !matches!(self, SchedulingClass::Ugs)
    }
}

/// Allocation order for the reservation passes (best effort handled apart).
const RESERVING_CLASSES: [SchedulingClass; 4] = [
    SchedulingClass::Ugs,
    SchedulingClass::Ertps,
    SchedulingClass::Rtps,
    SchedulingClass::Nrtps,
];

/// TDD air-frame shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TddFrame {
    pub duration_us: u64,
    pub dl_fraction: f64,
}

impl Default for TddFrame {
    fn default() -> Self {
        TddFrame {
            duration_us: 5_000,
            dl_fraction: 0.67,
        }
    }
}

impl TddFrame {
    pub fn duration(&self) -> SimTime {
        SimTime::from_micros(self.duration_us)
    }

    pub fn fraction(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Downlink => self.dl_fraction,
            Direction::Uplink => 1.0 - self.dl_fraction,
        }
    }

    pub fn subframe_duration_us(&self, direction: Direction) -> f64 {
        self.duration_us as f64 * self.fraction(direction)
    }

    pub fn validate(&self) -> Result<(), MacError> {
        if self.duration_us == 0 {
            return Err(MacError::InvalidFrame("duration_us must be > 0".into()));
        }
        if !(self.dl_fraction > 0.0 && self.dl_fraction < 1.0) {
            return Err(MacError::InvalidFrame(format!(
                "dl_fraction {} outside (0, 1)",
                self.dl_fraction
            )));
        }
        Ok(())
    }
}

/// Bytes a subframe can move in one frame at the given burst profile.
/// An outage profile (`None`) moves nothing.
pub fn subframe_capacity_bytes(
    frame: &TddFrame,
    direction: Direction,
    mc: Option<&ModulationCoding>,
    radio: &RadioConfig,
    plan: &SubcarrierPlan,
) -> u64 {
    let Some(mc) = mc else {
        return 0;
    };
    let rate = phy_rate_bps(mc, radio, plan);
    let seconds = frame.duration_us as f64 / 1e6;
    (rate * seconds * frame.fraction(direction) / 8.0).floor() as u64
}

/// Splits an SDU into fragment payload sizes, each at most
/// `max_payload_bytes`. Fragments additionally carry [`PDU_HEADER_BYTES`]
/// each on the air; the returned sizes sum to exactly `sdu_bytes`.
///
/// # Panics
/// If `max_payload_bytes` is zero.
pub fn fragment(sdu_bytes: u32, max_payload_bytes: u32) -> Vec<u32> {
    assert!(max_payload_bytes > 0, "max_payload_bytes must be > 0");
    let mut sizes = Vec::with_capacity(sdu_bytes.div_ceil(max_payload_bytes) as usize);
    let mut remaining = sdu_bytes;
    while remaining > 0 {
        let take = remaining.min(max_payload_bytes);
        sizes.push(take);
        remaining -= take;
    }
    sizes
}

/// Integer token bucket. Tokens are bits; refill accumulates sub-bit
/// remainders exactly so long-run credit matches the configured rate with
/// zero drift.
#[derive(Clone, Debug)]
pub struct TokenBucket {
    rate_bps: u64,
    depth_bits: u64,
    tokens_bits: u64,
    carry_microbits: u64,
}

impl TokenBucket {
    /// A bucket holding up to `window` worth of credit at `rate_bps`,
    /// starting full.
    pub fn new(rate_bps: u64, window: SimTime) -> TokenBucket {
        let depth_bits = ((rate_bps as u128 * window.as_micros() as u128) / 1_000_000) as u64;
        TokenBucket {
            rate_bps,
            depth_bits,
            tokens_bits: depth_bits,
            carry_microbits: 0,
        }
    }

    pub fn refill(&mut self, elapsed: SimTime) {
        let microbits =
            self.rate_bps as u128 * elapsed.as_micros() as u128 + self.carry_microbits as u128;
        let add = (microbits / 1_000_000) as u64;
        self.carry_microbits = (microbits % 1_000_000) as u64;
        self.tokens_bits = self.tokens_bits.saturating_add(add).min(self.depth_bits);
    }

    pub fn available_bytes(&self) -> u64 {
        self.tokens_bits / 8
    }

    pub fn consume_bytes(&mut self, bytes: u64) {
        self.tokens_bits = self.tokens_bits.saturating_sub(bytes * 8);
    }

    pub fn depth_bits(&self) -> u64 {
        self.depth_bits
    }
}

/// Static definition of a service flow.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub id: String,
    pub direction: Direction,
    pub class: SchedulingClass,
    /// Rate cap in bits/s; 0 means uncapped.
    pub max_sustained_bps: u64,
    /// Guaranteed rate in bits/s.
    pub min_reserved_bps: u64,
    pub tos: u8,
}

/// One queued SDU. `tag` is an opaque caller-side handle (the simulator uses
/// it to find the packet record).
#[derive(Clone, Copy, Debug)]
pub struct Sdu {
    pub payload_bytes: u32,
    pub tag: u64,
}

#[derive(Clone, Copy, Debug)]
struct QueuedSdu {
    payload_bytes: u32,
    sent_bytes: u32,
    tag: u64,
}

/// One PDU handed to the PHY.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PduTx {
    pub tag: u64,
    pub payload_bytes: u32,
    pub air_bytes: u32,
    /// True when this PDU carries the SDU's last fragment.
    pub sdu_complete: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    /// Tail-dropped: the flow queue would exceed its byte capacity.
    Dropped,
}

struct FlowState {
    config: FlowConfig,
    queue: VecDeque<QueuedSdu>,
    queued_payload_bytes: u64,
    /// Exact air bytes needed to drain the queue (payload plus a header per
    /// remaining fragment), maintained incrementally.
    queued_air_bytes: u64,
    min_bucket: TokenBucket,
    max_bucket: Option<TokenBucket>,
    /// Uplink only: air backlog reported at the last poll, minus grants
    /// issued against it since.
    polled_budget_bytes: u64,
    mac_drops: u64,
    mac_dropped_bytes: u64,
}

impl FlowState {
    fn new(config: FlowConfig) -> FlowState {
        let min_bucket = TokenBucket::new(config.min_reserved_bps, BUCKET_WINDOW);
        let max_bucket = if config.max_sustained_bps > 0 {
            Some(TokenBucket::new(config.max_sustained_bps, BUCKET_WINDOW))
        } else {
            None
        };
        FlowState {
            config,
            queue: VecDeque::new(),
            queued_payload_bytes: 0,
            queued_air_bytes: 0,
            min_bucket,
            max_bucket,
            polled_budget_bytes: 0,
            mac_drops: 0,
            mac_dropped_bytes: 0,
        }
    }

    fn air_bytes_for(remaining_payload: u32, max_payload: u32) -> u64 {
        if remaining_payload == 0 {
            return 0;
        }
        u64::from(remaining_payload)
            + u64::from(remaining_payload.div_ceil(max_payload)) * u64::from(PDU_HEADER_BYTES)
    }

    /// Air bytes the scheduler may usefully grant this flow right now.
    fn demand_bytes(&self) -> u64 {
        if self.config.direction == Direction::Uplink && self.config.class.is_polled() {
            self.polled_budget_bytes
        } else {
            self.queued_air_bytes
        }
    }

    fn max_tokens_bytes(&self) -> u64 {
        self.max_bucket
            .as_ref()
            .map_or(u64::MAX, TokenBucket::available_bytes)
    }

    fn consume(&mut self, bytes: u64, from_min_pass: bool) {
        if from_min_pass {
            self.min_bucket.consume_bytes(bytes);
        }
        if let Some(b) = &mut self.max_bucket {
            b.consume_bytes(bytes);
        }
        if self.config.direction == Direction::Uplink && self.config.class.is_polled() {
            self.polled_budget_bytes = self.polled_budget_bytes.saturating_sub(bytes);
        }
    }
}

/// One scheduler decision: `bytes_granted` air bytes for one flow in one
/// subframe of frame `frame_index`. Emitted in allocation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grant {
    pub frame_index: u64,
    pub flow_idx: usize,
    pub subframe: Direction,
    pub bytes_granted: u64,
}

/// Capacity the PHY offers each subframe this frame, in air bytes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SubframeCapacity {
    pub dl_bytes: u64,
    pub ul_bytes: u64,
}

impl SubframeCapacity {
    fn get(&self, direction: Direction) -> u64 {
        match direction {
            Direction::Downlink => self.dl_bytes,
            Direction::Uplink => self.ul_bytes,
        }
    }
}

pub struct MacConfig {
    pub frame: TddFrame,
    pub max_pdu_payload_bytes: u32,
    pub queue_capacity_bytes: u64,
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig {
            frame: TddFrame::default(),
            max_pdu_payload_bytes: 1_024,
            queue_capacity_bytes: 2 * 1024 * 1024,
        }
    }
}

/// Per-cell scheduler state: every service flow of both directions.
pub struct CellScheduler {
    cfg: MacConfig,
    flows: Vec<FlowState>,
    frame_index: u64,
    be_cursor: [usize; 2],
}

impl CellScheduler {
    pub fn new(cfg: MacConfig, flow_configs: Vec<FlowConfig>) -> Result<CellScheduler, MacError> {
        cfg.frame.validate()?;
        for (i, a) in flow_configs.iter().enumerate() {
            if !(a.max_sustained_bps == 0 || a.min_reserved_bps <= a.max_sustained_bps) {
                return Err(MacError::ReservationExceedsCap(a.id.clone()));
            }
            if a.class == SchedulingClass::Be && a.min_reserved_bps > 0 {
                return Err(MacError::BeWithReservation(a.id.clone()));
            }
            for b in &flow_configs[i + 1..] {
                if a.id == b.id {
                    return Err(MacError::DuplicateFlowId(a.id.clone()));
                }
                if a.direction == b.direction && a.tos == b.tos {
                    return Err(MacError::DuplicateTos {
                        first: a.id.clone(),
                        second: b.id.clone(),
                        tos: a.tos,
                    });
                }
            }
        }
        for direction in [Direction::Downlink, Direction::Uplink] {
            let with_dir = flow_configs.iter().filter(|f| f.direction == direction);
            if with_dir.clone().count() > 0
                && !with_dir.clone().any(|f| f.class == SchedulingClass::Be)
            {
                return Err(MacError::MissingBeFallback(direction));
            }
        }
        Ok(CellScheduler {
            cfg,
            flows: flow_configs.into_iter().map(FlowState::new).collect(),
            frame_index: 0,
            be_cursor: [0, 0],
        })
    }

    pub fn config(&self) -> &MacConfig {
        &self.cfg
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    pub fn flow_id(&self, idx: usize) -> &str {
        &self.flows[idx].config.id
    }

    pub fn flow_config(&self, idx: usize) -> &FlowConfig {
        &self.flows[idx].config
    }

    pub fn flow_index(&self, id: &str) -> Option<usize> {
        self.flows.iter().position(|f| f.config.id == id)
    }

    pub fn queued_payload_bytes(&self, idx: usize) -> u64 {
        self.flows[idx].queued_payload_bytes
    }

    pub fn mac_drops(&self, idx: usize) -> u64 {
        self.flows[idx].mac_drops
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    /// Maps a packet to a service flow by exact ToS match in its direction,
    /// falling back to the direction's first best-effort flow.
    pub fn classify(&self, direction: Direction, tos: u8) -> Option<usize> {
        let mut be = None;
        for (i, f) in self.flows.iter().enumerate() {
            if f.config.direction != direction {
                continue;
            }
            if f.config.tos == tos {
                return Some(i);
            }
            if be.is_none() && f.config.class == SchedulingClass::Be {
                be = Some(i);
            }
        }
        be
    }

    /// Appends an SDU to the flow's queue, tail-dropping when the byte cap
    /// is exceeded.
    pub fn enqueue(&mut self, flow_idx: usize, sdu: Sdu) -> EnqueueOutcome {
        let max_payload = self.cfg.max_pdu_payload_bytes;
        let f = &mut self.flows[flow_idx];
        if f.queued_payload_bytes + u64::from(sdu.payload_bytes) > self.cfg.queue_capacity_bytes {
            f.mac_drops += 1;
            f.mac_dropped_bytes += u64::from(sdu.payload_bytes);
            return EnqueueOutcome::Dropped;
        }
        f.queued_payload_bytes += u64::from(sdu.payload_bytes);
        f.queued_air_bytes += FlowState::air_bytes_for(sdu.payload_bytes, max_payload);
        f.queue.push_back(QueuedSdu {
            payload_bytes: sdu.payload_bytes,
            sent_bytes: 0,
            tag: sdu.tag,
        });
        EnqueueOutcome::Accepted
    }

    /// Bandwidth-request poll: the flow reports its current air backlog,
    /// which becomes the budget for subsequent uplink grants.
    pub fn poll(&mut self, flow_idx: usize) {
        let f = &mut self.flows[flow_idx];
        f.polled_budget_bytes = f.queued_air_bytes;
    }

    fn members_of(&self, direction: Direction, class: SchedulingClass) -> Vec<usize> {
        self.flows
            .iter()
            .enumerate()
            .filter(|(_, f)| f.config.direction == direction && f.config.class == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// Runs the grant scheduler for the next frame and advances the frame
    /// counter. Total grants per subframe never exceed its capacity.
    pub fn schedule_frame(&mut self, capacity: SubframeCapacity) -> Vec<Grant> {
        let frame_index = self.frame_index;
        self.frame_index += 1;
        let elapsed = self.cfg.frame.duration();
        for f in &mut self.flows {
            f.min_bucket.refill(elapsed);
            if let Some(b) = &mut f.max_bucket {
                b.refill(elapsed);
            }
        }

        let mut grants: Vec<Grant> = Vec::new();
        let mut granted_now = vec![0u64; self.flows.len()];
        let add_grant = |grants: &mut Vec<Grant>,
                             granted_now: &mut Vec<u64>,
                             flow_idx: usize,
                             subframe: Direction,
                             bytes: u64| {
            granted_now[flow_idx] += bytes;
            if let Some(g) = grants
                .iter_mut()
                .find(|g| g.flow_idx == flow_idx && g.subframe == subframe)
            {
                g.bytes_granted += bytes;
            } else {
                grants.push(Grant {
                    frame_index,
                    flow_idx,
                    subframe,
                    bytes_granted: bytes,
                });
            }
        };

        for direction in [Direction::Downlink, Direction::Uplink] {
            let mut remaining = capacity.get(direction);

            // Pass 1: minimum reservations, class priority order. UGS gets
            // its periodic grant whether or not it has anything queued.
            for class in RESERVING_CLASSES {
                let members = self.rotated_members(direction, class, frame_index);
                for idx in members {
                    if remaining == 0 {
                        break;
                    }
                    let f = &mut self.flows[idx];
                    let want = if class == SchedulingClass::Ugs {
                        f.min_bucket.available_bytes()
                    } else {
                        f.demand_bytes().min(f.min_bucket.available_bytes())
                    };
                    let g = want.min(remaining);
                    if g > 0 {
                        f.consume(g, true);
                        remaining -= g;
                        add_grant(&mut grants, &mut granted_now, idx, direction, g);
                    }
                }
            }

            // Pass 2: up to the sustained cap, same priority order.
            for class in RESERVING_CLASSES {
                if class == SchedulingClass::Ugs {
                    continue;
                }
                let members = self.rotated_members(direction, class, frame_index);
                for idx in members {
                    if remaining == 0 {
                        break;
                    }
                    let f = &mut self.flows[idx];
                    let demand_left = f.demand_bytes();
                    let g = demand_left.min(f.max_tokens_bytes()).min(remaining);
                    if g > 0 {
                        f.consume(g, false);
                        remaining -= g;
                        add_grant(&mut grants, &mut granted_now, idx, direction, g);
                    }
                }
            }

            // Best effort: residual capacity in round-robin quanta with a
            // cursor that survives across frames.
            let members = self.members_of(direction, SchedulingClass::Be);
            if !members.is_empty() {
                let dir_slot = usize::from(direction == Direction::Uplink);
                let mut cursor = self.be_cursor[dir_slot];
                let mut idle = 0;
                while remaining > 0 && idle < members.len() {
                    let idx = members[cursor % members.len()];
                    cursor += 1;
                    let f = &mut self.flows[idx];
                    let g = f
                        .demand_bytes()
                        .min(BE_QUANTUM_BYTES)
                        .min(f.max_tokens_bytes())
                        .min(remaining);
                    if g == 0 {
                        idle += 1;
                        continue;
                    }
                    idle = 0;
                    f.consume(g, false);
                    remaining -= g;
                    add_grant(&mut grants, &mut granted_now, idx, direction, g);
                }
                self.be_cursor[dir_slot] = cursor % members.len();
            }
        }
        grants
    }

    fn rotated_members(
        &self,
        direction: Direction,
        class: SchedulingClass,
        frame_index: u64,
    ) -> Vec<usize> {
        let mut members = self.members_of(direction, class);
        if members.len() > 1 {
            let shift = (frame_index % members.len() as u64) as usize;
            members.rotate_left(shift);
        }
        members
    }

    /// Converts up to `granted_bytes` of a flow's queue into PDUs, FIFO,
    /// fragmenting the head SDU as needed. Grant bytes that cannot fit a
    /// header plus at least one payload byte are forfeited.
    pub fn take_granted(&mut self, flow_idx: usize, granted_bytes: u64) -> Vec<PduTx> {
        let max_payload = self.cfg.max_pdu_payload_bytes;
        let f = &mut self.flows[flow_idx];
        let mut remaining = granted_bytes;
        let mut out = Vec::new();
        while remaining > u64::from(PDU_HEADER_BYTES) {
            let Some(head) = f.queue.front_mut() else {
                break;
            };
            let rem_payload = head.payload_bytes - head.sent_bytes;
            let room = (remaining - u64::from(PDU_HEADER_BYTES)).min(u64::from(u32::MAX)) as u32;
            let chunk = rem_payload.min(max_payload).min(room);
            if chunk == 0 {
                break;
            }
            let before = FlowState::air_bytes_for(rem_payload, max_payload);
            let after = FlowState::air_bytes_for(rem_payload - chunk, max_payload);
            head.sent_bytes += chunk;
            let complete = head.sent_bytes == head.payload_bytes;
            let tag = head.tag;
            if complete {
                f.queue.pop_front();
            }
            f.queued_payload_bytes -= u64::from(chunk);
            f.queued_air_bytes = f.queued_air_bytes - before + after;
            remaining -= u64::from(chunk) + u64::from(PDU_HEADER_BYTES);
            out.push(PduTx {
                tag,
                payload_bytes: chunk,
                air_bytes: chunk + PDU_HEADER_BYTES,
                sdu_complete: complete,
            });
        }
        out
    }
}
