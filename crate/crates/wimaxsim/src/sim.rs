//! Discrete-event core: a microsecond-resolution clock, a totally ordered
//! event queue, and named deterministic random streams.
//!
//! Every run is a pure function of (inputs, seed). Two rules make that hold:
//! events dispatch in `(fire_at, seq)` order where `seq` is issued at
//! scheduling time, so simultaneous events pop FIFO; and every consumer of
//! randomness owns a named stream derived from `(seed, stream_id)`, so adding
//! a consumer never perturbs the draws seen by existing ones.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Simulation instant (or duration) in integer microseconds.
///
/// Integer time keeps event ordering exact and comparisons portable; all
/// arithmetic saturates instead of wrapping.
#[derive(
    Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000)
    }

    /// Rounds to the nearest microsecond. Negative or non-finite input is
    /// clamped to zero.
    pub fn from_secs_f64(s: f64) -> Self {
        if !s.is_finite() || s <= 0.0 {
            return SimTime(0);
        }
        SimTime((s * 1e6).round() as u64)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn saturating_add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    /// Scales a duration by an integer count, saturating on overflow.
    pub fn saturating_mul(self, n: u64) -> SimTime {
        SimTime(self.0.saturating_mul(n))
    }
}

impl std::ops::Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        self.saturating_add(rhs)
    }
}

impl std::ops::AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        *self = *self + rhs;
    }
}

impl std::ops::Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        self.saturating_sub(rhs)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}s", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

/// What an event means to the dispatcher.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// A video frame reaches the cell ingress and is ready to enqueue.
    FrameArrival,
    /// Start of a TDD air frame; the scheduler allocates grants here.
    FrameBoundary,
    /// Last fragment of a packet finished its air transmission.
    TransmissionComplete,
    /// Uplink bandwidth-request poll for one service flow.
    Poll,
    /// Periodic statistics snapshot.
    MeasurementTick,
}

impl EventKind {
    pub const ALL: [EventKind; 5] = [
        EventKind::FrameArrival,
        EventKind::FrameBoundary,
        EventKind::TransmissionComplete,
        EventKind::Poll,
        EventKind::MeasurementTick,
    ];

    /// Stable label used in event-trace dumps.
    pub fn label(self) -> &'static str {
        match self {
            EventKind::FrameArrival => "frame-arrival",
            EventKind::FrameBoundary => "frame-boundary",
            EventKind::TransmissionComplete => "transmission-complete",
            EventKind::Poll => "poll",
            EventKind::MeasurementTick => "measurement-tick",
        }
    }
}

/// Addressee of an event. The meaning of the identifier depends on the kind:
/// streams receive frame arrivals, flows receive polls and transmission
/// completions, the cell as a whole receives frame boundaries and ticks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EventTarget {
    Cell,
    Stream(String),
    Flow(String),
}

impl fmt::Display for EventTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventTarget::Cell => f.write_str("cell"),
            EventTarget::Stream(s) | EventTarget::Flow(s) => f.write_str(s),
        }
    }
}

/// A scheduled occurrence. `seq` is issued in scheduling order and breaks
/// ties between events that share a `fire_at`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub fire_at: SimTime,
    pub seq: u64,
    pub kind: EventKind,
    pub target: EventTarget,
}

/// Token for cancelling a scheduled event.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("cannot schedule event at {fire_at} before current clock {now}")]
    SchedulePast { fire_at: SimTime, now: SimTime },
}

/// Event queue plus monotone clock.
///
/// The engine is deliberately passive: it orders and dispatches events, and
/// the caller's closure owns all model state. Popping an event advances the
/// clock to its `fire_at`; the clock never moves backwards.
pub struct Engine {
    clock: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Reverse<(SimTime, u64)>>,
    // Cancelling removes the entry here; stale heap keys are skipped on pop.
    pending: HashMap<u64, (EventKind, EventTarget)>,
}

impl Engine {
    pub fn new() -> Self {
        Engine {
            clock: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            pending: HashMap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Schedules an event at `fire_at` (which may equal the current clock).
    pub fn schedule(
        &mut self,
        fire_at: SimTime,
        kind: EventKind,
        target: EventTarget,
    ) -> Result<EventHandle, SimError> {
        if fire_at < self.clock {
            return Err(SimError::SchedulePast {
                fire_at,
                now: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse((fire_at, seq)));
        self.pending.insert(seq, (kind, target));
        Ok(EventHandle(seq))
    }

    /// Removes a not-yet-dispatched event. Returns false if it already fired
    /// or was cancelled before.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.pending.remove(&handle.0).is_some()
    }

    /// Pops the next event with `fire_at <= t_end`, advancing the clock to
    /// its fire time. Returns None when no such event remains.
    pub fn pop_due(&mut self, t_end: SimTime) -> Option<Event> {
        while let Some(&Reverse((fire_at, seq))) = self.queue.peek() {
            if fire_at > t_end {
                return None;
            }
            self.queue.pop();
            if let Some((kind, target)) = self.pending.remove(&seq) {
                debug_assert!(fire_at >= self.clock);
                self.clock = fire_at;
                return Some(Event {
                    fire_at,
                    seq,
                    kind,
                    target,
                });
            }
            // Cancelled entry: skip without touching the clock.
        }
        None
    }

    /// Dispatches every event with `fire_at <= t_end` in `(fire_at, seq)`
    /// order, invoking `on_event` for each. New events may be scheduled from
    /// the callback and are dispatched in the same pass when due. On return
    /// the clock sits at `t_end` (it never decreases). Returns the number of
    /// dispatched events; cancelled events are neither dispatched nor
    /// counted.
    pub fn run_until(
        &mut self,
        t_end: SimTime,
        mut on_event: impl FnMut(&mut Engine, &Event),
    ) -> u64 {
        let mut dispatched = 0;
        while let Some(event) = self.pop_due(t_end) {
            on_event(self, &event);
            dispatched += 1;
        }
        if t_end > self.clock {
            self.clock = t_end;
        }
        dispatched
    }
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new()
    }
}

/// Named deterministic random stream.
///
/// The generator is pinned: ChaCha12 keyed with SHA-256 over the 64-bit
/// scenario seed (little-endian) followed by the stream id bytes. Identical
/// `(seed, id)` pairs yield identical draw sequences on every platform, and
/// distinct ids yield independent streams. Changing the generator or the
/// derivation would silently invalidate recorded runs; don't.
pub struct RandomStream {
    id: String,
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64, id: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(id.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        RandomStream {
            id: id.to_string(),
            rng: ChaCha12Rng::from_seed(key),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in [0, 1) with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// True with probability `p` (clamped to [0, 1]).
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]: keeps ln() finite
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Gamma draw (Marsaglia-Tsang squeeze for shape >= 1, boosted below).
    ///
    /// # Panics
    /// If `shape` or `scale` is not strictly positive.
    pub fn gamma(&mut self, shape: f64, scale: f64) -> f64 {
        assert!(shape > 0.0 && scale > 0.0, "gamma parameters must be > 0");
        if shape < 1.0 {
            let boost = self.uniform().powf(1.0 / shape);
            return self.gamma(shape + 1.0, scale) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            if u < 1.0 - 0.0331 * x.powi(4) {
                return d * v * scale;
            }
            if u > 0.0 && u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
                return d * v * scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_conversions_are_exact() {
        assert_eq!(SimTime::from_secs(70).as_micros(), 70_000_000);
        assert_eq!(SimTime::from_millis(5).as_micros(), 5_000);
        assert_eq!(SimTime::from_secs_f64(0.0333335).as_micros(), 33_334);
        assert_eq!(SimTime::from_secs_f64(-1.0), SimTime::ZERO);
        assert_eq!(SimTime::from_secs(1).as_secs_f64(), 1.0);
    }

    #[test]
    fn time_arithmetic_saturates() {
        assert_eq!(SimTime::MAX + SimTime::from_secs(1), SimTime::MAX);
        assert_eq!(SimTime::ZERO - SimTime::from_secs(1), SimTime::ZERO);
        assert_eq!(SimTime::MAX.saturating_mul(2), SimTime::MAX);
    }

    #[test]
    fn events_dispatch_in_time_then_seq_order() {
        let mut engine = Engine::new();
        // Scheduled out of order on purpose; two share fire_at = 50.
        for (us, kind) in [
            (300, EventKind::MeasurementTick),
            (50, EventKind::FrameArrival),
            (50, EventKind::FrameBoundary),
            (10, EventKind::Poll),
            (200, EventKind::TransmissionComplete),
        ] {
            engine
                .schedule(SimTime::from_micros(us), kind, EventTarget::Cell)
                .unwrap();
        }
        let mut order = Vec::new();
        engine.run_until(SimTime::from_micros(1_000), |_, ev| {
            order.push((ev.fire_at.as_micros(), ev.seq, ev.kind));
        });
        let times: Vec<u64> = order.iter().map(|(t, _, _)| *t).collect();
        assert_eq!(times, vec![10, 50, 50, 200, 300]);
        // FIFO between the two events at t = 50: FrameArrival was scheduled first.
        assert_eq!(order[1].2, EventKind::FrameArrival);
        assert_eq!(order[2].2, EventKind::FrameBoundary);
        assert!(order[1].1 < order[2].1);
    }

    #[test]
    fn scheduling_in_the_past_is_an_error() {
        let mut engine = Engine::new();
        engine
            .schedule(
                SimTime::from_micros(100),
                EventKind::Poll,
                EventTarget::Cell,
            )
            .unwrap();
        engine.run_until(SimTime::from_micros(100), |_, _| {});
        let err = engine
            .schedule(
                SimTime::from_micros(99),
                EventKind::Poll,
                EventTarget::Cell,
            )
            .unwrap_err();
        assert_eq!(
            err,
            SimError::SchedulePast {
                fire_at: SimTime::from_micros(99),
                now: SimTime::from_micros(100),
            }
        );
        // Scheduling exactly at the clock is allowed.
        assert!(engine
            .schedule(
                SimTime::from_micros(100),
                EventKind::Poll,
                EventTarget::Cell
            )
            .is_ok());
    }

    #[test]
    fn cancelled_events_never_dispatch_and_are_not_counted() {
        let mut engine = Engine::new();
        let keep = engine
            .schedule(
                SimTime::from_micros(10),
                EventKind::Poll,
                EventTarget::Cell,
            )
            .unwrap();
        let drop = engine
            .schedule(
                SimTime::from_micros(20),
                EventKind::Poll,
                EventTarget::Cell,
            )
            .unwrap();
        assert!(engine.cancel(drop));
        assert!(!engine.cancel(drop), "double cancel reports false");
        let mut seen = Vec::new();
        let n = engine.run_until(SimTime::from_micros(100), |_, ev| seen.push(ev.seq));
        assert_eq!(n, 1);
        assert_eq!(seen, vec![0]);
        assert!(!engine.cancel(keep), "dispatched events cannot be cancelled");
    }

    #[test]
    fn clock_is_monotone_and_lands_on_t_end() {
        let mut engine = Engine::new();
        engine
            .schedule(
                SimTime::from_micros(42),
                EventKind::Poll,
                EventTarget::Cell,
            )
            .unwrap();
        engine.run_until(SimTime::from_micros(100), |eng, ev| {
            assert_eq!(eng.now(), ev.fire_at);
        });
        assert_eq!(engine.now(), SimTime::from_micros(100));
        // Running to an earlier t_end must not rewind the clock.
        engine.run_until(SimTime::from_micros(50), |_, _| {});
        assert_eq!(engine.now(), SimTime::from_micros(100));
    }

    #[test]
    fn events_scheduled_during_dispatch_run_in_the_same_pass() {
        let mut engine = Engine::new();
        engine
            .schedule(
                SimTime::from_micros(10),
                EventKind::FrameArrival,
                EventTarget::Cell,
            )
            .unwrap();
        let mut fired = Vec::new();
        engine.run_until(SimTime::from_micros(100), |eng, ev| {
            fired.push(ev.fire_at.as_micros());
            if ev.kind == EventKind::FrameArrival && ev.fire_at.as_micros() < 50 {
                eng.schedule(
                    ev.fire_at + SimTime::from_micros(20),
                    EventKind::FrameArrival,
                    EventTarget::Cell,
                )
                .unwrap();
            }
        });
        assert_eq!(fired, vec![10, 30, 50]);
    }

    #[test]
    fn identical_seed_and_id_reproduce_draws_exactly() {
        let mut a = RandomStream::new(42, "traffic/svc-ss1");
        let mut b = RandomStream::new(42, "traffic/svc-ss1");
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        // Either a different id or a different seed yields a different stream.
        let mut c = RandomStream::new(42, "traffic/svc-ss2");
        assert_ne!(RandomStream::new(42, "traffic/svc-ss1").next_u64(), c.next_u64());
        assert_ne!(
            RandomStream::new(43, "traffic/svc-ss1").next_u64(),
            RandomStream::new(42, "traffic/svc-ss1").next_u64()
        );
    }

    // Freezes the generator + derivation. If this test starts failing the
    // deterministic-replay contract is broken for every recorded run.
    #[test]
    fn pinned_generator_regression() {
        let mut s = RandomStream::new(0, "pin");
        let got: Vec<u64> = (0..4).map(|_| s.next_u64()).collect();
        let expect = pinned_first_draws();
        assert_eq!(got, expect);
    }

    // Values captured when the generator was first pinned.
    fn pinned_first_draws() -> Vec<u64> {
        vec![
            0x71c4_fd94_cd5e_4717,
            0xa08c_846d_e120_7f43,
            0x7469_7bb8_568f_1ea0,
            0x9b38_8206_b0bb_526c,
        ]
    }

    #[test]
    fn uniform_is_in_unit_interval_with_correct_mean() {
        let mut s = RandomStream::new(7, "uniform-check");
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean = {mean}");
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let mut a = RandomStream::new(7, "corr/a");
        let mut b = RandomStream::new(7, "corr/b");
        let n = 100_000;
        let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = a.uniform();
            let y = b.uniform();
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
            sab += x * y;
        }
        let n = n as f64;
        let cov = sab / n - (sa / n) * (sb / n);
        let var_a = saa / n - (sa / n).powi(2);
        let var_b = sbb / n - (sb / n).powi(2);
        let r = cov / (var_a * var_b).sqrt();
        assert!(r.abs() < 0.02, "correlation = {r}");
    }

    #[test]
    fn normal_moments_match() {
        let mut s = RandomStream::new(11, "normal-check");
        let n = 200_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let z = s.normal();
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean = {mean}");
        assert!((var - 1.0).abs() < 0.02, "var = {var}");
    }

    #[test]
    fn gamma_moments_match() {
        let mut s = RandomStream::new(13, "gamma-check");
        let (shape, scale) = (2.0, 3_500.0);
        let n = 200_000;
        let mut sum = 0.0;
        let mut min = f64::MAX;
        for _ in 0..n {
            let g = s.gamma(shape, scale);
            sum += g;
            min = min.min(g);
        }
        let mean = sum / n as f64;
        let expect = shape * scale;
        assert!(min >= 0.0);
        assert!(
            (mean - expect).abs() / expect < 0.01,
            "mean = {mean}, expect = {expect}"
        );
    }
}
