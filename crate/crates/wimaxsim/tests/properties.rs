//! Randomized invariants for the building blocks: serialization round-trips,
//! byte conservation in the fragmentation paths, event dispatch order, and
//! token-bucket / scheduler accounting.

use proptest::prelude::*;

use wimaxsim::mac::{
    fragment, CellScheduler, Direction, FlowConfig, MacConfig, Sdu, SchedulingClass,
    SubframeCapacity, TokenBucket, PDU_HEADER_BYTES,
};
use wimaxsim::sim::{Engine, EventKind, EventTarget, SimTime};
use wimaxsim::traffic::{packetize, Codec, FrameType, VideoTrace, VideoTraceRecord};

fn codec_strategy() -> impl Strategy<Value = Codec> {
    prop_oneof![
        Just(Codec::H264Svc),
        Just(Codec::H264Avc),
        Just(Codec::Other("vp9".to_string())),
    ]
}

fn frame_type_strategy() -> impl Strategy<Value = FrameType> {
    prop_oneof![Just(FrameType::I), Just(FrameType::P), Just(FrameType::B)]
}

prop_compose! {
    fn trace_strategy()(
        codec in codec_strategy(),
        fps in 1.0f64..240.0,
        gop_size in 1u32..=64,
        rows in prop::collection::vec(
            (frame_type_strategy(), 1u32..=2_000_000, 5.0f64..70.0),
            1..120,
        ),
        with_psnr in any::<bool>(),
        compression_ratio in prop::option::of(1.0f64..200.0),
        with_resolution in any::<bool>(),
    ) -> VideoTrace {
        let records: Vec<VideoTraceRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, &(frame_type, size_bytes, psnr))| VideoTraceRecord {
                index: i as u32,
                frame_type,
                size_bytes,
                psnr_db: with_psnr.then_some(psnr),
            })
            .collect();
        // Mirror what a parse of the serialized form reconstructs: the mean
        // of the PSNR column when present, the codec default otherwise.
        let mean_psnr_db = if with_psnr {
            let sum: f64 = records.iter().map(|r| r.psnr_db.unwrap()).sum();
            Some(sum / records.len() as f64)
        } else {
            codec.default_mean_psnr_db()
        };
        VideoTrace {
            codec,
            fps,
            gop_size,
            records,
            mean_psnr_db,
            compression_ratio,
            resolution: with_resolution.then(|| "352x288".to_string()),
        }
    }
}

proptest! {
    /// Serializing a trace and parsing it back reproduces every field, and
    /// the serialized form is a fixed point (canonical).
    #[test]
    fn trace_tsv_round_trip(trace in trace_strategy()) {
        let text = trace.to_tsv_string();
        let parsed = VideoTrace::parse(&text).expect("serialized trace must parse");
        prop_assert_eq!(&parsed, &trace);
        prop_assert_eq!(parsed.to_tsv_string(), text);
    }

    /// MAC fragmentation conserves payload bytes and respects the fragment
    /// size bound; IP packetization does the same under the MTU.
    #[test]
    fn fragmentation_conserves_bytes(
        sdu_bytes in 0u32..=300_000,
        max_payload in 1u32..=2_048,
        frame_bytes in 0u32..=300_000,
        mtu in 41u32..=9_000,
    ) {
        let frags = fragment(sdu_bytes, max_payload);
        prop_assert_eq!(frags.iter().map(|&b| u64::from(b)).sum::<u64>(), u64::from(sdu_bytes));
        prop_assert!(frags.iter().all(|&b| 0 < b && b <= max_payload));
        prop_assert_eq!(frags.len() as u32, sdu_bytes.div_ceil(max_payload));

        let packets = packetize(frame_bytes, mtu);
        let payload_room = mtu - 40;
        prop_assert_eq!(
            packets.iter().map(|&b| u64::from(b)).sum::<u64>(),
            u64::from(frame_bytes)
        );
        prop_assert!(packets.iter().all(|&b| 0 < b && b <= payload_room));
    }

    /// Events fire in (time, schedule-order) order; cancelled events never
    /// fire; the clock lands on the horizon.
    #[test]
    fn engine_dispatch_order(entries in prop::collection::vec((0u64..10_000, any::<bool>()), 1..200)) {
        let mut engine = Engine::new();
        let mut live = 0u64;
        let mut handles = Vec::new();
        for &(at, cancel) in &entries {
            let h = engine
                .schedule(SimTime::from_micros(at), EventKind::MeasurementTick, EventTarget::Cell)
                .unwrap();
            handles.push((h, cancel));
            if !cancel {
                live += 1;
            }
        }
        for &(h, cancel) in &handles {
            if cancel {
                prop_assert!(engine.cancel(h));
            }
        }
        let mut fired: Vec<(SimTime, u64)> = Vec::new();
        let horizon = SimTime::from_micros(10_000);
        let dispatched = engine.run_until(horizon, |_, ev| fired.push((ev.fire_at, ev.seq)));
        prop_assert_eq!(dispatched, live);
        prop_assert!(fired.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(engine.now(), horizon);
        // Scheduling into the past is rejected once the clock has advanced.
        prop_assert!(engine
            .schedule(SimTime::from_micros(9_999), EventKind::Poll, EventTarget::Cell)
            .is_err());
    }

    /// Refilling a token bucket in arbitrary time slices dispenses exactly
    /// as much credit as one refill over the combined duration, and credit
    /// never exceeds the bucket depth.
    #[test]
    fn token_bucket_refill_is_slice_invariant(
        rate_bps in 1u64..=2_000_000_000,
        window_us in 1_000u64..=200_000,
        consumed in 0u64..=50_000_000,
        slices in prop::collection::vec(0u64..50_000, 1..20),
    ) {
        let window = SimTime::from_micros(window_us);
        let mut chunked = TokenBucket::new(rate_bps, window);
        let mut whole = TokenBucket::new(rate_bps, window);
        chunked.consume_bytes(consumed);
        whole.consume_bytes(consumed);

        let total: u64 = slices.iter().sum();
        for &s in &slices {
            chunked.refill(SimTime::from_micros(s));
            prop_assert!(chunked.available_bytes() <= chunked.depth_bits() / 8);
        }
        whole.refill(SimTime::from_micros(total));
        prop_assert_eq!(chunked.available_bytes(), whole.available_bytes());
    }

    /// Grants never exceed subframe capacity, a rate-capped flow never
    /// receives more than its bucket can dispense, and PDUs taken against a
    /// grant fit inside it with the fixed per-PDU overhead.
    #[test]
    fn scheduler_respects_capacity_and_rate_cap(
        cap_bps in 100_000u64..=20_000_000,
        capacities in prop::collection::vec(0u64..=30_000, 5..50),
    ) {
        let cfg = MacConfig::default();
        let frame_us = cfg.frame.duration_us;
        let flows = vec![
            FlowConfig {
                id: "dl-video".into(),
                direction: Direction::Downlink,
                class: SchedulingClass::Rtps,
                max_sustained_bps: cap_bps,
                min_reserved_bps: 0,
                tos: 4,
            },
            FlowConfig {
                id: "dl-be".into(),
                direction: Direction::Downlink,
                class: SchedulingClass::Be,
                max_sustained_bps: 0,
                min_reserved_bps: 0,
                tos: 0,
            },
        ];
        let mut cell = CellScheduler::new(cfg, flows).unwrap();
        // Deep backlog on both flows so demand never runs out.
        for tag in 0..1_500u64 {
            cell.enqueue(0, Sdu { payload_bytes: 1_024, tag });
            cell.enqueue(1, Sdu { payload_bytes: 1_024, tag });
        }

        let mut capped_granted = 0u64;
        for (n, &dl) in capacities.iter().enumerate() {
            let grants = cell.schedule_frame(SubframeCapacity { dl_bytes: dl, ul_bytes: 0 });
            let total: u64 = grants.iter().map(|g| g.bytes_granted).sum();
            prop_assert!(total <= dl, "granted {total} over capacity {dl}");
            prop_assert!(grants.iter().all(|g| g.bytes_granted > 0));

            for g in grants {
                if g.flow_idx == 0 {
                    capped_granted += g.bytes_granted;
                }
                let pdus = cell.take_granted(g.flow_idx, g.bytes_granted);
                let air: u64 = pdus.iter().map(|p| u64::from(p.air_bytes)).sum();
                prop_assert!(air <= g.bytes_granted);
                prop_assert!(pdus
                    .iter()
                    .all(|p| p.air_bytes == p.payload_bytes + PDU_HEADER_BYTES));
                // With demand left, at most a header's worth of the grant
                // may go unused.
                prop_assert!(g.bytes_granted - air <= u64::from(PDU_HEADER_BYTES));
            }

            // Bucket dispensation bound: a full initial bucket plus one
            // refill per elapsed frame (integer arithmetic may round one
            // bit per refill in the flow's favor, never more).
            let refills = n as u64 + 1;
            let bound_bits = cap_bps / 10 + refills * cap_bps * frame_us / 1_000_000 + refills;
            prop_assert!(
                capped_granted * 8 <= bound_bits,
                "capped flow granted {capped_granted} B over bucket bound {bound_bits} bits"
            );
        }
    }
}
