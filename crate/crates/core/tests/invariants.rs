use proptest::prelude::*;
use ubrsim::atm::{
    cells_for_segment, segment_to_cells, Reassembler, Reassembly, CELL_PAYLOAD_BYTES,
    FRAME_OVERHEAD_BYTES,
};
use ubrsim::kernel::SimTime;
use ubrsim::network::{self, factorial_grid, DelayClass, RunSpec, Scenario};
use ubrsim::switch::{frame_drop_justified, DropPolicy, Verdict};

#[test]
fn aal5_round_trip_every_length() {
    let mut rx = Reassembler::new(1);
    for len in 0..=20_000u32 {
        let cells = segment_to_cells(0, len as u64, len, SimTime::ZERO);
        let n = cells.len() as u32;
        assert_eq!(n, cells_for_segment(len));
        assert!(n * CELL_PAYLOAD_BYTES >= len + FRAME_OVERHEAD_BYTES);
        assert!((n - 1) * CELL_PAYLOAD_BYTES < len + FRAME_OVERHEAD_BYTES);
        let mut outcome = Reassembly::Pending;
        for (i, c) in cells.iter().enumerate() {
            outcome = rx.accept(c);
            if i + 1 < cells.len() {
                assert_eq!(outcome, Reassembly::Pending);
            }
        }
        assert_eq!(outcome, Reassembly::Complete { frame: len as u64 });
    }
    assert_eq!(rx.wasted_cells(), 0);
}

fn small(dc: DelayClass, connections: u32, secs: u64) -> Scenario {
    Scenario {
        connections,
        duration: SimTime::from_secs(secs),
        ..Scenario::desk(dc)
    }
}

#[test]
fn every_sd_frame_drop_satisfies_both_inequalities() {
    let mut audited = 0;
    for t in factorial_grid()
        .into_iter()
        .filter(|t| t.policy == DropPolicy::Sd)
    {
        let sc = small(DelayClass::Wan, 10, 10);
        let spec = RunSpec {
            scenario: sc.clone(),
            treatment: t,
            seed: 5,
            log_drops: true,
        };
        let out = network::run(&spec).unwrap();
        for port in [&out.forward, &out.reverse] {
            assert!(port.conserved);
            for r in &port.drop_log {
                if r.decision.verdict == Verdict::DropFrameStart {
                    audited += 1;
                    let d = &r.decision;
                    assert!(frame_drop_justified(
                        DropPolicy::Sd,
                        port.capacity,
                        sc.threshold_r,
                        sc.threshold_z,
                        d
                    ));
                    // X > R·K and X_i > Z·X/N_a with R = Z = 4/5, in integers.
                    assert!(5 * d.occupancy as u64 > 4 * port.capacity as u64, "{d:?}");
                    assert!(
                        5 * d.vc_occupancy as u64 * d.active_vcs as u64 > 4 * d.occupancy as u64,
                        "{d:?}"
                    );
                }
            }
        }
    }
    assert!(audited > 0, "no frame-start drops to audit");
}

#[test]
fn runs_conserve_cells_and_respect_the_ceiling() {
    for dc in DelayClass::ALL {
        for t in factorial_grid().into_iter().step_by(5) {
            let spec = RunSpec {
                scenario: small(dc, 4, 8),
                treatment: t,
                seed: 9,
                log_drops: false,
            };
            let out = network::run(&spec).unwrap();
            assert!(out.forward.conserved && out.reverse.conserved, "{dc} {t:?}");
            assert!(out.result.efficiency <= 1.0 + 1e-9, "{dc} {t:?}");
            assert!(out.forward.max_occupancy <= out.forward.capacity);
            for c in &out.connections {
                assert!(c.delivered_bytes <= c.sent_bytes && c.sent_bytes <= c.scheduled_bytes);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn same_spec_same_outcome(seed in any::<u64>(), cell in 0usize..24) {
        let spec = RunSpec {
            scenario: small(DelayClass::Meo, 3, 4),
            treatment: factorial_grid()[cell],
            seed,
            log_drops: false,
        };
        let a = network::run(&spec).unwrap();
        let b = network::run(&spec).unwrap();
        prop_assert_eq!(a.result, b.result);
        prop_assert_eq!(a.forward.counters, b.forward.counters);
    }

    #[test]
    fn fairness_and_efficiency_stay_in_range(seed in any::<u64>(), cell in 0usize..24) {
        let spec = RunSpec {
            scenario: small(DelayClass::Wan, 5, 4),
            treatment: factorial_grid()[cell],
            seed,
            log_drops: false,
        };
        let r = network::run(&spec).unwrap().result;
        prop_assert!((0.0..=1.0 + 1e-9).contains(&r.efficiency));
        prop_assert!((0.0..=1.0 + 1e-9).contains(&r.fairness));
    }
}
